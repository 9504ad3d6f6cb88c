"""On-disk formats: the trial store (JSON manifest plus raw float32 blob),
experiment configuration, and the results CSV.

A store is a directory holding manifest.json and eeg.f32. The blob carries
little-endian float32 samples in trial-major, then channel-major, then sample
order, so trials stream without loading the whole file.
"""

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .decoding import Trial
from .metrics import CSV_COLUMNS, row_fields

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "eeg.f32"
FORMAT_VERSION = 1
_SAMPLE_DTYPE = np.dtype("<f4")


class StoreError(Exception):
    """Malformed store: the message names the offending field or file."""


@dataclass
class StoreMeta:
    """Manifest contents of a trial store."""

    fs: float
    n_channels: int
    n_samples: int
    n_trials: int
    n_classes: int
    labels: list
    codebook: str | None = None
    byte_order: str = "little"


def write_store(path, trials, n_classes, codebook=None):
    """Write trials to a store directory (created if missing).

    Concurrent readers are safe once writing finishes; the format provides no
    locking, so keep at most one writer per path.

    Parameters
    ----------
    path: str
        Store directory.
    trials: list of Trial
        Labeled trials of identical shape and sampling rate.
    n_classes: int
        Label range; every label must lie in [0, n_classes).
    codebook: str (optional)
        Manifest reference to a codebook file, stored as given.
    """
    os.makedirs(path, exist_ok=True)
    if trials:
        shape = trials[0].data.shape
        fs = float(trials[0].fs)
    else:
        shape = (0, 0)
        fs = 0.0
    labels = []
    for i, trial in enumerate(trials):
        if trial.data.shape != shape:
            raise StoreError(f"trial {i} shape {trial.data.shape} != {shape}")
        if float(trial.fs) != fs:
            raise StoreError(f"trial {i} sampling rate {trial.fs} != {fs}")
        if trial.label is None or not 0 <= trial.label < n_classes:
            raise StoreError(f"labels[{i}]={trial.label} out of range [0, {n_classes})")
        labels.append(int(trial.label))

    meta = StoreMeta(
        fs=fs,
        n_channels=int(shape[0]),
        n_samples=int(shape[1]),
        n_trials=len(trials),
        n_classes=int(n_classes),
        labels=labels,
        codebook=codebook,
    )
    manifest = {
        "format_version": FORMAT_VERSION,
        "fs": meta.fs,
        "channels": meta.n_channels,
        "samples_per_trial": meta.n_samples,
        "n_trials": meta.n_trials,
        "n_classes": meta.n_classes,
        "labels": meta.labels,
        "codebook": meta.codebook,
        "byte_order": meta.byte_order,
    }
    with open(os.path.join(path, MANIFEST_NAME), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(path, BLOB_NAME), "wb") as fh:
        for trial in trials:
            fh.write(np.ascontiguousarray(trial.data, dtype=_SAMPLE_DTYPE).tobytes())


def _require(manifest, key, kind):
    if key not in manifest:
        raise StoreError(f"manifest field {key!r} is missing")
    value = manifest[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise StoreError(f"manifest field {key!r} has type {type(value).__name__}")
    return value


def read_store(path):
    """Open a store and stream its trials.

    Returns
    -------
    meta: StoreMeta
    trials: generator of Trial
        Yields trials in stored order with O(1) memory per trial.

    Raises
    ------
    StoreError
        On unparsable manifests, size mismatches, or out-of-range labels, with
        the offending field named.
    """
    manifest_path = os.path.join(path, MANIFEST_NAME)
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise StoreError(f"{manifest_path}: no manifest") from None
    except json.JSONDecodeError as err:
        raise StoreError(f"{manifest_path}: unreadable manifest: {err}") from None

    if _require(manifest, "format_version", int) != FORMAT_VERSION:
        raise StoreError(f"format_version {manifest['format_version']} unsupported")
    byte_order = _require(manifest, "byte_order", str)
    if byte_order != "little":
        raise StoreError(f"byte_order {byte_order!r} unsupported (little-endian v1 only)")
    meta = StoreMeta(
        fs=_require(manifest, "fs", float),
        n_channels=_require(manifest, "channels", int),
        n_samples=_require(manifest, "samples_per_trial", int),
        n_trials=_require(manifest, "n_trials", int),
        n_classes=_require(manifest, "n_classes", int),
        labels=_require(manifest, "labels", list),
        codebook=manifest.get("codebook"),
        byte_order=byte_order,
    )
    if len(meta.labels) != meta.n_trials:
        raise StoreError(f"labels length {len(meta.labels)} != n_trials {meta.n_trials}")
    for i, label in enumerate(meta.labels):
        if not isinstance(label, int) or not 0 <= label < meta.n_classes:
            raise StoreError(f"labels[{i}]={label} out of range [0, {meta.n_classes})")

    blob_path = os.path.join(path, BLOB_NAME)
    expected = meta.n_trials * meta.n_channels * meta.n_samples * _SAMPLE_DTYPE.itemsize
    try:
        actual = os.path.getsize(blob_path)
    except FileNotFoundError:
        raise StoreError(f"{blob_path}: no sample blob") from None
    if actual != expected:
        raise StoreError(
            f"{blob_path}: size {actual} != expected {expected} "
            f"(n_trials x channels x samples_per_trial x 4)"
        )

    def trials():
        per_trial = meta.n_channels * meta.n_samples
        with open(blob_path, "rb") as fh:
            for label in meta.labels:
                block = np.fromfile(fh, dtype=_SAMPLE_DTYPE, count=per_trial)
                data = block.astype(float).reshape(meta.n_channels, meta.n_samples)
                yield Trial(data=data, label=label, fs=meta.fs)

    return meta, trials()


def load_store(path):
    """read_store with the trials materialized into a list."""
    meta, stream = read_store(path)
    return meta, list(stream)


@dataclass
class ExperimentConfig:
    """Evaluation settings for one method on one store."""

    method: str
    similarity: str = "inner"
    hyperparams: list = field(default_factory=list)
    folds: int = 5
    grid_ms: float = 100.0
    t_star_s: float | None = None
    seed: int = 0
    overhead_s: float = 0.0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.grid_ms <= 0:
            raise ValueError("grid step must be positive")
        if self.t_star_s is not None and self.t_star_s * 1000.0 < self.grid_ms:
            raise ValueError("t_star must be at least one grid step")
        if self.similarity not in ("inner", "correlation"):
            raise ValueError(f"unknown similarity {self.similarity!r}")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        return cls(**doc)


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(path, rows, append=False):
    """Write metrics rows as RFC-4180 CSV with the fixed column schema.

    Rows are ordered by (subject, method, hyperparam, similarity); floats use
    their shortest round-trip decimal form. With append=True an existing file
    keeps its header and gains the new rows.
    """
    ordered = sorted(
        rows,
        key=lambda r: (
            r.subject,
            r.method,
            r.hyperparam is not None,
            0.0 if r.hyperparam is None else float(r.hyperparam),
            r.similarity,
        ),
    )
    fresh = not (append and os.path.exists(path))
    mode = "w" if fresh else "a"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(CSV_COLUMNS)
        for row in ordered:
            values = row_fields(row)
            writer.writerow([_format_cell(values[col]) for col in CSV_COLUMNS])
