"""Reconvolution CCA decoder: joint estimation of a spatial filter and a
temporal event response, template prediction, and per-class similarity scores
over growing decision windows.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class Trial:
    """One multi-channel recording segment.

    Attributes
    ----------
    data: np.ndarray
        Real matrix of shape (n_channels, n_samples).
    label: int or None
        Class index of the attended stimulus, None when unknown.
    fs: float
        Sampling rate in Hz.
    """

    data: np.ndarray
    label: int | None
    fs: float


@dataclass
class DecoderModel:
    """Fitted decoder: spatial filter, event response, and class templates.

    templates[i] is the predicted single-channel response to stimulus i,
    obtained by passing the event response through structure matrix i.
    """

    spatial_filter: np.ndarray
    response: np.ndarray
    templates: np.ndarray
    fs: float
    canonical_correlation: float


@dataclass
class ScoreVector:
    """Per-class similarity scores over a fixed decision window.

    degenerate marks entries where a zero-variance window or template made a
    correlation undefined (the score is reported as 0 there).
    """

    scores: np.ndarray
    window_samples: int
    degenerate: np.ndarray | None = None


def _inverse_sqrt(cov, name):
    evals, evecs = np.linalg.eigh(cov)
    tol = max(evals[-1], 0.0) * 1e-12
    if evals[0] <= tol:
        raise ValueError(
            f"{name} covariance is rank deficient after regularization "
            f"(min eigenvalue {evals[0]:.3e})"
        )
    return (evecs / np.sqrt(evals)) @ evecs.T


def predict_templates(model, structures):
    """Predict template responses for a list of structure matrices.

    Works for stimulation sequences unseen during fitting, as long as the
    structure matrices share the model's event-response length.

    Returns
    -------
    templates: np.ndarray
        Matrix of shape (len(structures), n_samples).
    """
    return _templates_from_response(model.response, structures)


def _templates_from_response(response, structures):
    response = np.asarray(response, dtype=float)
    templates = []
    for i, matrix in enumerate(structures):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[0] != response.size:
            raise ValueError(
                f"structure {i} has {matrix.shape[0]} rows, expected {response.size}"
            )
        templates.append(response @ matrix)
    return np.vstack(templates)


def fit_cca(trials, structures, ridge=1e-6):
    """Fit the reconvolution CCA decoder on labeled trials.

    Concatenates the trials channel-wise and their label's structure matrices
    column-wise, then finds the spatial filter and event response whose
    projections correlate maximally. Solved by whitening both autocovariances
    (with a relative ridge term for rank safety) and taking the leading
    singular pair of the whitened cross-covariance.

    The solution is normalized so the spatial filter has unit norm and its
    first nonzero element is positive; the templates follow that convention.

    Parameters
    ----------
    trials: list of Trial
        At least two labeled trials with two distinct labels, equal shapes.
    structures: list of np.ndarray
        One structure matrix per class, all (n_rows, n_samples).
    ridge: float (default: 1e-6)
        Ridge factor, scaled by the mean diagonal of each autocovariance.

    Returns
    -------
    model: DecoderModel
    """
    if len(trials) < 2:
        raise ValueError("need at least two training trials")
    labels = [t.label for t in trials]
    if any(label is None for label in labels):
        raise ValueError("all training trials must be labeled")
    if len(set(labels)) < 2:
        raise ValueError("need at least two distinct labels")
    shapes = {t.data.shape for t in trials}
    if len(shapes) != 1:
        raise ValueError(f"trial shapes differ: {sorted(shapes)}")
    rates = {float(t.fs) for t in trials}
    if len(rates) != 1:
        raise ValueError(f"trial sampling rates differ: {sorted(rates)}")
    n_samples = trials[0].data.shape[1]
    for i, matrix in enumerate(structures):
        if matrix.shape[1] < n_samples:
            raise ValueError(f"structure {i} shorter than the trials")

    data = np.concatenate([np.asarray(t.data, dtype=float) for t in trials], axis=1)
    design = np.concatenate(
        [np.asarray(structures[t.label], dtype=float)[:, :n_samples] for t in trials],
        axis=1,
    )
    if not np.all(np.isfinite(data)):
        raise ValueError("trial data contains non-finite values")

    data_c = data - data.mean(axis=1, keepdims=True)
    design_c = design - design.mean(axis=1, keepdims=True)
    n = data.shape[1]
    cov_xx = (data_c @ data_c.T) / (n - 1)
    cov_dd = (design_c @ design_c.T) / (n - 1)
    cov_xd = (data_c @ design_c.T) / (n - 1)
    cov_xx += ridge * np.mean(np.diag(cov_xx)) * np.eye(cov_xx.shape[0])
    cov_dd += ridge * np.mean(np.diag(cov_dd)) * np.eye(cov_dd.shape[0])

    isq_x = _inverse_sqrt(cov_xx, "channel")
    isq_d = _inverse_sqrt(cov_dd, "design")
    left, singulars, right_t = np.linalg.svd(isq_x @ cov_xd @ isq_d)
    spatial = isq_x @ left[:, 0]
    response = isq_d @ right_t[0]

    norm = np.linalg.norm(spatial)
    if norm == 0.0:
        raise ValueError("degenerate spatial filter")
    spatial = spatial / norm
    lead = np.flatnonzero(np.abs(spatial) > 1e-12 * np.abs(spatial).max())
    if lead.size and spatial[lead[0]] < 0:
        spatial = -spatial
        response = -response

    templates = _templates_from_response(response, structures)
    return DecoderModel(
        spatial_filter=spatial,
        response=response,
        templates=templates,
        fs=trials[0].fs,
        canonical_correlation=float(singulars[0]),
    )


def score(model, trial, window_samples):
    """Inner-product similarity of a trial prefix with every class template.

    Entry i is the inner product of the spatially filtered first
    window_samples samples with template i truncated to the same window.
    """
    window = int(window_samples)
    if window <= 0:
        raise ValueError("window_samples must be positive")
    if window > trial.data.shape[1] or window > model.templates.shape[1]:
        raise ValueError(f"window of {window} samples exceeds the available data")
    filtered = model.spatial_filter @ trial.data[:, :window]
    return ScoreVector(model.templates[:, :window] @ filtered, window)


def correlation_score(model, trial, window_samples):
    """Pearson-correlation similarity of a trial prefix with every template.

    Zero-variance windows or templates yield a 0 score with the degenerate
    flag set for that entry.
    """
    window = int(window_samples)
    if window <= 0:
        raise ValueError("window_samples must be positive")
    if window > trial.data.shape[1] or window > model.templates.shape[1]:
        raise ValueError(f"window of {window} samples exceeds the available data")
    filtered = model.spatial_filter @ trial.data[:, :window]
    filtered = filtered - filtered.mean()
    x_norm = np.linalg.norm(filtered)

    templ = model.templates[:, :window]
    templ = templ - templ.mean(axis=1, keepdims=True)
    t_norms = np.linalg.norm(templ, axis=1)

    degenerate = (t_norms == 0.0) | (x_norm == 0.0)
    denom = np.where(degenerate, 1.0, t_norms * x_norm)
    scores = np.where(degenerate, 0.0, (templ @ filtered) / denom)
    return ScoreVector(scores, window, degenerate=degenerate)


def classify(scores):
    """Class with the highest score; ties break toward the lowest index."""
    values = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores)
    if values.size == 0:
        raise ValueError("empty score vector")
    return int(np.argmax(values))


def score_trace(model, trial, grid, similarity="inner"):
    """Scores of one trial at every decision window.

    Parameters
    ----------
    grid: sequence of int
        Decision window lengths in samples, strictly increasing.
    similarity: str
        "inner" for raw inner products, "correlation" for Pearson scores.

    Returns
    -------
    trace: np.ndarray
        Matrix of shape (len(grid), n_classes).
    """
    if similarity == "inner":
        scorer = score
    elif similarity == "correlation":
        scorer = correlation_score
    else:
        raise ValueError(f"unknown similarity {similarity!r}")
    return np.vstack([scorer(model, trial, w).scores for w in grid])
