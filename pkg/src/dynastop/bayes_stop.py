"""Risk-minimizing dynamic stopping.

Calibrates Gaussian target/non-target score distributions per decision window
from training data, turns a false-positive/false-negative cost ratio into a
per-window score boundary via a likelihood ratio test, and runs the online
stop/continue controller.
"""

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .decoding import score


@dataclass(frozen=True)
class WindowParams:
    """Gaussian score-distribution parameters for one decision window.

    b1 and b0 are the mean inner-product scales of the attended (target) and
    unattended (non-target) classes; s1 and s0 the matching standard
    deviations. The means of the score distributions are alpha * b1 and
    alpha * b0 for the model's scaling alpha.
    """

    b1: float
    b0: float
    s1: float
    s0: float
    window_samples: int


@dataclass
class StopOutcome:
    """Result of running the controller on one trial.

    decisions holds one stop/continue flag per evaluated window; exactly the
    last one is True. forced marks an emission that happened only because the
    maximum trial length was reached.
    """

    stopped_at: int
    label: int | None
    forced: bool
    decisions: list


@dataclass
class StoppingModel:
    """Calibrated stopping model: score scaling, noise level, per-window
    distribution parameters, and decision boundaries for one cost ratio."""

    alpha: float
    sigma: float
    zeta: float
    n_classes: int
    t_star: int
    grid: np.ndarray
    windows: list
    eta: np.ndarray

    def with_cost_ratio(self, zeta):
        """Same calibration, boundaries recomputed for a new cost ratio."""
        eta = np.array(
            [decision_boundary(p, self.alpha, zeta, self.n_classes) for p in self.windows]
        )
        return replace(self, zeta=float(zeta), eta=eta)

    def to_json(self):
        """Serialize to a JSON document; infinite boundaries become "inf"/"-inf"."""
        def encode(value):
            if math.isinf(value):
                return "inf" if value > 0 else "-inf"
            return value

        return json.dumps(
            {
                "alpha": self.alpha,
                "sigma": self.sigma,
                "zeta": self.zeta,
                "n_classes": self.n_classes,
                "t_star": self.t_star,
                "grid": [int(w) for w in self.grid],
                "windows": [
                    {
                        "b0": p.b0,
                        "b1": p.b1,
                        "s0": p.s0,
                        "s1": p.s1,
                        "eta": encode(float(e)),
                    }
                    for p, e in zip(self.windows, self.eta)
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        grid = np.asarray(doc["grid"], dtype=int)
        if grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be non-empty and strictly increasing")
        if int(grid[-1]) != int(doc["t_star"]):
            raise ValueError("last grid window must equal t_star")
        if len(doc["windows"]) != grid.size:
            raise ValueError("one window entry per grid point required")
        windows = []
        eta = []
        for entry, w in zip(doc["windows"], grid):
            windows.append(
                WindowParams(
                    b1=float(entry["b1"]),
                    b0=float(entry["b0"]),
                    s1=float(entry["s1"]),
                    s0=float(entry["s0"]),
                    window_samples=int(w),
                )
            )
            eta.append(float(entry["eta"]))  # float("inf") parses the sentinels
        return cls(
            alpha=float(doc["alpha"]),
            sigma=float(doc["sigma"]),
            zeta=float(doc["zeta"]),
            n_classes=int(doc["n_classes"]),
            t_star=int(doc["t_star"]),
            grid=grid,
            windows=windows,
            eta=np.asarray(eta, dtype=float),
        )


def estimate_scaling_and_noise(pairs):
    """Least-squares scaling and residual noise level of filtered trials.

    All (signal, template) pairs are concatenated as if they were one long
    trial; the scaling is the least-squares coefficient of the signal on the
    template and the noise level is the population standard deviation of the
    residuals.

    Parameters
    ----------
    pairs: list of (np.ndarray, np.ndarray)
        Spatially filtered single-channel signals with their true templates,
        aligned sample by sample.

    Returns
    -------
    alpha, sigma: float
        sigma is floored at 1e-9 times the template RMS (with a warning) so
        noiseless synthetic data does not produce a degenerate model.
    """
    if not pairs:
        raise ValueError("need at least one (signal, template) pair")
    signal = np.concatenate([np.asarray(x, dtype=float).ravel() for x, _ in pairs])
    template = np.concatenate([np.asarray(t, dtype=float).ravel() for _, t in pairs])
    if signal.shape != template.shape:
        raise ValueError("signals and templates must align sample by sample")
    energy = float(template @ template)
    if energy == 0.0:
        raise ValueError("template concatenation is all zero")
    alpha = float(template @ signal) / energy
    residual = signal - alpha * template
    sigma = float(residual.std())
    floor = 1e-9 * math.sqrt(energy / template.size)
    if sigma < floor:
        warnings.warn(
            "residual noise level below floor; clamping (noiseless data?)",
            RuntimeWarning,
            stacklevel=2,
        )
        sigma = floor
    return alpha, sigma


def window_params(templates, alpha, sigma):
    """Target and non-target score-distribution parameters for one window.

    Parameters
    ----------
    templates: np.ndarray
        Class templates truncated to the window, shape (n_classes, window).
    alpha, sigma: float
        Scaling and noise level from :func:`estimate_scaling_and_noise`.

    Returns
    -------
    params: WindowParams
        b1: mean template energy; b0: mean cross-template inner product;
        s1/s0: noise contribution sigma^2 * b1 plus the spread of the scaled
        inner products around their respective means.
    """
    templates = np.asarray(templates, dtype=float)
    n, window = templates.shape
    if n < 2:
        raise ValueError("need at least two classes")
    if window < 1:
        raise ValueError("window must span at least one sample")

    gram = templates @ templates.T
    diag = np.diag(gram)
    b1 = float(diag.mean())
    off_sum = float(gram.sum() - diag.sum())
    n_off = n * n - n
    b0 = off_sum / n_off

    noise_var = sigma * sigma * b1
    spread1 = float(np.mean((alpha * diag - alpha * b1) ** 2))
    off = gram[~np.eye(n, dtype=bool)]
    spread0 = float(np.sum((alpha * off - alpha * b0) ** 2)) / n_off

    floor = 1e-12 * max(1.0, abs(alpha) * b1)
    s1 = max(math.sqrt(noise_var + spread1), floor)
    s0 = max(math.sqrt(noise_var + spread0), floor)
    return WindowParams(b1=b1, b0=b0, s1=s1, s0=s0, window_samples=window)


def log_likelihood_ratio(f, params, alpha):
    """Log ratio of the target over the non-target score density at score f.

    Expanded quadratic form of the difference of the two Gaussian
    log-densities N(alpha*b1, s1) and N(alpha*b0, s0); vectorized over f.
    """
    f = np.asarray(f, dtype=float)
    v1 = params.s1 * params.s1
    v0 = params.s0 * params.s0
    quad = (v1 - v0) * f * f
    lin = -2.0 * alpha * (v1 * params.b0 - v0 * params.b1) * f
    const = -(alpha * alpha) * (v0 * params.b1 ** 2 - v1 * params.b0 ** 2)
    out = math.log(params.s0 / params.s1) + (quad + lin + const) / (2.0 * v0 * v1)
    return float(out) if out.ndim == 0 else out


def decision_boundary(params, alpha, zeta, n_classes):
    """Score boundary where the likelihood ratio test switches to accept.

    Solves log_likelihood_ratio(f) = log((n_classes - 1) * zeta) for the
    crossing where the ratio rises with f, i.e. where growing scores move from
    reject to accept; the accept region is f > eta. Returns +inf when the
    ratio never reaches the threshold (never stop at this window) and -inf
    when it always exceeds it.
    """
    if zeta <= 0:
        raise ValueError("cost ratio must be positive")
    if n_classes < 2:
        raise ValueError("need at least two classes")
    threshold = math.log((n_classes - 1) * zeta)

    v1 = params.s1 * params.s1
    v0 = params.s0 * params.s0
    a = v1 - v0
    b = -2.0 * alpha * (v1 * params.b0 - v0 * params.b1)
    c = (
        -(alpha * alpha) * (v0 * params.b1 ** 2 - v1 * params.b0 ** 2)
        + 2.0 * v0 * v1 * (math.log(params.s0 / params.s1) - threshold)
    )

    if a != 0.0:
        disc = b * b - 4.0 * a * c
        if disc <= 0.0:
            # No proper crossing: the parabola stays on one side.
            return -math.inf if a > 0.0 else math.inf
        sq = math.sqrt(disc)
        # Rising root (-b + sq) / (2a), evaluated without cancellation.
        eta = 2.0 * c / (-b - sq) if b >= 0.0 else (-b + sq) / (2.0 * a)
    else:
        if b == 0.0:
            return -math.inf if c > 0.0 else math.inf
        if b < 0.0:
            # Only a falling crossing exists; with the one-sided f > eta
            # convention the safe reading is to never stop here.
            return math.inf
        eta = -c / b

    if not math.isfinite(eta):
        return math.inf if eta > 0 else -math.inf
    # Newton polish against the exact ratio to pin the crossing tightly.
    for _ in range(2):
        gap = log_likelihood_ratio(eta, params, alpha) - threshold
        slope = (2.0 * a * eta + b) / (2.0 * v0 * v1)
        if slope <= 0.0 or not math.isfinite(slope):
            break
        eta -= gap / slope
    return float(eta)


def calibrate(model, trials, grid, zeta=1.0):
    """Calibrate a stopping model from a fitted decoder and labeled trials.

    Runs the calibration chain: templates from the decoder, per-window
    template inner products, least-squares scaling and residual noise from the
    spatially filtered training trials, per-window distribution parameters,
    and decision boundaries for the given cost ratio.

    Parameters
    ----------
    model: DecoderModel
        Fitted decoder whose templates cover the last grid window.
    trials: list of Trial
        Labeled training trials, at least as long as the last grid window.
    grid: sequence of int
        Decision window lengths in samples, strictly increasing; the last
        entry is the maximum trial length.
    zeta: float (default: 1.0)
        False-positive over false-negative cost ratio.

    Returns
    -------
    stopping: StoppingModel
    """
    grid = np.asarray(grid, dtype=int)
    if grid.size == 0:
        raise ValueError("grid must not be empty")
    if grid[0] < 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly increasing")
    t_star = int(grid[-1])
    if t_star > model.templates.shape[1]:
        raise ValueError("grid extends past the model templates")

    pairs = []
    for trial in trials:
        if trial.label is None:
            raise ValueError("calibration trials must be labeled")
        if trial.data.shape[1] < t_star:
            raise ValueError("calibration trial shorter than the last grid window")
        filtered = model.spatial_filter @ trial.data[:, :t_star]
        pairs.append((filtered, model.templates[trial.label, :t_star]))
    alpha, sigma = estimate_scaling_and_noise(pairs)

    n_classes = model.templates.shape[0]
    windows = []
    eta = []
    for w in grid:
        params = window_params(model.templates[:, :w], alpha, sigma)
        windows.append(params)
        eta.append(decision_boundary(params, alpha, zeta, n_classes))
    return StoppingModel(
        alpha=alpha,
        sigma=sigma,
        zeta=float(zeta),
        n_classes=n_classes,
        t_star=t_star,
        grid=grid,
        windows=windows,
        eta=np.asarray(eta, dtype=float),
    )


def run_trial(stopping, model, trial, emit_on_timeout=True):
    """Run the stop/continue controller over one trial.

    At each grid window the per-class inner-product scores are compared with
    the window's boundary; the first window where any score exceeds it stops
    the trial and emits the highest-scoring accepted class. Reaching the last
    window without a crossing forces an emission of the overall best class
    (or None when emit_on_timeout is False).
    """
    if trial.data.shape[1] < stopping.t_star:
        raise ValueError("trial shorter than the maximum trial length")
    decisions = []
    last = stopping.grid.size - 1
    for idx, w in enumerate(stopping.grid):
        scores = score(model, trial, int(w)).scores
        accepted = np.flatnonzero(scores > stopping.eta[idx])
        if accepted.size:
            decisions.append(True)
            label = int(accepted[np.argmax(scores[accepted])])
            return StopOutcome(idx, label, False, decisions)
        if idx == last:
            decisions.append(True)
            label = int(np.argmax(scores)) if emit_on_timeout else None
            return StopOutcome(idx, label, True, decisions)
        decisions.append(False)
    raise AssertionError("unreachable: grid is never empty")
