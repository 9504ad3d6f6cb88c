"""Cross-validated evaluation harness: fits the decoder and the requested
stopping policy per fold, runs every held-out trial to its stopping decision,
and pools accuracy, timing, and decision-level metrics into result rows.
"""

import numpy as np

from . import metrics
from .baselines import (
    BetaPolicy,
    BoundaryPolicy,
    FixedLengthPolicy,
    MarginPolicy,
    apply_policy,
    decoding_curve,
    fit_margin,
    static_max_accuracy,
    static_max_itr,
    static_targeted_accuracy,
    stratified_folds,
)
from .bayes_stop import calibrate
from .decoding import fit_cca, score_trace

METHODS = (
    "fixed",
    "static_max_accuracy",
    "static_targeted_accuracy",
    "static_max_itr",
    "margin",
    "beta",
    "bds",
)
_NEEDS_HYPERPARAM = {"fixed", "static_targeted_accuracy", "margin", "beta", "bds"}


def window_grid(grid_ms, t_star_s, fs):
    """Decision windows in samples: every grid_ms from grid_ms up to t_star."""
    t_star = int(round(t_star_s * fs))
    if t_star < 1:
        raise ValueError("t_star shorter than one sample")
    step = grid_ms * fs / 1000.0
    windows = []
    k = 1
    while True:
        w = int(round(k * step))
        if w >= t_star:
            break
        if w >= 1 and (not windows or w > windows[-1]):
            windows.append(w)
        k += 1
    windows.append(t_star)
    return np.asarray(windows, dtype=int)


def check_method(method, similarity, hyperparams):
    """Validate a method/similarity/hyperparameter combination."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method == "beta" and similarity != "correlation":
        raise ValueError("the beta method does not support the inner product")
    if method == "bds" and similarity != "inner":
        raise ValueError("bds scores are inner products; correlation is not supported")
    if method in _NEEDS_HYPERPARAM and not hyperparams:
        raise ValueError(f"method {method!r} needs a hyperparameter")
    if method not in _NEEDS_HYPERPARAM and hyperparams:
        raise ValueError(f"method {method!r} takes no hyperparameter")


def _nearest_window(grid, fs, seconds):
    return int(np.argmin(np.abs(grid / fs - seconds)))


class _FoldPolicies:
    """Per-fold policy factory that shares the expensive calibration products
    (decoder, training traces, decoding curve, stopping calibration) across
    the hyperparameter sweep."""

    def __init__(self, method, similarity, train_trials, structures, grid, config):
        self.method = method
        self.similarity = similarity
        self.train = train_trials
        self.structures = structures
        self.grid = grid
        self.config = config
        self.model = fit_cca(train_trials, structures)
        self.fs = train_trials[0].fs
        self.n_classes = len(structures)
        self._curve = None
        self._train_traces = None
        self._base_stopping = None

    @property
    def curve(self):
        if self._curve is None:
            self._curve = decoding_curve(
                lambda tr: fit_cca(tr, self.structures),
                self.train,
                self.grid,
                self.n_classes,
                similarity=self.similarity,
            )
        return self._curve

    @property
    def train_traces(self):
        if self._train_traces is None:
            self._train_traces = np.stack(
                [score_trace(self.model, t, self.grid, self.similarity) for t in self.train]
            )
        return self._train_traces

    @property
    def base_stopping(self):
        if self._base_stopping is None:
            self._base_stopping = calibrate(self.model, self.train, self.grid, zeta=1.0)
        return self._base_stopping

    def make(self, hyperparam):
        if self.method == "bds":
            return BoundaryPolicy(self.base_stopping.with_cost_ratio(hyperparam).eta)
        if self.method == "fixed":
            return FixedLengthPolicy(_nearest_window(self.grid, self.fs, hyperparam))
        if self.method == "static_max_accuracy":
            return FixedLengthPolicy(static_max_accuracy(self.curve))
        if self.method == "static_max_itr":
            return FixedLengthPolicy(static_max_itr(self.curve))
        if self.method == "static_targeted_accuracy":
            return FixedLengthPolicy(static_targeted_accuracy(self.curve, hyperparam))
        if self.method == "margin":
            labels = [t.label for t in self.train]
            table = fit_margin(self.train_traces, labels, hyperparam)
            return MarginPolicy(table.thresholds)
        if self.method == "beta":
            return BetaPolicy(hyperparam)
        raise ValueError(f"unknown method {self.method!r}")


def evaluate_store(trials, structures, config, subject="s01"):
    """Outer cross-validated evaluation of one method on one set of trials.

    Per fold the decoder and the stopping policy are calibrated on the
    training split and every held-out trial runs to its stopping decision;
    decisions pool across folds into one row per hyperparameter value
    (duplicates evaluated once).

    Parameters
    ----------
    trials: list of Trial
        Labeled trials; every trial is tested in exactly one fold.
    structures: list of np.ndarray
        Structure matrices per class, at least t_star samples long.
    config: ExperimentConfig
        Method, similarity, hyperparameter list, folds, grid step, maximum
        trial length (defaults to the full trial), and overhead.
    subject: str
        Subject tag for the result rows.

    Returns
    -------
    rows: list of MetricsRow
        One per distinct hyperparameter, in first-seen order.
    """
    if not trials:
        raise ValueError("no trials to evaluate")
    hyperparams = list(dict.fromkeys(config.hyperparams))
    check_method(config.method, config.similarity, hyperparams)
    if not hyperparams:
        hyperparams = [None]

    fs = trials[0].fs
    t_star_s = config.t_star_s
    if t_star_s is None:
        t_star_s = trials[0].data.shape[1] / fs
    grid = window_grid(config.grid_ms, t_star_s, fs)
    labels = np.array([t.label for t in trials])
    folds = stratified_folds(labels, config.folds)

    hits = {h: [] for h in hyperparams}
    stop_seconds = {h: [] for h in hyperparams}
    counts = {h: metrics.DecisionCounts() for h in hyperparams}

    for fold in folds:
        if fold.size == 0:
            continue
        mask = np.ones(len(trials), dtype=bool)
        mask[fold] = False
        train = [trials[i] for i in np.flatnonzero(mask)]
        policies = _FoldPolicies(
            config.method, config.similarity, train, structures, grid, config
        )
        policy_by_h = {h: policies.make(h) for h in hyperparams}
        for idx in fold:
            trial = trials[idx]
            trace = score_trace(policies.model, trial, grid, config.similarity)
            argmax_correct = np.argmax(trace, axis=1) == trial.label
            for h in hyperparams:
                outcome = apply_policy(policy_by_h[h], trace)
                hits[h].append(outcome.label == trial.label)
                stop_seconds[h].append(grid[outcome.stopped_at] / fs)
                counts[h] = counts[h] + metrics.count_decisions(outcome, argmax_correct)

    rows = []
    n_classes = len(structures)
    for h in hyperparams:
        accuracy = float(np.mean(hits[h]))
        mean_stop = float(np.mean(stop_seconds[h]))
        c = counts[h]
        rows.append(
            metrics.MetricsRow(
                subject=subject,
                method=config.method,
                hyperparam=h,
                similarity=config.similarity,
                accuracy=accuracy,
                mean_stop_s=mean_stop,
                itr=metrics.itr(accuracy, n_classes, mean_stop + config.overhead_s),
                spm=metrics.spm(mean_stop, config.overhead_s),
                precision=metrics.precision(c),
                recall=metrics.recall(c),
                specificity=metrics.specificity(c),
                f_score=metrics.f_score(c),
            )
        )
    return rows
