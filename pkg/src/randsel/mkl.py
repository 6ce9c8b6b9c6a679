"""Granular multiple-kernel boosting on top of a selection trace.

Every feature set in the trace (coarsest to finest) is paired with every
bandwidth of a grid.  Each (feature set, bandwidth, ridge) triple yields a
kernel ridge regression weak learner, and the learners are combined by the
LPBoost linear program::

    minimize    beta
    subject to  sum_i u_i y_i H_ij <= beta     for every learner j
                sum_i u_i = 1,  0 <= u_i <= D

``H_ij`` is learner ``j``'s output on training sample ``i``.  The learner
weights are the optimal multipliers of the margin constraints, which form a
convex combination.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import InfeasibleError, LpSolverError, NumericError, ParameterError
from .kernels import cross_gaussian_kernel, gaussian_kernel, median_heuristic_sigma
from .lp import LinearProgram, LpStatus, solve

__all__ = [
    "KernelSpec",
    "WeakLearner",
    "EnsembleModel",
    "OneVsRestEnsemble",
    "NegativeSubsample",
    "build_kernel_grid",
    "default_sigma_grid",
    "fit_weak",
    "krr_objective",
    "lpboost_combine",
    "predict",
    "fit_ensemble",
    "tune_D",
    "DEFAULT_LAMBDAS",
]

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (1e-3, 1e-2, 1e-1)
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    level: int
    features: tuple
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if len(self.features) == 0:
            raise ParameterError("kernel spec needs at least one feature")


def _levels_of(trace) -> list:
    return list(trace.levels) if hasattr(trace, "levels") else [tuple(level) for level in trace]


def build_kernel_grid(trace, sigmas) -> list:
    """All (level, sigma) kernel specs, ordered by level then by position in ``sigmas``.

    ``trace`` is a :class:`~randsel.selector.SelectionTrace` or a plain list
    of feature sets.
    """
    levels = _levels_of(trace)
    sigmas = [float(s) for s in sigmas]
    if not levels:
        raise ParameterError("trace has no feature sets")
    if not sigmas:
        raise ParameterError("need at least one bandwidth")
    return [KernelSpec(k, tuple(int(f) for f in feats), s) for k, feats in enumerate(levels) for s in sigmas]


def default_sigma_grid(X, size: int = 15) -> np.ndarray:
    """Log-spaced bandwidths over ``[s/16, 16 s]`` with ``s`` the inverse median squared distance."""
    if size < 1:
        raise ParameterError("grid size must be positive")
    mid = median_heuristic_sigma(X)
    if size == 1:
        return np.array([mid])
    return np.geomspace(mid / 16.0, mid * 16.0, size)


@dataclass
class WeakLearner:
    """Kernel ridge regressor ``h(x) = sum_i alpha_i k(x_i, x)`` on one kernel spec."""

    spec: KernelSpec
    train_rows: np.ndarray
    dual_coefficients: np.ndarray
    ridge_lambda: float
    support: np.ndarray = field(repr=False)

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Kq = cross_gaussian_kernel(X[:, list(self.spec.features)], self.support, self.spec.sigma)
        return Kq @ self.dual_coefficients


def _krr_solve(K, y, lam):
    A = K + lam * np.eye(K.shape[0])
    try:
        factor = cho_factor(A, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NumericError(f"kernel ridge system is not positive definite: {exc}") from None
    alpha = cho_solve(factor, y, check_finite=False)
    # one step of iterative refinement
    alpha += cho_solve(factor, y - A @ alpha, check_finite=False)
    if not np.all(np.isfinite(alpha)):
        raise NumericError("kernel ridge solve produced non-finite coefficients")
    residual = float(np.max(np.abs(A @ alpha - y)))
    if residual >= RESIDUAL_TOL:
        raise NumericError(f"kernel ridge residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    return alpha


def krr_objective(K, y, alpha, lam) -> tuple:
    """Value and gradient of ``|K a - y|^2 + lam a^T K a`` at ``a = alpha``.

    The gradient ``2 K ((K + lam I) a - y)`` vanishes at the ridge solution.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    r = K @ alpha - y
    value = float(r @ r + lam * alpha @ K @ alpha)
    grad = 2.0 * K @ (r + lam * alpha)
    return value, grad


def fit_weak(X, y, spec: KernelSpec, rows, lam: float, K=None) -> WeakLearner:
    """Solve ``(K + lam I) alpha = y`` on the given rows and the spec's features.

    ``K`` may be passed in when the kernel on these rows is already known.
    """
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise ParameterError(f"ridge lambda must be positive, got {lam}")
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size < 2:
        raise ParameterError("need at least two training rows")
    X = np.asarray(X, dtype=np.float64)
    support = X[np.ix_(rows, list(spec.features))]
    if K is None:
        K = gaussian_kernel(support, spec.sigma)
    target = np.asarray(y, dtype=np.float64)[rows]
    alpha = _krr_solve(K, target, lam)
    return WeakLearner(spec, rows, alpha, lam, support)


@dataclass
class EnsembleModel:
    """Convex combination of weak learners for a binary (+1/-1) problem."""

    learners: list
    weights: np.ndarray
    beta: float
    D: float
    u: np.ndarray | None = field(default=None, repr=False)

    @property
    def support(self) -> list:
        return [k for k, w in enumerate(self.weights) if w > 0]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        score = np.zeros(X.shape[0])
        for k in self.support:
            score += self.weights[k] * self.learners[k].decision(X)
        return score

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1.0, -1.0)


@dataclass
class OneVsRestEnsemble:
    """One binary ensemble per class; predicts the class with the largest score."""

    classes: np.ndarray
    models: list

    def decision_function(self, X) -> np.ndarray:
        return np.column_stack([model.decision_function(X) for model in self.models])

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def lpboost_combine(H, y, D: float, learners=None) -> EnsembleModel:
    """Solve the LPBoost program over ``(u, beta)`` and read off learner weights.

    Weights are minus the multipliers of the ``n_K`` margin constraints,
    clamped at zero and renormalized to sum to one.
    """
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    m, n_k = H.shape
    if y.size != m:
        raise ParameterError(f"y has {y.size} entries for {m} rows of H")
    if not np.all(np.isfinite(H)):
        raise ParameterError("H contains non-finite entries")
    D = float(D)
    if m * D < 1:
        raise InfeasibleError(f"m * D = {m * D:g} < 1: no u on the simplex satisfies u_i <= D")

    # variables: u_1..u_m, beta
    c = np.zeros(m + 1)
    c[-1] = 1.0
    # Margins are usually all close to one, which makes bases nearly singular.
    # Subtracting shift_k times the row sum(u) = 1 from margin row k removes
    # that common part without changing the feasible set or the margin duals.
    M = (y[:, None] * H).T
    shift = M.mean(axis=1)
    A_ub = np.hstack([M - shift[:, None], -np.ones((n_k, 1))])
    A_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
    lo = np.concatenate([np.zeros(m), [-np.inf]])
    hi = np.concatenate([np.full(m, D), [np.inf]])
    sol = solve(LinearProgram(c, A_ub, -shift, A_eq, [1.0], lo, hi))
    if sol.status is LpStatus.INFEASIBLE:
        raise InfeasibleError("LPBoost program is infeasible")
    if sol.status is not LpStatus.OPTIMAL:
        raise LpSolverError(f"LPBoost program: solver status {sol.status.value}")
    w = np.clip(-sol.duals_ub, 0.0, None)
    w[w < 1e-12] = 0.0
    total = w.sum()
    if total <= 0:
        raise LpSolverError("margin multipliers vanished")
    w /= total
    return EnsembleModel(list(learners) if learners is not None else [], w, float(sol.values[-1]), D, sol.values[:m])


def predict(model, x) -> tuple:
    """Score and label for one sample.  A score of exactly 0 is labelled +1."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if isinstance(model, OneVsRestEnsemble):
        scores = model.decision_function(x)[0]
        k = int(np.argmax(scores))
        return float(scores[k]), model.classes[k]
    score = float(model.decision_function(x)[0])
    return score, 1.0 if score >= 0 else -1.0


@dataclass(frozen=True)
class NegativeSubsample:
    """Per-learner class-balanced rows: ``ratio`` negatives per positive.

    Normally a fresh subsample of the -1 class is drawn for each learner and
    every positive is kept.  When there are too few negatives for the ratio,
    all negatives are kept and the positives are subsampled instead.
    """

    ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.ratio) and self.ratio > 0):
            raise ParameterError(f"negative ratio must be positive, got {self.ratio}")

    def rows(self, y, learner_index: int) -> np.ndarray:
        y = np.asarray(y)
        pos = np.flatnonzero(y > 0)
        neg = np.flatnonzero(y <= 0)
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(learner_index),))
        rng = np.random.default_rng(ss)
        want_neg = int(round(self.ratio * pos.size))
        if want_neg <= neg.size:
            neg = np.sort(rng.choice(neg, size=want_neg, replace=False))
        else:
            want_pos = max(1, int(round(neg.size / self.ratio)))
            pos = np.sort(rng.choice(pos, size=min(want_pos, pos.size), replace=False))
        return np.concatenate([pos, neg])


def _fit_binary(X, y, specs, lambdas, D, negative_subsample):
    m = X.shape[0]
    all_rows = np.arange(m)
    learners = []
    columns = []
    for spec in specs:
        cols = list(spec.features)
        Z = X[:, cols]
        K_full = gaussian_kernel(Z, spec.sigma) if negative_subsample is None else None
        for lam in lambdas:
            index = len(learners)
            if negative_subsample is None:
                learner = fit_weak(X, y, spec, all_rows, lam, K=K_full)
                columns.append(K_full @ learner.dual_coefficients)
            else:
                rows = negative_subsample.rows(y, index)
                learner = fit_weak(X, y, spec, rows, lam)
                columns.append(learner.decision(X))
            learners.append(learner)
    H = np.column_stack(columns)
    model = lpboost_combine(H, y, D, learners)
    logger.info("LPBoost: %d learners, %d in support, beta=%.4g", len(learners), len(model.support), model.beta)
    return model


def fit_ensemble(data, trace, sigmas=None, lambda_grid=DEFAULT_LAMBDAS, D=None, negative_subsample=None):
    """Fit one weak learner per (level, sigma, lambda) and combine them with LPBoost.

    Parameters
    ----------
    data : Dataset
        Training data; labels +1/-1 for a binary model, 0..C-1 for one-vs-rest.
    trace : SelectionTrace or list of feature sets
    sigmas : sequence of float, optional
        Bandwidths; defaults to :func:`default_sigma_grid` on the full data.
    lambda_grid : sequence of float
    D : float, optional
        LPBoost box parameter; defaults to ``2 / m``.
    negative_subsample : NegativeSubsample, optional
        Train each learner on all positives and a fresh subsample of negatives.

    Returns
    -------
    EnsembleModel or OneVsRestEnsemble
    """
    X, y = data.X, data.y
    if sigmas is None:
        sigmas = default_sigma_grid(X)
    specs = build_kernel_grid(trace, sigmas)
    lambdas = [float(v) for v in lambda_grid]
    if not lambdas:
        raise ParameterError("lambda grid is empty")
    m = X.shape[0]
    if D is None:
        D = min(1.0, 2.0 / m)
    classes = np.unique(y)
    if set(classes.tolist()) <= {-1.0, 1.0}:
        return _fit_binary(X, y, specs, lambdas, D, negative_subsample)
    models = [_fit_binary(X, np.where(y == c, 1.0, -1.0), specs, lambdas, D, negative_subsample) for c in classes]
    return OneVsRestEnsemble(classes, models)


def tune_D(data, trace, D_grid, validation_fraction: float = 0.3, seed: int = 0, **kwargs):
    """Pick ``D`` by accuracy on a held-out split, then refit on all of ``data``.

    Returns ``(model, best_D, scores)`` where ``scores`` maps each tried D
    to its validation accuracy.  Values with ``m_train * D < 1`` are skipped.
    """
    rng = np.random.default_rng(seed)
    m = data.X.shape[0]
    perm = rng.permutation(m)
    n_val = max(1, int(round(validation_fraction * m)))
    val, train = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    train_data, val_data = data.subset(train), data.subset(val)
    scores = {}
    for D in D_grid:
        if train.size * D < 1:
            continue
        model = fit_ensemble(train_data, trace, D=D, **kwargs)
        scores[float(D)] = float(np.mean(model.predict(val_data.X) == val_data.y))
    if not scores:
        raise ParameterError("no D in the grid is feasible for the training split")
    best = max(scores, key=lambda d: (scores[d], -d))
    return fit_ensemble(data, trace, D=best, **kwargs), best, scores
