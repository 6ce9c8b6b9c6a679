"""Randomized feature selection by Monte-Carlo alignment contributions.

One iteration of :func:`run` draws ``r`` independent pairs of tasks: a BASE
task over ``n//2`` randomly chosen active features and a PLUS task over
``n//2 + 1``.  Each task is a bootstrap row subsample on which the centered
Gaussian/label kernel alignment is computed.  The contribution of feature
``j`` is::

    c_j = mean(a_plus over PLUS tasks containing j) - mean(a over BASE tasks not containing j)

The lowest-contributing fraction ``z`` of non-fixed features is culled, and
the loop repeats until two features remain.  Optionally, features that rank
in the top fraction ``a`` for ``t`` consecutive iterations are fixed and
never culled.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import (
    ConfigurationError,
    CoverageError,
    DegenerateKernelError,
    DegenerateLabelError,
    ParameterError,
)
from .kernels import gaussian_alignment
from .sampling import PRNG_NAME, SeedPlan, SubsampleTask, TaskKind, make_task_pair, redraw_rows, subset_sizes

__all__ = [
    "RandSelConfig",
    "ContributionTable",
    "IterationRecord",
    "SelectionTrace",
    "evaluate_task",
    "aggregate_contributions",
    "cull",
    "update_fixing",
    "drop_count",
    "estimate_contributions",
    "run",
]

logger = logging.getLogger(__name__)

MAX_RETRIES = 10
MAX_TOPUP_ROUNDS = 20


@dataclass(frozen=True)
class RandSelConfig:
    """Parameters of one selection run.

    Parameters
    ----------
    r : int
        Task pairs per iteration.
    s : int
        Rows per bootstrap subsample.
    z : float
        Fraction of non-fixed features culled per iteration.
    a : float
        Top fraction used for the fixing rule.
    t : int
        Consecutive top placements needed to fix a feature.
    fixing_enabled : bool
        Enable the fixing rule.
    sigma0 : float
        Base bandwidth; a task on ``k`` features uses ``sigma0 / k``.
    balanced : bool
        Draw class-balanced row subsamples.
    master_seed : int
        Root of every random draw in the run.
    min_coverage : int
        Minimum number of tasks per feature on each side of the estimator.
    label_kernel : str
        ``"auto"``, ``"linear"`` or ``"delta"``; see :func:`randsel.kernels.label_kernel`.
    full_rows : bool
        Use every row of the dataset in every task instead of bootstrapping.
    """

    r: int = 1000
    s: int = 200
    z: float = 0.125
    a: float = 0.1
    t: int = 3
    fixing_enabled: bool = False
    sigma0: float = 1.0
    balanced: bool = False
    master_seed: int = 0
    min_coverage: int = 5
    label_kernel: str = "auto"
    full_rows: bool = False

    def __post_init__(self):
        if not 0 < self.z < 1:
            raise ConfigurationError("cull must be in (0,1)")
        if not 0 < self.a < 1:
            raise ConfigurationError("top proportion a must be in (0,1)")
        if int(self.t) < 1:
            raise ConfigurationError("t must be at least 1")
        if int(self.r) < 1:
            raise ConfigurationError("r must be at least 1")
        if int(self.s) < 2:
            raise ConfigurationError("subsample size s must be at least 2")
        if not (math.isfinite(self.sigma0) and self.sigma0 > 0):
            raise ConfigurationError("sigma0 must be positive and finite")
        if int(self.min_coverage) < 1:
            raise ConfigurationError("min_coverage must be at least 1")
        if self.label_kernel not in ("auto", "linear", "delta"):
            raise ConfigurationError(f"unknown label kernel {self.label_kernel!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigurationError("master_seed must fit in 64 unsigned bits")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ContributionTable:
    """Per-feature contribution estimates for one iteration.

    Arrays are aligned with ``features``.  Features below the coverage
    threshold carry ``nan`` contributions and are listed by :meth:`uncovered`.
    """

    features: tuple
    mean_plus: np.ndarray
    mean_base_excl: np.ndarray
    count_plus: np.ndarray
    count_base_excl: np.ndarray
    min_coverage: int = 1

    @property
    def covered(self) -> np.ndarray:
        return (self.count_plus >= self.min_coverage) & (self.count_base_excl >= self.min_coverage)

    @property
    def contribution(self) -> np.ndarray:
        return np.where(self.covered, self.mean_plus - self.mean_base_excl, np.nan)

    def __getitem__(self, feature) -> float:
        return float(self.contribution[self.features.index(int(feature))])

    def as_dict(self) -> dict:
        return {f: float(c) for f, c in zip(self.features, self.contribution)}

    def uncovered(self) -> list:
        return [f for f, ok in zip(self.features, self.covered) if not ok]

    def require_coverage(self):
        missing = self.uncovered()
        if missing:
            raise CoverageError(f"features below coverage {self.min_coverage}: {missing}", missing)


@dataclass
class IterationRecord:
    iteration: int
    active: tuple
    table: ContributionTable
    dropped: tuple
    fixed: tuple
    n_tasks: int
    kernel_evaluations: int
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class SelectionTrace:
    """Everything a run produced, one record per iteration."""

    iterations: list
    final_active: tuple
    config: RandSelConfig
    prng: str = PRNG_NAME
    feature_names: list | None = None

    @property
    def fixed(self) -> tuple:
        return self.iterations[-1].fixed if self.iterations else ()

    @property
    def levels(self) -> list:
        """Nested feature sets of increasing granularity (coarsest first)."""
        return [rec.active for rec in self.iterations] + [self.final_active]


def evaluate_task(task: SubsampleTask, data, config: RandSelConfig) -> float:
    """Alignment of the centered Gaussian kernel on the task's rows/features with the label kernel.

    The bandwidth is ``sigma0 / len(task.feature_subset)``.  A subsample
    whose labels (or inputs) are constant is redrawn from a retry seed
    derived from the task seed; after ``MAX_RETRIES`` failures the error
    propagates.
    """
    X, y = data.X, data.y
    m = X.shape[0]
    cols = list(task.feature_subset)
    sigma = config.sigma0 / len(cols)
    current = task
    for retry in range(MAX_RETRIES + 1):
        rows = current.row_indices
        try:
            return gaussian_alignment(X[np.ix_(rows, cols)], sigma, y[rows], config.label_kernel)
        except (DegenerateLabelError, DegenerateKernelError) as exc:
            if retry == MAX_RETRIES or config.full_rows:
                raise
            logger.debug("task %s/%d degenerate (%s); redrawing rows", current.kind.name, current.index, exc)
            current = redraw_rows(task, m, len(rows), retry + 1, labels=y, balanced=config.balanced)
    raise AssertionError("unreachable")


def _fsum_mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / values.size if values.size else math.nan


def aggregate_contributions(results, active, min_coverage: int = 1) -> ContributionTable:
    """Contribution table from ``(task, alignment)`` pairs.

    Sums are exactly rounded (``math.fsum``), so the table does not depend
    on the order of ``results``.  A feature with fewer than ``min_coverage``
    tasks on either side gets a ``nan`` contribution.
    """
    active = tuple(int(f) for f in active)
    pos = {f: k for k, f in enumerate(active)}
    n = len(active)
    plus = [(t, a) for t, a in results if t.kind == TaskKind.PLUS]
    base = [(t, a) for t, a in results if t.kind == TaskKind.BASE]

    def membership(pairs):
        M = np.zeros((len(pairs), n), dtype=bool)
        for row, (task, _) in enumerate(pairs):
            M[row, [pos[f] for f in task.feature_subset]] = True
        return M, np.array([a for _, a in pairs], dtype=np.float64)

    M_plus, a_plus = membership(plus)
    M_base, a_base = membership(base)
    excl = ~M_base

    mean_plus = np.array([_fsum_mean(a_plus[M_plus[:, k]]) for k in range(n)])
    mean_base = np.array([_fsum_mean(a_base[excl[:, k]]) for k in range(n)])
    count_plus = M_plus.sum(axis=0).astype(np.int64)
    count_base = excl.sum(axis=0).astype(np.int64)
    return ContributionTable(active, mean_plus, mean_base, count_plus, count_base, int(min_coverage))


def drop_count(n_active: int, z: float, n_fixed: int = 0) -> int:
    """Number of features culled from ``n_active`` with ``n_fixed`` of them fixed."""
    candidates = n_active - n_fixed
    if candidates <= 0:
        return 0
    k = max(1, math.floor(z * candidates))
    return max(0, min(k, candidates, n_active - 2))


def cull(table: ContributionTable, active, z: float, fixed=()) -> tuple[tuple, tuple]:
    """Split ``active`` into (kept, dropped).

    Drops ``max(1, floor(z * #non-fixed))`` of the lowest-contributing
    non-fixed features, never leaving fewer than two.  Ties drop the larger
    feature index first.
    """
    active = tuple(int(f) for f in active)
    if len(active) < 3:
        raise ParameterError("cull needs at least 3 active features")
    fixed = {int(f) for f in fixed}
    scores = table.as_dict()
    candidates = [f for f in active if f not in fixed]
    k = drop_count(len(active), z, len(active) - len(candidates))
    ranked = sorted(candidates, key=lambda f: (scores[f], -f))
    dropped = set(ranked[:k])
    kept = tuple(f for f in active if f not in dropped)
    return kept, tuple(sorted(dropped))


def update_fixing(history: dict, table: ContributionTable, a: float, t: int) -> tuple:
    """Advance the consecutive-top counters in ``history`` and return newly fixed features.

    The top set is the ``ceil(a * n_active)`` highest contributions (ties
    favour the smaller index).  ``history`` maps feature -> counter and is
    updated in place; counters of features outside the top set reset to 0.
    """
    contrib = table.contribution
    n = len(table.features)
    top_k = math.ceil(a * n)
    order = sorted(range(n), key=lambda k: (-contrib[k], table.features[k]))
    top = {table.features[k] for k in order[:top_k]}
    newly = []
    for f in table.features:
        before = history.get(f, 0)
        history[f] = before + 1 if f in top else 0
        if before < t <= history[f]:
            newly.append(f)
    return tuple(sorted(newly))


def _evaluate_all(tasks, data, config, executor):
    if executor is None:
        return [evaluate_task(task, data, config) for task in tasks]
    return list(executor.map(lambda task: evaluate_task(task, data, config), tasks))


def _topup_estimate(table: ContributionTable, n_active: int) -> int:
    base_size, plus_size = subset_sizes(n_active)
    p_plus = plus_size / n_active
    p_base = 1.0 - base_size / n_active
    need = 0
    for f, cp, cb in zip(table.features, table.count_plus, table.count_base_excl):
        deficit = max(table.min_coverage - cp, 0) / p_plus, max(table.min_coverage - cb, 0) / p_base
        need = max(need, *deficit)
    return max(1, math.ceil(2 * need))


def minimal_r(n_active: int, min_coverage: int) -> int:
    """Task pairs for which every feature's expected coverage reaches ``min_coverage``."""
    base_size, plus_size = subset_sizes(n_active)
    p = min(plus_size / n_active, 1.0 - base_size / n_active)
    return math.ceil(min_coverage / p)


def _check_data(data, config):
    X, y = data.X, data.y
    if X.ndim != 2:
        raise ConfigurationError("data.X must be 2-d")
    m, n = X.shape
    if n < 3:
        raise ConfigurationError(f"need at least 3 features, got {n}")
    if y.shape[0] != m:
        raise ConfigurationError("label vector length does not match data")
    if not config.full_rows and m < config.s:
        raise ConfigurationError(f"subsample size s={config.s} exceeds sample count m={m}")


def _make_executor(threads):
    if threads is None or threads > 1:
        return ThreadPoolExecutor(max_workers=threads)
    return None


def estimate_contributions(data, config: RandSelConfig, active, iteration: int = 0, executor=None):
    """One iteration's Monte-Carlo estimate: ``r`` task pairs plus coverage top-ups.

    Returns ``(table, results)`` where ``results`` lists every evaluated
    ``(task, alignment)`` pair.
    """
    m = data.X.shape[0]
    plan = SeedPlan(config.master_seed)
    labels = data.y if config.balanced else None

    def pairs(lo, hi):
        tasks = []
        for i in range(lo, hi):
            tasks.extend(
                make_task_pair(
                    active, m, config.s, plan, i, iteration,
                    labels=labels, balanced=config.balanced, full_rows=config.full_rows,
                )
            )
        return tasks

    tasks = pairs(0, config.r)
    results = list(zip(tasks, _evaluate_all(tasks, data, config, executor)))
    table = aggregate_contributions(results, active, config.min_coverage)

    issued = config.r
    for _ in range(MAX_TOPUP_ROUNDS):
        if not table.uncovered():
            break
        extra = _topup_estimate(table, len(active))
        logger.info("iteration %d: topping up %d task pairs for %s", iteration, extra, table.uncovered())
        more = pairs(issued, issued + extra)
        issued += extra
        results.extend(zip(more, _evaluate_all(more, data, config, executor)))
        table = aggregate_contributions(results, active, config.min_coverage)
    if table.uncovered():
        raise ConfigurationError(
            f"coverage unattainable for features {table.uncovered()}; "
            f"use r >= {minimal_r(len(active), config.min_coverage)}"
        )
    return table, results


def run(data, config: RandSelConfig, threads: int | None = 1) -> SelectionTrace:
    """Run the selection loop to completion.

    Parameters
    ----------
    data : Dataset
        Anything with ``X`` (m x n float array) and ``y`` (length m).
    config : RandSelConfig
    threads : int, optional
        Worker threads for task evaluation.  ``None`` uses every core.
        The result does not depend on this value.

    Returns
    -------
    SelectionTrace
    """
    _check_data(data, config)
    n = data.X.shape[1]
    active = tuple(range(n))
    fixed: set = set()
    history: dict = {}
    records = []
    executor = _make_executor(threads)
    try:
        iteration = 0
        while len(active) > 2:
            if config.fixing_enabled and fixed >= set(active):
                break
            start = time.perf_counter()
            table, results = estimate_contributions(data, config, active, iteration, executor)
            if config.fixing_enabled:
                fixed.update(update_fixing(history, table, config.a, config.t))
            kept, dropped = cull(table, active, config.z, fixed)
            records.append(
                IterationRecord(
                    iteration=iteration,
                    active=active,
                    table=table,
                    dropped=dropped,
                    fixed=tuple(sorted(fixed & set(active))),
                    n_tasks=len(results),
                    kernel_evaluations=sum(len(t.row_indices) ** 2 for t, _ in results),
                    wall_time=time.perf_counter() - start,
                )
            )
            logger.info("iteration %d: %d active, dropped %s", iteration, len(active), list(dropped))
            if not dropped:
                break
            active = kept
            iteration += 1
    finally:
        if executor is not None:
            executor.shutdown()
    names = getattr(data, "feature_names", None)
    return SelectionTrace(records, active, config, PRNG_NAME, list(names) if names is not None else None)
