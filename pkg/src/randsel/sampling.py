"""Seeded generation of feature subsets and row subsamples.

Every random draw is tied to a 64-bit task seed derived from a master seed
and a (iteration, task index, side, retry) counter, so the whole task stream
is a pure function of the configuration.  Task generation never depends on
the order in which tasks are later evaluated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import ClassCoverageError, ParameterError, SelectionFinished

__all__ = [
    "PRNG_NAME",
    "TaskKind",
    "SeedPlan",
    "SubsampleTask",
    "draw_feature_subset",
    "draw_rows",
    "make_task_pair",
    "redraw_rows",
    "subset_sizes",
]

PRNG_NAME = f"numpy.random.PCG64 seeded via SeedSequence (numpy {np.__version__})"


class TaskKind(enum.IntEnum):
    BASE = 0
    PLUS = 1


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class SeedPlan:
    """Counter-based derivation of per-task seeds from a master seed.

    ``task_seed(iteration, index, kind)`` hashes the counter tuple together
    with the master seed through :class:`numpy.random.SeedSequence`, so two
    different counters give statistically independent streams and the same
    counter always gives the same seed.
    """

    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ParameterError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")

    def task_seed(self, iteration: int, index: int, kind: TaskKind | int, retry: int = 0) -> int:
        ss = np.random.SeedSequence(
            int(self.master_seed), spawn_key=(int(iteration), int(index), int(kind), int(retry))
        )
        return int(ss.generate_state(1, np.uint64)[0])

    def derived_seed(self, *key: int) -> int:
        """Seed for auxiliary streams (e.g. negative-class subsampling)."""
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(2**31,) + tuple(int(k) for k in key))
        return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class SubsampleTask:
    """One alignment evaluation: a feature subset on a row subsample."""

    feature_subset: tuple
    row_indices: np.ndarray
    task_seed: int
    kind: TaskKind
    index: int = 0
    iteration: int = 0
    retry: int = 0

    def __eq__(self, other):
        if not isinstance(other, SubsampleTask):
            return NotImplemented
        return (
            self.feature_subset == other.feature_subset
            and np.array_equal(self.row_indices, other.row_indices)
            and self.task_seed == other.task_seed
            and self.kind == other.kind
            and self.index == other.index
            and self.iteration == other.iteration
            and self.retry == other.retry
        )

    __hash__ = None


def subset_sizes(n_active: int) -> tuple[int, int]:
    """(BASE, PLUS) feature-subset sizes for ``n_active`` surviving features."""
    return n_active // 2, n_active // 2 + 1


def draw_feature_subset(active, size: int, seed) -> tuple:
    """Uniformly random ``size``-subset of ``active`` by a partial Fisher-Yates shuffle.

    Returns the chosen features as a sorted tuple.
    """
    pool = [int(f) for f in active]
    n = len(pool)
    size = int(size)
    if not 1 <= size <= n:
        raise ParameterError(f"subset size must be in [1, {n}], got {size}")
    rng = _generator(seed)
    # positions k..n-1 are still unshuffled at step k
    swaps = rng.integers(np.arange(size), n)
    for k, j in enumerate(swaps.tolist()):
        pool[k], pool[j] = pool[j], pool[k]
    return tuple(sorted(pool[:size]))


def draw_rows(m: int, s: int, labels=None, balanced: bool = False, seed=0, classes=None) -> np.ndarray:
    """Bootstrap ``s`` row indices out of ``m``.

    With ``balanced=True`` each class receives ``s // C`` draws (with
    replacement, within the class); the ``s % C`` leftover slots go to the
    rarest classes first, ties broken by class value.
    """
    m, s = int(m), int(s)
    if m < 1:
        raise ParameterError("m must be positive")
    if s < 1:
        raise ParameterError("s must be positive")
    rng = _generator(seed)
    if not balanced:
        return rng.integers(0, m, size=s)

    if labels is None:
        raise ParameterError("balanced sampling needs labels")
    labels = np.asarray(labels).ravel()
    if labels.size != m:
        raise ParameterError(f"labels has length {labels.size}, expected {m}")
    if classes is None:
        classes = np.unique(labels)
    classes = np.asarray(classes)
    members = [np.flatnonzero(labels == c) for c in classes]
    missing = [c for c, idx in zip(classes.tolist(), members) if idx.size == 0]
    if missing or len(classes) < 2:
        raise ClassCoverageError(f"balanced sampling needs every class present; missing {missing or classes.tolist()}")

    C = len(classes)
    counts = np.full(C, s // C, dtype=np.int64)
    order = sorted(range(C), key=lambda c: (members[c].size, c))
    for c in order[: s % C]:
        counts[c] += 1
    parts = [idx[rng.integers(0, idx.size, size=k)] for idx, k in zip(members, counts)]
    return np.concatenate(parts)


def _make_task(active, size, m, s, plan, index, iteration, kind, labels, balanced, full_rows):
    seed = plan.task_seed(iteration, index, kind)
    rng = _generator(seed)
    subset = draw_feature_subset(active, size, rng)
    if full_rows:
        rows = np.arange(m)
    else:
        rows = draw_rows(m, s, labels=labels, balanced=balanced, seed=rng)
    return SubsampleTask(subset, rows, seed, kind, index=index, iteration=iteration)


def make_task_pair(
    active,
    m: int,
    s: int,
    plan: SeedPlan,
    i: int,
    iteration: int = 0,
    labels=None,
    balanced: bool = False,
    full_rows: bool = False,
) -> tuple[SubsampleTask, SubsampleTask]:
    """Independent BASE (``n//2`` features) and PLUS (``n//2 + 1``) tasks for loop index ``i``."""
    active = tuple(int(f) for f in active)
    if len(active) < 3:
        raise SelectionFinished(f"only {len(active)} active features left")
    base_size, plus_size = subset_sizes(len(active))
    common = dict(m=m, s=s, plan=plan, index=i, iteration=iteration, labels=labels, balanced=balanced, full_rows=full_rows)
    base = _make_task(active, base_size, kind=TaskKind.BASE, **common)
    plus = _make_task(active, plus_size, kind=TaskKind.PLUS, **common)
    return base, plus


def redraw_rows(task: SubsampleTask, m: int, s: int, retry: int, labels=None, balanced: bool = False) -> SubsampleTask:
    """Same task with a fresh row subsample drawn from a retry-derived seed."""
    ss = np.random.SeedSequence(task.task_seed, spawn_key=(int(retry),))
    seed = int(ss.generate_state(1, np.uint64)[0])
    rows = draw_rows(m, s, labels=labels, balanced=balanced, seed=seed)
    return SubsampleTask(
        task.feature_subset, rows, task.task_seed, task.kind, index=task.index, iteration=task.iteration, retry=retry
    )
