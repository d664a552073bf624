"""Crack machinery and the recursive fission loop.

A *crack* of a point set, seen from a reference point x0, is an adjacent
gap in the ascending list of distances from x0 to every point of the set
(self-distance included): no other distance from x0 falls strictly inside
it. The set is split at its maximal crack; splitting stops once every
live subset's maximal crack is at most the stopping threshold, by default
the largest nearest-neighbor distance of the full input.
"""

from dataclasses import dataclass, field

import numpy as np

from .metricspace import DistanceMatrix

__all__ = [
    "GapTable",
    "CrackLocation",
    "SplitRecord",
    "Partition",
    "gap_table",
    "maximal_crack",
    "split_at_crack",
    "max_nn_distance",
    "fission_cluster",
    "threshold_connected",
]


def as_distance_values(dm) -> np.ndarray:
    """Validated float64 matrix view of a DistanceMatrix or raw square array."""
    if isinstance(dm, DistanceMatrix):
        return dm.values
    return DistanceMatrix(np.asarray(dm, dtype=np.float64)).values


def check_subset(sub, n: int) -> np.ndarray:
    """Canonical subset: int64 indices, sorted ascending, nonempty, no duplicates."""
    arr = np.asarray(sub, dtype=np.int64).ravel()
    if arr.size == 0:
        raise ValueError("subset is empty")
    if arr.min() < 0 or arr.max() >= n:
        raise ValueError(f"subset indices out of range for n={n}")
    arr = np.sort(arr)
    if np.any(arr[1:] == arr[:-1]):
        raise ValueError("subset contains duplicate indices")
    return arr


@dataclass
class GapTable:
    """Per-row sorted distances of a (sub)matrix and their adjacent gaps.

    Attributes
    ----------
    sorted_rows : ndarray of shape (m, m)
        Each row of the restricted matrix in ascending order (self-distance
        included, so column 0 is always 0).
    gaps : ndarray of shape (m, m-1)
        Adjacent differences of ``sorted_rows``.
    order : ndarray of shape (m, m)
        Original point indices behind each sorted position; ties sorted by
        ascending point index.
    indices : ndarray of shape (m,)
        The subset the table was built over.
    """

    sorted_rows: np.ndarray
    gaps: np.ndarray
    order: np.ndarray
    indices: np.ndarray


@dataclass(frozen=True)
class CrackLocation:
    """A maximal adjacent gap in one reference point's sorted distances.

    ``threshold`` is the lower distance of the gap pair; points of the
    subset at distance <= threshold from ``row`` form the near side of the
    split. No distance from ``row`` lies strictly inside
    ``(threshold, threshold + value)``.
    """

    row: int
    low: int
    value: float
    threshold: float


@dataclass(frozen=True)
class SplitRecord:
    """One executed split: subset size, its maximal crack, and the stop reference."""

    size: int
    crack: float
    threshold: float


@dataclass
class Partition:
    """Assignment of every point to one of k clusters.

    Cluster ids are contiguous ``0..k-1`` with no empty cluster. For plain
    fission the ids are ordered by each cluster's smallest member index.
    """

    labels: np.ndarray
    k: int
    split_trace: list = field(default_factory=list)
    denoise: object = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.ndim != 1 or lab.size == 0:
            raise ValueError("labels must be a nonempty 1-D vector")
        present = np.unique(lab)
        if not np.array_equal(present, np.arange(self.k)):
            raise ValueError(f"cluster ids must be contiguous 0..{self.k - 1} with no empty cluster")
        self.labels = lab

    @property
    def n(self) -> int:
        return self.labels.size


def gap_table(dm, sub) -> GapTable:
    """Sorted rows and adjacent gaps of ``dm`` restricted to ``sub``."""
    values = as_distance_values(dm)
    idx = check_subset(sub, values.shape[0])
    restricted = values[np.ix_(idx, idx)]
    # Stable sort keeps ties in ascending local position, which maps to
    # ascending original point index because idx is sorted.
    local_order = np.argsort(restricted, axis=1, kind="stable")
    sorted_rows = np.take_along_axis(restricted, local_order, axis=1)
    gaps = sorted_rows[:, 1:] - sorted_rows[:, :-1]
    return GapTable(sorted_rows, gaps, idx[local_order], idx)


def maximal_crack(gt: GapTable) -> CrackLocation:
    """Location of the maximum entry of a gap table.

    Ties break to the smallest row index, then the smallest sorted
    position. Requires a subset of size >= 2.
    """
    m = gt.indices.size
    if m < 2:
        raise ValueError("no crack defined for a subset of fewer than 2 points")
    flat = int(np.argmax(gt.gaps))
    r, pos = divmod(flat, gt.gaps.shape[1])
    return CrackLocation(
        row=int(gt.indices[r]),
        low=pos,
        value=float(gt.gaps[r, pos]),
        threshold=float(gt.sorted_rows[r, pos]),
    )


def _kernel_crack(values: np.ndarray, idx: np.ndarray) -> CrackLocation:
    """Fast path equivalent of ``maximal_crack(gap_table(dm, idx))``."""
    from ._kernels import max_gap_crack

    gap, local_row, pos, left = max_gap_crack(values, idx)
    return CrackLocation(row=int(idx[local_row]), low=int(pos), value=float(gap), threshold=float(left))


def split_at_crack(sub, dm, cl: CrackLocation):
    """Binary split of ``sub`` at a crack location.

    The near side collects points of ``sub`` whose distance to ``cl.row``
    is at most ``cl.threshold`` (including ``cl.row`` itself); the rest
    form the far side. Both sides are nonempty.
    """
    values = as_distance_values(dm)
    idx = check_subset(sub, values.shape[0])
    if cl.row not in idx:
        raise ValueError(f"crack row {cl.row} is not a member of the subset")
    row = values[cl.row, idx]
    mask = row <= cl.threshold
    near, far = idx[mask], idx[~mask]
    if near.size == 0 or far.size == 0:
        raise ValueError("inconsistent crack location: split would produce an empty side")
    # The threshold must be an actual distance at sorted position `low`, and
    # the next distance above it must sit exactly `value` higher; that next
    # distance being the minimum above the threshold is what makes the gap a
    # crack (nothing falls strictly inside it).
    upper = row[~mask].min()
    if (
        near.size != cl.low + 1
        or not np.any(row == cl.threshold)
        or float(upper - cl.threshold) != cl.value
    ):
        raise ValueError("inconsistent crack location: threshold does not match the matrix")
    return near, far


def max_nn_distance(dm, sub=None) -> float:
    """Max over the subset of each point's distance to its nearest other point.

    This is the default stopping threshold of :func:`fission_cluster`.
    """
    values = as_distance_values(dm)
    idx = (
        np.arange(values.shape[0], dtype=np.int64)
        if sub is None
        else check_subset(sub, values.shape[0])
    )
    if idx.size < 2:
        raise ValueError("nearest-neighbor distance needs at least 2 points")
    from ._kernels import max_nn_distance_kernel

    return float(max_nn_distance_kernel(values, idx))


def threshold_connected(dm, sub, threshold: float) -> bool:
    """Whether the graph on ``sub`` with edges at distance <= threshold is connected."""
    values = as_distance_values(dm)
    idx = check_subset(sub, values.shape[0])
    adj = values[np.ix_(idx, idx)] <= threshold
    m = idx.size
    visited = np.zeros(m, dtype=bool)
    visited[0] = True
    frontier = visited.copy()
    while frontier.any():
        reach = adj[frontier].any(axis=0) & ~visited
        visited |= reach
        frontier = reach
    return bool(visited.all())


class _Live:
    """A live subset with its cached crack and optional own stop threshold."""

    __slots__ = ("idx", "crack", "own_d0")

    def __init__(self, values, idx, per_subset):
        self.idx = idx
        if idx.size >= 2:
            self.crack = _kernel_crack(values, idx)
            self.own_d0 = max_nn_distance(values, idx) if per_subset else None
        else:
            self.crack = None
            self.own_d0 = None


def fission_cluster(dm, stop_threshold="auto", threshold_mode: str = "global") -> Partition:
    """Recursively split a dataset at maximal cracks until none exceeds the threshold.

    Parameters
    ----------
    dm : DistanceMatrix or square ndarray
    stop_threshold : 'auto' or float
        'auto' computes the max nearest-neighbor distance of the full input
        once, up front. A float is used as given.
    threshold_mode : {'global', 'per-subset'}
        'global' compares every subset's maximal crack against the single
        stop threshold. 'per-subset' compares each live subset against its
        own max nearest-neighbor distance instead (the bound the splitting
        guarantee is actually stated for); ``stop_threshold`` is ignored.

    Returns
    -------
    Partition
        Labels, cluster count, and one SplitRecord per executed split.
        A k-cluster result takes exactly k-1 splits.
    """
    values = as_distance_values(dm)
    n = values.shape[0]
    if threshold_mode not in ("global", "per-subset"):
        raise ValueError(f"unknown threshold_mode {threshold_mode!r}")
    per_subset = threshold_mode == "per-subset"
    if n == 1:
        return Partition(np.zeros(1, dtype=np.int64), 1, [])
    if per_subset:
        global_thr = None
    elif stop_threshold == "auto":
        global_thr = max_nn_distance(values)
    else:
        global_thr = float(stop_threshold)

    live = [_Live(values, np.arange(n, dtype=np.int64), per_subset)]
    trace: list[SplitRecord] = []
    splits = 0
    while True:
        candidate = None
        cand_key = None
        for s in live:
            if s.crack is None:
                continue
            thr = s.own_d0 if per_subset else global_thr
            if s.crack.value > thr:
                key = (-s.idx.size, int(s.idx[0]))
                if candidate is None or key < cand_key:
                    candidate = s
                    cand_key = key
        if candidate is None:
            break
        if splits >= n - 1:
            raise RuntimeError("fission did not terminate: split count exceeded n-1")
        thr = candidate.own_d0 if per_subset else global_thr
        near, far = split_at_crack(candidate.idx, values, candidate.crack)
        trace.append(SplitRecord(candidate.idx.size, candidate.crack.value, thr))
        splits += 1
        live.remove(candidate)
        live.append(_Live(values, near, per_subset))
        live.append(_Live(values, far, per_subset))

    live.sort(key=lambda s: int(s.idx[0]))
    labels = np.empty(n, dtype=np.int64)
    for cid, s in enumerate(live):
        labels[s.idx] = cid
    return Partition(labels, len(live), trace)
