"""KNN local density, denoising of sparse borders, and the denoised pipeline.

For datasets whose cluster borders touch, plain fission cannot find a
crack wider than the stopping threshold. The pipeline here removes a
growing fraction of the lowest-density points until the surviving dense
subset separates (its maximal crack exceeds ``t`` times its own stopping
threshold), clusters that subset by fission, and then re-attaches the
removed points one at a time through the globally nearest classified
neighbor.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .fission import Partition, as_distance_values, check_subset, fission_cluster, max_nn_distance
from .metricspace import Metric

__all__ = [
    "DensityVector",
    "FcParams",
    "DenoiseResult",
    "knn_density",
    "removal_order",
    "denoise",
    "assign_remainder",
    "fc_knn",
    "OverDenoisedError",
]

# Grid comparisons of the removal ratio tolerate this much accumulated float error.
_R_EPS = 1e-12


class OverDenoisedError(RuntimeError):
    """The removal schedule left fewer than 2 points to cluster."""


@dataclass
class DensityVector:
    """Per-point local density: reciprocal sum of distances to the n0 nearest others.

    ``rho[i]`` is ``inf`` exactly when all n0 nearest neighbors of i are at
    distance 0 (duplicate points).
    """

    rho: np.ndarray
    n0: int


@dataclass(frozen=True)
class FcParams:
    """Parameters of the denoised pipeline.

    Parameters
    ----------
    t : float
        Separation multiplier, > 1. Denoising continues until the dense
        subset's maximal crack exceeds ``t`` times its max nearest-neighbor
        distance; larger t strips more border points.
    n0 : int, float or None
        Neighborhood size of the density indicator. An int is used as
        given; a float in (0, 1) means ``ceil(n0 * n)``; None means the
        default ``ceil(0.02 * n)``.
    r_start, r_step, r_max : float
        Removal-ratio schedule: start at ``r_start``, grow by ``r_step``
        up to ``r_max``; ``floor(r * n)`` lowest-density points are removed
        at each ratio.
    metric : Metric
        Used by callers that build the matrix from raw points.
    """

    t: float = 4.0
    n0: int | float | None = None
    r_start: float = 0.4
    r_step: float = 0.1
    r_max: float = 0.9
    metric: Metric = Metric()

    def __post_init__(self):
        if not self.t > 1:
            raise ValueError(f"t must be > 1, got {self.t}")
        if not (0 < self.r_start <= self.r_max < 1):
            raise ValueError(
                f"need 0 < r_start <= r_max < 1, got r_start={self.r_start}, r_max={self.r_max}"
            )
        if not self.r_step > 0:
            raise ValueError(f"r_step must be > 0, got {self.r_step}")
        if isinstance(self.n0, float) and not 0 < self.n0 < 1:
            raise ValueError(f"fractional n0 must be in (0, 1), got {self.n0}")

    def resolve_n0(self, n: int) -> int:
        """Concrete neighborhood size for a dataset of n points."""
        if self.n0 is None:
            k = math.ceil(0.02 * n)
        elif isinstance(self.n0, float):
            k = math.ceil(self.n0 * n)
        else:
            k = int(self.n0)
        k = max(k, 1)
        if not 1 <= k < n:
            raise ValueError(f"n0={k} out of range for n={n}")
        return k


@dataclass
class DenoiseResult:
    """Outcome of the removal schedule.

    ``separated`` records whether the dense subset's maximal crack exceeded
    ``t`` times its max nearest-neighbor distance before the ratio ceiling.
    """

    dense_subset: np.ndarray
    removed: np.ndarray
    r_final: float
    mc_final: float
    d0_final: float
    separated: bool


def knn_density(dm, n0: int) -> DensityVector:
    """Local density indicator: 1 / sum of distances to the n0 nearest other points.

    The point itself is excluded from its neighborhood. Neighbor ties at
    the n0-th radius resolve to lower point indices, which never changes
    the distance sum.
    """
    values = as_distance_values(dm)
    n = values.shape[0]
    if not 1 <= n0 <= n - 1:
        raise ValueError(f"n0 must be in [1, {n - 1}], got {n0}")
    work = values.copy()
    np.fill_diagonal(work, np.inf)
    nearest = np.partition(work, n0 - 1, axis=1)[:, :n0]
    # Summing in ascending order fixes the accumulation order no matter how
    # the selection permuted the values.
    sums = np.sort(nearest, axis=1).sum(axis=1)
    rho = np.empty_like(sums)
    zero = sums == 0
    rho[zero] = np.inf
    rho[~zero] = 1.0 / sums[~zero]
    return DensityVector(rho, n0)


def removal_order(rho: np.ndarray) -> np.ndarray:
    """Indices in removal priority: ascending density, ties removed from the highest index down.

    Infinite densities (duplicate points) sort last and are removed only
    after every finite-density point.
    """
    n = rho.shape[0]
    return np.lexsort((-np.arange(n), rho))


def _removal_count(r: float, n: int) -> int:
    return int(math.floor(r * n))


def denoise(dm, params: FcParams) -> DenoiseResult:
    """Strip low-density points until the survivors separate, per the ratio schedule.

    Density is computed once on the full input. At each ratio r the
    ``floor(r*n)`` lowest-density points of the *entire* input are removed;
    the max nearest-neighbor distance and maximal crack of the survivors
    are then refreshed. The schedule stops as soon as the crack exceeds
    ``t`` times the survivors' threshold, or at ``r_max``.
    """
    from .fission import _kernel_crack

    values = as_distance_values(dm)
    n = values.shape[0]
    if n < 5:
        raise ValueError(f"denoising needs at least 5 points, got {n}")
    n0 = params.resolve_n0(n)
    order = removal_order(knn_density(values, n0).rho)

    def survivors(r):
        cut = _removal_count(r, n)
        removed = order[:cut]
        keep = np.setdiff1d(np.arange(n, dtype=np.int64), removed, assume_unique=True)
        if keep.size < 2:
            raise OverDenoisedError(
                f"over-denoised: removal ratio {r:g} leaves {keep.size} point(s)"
            )
        return keep, np.sort(removed)

    def stats(keep):
        return _kernel_crack(values, keep).value, max_nn_distance(values, keep)

    step = 0
    r = params.r_start
    keep, removed = survivors(r)
    mc, d0 = stats(keep)
    while mc <= params.t * d0 and r < params.r_max - _R_EPS:
        step += 1
        r = min(params.r_start + step * params.r_step, params.r_max)
        keep, removed = survivors(r)
        mc, d0 = stats(keep)
    return DenoiseResult(
        dense_subset=keep,
        removed=removed,
        r_final=r,
        mc_final=mc,
        d0_final=d0,
        separated=bool(mc > params.t * d0),
    )


def assign_remainder(dm, partial: Partition, subset, removed) -> Partition:
    """Label removed points by repeatedly attaching the globally nearest one.

    Each round finds the minimum distance between any classified and any
    unclassified point (ties to the lowest classified index, then the
    lowest unclassified index), gives the unclassified point that cluster,
    and promotes it to classified. Labels of ``subset`` never change.
    """
    values = as_distance_values(dm)
    n = values.shape[0]
    subset = check_subset(subset, n)
    if partial.labels.size != subset.size:
        raise ValueError(
            f"partial partition covers {partial.labels.size} points but subset has {subset.size}"
        )
    if len(removed) == 0:
        full_removed = np.array([], dtype=np.int64)
    else:
        full_removed = check_subset(removed, n)
        if np.intersect1d(subset, full_removed).size:
            raise ValueError("classified subset and removed set overlap")
    if subset.size + full_removed.size != n:
        raise ValueError("subset and removed set must cover all points together")

    labels = np.full(n, -1, dtype=np.int64)
    labels[subset] = partial.labels
    if full_removed.size == 0:
        return Partition(labels, partial.k, list(partial.split_trace), partial.denoise,
                         list(partial.warnings))

    # For every unclassified point track its nearest classified point; each
    # newly attached point can only improve those bests, so one O(|removed|)
    # refresh per round reproduces the global minimum rule exactly.
    pending = full_removed.copy()
    cross = values[np.ix_(subset, pending)]
    pos = cross.argmin(axis=0)  # first minimum = lowest classified index
    best_dist = cross[pos, np.arange(pending.size)]
    best_anchor = subset[pos]
    alive = np.ones(pending.size, dtype=bool)
    for _ in range(pending.size):
        cand = np.flatnonzero(alive)
        # lexicographic (distance, anchor index, point index)
        key = cand[np.lexsort((pending[cand], best_anchor[cand], best_dist[cand]))[0]]
        point = pending[key]
        labels[point] = labels[best_anchor[key]]
        alive[key] = False
        rest = np.flatnonzero(alive)
        if rest.size:
            d = values[point, pending[rest]]
            better = (d < best_dist[rest]) | ((d == best_dist[rest]) & (point < best_anchor[rest]))
            upd = rest[better]
            best_dist[upd] = d[better]
            best_anchor[upd] = point
    return Partition(labels, partial.k, list(partial.split_trace), partial.denoise,
                     list(partial.warnings))


def fc_knn(dm, params: FcParams | None = None) -> Partition:
    """Denoise, fission the dense subset, then re-attach the removed points.

    The fission stage stops at the dense subset's own max nearest-neighbor
    distance; the ``t`` multiplier gates only the denoising schedule. When
    no ratio separates the data, clustering proceeds on the final subset
    and a warning is recorded on the partition.
    """
    params = params or FcParams()
    values = as_distance_values(dm)
    result = denoise(values, params)
    warnings = []
    if not result.separated:
        warnings.append(
            f"denoising reached r={result.r_final:g} without separating "
            f"(crack {result.mc_final:g} <= t*threshold {params.t * result.d0_final:g}); "
            "clustering the final subset anyway"
        )
    keep = result.dense_subset
    sub_values = values[np.ix_(keep, keep)]
    dense_part = fission_cluster(sub_values, stop_threshold="auto")
    dense_part = replace(dense_part, denoise=result, warnings=warnings)
    return assign_remainder(values, dense_part, keep, result.removed)
