"""Scikit-learn estimator wrappers around the fission clustering pipeline."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array

from .density import FcParams, fc_knn
from .fission import fission_cluster
from .metricspace import DEFAULT_MAX_ENTRIES, DistanceMatrix, Metric, distance_matrix

__all__ = ["FissionClustering", "KNNFissionClustering"]


def _build_matrix(X, metric: str, p, max_entries: int) -> np.ndarray:
    if metric == "precomputed":
        X = check_array(X)
        return DistanceMatrix(X).values
    X = check_array(X)
    m = Metric(metric, p if metric == "minkowski" else None)
    return distance_matrix(X, m, max_entries=max_entries).values


class FissionClustering(ClusterMixin, BaseEstimator):
    """Divisive clustering by recursive splits at the largest distance-matrix crack.

    Every row of the (sub)distance matrix is sorted; the largest adjacent
    gap over all rows locates the split, and splitting stops once no live
    subset's largest gap exceeds the stopping threshold (by default the
    max nearest-neighbor distance of the input). Suited to data whose
    clusters are separated by more than the within-cluster point spacing.

    Parameters
    ----------
    metric : {'euclidean', 'manhattan', 'minkowski', 'precomputed'}, default='euclidean'
        With 'precomputed', ``fit`` expects a square distance matrix.
    p : float, default=None
        Minkowski order, required iff ``metric='minkowski'``.
    stop_threshold : 'auto' or float, default='auto'
        'auto' uses the max nearest-neighbor distance of the full input.
    threshold_mode : {'global', 'per-subset'}, default='global'
        'per-subset' compares each live subset against its own max
        nearest-neighbor distance instead of the single global threshold.
    max_matrix_entries : int, default=1e8
        Memory guard on the dense n*n matrix.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
        Cluster ids, contiguous from 0.
    n_clusters_ : int
    split_trace_ : list of SplitRecord
        Size, crack width, and stop reference of every executed split.
    """

    def __init__(
        self,
        metric="euclidean",
        p=None,
        stop_threshold="auto",
        threshold_mode="global",
        max_matrix_entries=DEFAULT_MAX_ENTRIES,
    ):
        self.metric = metric
        self.p = p
        self.stop_threshold = stop_threshold
        self.threshold_mode = threshold_mode
        self.max_matrix_entries = max_matrix_entries

    def fit(self, X, y=None):
        """Cluster X (samples or a precomputed distance matrix)."""
        values = _build_matrix(X, self.metric, self.p, self.max_matrix_entries)
        part = fission_cluster(values, self.stop_threshold, self.threshold_mode)
        self.labels_ = part.labels
        self.n_clusters_ = part.k
        self.split_trace_ = part.split_trace
        return self


class KNNFissionClustering(ClusterMixin, BaseEstimator):
    """Fission clustering with KNN-density denoising for touching borders.

    Low-density points are stripped (at growing removal ratios) until the
    surviving dense subset's largest crack exceeds ``t`` times its max
    nearest-neighbor distance; the subset is then fission-clustered and the
    removed points re-attach through their globally nearest classified
    neighbor, one at a time.

    Parameters
    ----------
    t : float, default=4.0
        Separation multiplier gating the denoising schedule (> 1).
    n0 : int, float or None, default=None
        Density neighborhood size; None means ceil(2% of n), a float f in
        (0, 1) means ceil(f*n).
    r_start, r_step, r_max : float
        Removal-ratio schedule (defaults 0.4, 0.1, 0.9).
    metric, p, max_matrix_entries
        As in :class:`FissionClustering`; 'precomputed' is accepted.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    n_clusters_ : int
    denoise_ : DenoiseResult
        Final removal ratio, crack/threshold values, and the dense subset.
    separated_ : bool
        Whether the schedule achieved separation before the ratio ceiling.
    split_trace_ : list of SplitRecord
    warnings_ : list of str
    """

    def __init__(
        self,
        t=4.0,
        n0=None,
        r_start=0.4,
        r_step=0.1,
        r_max=0.9,
        metric="euclidean",
        p=None,
        max_matrix_entries=DEFAULT_MAX_ENTRIES,
    ):
        self.t = t
        self.n0 = n0
        self.r_start = r_start
        self.r_step = r_step
        self.r_max = r_max
        self.metric = metric
        self.p = p
        self.max_matrix_entries = max_matrix_entries

    def _params(self) -> FcParams:
        metric = Metric("euclidean") if self.metric == "precomputed" else Metric(
            self.metric, self.p if self.metric == "minkowski" else None
        )
        return FcParams(
            t=self.t,
            n0=self.n0,
            r_start=self.r_start,
            r_step=self.r_step,
            r_max=self.r_max,
            metric=metric,
        )

    def fit(self, X, y=None):
        """Cluster X (samples or a precomputed distance matrix)."""
        values = _build_matrix(X, self.metric, self.p, self.max_matrix_entries)
        part = fc_knn(values, self._params())
        self.labels_ = part.labels
        self.n_clusters_ = part.k
        self.denoise_ = part.denoise
        self.separated_ = part.denoise.separated
        self.split_trace_ = part.split_trace
        self.warnings_ = part.warnings
        return self
