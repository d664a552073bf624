"""Distance functions and the dense distance matrix consumed by the clustering core."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "Metric",
    "Dataset",
    "DistanceMatrix",
    "TriangleReport",
    "distance",
    "distance_matrix",
    "validate_triangle",
    "DEFAULT_MAX_ENTRIES",
]

# Dense n*n storage: refuse matrices above this many entries (~800 MB of float64).
DEFAULT_MAX_ENTRIES = 10**8

_METRIC_KINDS = ("euclidean", "manhattan", "minkowski")

# Triangle-inequality slack for accumulated rounding on unit-scale data.
TRIANGLE_TOL = 1e-9


@dataclass(frozen=True)
class Metric:
    """A point-to-point distance function.

    Parameters
    ----------
    kind : {'euclidean', 'manhattan', 'minkowski'}
        Family of the metric.
    p : float, optional
        Order of the Minkowski metric; required iff ``kind='minkowski'``.
        Values p < 1 are accepted but do not satisfy the triangle
        inequality, which voids the stopping-rule guarantee downstream.
    """

    kind: str = "euclidean"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in _METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {_METRIC_KINDS}")
        if self.kind == "minkowski":
            if self.p is None:
                raise ValueError("minkowski metric requires p")
            if not np.isfinite(self.p) or self.p <= 0:
                raise ValueError(f"minkowski p must be a positive real, got {self.p}")
        elif self.p is not None:
            raise ValueError(f"p is only meaningful for minkowski, not {self.kind}")

    @property
    def guarantees_triangle(self) -> bool:
        """Whether the metric provably satisfies the triangle inequality."""
        return self.kind != "minkowski" or self.p >= 1

    @property
    def tag(self) -> str:
        if self.kind == "minkowski":
            return f"minkowski:{self.p:g}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Metric":
        """Parse ``'euclidean'``, ``'manhattan'`` or ``'minkowski:<p>'``."""
        if text.startswith("minkowski:"):
            return cls("minkowski", float(text.split(":", 1)[1]))
        if text == "minkowski":
            raise ValueError("minkowski metric must be written as minkowski:<p>")
        return cls(text)


@dataclass
class Dataset:
    """Points in d-dimensional real space with optional ground-truth labels.

    Attributes
    ----------
    points : ndarray of shape (n, d)
        Finite real coordinates, one row per point.
    labels : ndarray of shape (n,) or None
        Integer class ids, contiguous ``0..c-1``.
    name : str
        Free-text identifier.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-D array, got shape {pts.shape}")
        n, d = pts.shape
        if n < 1 or d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        self.points = pts
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (n,):
                raise ValueError(f"labels must have shape ({n},), got {lab.shape}")
            classes = np.unique(lab)
            if not np.array_equal(classes, np.arange(classes.size)):
                raise ValueError("class ids must be contiguous 0..(c-1)")
            self.labels = lab

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int | None:
        return None if self.labels is None else int(self.labels.max()) + 1


@dataclass
class DistanceMatrix:
    """Symmetric nonnegative distance matrix with a zero diagonal.

    The sole input the splitting and denoising algorithms consume; the
    ``values`` array is frozen read-only on construction.
    """

    values: np.ndarray
    metric_tag: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {v.shape}")
        if v.shape[0] < 1:
            raise ValueError("distance matrix must cover at least one point")
        if not np.all(np.isfinite(v)):
            raise ValueError("distance matrix contains non-finite entries")
        if np.any(v < 0):
            raise ValueError("distance matrix contains negative entries")
        if np.any(np.diagonal(v) != 0.0):
            raise ValueError("distance matrix diagonal must be zero")
        if not np.array_equal(v, v.T):
            raise ValueError("distance matrix must be symmetric")
        v = v.copy() if not v.flags.owndata else v
        v.setflags(write=False)
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _check_point(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a 1-D coordinate vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return a


def distance(a, b, metric: Metric = Metric()) -> float:
    """Distance between two points under ``metric``.

    Raises ``ValueError`` on dimension mismatch or non-finite coordinates.
    """
    a = _check_point(a, "a")
    b = _check_point(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = np.abs(a - b)
    if metric.kind == "euclidean":
        return float(np.sqrt(np.sum(diff * diff)))
    if metric.kind == "manhattan":
        return float(np.sum(diff))
    return float(np.sum(diff**metric.p) ** (1.0 / metric.p))


def distance_matrix(
    data, metric: Metric = Metric(), max_entries: int = DEFAULT_MAX_ENTRIES
) -> DistanceMatrix:
    """Dense pairwise distance matrix of a dataset.

    Parameters
    ----------
    data : Dataset or array-like of shape (n, d)
    metric : Metric
    max_entries : int
        Memory guard; n*n above this raises instead of allocating.

    Returns
    -------
    DistanceMatrix
    """
    pts = data.points if isinstance(data, Dataset) else Dataset(np.asarray(data)).points
    n = pts.shape[0]
    if n * n > max_entries:
        raise ValueError(
            f"n={n} needs {n * n} matrix entries, above the cap of {max_entries}; "
            "raise max_entries explicitly if this is intended"
        )
    if metric.kind == "euclidean":
        values = cdist(pts, pts, "euclidean")
    elif metric.kind == "manhattan":
        values = cdist(pts, pts, "cityblock")
    else:
        values = cdist(pts, pts, "minkowski", p=metric.p)
    # cdist evaluates (i,j) and (j,i) with identical operation order, but
    # guard the invariant rather than assume it.
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(values, metric.tag)


@dataclass
class TriangleReport:
    """Outcome of sampling the triangle inequality on a distance matrix."""

    passed: bool
    worst_violation: float
    samples: int
    warning: str | None = None

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        msg = f"triangle check: {status} ({self.samples} triples, worst violation {self.worst_violation:.3g})"
        if self.warning:
            msg += f" [{self.warning}]"
        return msg


def validate_triangle(
    dm: DistanceMatrix, samples: int = 10_000, seed: int = 0, metric: Metric | None = None
) -> TriangleReport:
    """Check ``d(i,k) <= d(i,j) + d(j,k)`` on random triples.

    Report-only: never raises. Violations beyond an absolute tolerance of
    1e-9 fail the report; the worst signed violation is always returned.
    """
    n = dm.n
    if n < 3:
        return TriangleReport(True, float("-inf"), 0, "fewer than 3 points: vacuous")
    rng = np.random.RandomState(seed)
    i = rng.randint(0, n, size=samples)
    j = rng.randint(0, n, size=samples)
    k = rng.randint(0, n, size=samples)
    v = dm.values
    violation = v[i, k] - (v[i, j] + v[j, k])
    worst = float(violation.max())
    warning = None
    if metric is not None and not metric.guarantees_triangle:
        warning = f"metric {metric.tag} has p < 1: triangle inequality not guaranteed"
    return TriangleReport(worst <= TRIANGLE_TOL, worst, samples, warning)
