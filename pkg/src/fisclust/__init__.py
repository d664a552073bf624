"""Fission clustering: divisive clustering at maximal cracks of the distance matrix.

Datasets are recursively split at the largest adjacent gap found in any
row of the sorted distance matrix until every piece's largest gap falls
below a nearest-neighbor-derived threshold. A KNN-density denoising stage
handles clusters whose borders touch: strip low-density points until the
dense remainder separates, cluster it, then re-attach the removed points.
"""

from .density import (
    DenoiseResult,
    DensityVector,
    FcParams,
    OverDenoisedError,
    assign_remainder,
    denoise,
    fc_knn,
    knn_density,
)
from .estimators import FissionClustering, KNNFissionClustering
from .evaluation import EvalReport, accuracy, evaluate, f_score
from .fission import (
    CrackLocation,
    GapTable,
    Partition,
    SplitRecord,
    fission_cluster,
    gap_table,
    max_nn_distance,
    maximal_crack,
    split_at_crack,
    threshold_connected,
)
from .metricspace import (
    Dataset,
    DistanceMatrix,
    Metric,
    TriangleReport,
    distance,
    distance_matrix,
    validate_triangle,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DistanceMatrix",
    "Metric",
    "TriangleReport",
    "distance",
    "distance_matrix",
    "validate_triangle",
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
    "DensityVector",
    "FcParams",
    "DenoiseResult",
    "OverDenoisedError",
    "knn_density",
    "denoise",
    "assign_remainder",
    "fc_knn",
    "EvalReport",
    "accuracy",
    "f_score",
    "evaluate",
    "FissionClustering",
    "KNNFissionClustering",
    "__version__",
]
