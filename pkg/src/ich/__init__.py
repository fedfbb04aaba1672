"""Iterative cluster harvesting for high-dimensional image features."""

from .clustering import (
    KMeansClustering,
    MergeStep,
    WardClustering,
    kmeans_cluster,
    ward_cluster,
    ward_linkage,
)
from .dataset import (
    ClusterAssignment,
    ConfigError,
    DataError,
    LabeledDataset,
    canonical_relabel,
    check_feature_matrix,
    check_index_subset,
    subset_rows,
)
from .feature_io import (
    FormatError,
    load_features,
    read_csv_features,
    read_feature_file,
    write_feature_file,
)
from .harvesting import (
    BenchmarkReport,
    HarvestConfig,
    HarvestOutcome,
    HarvestState,
    IterationRecord,
    IterativeClusterHarvester,
    compare_runs,
    run_ich,
    run_otc,
)
from .metrics import (
    ContingencyTable,
    MajorityConfusion,
    SilhouetteReport,
    contingency_table,
    homogeneity,
    majority_confusion,
    nearest_neighbor_assign,
    pairwise_distances,
    silhouette_report,
)
from .projection import DimensionReducer, fit_projection
from .synthetic import (
    CLASS_NAMES,
    SyntheticWaferMap,
    generate_dataset,
    generate_map,
    write_image_archive,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "CLASS_NAMES",
    "ClusterAssignment",
    "ConfigError",
    "ContingencyTable",
    "DataError",
    "DimensionReducer",
    "FormatError",
    "HarvestConfig",
    "HarvestOutcome",
    "HarvestState",
    "IterationRecord",
    "IterativeClusterHarvester",
    "KMeansClustering",
    "LabeledDataset",
    "MajorityConfusion",
    "MergeStep",
    "SilhouetteReport",
    "SyntheticWaferMap",
    "WardClustering",
    "canonical_relabel",
    "check_feature_matrix",
    "check_index_subset",
    "compare_runs",
    "contingency_table",
    "fit_projection",
    "generate_dataset",
    "generate_map",
    "homogeneity",
    "kmeans_cluster",
    "load_features",
    "majority_confusion",
    "nearest_neighbor_assign",
    "pairwise_distances",
    "read_csv_features",
    "read_feature_file",
    "run_ich",
    "run_otc",
    "silhouette_report",
    "subset_rows",
    "ward_cluster",
    "ward_linkage",
    "write_feature_file",
    "write_image_archive",
]
