"""Python bindings for the phonematch toolkit.

Matrices are NumPy arrays with one vector per row.
"""

from ._phonematch import (
    ConfigError,
    Error,
    FormatError,
    InvalidArgument,
    MissingInput,
    NumericalError,
    collapse,
    distance_matrices,
    entropic_gw,
    evaluate,
    extract_matching,
    group_means,
    gw_cost,
    kmeans,
    pca,
    preprocess,
    procrustes,
    read_matrix,
    run_pipeline,
    run_stage,
    write_fixture,
    write_matrix,
)

__all__ = [
    "ConfigError",
    "Error",
    "FormatError",
    "InvalidArgument",
    "MissingInput",
    "NumericalError",
    "collapse",
    "distance_matrices",
    "entropic_gw",
    "evaluate",
    "extract_matching",
    "group_means",
    "gw_cost",
    "kmeans",
    "pca",
    "preprocess",
    "procrustes",
    "read_matrix",
    "run_pipeline",
    "run_stage",
    "write_fixture",
    "write_matrix",
]
