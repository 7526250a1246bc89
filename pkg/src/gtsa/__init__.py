"""Curvature-aware local PCA with geodesic tangent-space aggregation.

Public surface: dataset handling, the embedding pipeline and its
transport-weighted variant, PCA/kernel-PCA baselines, Ward clustering
with external validation indices, and CSV/SVG artifact helpers.
"""

from .baselines import PcaModel, kernel_pca_rbf, pca_embed
from .clustering import (Partition, adjusted_rand_index, fowlkes_mallows,
                         metrics_report, v_measure, ward_cluster)
from .curvature import CurvatureField, mean_curvatures
from .data import (LabeledDataset, PreprocessConfig, load_csv, pre_reduce,
                   preprocess, save_csv, standardize, stratified_subsample)
from .graph import KnnGraph, build_knn, ensure_connected, geodesic_all_pairs
from .linalg import (SymEigResult, covariance, sym_eig,
                     weighted_covariance_at)
from .method import (AlignmentMatrix, Embedding, FitResult, GtsaConfig,
                     LocalBasisSet, alignment_matrix, curvature_weights,
                     fit, local_tangent_bases, select_tau,
                     spectral_embedding, subspace_affinity,
                     wasserstein_weights)
from .transport import (DiscreteMeasure, SinkhornResult, TransportPlan,
                        local_measure, sinkhorn, sliced_wasserstein,
                        wasserstein_1d, wasserstein_exact)

__version__ = "0.1.0"

__all__ = [
    "AlignmentMatrix", "CurvatureField", "DiscreteMeasure", "Embedding",
    "FitResult", "GtsaConfig", "KnnGraph", "LabeledDataset",
    "LocalBasisSet", "Partition", "PcaModel", "PreprocessConfig",
    "SinkhornResult", "SymEigResult", "TransportPlan",
    "adjusted_rand_index", "alignment_matrix", "build_knn", "covariance",
    "curvature_weights", "ensure_connected", "fit", "fowlkes_mallows",
    "geodesic_all_pairs", "kernel_pca_rbf", "load_csv", "local_measure",
    "local_tangent_bases", "mean_curvatures", "metrics_report",
    "pca_embed", "pre_reduce", "preprocess", "save_csv", "select_tau",
    "sinkhorn", "sliced_wasserstein", "spectral_embedding", "standardize",
    "stratified_subsample", "subspace_affinity", "sym_eig", "v_measure",
    "ward_cluster", "wasserstein_1d", "wasserstein_exact",
    "wasserstein_weights", "weighted_covariance_at",
]
