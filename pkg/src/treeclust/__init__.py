"""Clustering of attributed trees via T-A matrices, constrained NMF and cone-space metrics."""

from .cluster import AffinityGraph, ClusterResult, accuracy, build_affinity, kmeans_frechet, ncut_cluster
from .forest_io import ForestMatrix, assemble_forest, read_forest, write_forest
from .metaspace import cone_path, cone_ratio, dist_euclid, dist_l1, dist_l2_path, frechet_mean
from .scnmf import FactorizationConfig, MetaBasis, objective, scnmf_factorize, tau
from .simgen import (NoiseSpec, TreeGenSpec, add_attribute_noise, add_topology_noise, apply_noise, dataset_support,
                     generate_dataset)
from .tree import (SupportTreeSpec, TAMatrix, Tree, TreeError, build_support_spec, parent_index, to_ta_matrix,
                   unvectorize, vectorize)

__version__ = "0.1.0"
