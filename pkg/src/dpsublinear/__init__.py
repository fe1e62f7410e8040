"""Differentially private sublinear-time graph estimators and audit tools."""

__version__ = "0.1.0"

from .avgdeg import AvgDegreeParams, EstimateReport, estimate_average_degree, make_params
from .graph import Graph, GraphError, GraphFormatError, OracleHandle, generate, load_edge_list, save_edge_list
from .matching import (EdgeRanking, OracleCache, SizeEstimate, estimate_matching_size,
                       estimate_matching_size_dp, estimate_vc_size, estimate_vc_size_dp,
                       greedy_matching, matching_oracle, vertex_cover_oracle)
from .noise import NoiseSource, laplace_mechanism, sample_laplace, sample_without_replacement

__all__ = [
    "AvgDegreeParams", "EdgeRanking", "EstimateReport", "Graph", "GraphError", "GraphFormatError",
    "NoiseSource", "OracleCache", "OracleHandle", "SizeEstimate", "estimate_average_degree",
    "estimate_matching_size", "estimate_matching_size_dp", "estimate_vc_size", "estimate_vc_size_dp",
    "generate", "greedy_matching", "laplace_mechanism", "load_edge_list", "make_params",
    "matching_oracle", "sample_laplace", "sample_without_replacement", "save_edge_list",
    "vertex_cover_oracle",
]
