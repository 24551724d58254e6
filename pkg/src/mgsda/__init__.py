"""Sparse multi-group discriminant analysis with a row-wise group penalty.

The estimator minimises ``1/2 tr(V^T W V) + 1/2 ||D^T V - I||_F^2 + lam * sum_i ||v_i||_2``
over ``p x (G-1)`` matrices ``V``. Indices in this package are 0-based; files
written by the command line use 1-based feature indices.
"""
from .classifier import build_model, classify, classify_batch, scores
from .diagnostics import diagnose, lambda_sim, lambda_thm2, theorem1_solution
from .errors import MGSDAError
from .population import PopulationSpec, derive, scenario
from .sample_stats import LabeledDataset, SampleStatistics, compute_stats, restrict
from .solver import (
    CoefficientMatrix,
    Problem,
    SolveReport,
    SolverOptions,
    kkt_residual,
    oracle_solve,
    solve,
    witness_check,
)

__all__ = [
    "CoefficientMatrix", "LabeledDataset", "MGSDAError", "PopulationSpec", "Problem",
    "SampleStatistics", "SolveReport", "SolverOptions", "build_model", "classify",
    "classify_batch", "compute_stats", "derive", "diagnose", "kkt_residual", "lambda_sim",
    "lambda_thm2", "oracle_solve", "restrict", "scenario", "scores", "solve",
    "theorem1_solution", "witness_check",
]
__version__ = "0.1.0"
