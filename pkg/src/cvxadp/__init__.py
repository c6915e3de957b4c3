"""Convex stochastic programming toolkit.

Max-affine regression (AMAP), a self-contained LP solver, Hit-and-run
polytope sampling, and a full approximate-dynamic-programming driver, plus
two benchmark problems (energy storage, beer brewery).
"""

__version__ = "0.1.0"

from .amap import (AmapParams, DegenerateInputError, FoldState, TrainedEstimate,
                   improve_step, load_estimate, preprocess, save_estimate, train)
from .fadp import (CostToGoStack, EvaluationReport, GreedyPolicy, SampleBank,
                   SPProblem, backward_targets, evaluate_policy, forward_pass,
                   greedy_action, load_stack, run_fadp, save_bank_csv, save_stack)
from .kernels import get_backend
from .lp import (InfeasibleRegionError, LinearProgram, LpError, LpNumericError,
                 LpResult, Polytope, UnboundedObjectiveError,
                 UnboundedRegionError, chebyshev_center, load_polytope,
                 minimize_max_affine, save_polytope, solve_lp)
from .maxaffine import (AffineMap, Dataset, Hyperplane, MaxAffineModel,
                        Partition, compose_with_affine, empirical_risk, eval,
                        fit_partition, induced_partition, load_dataset,
                        load_model, save_model)
from .sampler import (DegenerateRegionError, HitAndRunConfig, SampleInfo,
                      hit_and_run, random_border_point, reachable_polytope,
                      sample_uniform)

__all__ = [
    "AffineMap",
    "AmapParams",
    "CostToGoStack",
    "Dataset",
    "DegenerateInputError",
    "DegenerateRegionError",
    "EvaluationReport",
    "FoldState",
    "GreedyPolicy",
    "HitAndRunConfig",
    "Hyperplane",
    "InfeasibleRegionError",
    "LinearProgram",
    "LpError",
    "LpNumericError",
    "LpResult",
    "MaxAffineModel",
    "Partition",
    "Polytope",
    "SPProblem",
    "SampleBank",
    "SampleInfo",
    "TrainedEstimate",
    "UnboundedObjectiveError",
    "UnboundedRegionError",
    "backward_targets",
    "chebyshev_center",
    "compose_with_affine",
    "empirical_risk",
    "eval",
    "evaluate_policy",
    "fit_partition",
    "forward_pass",
    "get_backend",
    "greedy_action",
    "hit_and_run",
    "improve_step",
    "induced_partition",
    "load_dataset",
    "load_estimate",
    "load_model",
    "load_polytope",
    "load_stack",
    "minimize_max_affine",
    "preprocess",
    "random_border_point",
    "reachable_polytope",
    "run_fadp",
    "sample_uniform",
    "save_bank_csv",
    "save_estimate",
    "save_model",
    "save_polytope",
    "save_stack",
    "solve_lp",
    "train",
    "__version__",
]
