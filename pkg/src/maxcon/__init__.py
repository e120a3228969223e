"""Globally optimal consensus maximization by A* tree search over minimax bases."""

from .dataio import GeneratorSpec, GroundTruth, generate_synthetic, load_instance, save_instance
from .heuristic import HeuristicCache, HeuristicResult, compute_hins, compute_hins_constrained
from .model import (
    ConstraintsInfeasible,
    DomainEmpty,
    DomainViolation,
    FractionalDatum,
    LinearDatum,
    MaxconError,
    ProblemInstance,
)
from .oracle import OracleResult, enumerate_optimal, lo_ransac, max_feasible_subset, min_removal
from .search import SearchConfig, SearchResult, Status, Variant, search
from .solver import MinimaxSolution, solve_minimax, solve_minimax_constrained, violation_set

__version__ = "0.1.0"
