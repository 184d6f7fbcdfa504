from .backend_b import InstantiationBackend, Result
from .derive import VC, awp, derive, gen_vcs
from .solve import Assignment, NoSolution, SolverConfig, Solution, Unknown, solve
from .templates import make_templates

__all__ = [
    "InstantiationBackend", "Result", "VC", "awp", "derive", "gen_vcs", "Assignment",
    "NoSolution", "SolverConfig", "Solution", "Unknown", "solve", "make_templates",
]
