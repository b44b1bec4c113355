from .exact import DEFAULT_LIMIT_VARS, exact_solve
from .result import (
    InfeasibleInstanceError,
    MemoryEstimate,
    ResourceGuardError,
    SolveResult,
    estimate_memory,
    verify_factorization,
)
from .anneal import AnnealParams, simulated_anneal
from .cqm import DEFAULT_PENALTY_SCALE, cqm_solve, presolve
