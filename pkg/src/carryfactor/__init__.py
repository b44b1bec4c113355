"""Semiprime factorization as HUBO, QUBO and constrained quadratic models.

The models encode long multiplication with explicit binary carries. They are
solved with classical backends: streaming exhaustive enumeration, simulated
annealing and a penalty-method solver for constrained models.
"""
from .binmul import MulTable, carry_bound, multiplication_table
from .models import (
    FactorizationInstance,
    build_cqm,
    build_hubo,
    decode_factors,
    encode_solution,
    quadratize,
)
from .solvers import AnnealParams, cqm_solve, estimate_memory, exact_solve, simulated_anneal, verify_factorization

__version__ = "0.1.0"
