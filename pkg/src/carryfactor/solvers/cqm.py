from __future__ import annotations

import time
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from ..models import Constraint, CqmModel, decode_factors
from ..pbpoly import Polynomial, VarId
from .anneal import AnnealParams, default_betas, quadratic_arrays, run_restarts
from .result import InfeasibleInstanceError, SolveResult

__all__ = ["presolve", "cqm_solve", "DEFAULT_PENALTY_SCALE"]

DEFAULT_PENALTY_SCALE = Fraction(64)


def _can_satisfy(expr: Polynomial, c: Constraint) -> bool:
    lo, hi = expr.bounds()
    if c.strict:
        return lo < c.upper and hi > c.lower
    return lo <= c.upper and hi >= c.lower


def presolve(model: CqmModel) -> dict[VarId, int]:
    """Fix free variables that only one value can keep feasible.

    Interval bound propagation over every constraint, repeated to a fixed
    point. Only values that make some constraint unsatisfiable are removed,
    so every feasible assignment survives.
    """
    fixes: dict[VarId, int] = {}
    changed = True
    while changed:
        changed = False
        for c in model.constraints:
            expr = c.expr.fix(fixes)
            if not _can_satisfy(expr, c):
                raise InfeasibleInstanceError(f"constraint {c.label} cannot be satisfied")
            for v in expr.variables():
                if v in fixes:
                    continue
                ok = [b for b in (0, 1) if _can_satisfy(expr.fix_variable(v, b), c)]
                if not ok:
                    raise InfeasibleInstanceError(f"constraint {c.label} rules out both values of {v}")
                if len(ok) == 1:
                    fixes[v] = ok[0]
                    expr = expr.fix_variable(v, ok[0])
                    changed = True
    return fixes


def _normalizer(expr: Polynomial) -> int:
    return max((abs(c) for m, c in expr.items() if m), default=1)


def cqm_solve(
    model: CqmModel,
    params: AnnealParams = AnnealParams(),
    penalty_scale=DEFAULT_PENALTY_SCALE,
    initial_state: Optional[Mapping[VarId, int]] = None,
    time_limit: Optional[float] = None,
) -> SolveResult:
    """Penalty-method solve of a constrained model.

    After presolve, anneals ``objective + penalty_scale * sum_k (viol_k / m_k)**2``
    where ``m_k`` is the largest coefficient magnitude of constraint ``k``.
    Feasibility of the returned state is decided by exact integer checks.
    """
    if penalty_scale <= 0:
        raise ValueError(f"penalty_scale={penalty_scale} must be positive")
    t0 = time.perf_counter()
    fixes = presolve(model)
    free = [v for v in model.registry if v not in fixes]
    index = {v: i for i, v in enumerate(free)}
    nv = len(free)

    const, h, J = quadratic_arrays(model.objective.fix(fixes), index)
    live = []
    for c in model.constraints:
        expr = c.expr.fix(fixes)
        if expr.degree > 0:
            live.append((c, expr))
    K = len(live)
    c0 = np.zeros(K)
    A = np.zeros((K, nv))
    B = np.zeros((K, nv, nv))
    lo = np.zeros(K)
    hi = np.zeros(K)
    w = np.zeros(K)
    max_pen = np.zeros(nv)
    min_pen = []
    for k, (c, expr) in enumerate(live):
        cst, A[k], B[k] = quadratic_arrays(expr, index)
        c0[k] = cst
        lo[k], hi[k] = float(c.lower), float(c.upper)
        m = _normalizer(expr)
        w[k] = float(penalty_scale) / (m * m)
        # a single flip moves the constraint by at most the row's absolute sum
        reach = np.abs(A[k]) + np.abs(B[k]).sum(axis=1)
        max_pen += w[k] * reach * reach
        nz = np.abs(A[k][A[k] != 0])
        if nz.size:
            min_pen.append(w[k] * float(nz.min()) ** 2)
    hot_cold = default_betas(h, J, extra_max=max_pen, extra_min=min_pen)

    x0 = None
    if initial_state is not None:
        x0 = np.array([initial_state[v] for v in free])
    target = float(model.energy_lower_bound - const)
    x, _, stats = run_restarts(
        params, h, J, c0, A, B, lo, hi, w, target,
        initial_state=x0, hot_cold=hot_cold, time_limit=time_limit,
    )
    assignment = dict(fixes)
    assignment.update({v: int(b) for v, b in zip(free, x)})
    assignment = {v: assignment[v] for v in model.registry}

    energy = model.objective.evaluate(assignment)
    violated = model.violated(assignment)
    p, q = decode_factors(assignment, model.instance)
    return SolveResult(
        best_assignment=assignment,
        energy=energy,
        decoded=(p, q),
        abs_error=abs(p * q - model.instance.N),
        feasible=not violated,
        stats=dict(
            stats,
            solver="cqm",
            presolve_fixed=len(fixes),
            violated=violated,
            penalty_scale=str(Fraction(penalty_scale)),
        ),
        elapsed=time.perf_counter() - t0,
    )
