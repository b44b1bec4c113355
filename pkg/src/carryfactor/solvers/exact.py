"""Streaming exhaustive minimization of a pseudo-Boolean objective.

The free variables are split into a *high* prefix and a *low* block of ``k``
variables. The low block is evaluated for all ``2**k`` settings at once with
numpy, and the high prefix is walked in Gray-code order so each step only
touches the terms that contain the single flipped high variable. Nothing of
size ``2**v`` is ever allocated; only the running best state is kept.

Assignment order is lexicographic over the canonical variable order (the
first registry variable is the most significant bit of the state index), and
ties are broken towards the smallest index.
"""
from __future__ import annotations

import time
from collections import defaultdict

import numpy as np

from ..models import CqmModel, decode_factors
from .result import ResourceGuardError, SolveResult, estimate_memory

__all__ = ["exact_solve", "DEFAULT_LIMIT_VARS"]

DEFAULT_LIMIT_VARS = 28
_MAX_BLOCK = 18
_MIN_BLOCK = 8
_MAX_CELLS = 1 << 22


def _choose_block(V: int, split) -> int:
    k = min(V, _MAX_BLOCK)
    while k > min(V, _MIN_BLOCK):
        if (len(split(k)) + 1) << k <= _MAX_CELLS:
            break
        k -= 1
    return k


def exact_solve(model, limit_vars: int = DEFAULT_LIMIT_VARS, seed=None, max_ties: int = 256) -> SolveResult:
    """Globally minimize a HUBO or QUBO model by enumerating every assignment.

    ``seed`` is accepted for interface symmetry with the stochastic solvers
    and ignored. ``stats["ground_states"]`` lists up to ``max_ties`` optimal
    assignments in lexicographic order; ``stats["ground_count"]`` counts all.
    """
    if isinstance(model, CqmModel):
        raise TypeError("exact_solve handles unconstrained (HUBO/QUBO) models only")
    t0 = time.perf_counter()
    registry = list(model.registry)
    V = len(registry)
    if V > limit_vars:
        est = estimate_memory(V)
        raise ResourceGuardError(
            f"{V} free variables exceed the enumeration guard of {limit_vars}; "
            f"materializing all states would take {est.human_readable} ({est.bytes} bytes)"
        )
    pos = {v: t for t, v in enumerate(registry)}
    poly = model.objective
    for v in poly.variables():
        if v not in pos:
            raise ValueError(f"objective variable {v} is not in the model registry")

    terms = [(tuple(pos[v] for v in mono), c) for mono, c in poly.items()]

    def split(k):
        H = V - k
        return {tuple(t for t in idx if t >= H) for idx, _ in terms if any(t < H for t in idx)}

    k = _choose_block(V, split) if V else 0
    H = V - k
    dtype = np.int64 if poly.abs_sum() < (1 << 62) else object

    block = np.arange(1 << k, dtype=np.int64)
    cols = [((block >> (k - 1 - tl)) & 1).astype(dtype) for tl in range(k)]

    def low_product(low: tuple[int, ...]):
        out = np.ones(1 << k, dtype=dtype)
        for t in low:
            out = out * cols[t - H]
        return out

    # static terms have no high variable; dynamic ones are grouped by low part
    E = np.zeros(1 << k, dtype=dtype)
    rows: dict[tuple, int] = {}
    by_bit: dict[int, list] = defaultdict(list)
    for idx, c in terms:
        high = [t for t in idx if t < H]
        low = tuple(t for t in idx if t >= H)
        if not high:
            E = E + c * low_product(low)
            continue
        row = rows.setdefault(low, len(rows))
        mask = 0
        for t in high:
            mask |= 1 << (H - 1 - t)
        for t in high:
            by_bit[H - 1 - t].append((mask, c, row))
    M = np.stack([low_product(low) for low in rows]) if rows else np.zeros((0, 1 << k), dtype=dtype)

    best = None
    best_index = -1
    ties: list[int] = []
    ground_count = 0

    def visit(hstate: int):
        nonlocal best, best_index, ties, ground_count
        m = E.min()
        if best is not None and m > best:
            return
        hits = np.flatnonzero(E == m)
        base = hstate << k
        if best is None or m < best:
            best = m
            ties = []
            ground_count = 0
            best_index = base + int(hits[0])
        else:
            best_index = min(best_index, base + int(hits[0]))
        ground_count += len(hits)
        ties.extend(base + int(h) for h in hits[:max_ties])
        if len(ties) > 4 * max_ties:
            ties = sorted(ties)[:max_ties]

    hstate = 0
    visit(hstate)
    for g in range(1, 1 << H):
        bit = (g & -g).bit_length() - 1
        hstate ^= 1 << bit
        turning_on = bool(hstate >> bit & 1)
        # a term toggles when all its high variables are on in the state that has the bit set
        active = hstate | (1 << bit)
        sign = 1 if turning_on else -1
        delta: dict[int, int] = {}
        for mask, c, row in by_bit[bit]:
            if active & mask == mask:
                delta[row] = delta.get(row, 0) + sign * c
        if delta:
            r = np.fromiter(delta.keys(), dtype=np.int64, count=len(delta))
            d = np.array(list(delta.values()), dtype=dtype)
            E = E + d @ M[r]
        visit(hstate)

    def assignment(index: int) -> dict:
        return {v: (index >> (V - 1 - t)) & 1 for t, v in enumerate(registry)}

    best_assignment = assignment(best_index)
    energy = int(best)
    check = poly.evaluate(best_assignment)
    if check != energy:
        raise AssertionError(f"enumerator energy {energy} disagrees with re-evaluation {check}")
    ties = sorted(ties)[:max_ties]
    p, q = decode_factors(best_assignment, model.instance)
    return SolveResult(
        best_assignment=best_assignment,
        energy=energy,
        decoded=(p, q),
        abs_error=abs(p * q - model.instance.N),
        stats={
            "solver": "exact",
            "states_visited": 1 << V,
            "block_bits": k,
            "ground_count": ground_count,
            "ground_states": [assignment(i) for i in ties],
            "seed": seed,
        },
        elapsed=time.perf_counter() - t0,
    )
