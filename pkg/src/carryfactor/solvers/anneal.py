from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from ..models import decode_factors
from ..pbpoly import Polynomial, VarId
from ._kernel import anneal_run
from .result import SolveResult

__all__ = ["AnnealParams", "simulated_anneal", "run_restarts", "restart_seed"]


@dataclass(frozen=True)
class AnnealParams:
    """Schedule for the single-flip annealer.

    ``beta_min``/``beta_max`` left as ``None`` are derived from the model's
    energy scale: the hot end accepts the largest single-flip uphill move
    with probability 1/2, the cold end accepts the smallest with
    probability 1/100. ``beta_steps`` geometric levels share the sweeps evenly.
    """

    sweeps: int = 4000
    beta_min: Optional[float] = None
    beta_max: Optional[float] = None
    beta_steps: int = 100
    restarts: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError(f"sweeps={self.sweeps} must be at least 1")
        if self.restarts < 1:
            raise ValueError(f"restarts={self.restarts} must be at least 1")
        if self.beta_steps < 1:
            raise ValueError(f"beta_steps={self.beta_steps} must be at least 1")
        if self.beta_min is not None and self.beta_min <= 0:
            raise ValueError(f"beta_min={self.beta_min} must be positive")
        if self.beta_min is not None and self.beta_max is not None and not self.beta_min < self.beta_max:
            raise ValueError(f"beta_min={self.beta_min} must be below beta_max={self.beta_max}")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ValueError(f"seed={self.seed} must be a 64-bit unsigned integer")

    def schedule(self, hot: float, cold: float) -> np.ndarray:
        lo = self.beta_min if self.beta_min is not None else hot
        hi = self.beta_max if self.beta_max is not None else cold
        hi = max(hi, lo)
        levels = np.geomspace(lo, hi, self.beta_steps)
        idx = (np.arange(self.sweeps) * self.beta_steps) // self.sweeps
        return levels[idx]


def restart_seed(seed: int, restart: int) -> int:
    return int(np.random.SeedSequence([seed, restart]).generate_state(1, dtype=np.uint32)[0])


def quadratic_arrays(poly: Polynomial, index: Mapping[VarId, int]):
    """``(const, h, J)`` with ``poly(x) = const + h.x + x.J.x / 2``."""
    if poly.degree > 2:
        raise ValueError(f"degree {poly.degree} polynomial cannot be annealed as a quadratic")
    v = len(index)
    h = np.zeros(v)
    J = np.zeros((v, v))
    const = 0
    for mono, c in poly.items():
        if len(mono) == 0:
            const = c
        elif len(mono) == 1:
            h[index[mono[0]]] += c
        else:
            a, b = index[mono[0]], index[mono[1]]
            J[a, b] += c
            J[b, a] += c
    return const, h, J


def default_betas(h: np.ndarray, J: np.ndarray, extra_max=None, extra_min=None) -> tuple[float, float]:
    """Hot/cold inverse temperatures from the spread of single-flip energy changes."""
    absJ = np.abs(J)
    max_delta = np.abs(h) + absJ.sum(axis=1)
    if extra_max is not None:
        max_delta = max_delta + extra_max
    nz = [abs(c) for c in np.concatenate([h, J[J != 0]]) if c != 0]
    if extra_min is not None:
        nz.extend(extra_min)
    big = float(max_delta.max()) if max_delta.size and max_delta.max() > 0 else 1.0
    small = min(nz) if nz else 1.0
    hot = math.log(2) / big
    cold = math.log(100) / small
    return hot, max(cold, hot * 1.0001)


def run_restarts(
    params: AnnealParams,
    h, J, c0, A, B, lo, hi, w,
    target: float,
    initial_state: Optional[np.ndarray] = None,
    hot_cold: Optional[tuple[float, float]] = None,
    time_limit: Optional[float] = None,
):
    """Best-of-restarts driver; each restart draws its own seed from ``(seed, restart)``.

    Stops early once ``target`` (a proven lower bound) is reached or the
    time limit is exceeded between restarts.
    """
    v = h.shape[0]
    hot, cold = hot_cold if hot_cold is not None else default_betas(h, J)
    betas = params.schedule(hot, cold)
    t0 = time.perf_counter()
    best_x, best_e = None, math.inf
    sweeps_total = 0
    restarts_run = 0
    timed_out = False
    for r in range(params.restarts):
        if time_limit is not None and r > 0 and time.perf_counter() - t0 > time_limit:
            timed_out = True
            break
        s = restart_seed(params.seed, r)
        if r == 0 and initial_state is not None:
            x0 = np.asarray(initial_state, dtype=np.float64)
        else:
            x0 = np.random.default_rng(s).integers(0, 2, size=v).astype(np.float64)
        x, e, sweeps = anneal_run(h, J, c0, A, B, lo, hi, w, x0, betas, s, target)
        restarts_run += 1
        sweeps_total += sweeps
        if e < best_e - 1e-9:
            best_x, best_e = x.copy(), e
        if best_e <= target + 1e-9:
            break
    stats = {
        "restarts_run": restarts_run,
        "sweeps": sweeps_total,
        "beta_range": [float(betas[0]), float(betas[-1])],
        "seed": params.seed,
        "timed_out": timed_out,
    }
    return best_x.astype(np.int64), best_e, stats


def simulated_anneal(
    model,
    params: AnnealParams = AnnealParams(),
    initial_state: Optional[Mapping[VarId, int]] = None,
    time_limit: Optional[float] = None,
    stop_at_bound: bool = True,
) -> SolveResult:
    """Anneal a quadratic (QUBO) model with restarts and report the best state.

    With ``stop_at_bound`` the run ends as soon as the model's proven
    energy lower bound is reached.
    """
    t0 = time.perf_counter()
    registry: Sequence[VarId] = list(model.registry)
    index = {v: i for i, v in enumerate(registry)}
    poly = model.objective
    const, h, J = quadratic_arrays(poly, index)
    v = len(registry)
    empty2 = np.zeros((0, v))
    empty3 = np.zeros((0, v, v))
    empty1 = np.zeros(0)
    target = float(model.energy_lower_bound - const) if stop_at_bound else -math.inf
    x0 = None if initial_state is None else np.array([initial_state[u] for u in registry])
    x, tracked, stats = run_restarts(
        params, h, J, empty1, empty2, empty3, empty1, empty1, empty1, target,
        initial_state=x0, time_limit=time_limit,
    )
    assignment = {u: int(b) for u, b in zip(registry, x)}
    energy = poly.evaluate(assignment)
    if abs(tracked + const - energy) > 1e-6 * max(1, abs(energy)):
        raise AssertionError(f"annealer tracked energy {tracked + const} but state evaluates to {energy}")
    p, q = decode_factors(assignment, model.instance)
    return SolveResult(
        best_assignment=assignment,
        energy=energy,
        decoded=(p, q),
        abs_error=abs(p * q - model.instance.N),
        stats=dict(stats, solver="anneal"),
        elapsed=time.perf_counter() - t0,
    )
