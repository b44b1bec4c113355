"""Experiment driver: seeded semiprimes, solver trials, CSV summaries.

Outputs of :func:`run_trials` (all byte-reproducible for a fixed config):

``trials.csv``  one row per solver run
``fig1.csv``    memory model ``2**v * v`` for a list of variable counts
``fig2.csv``    success counts per (bits, global_on) cell with min/max over instances
``fig3.csv``    mean/min/max of ``|p*q - N|`` per cell

Wall-clock times go to ``timings.csv``, which is not reproducible by nature.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .models import FactorizationInstance, build_cqm, build_hubo, quadratize
from .solvers import (
    DEFAULT_LIMIT_VARS,
    DEFAULT_PENALTY_SCALE,
    AnnealParams,
    cqm_solve,
    estimate_memory,
    exact_solve,
    simulated_anneal,
    verify_factorization,
)

__all__ = [
    "DEFAULT_VAR_COUNTS",
    "is_probable_prime",
    "gen_prime",
    "gen_semiprime",
    "derive_seed",
    "ExperimentConfig",
    "TrialRow",
    "run_trials",
    "memory_table",
    "write_outputs",
]

log = logging.getLogger(__name__)

# variable totals reported for factor bit indices n = 2..6
DEFAULT_VAR_COUNTS = (4, 10, 16, 24, 32)

_TRIAL_DIVISION_LIMIT = 1 << 20
_MR_ROUNDS = 40
_SMALL_PRIMES = [p for p in range(3, 1000, 2) if all(p % d for d in range(3, int(p**0.5) + 1, 2))]


def _trial_division(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _strong_probable_prime(n: int, a: int, d: int, s: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_probable_prime(n: int, rng: Optional[random.Random] = None, rounds: int = _MR_ROUNDS) -> bool:
    """Trial division below 2**20, Miller-Rabin with random bases above."""
    if n < _TRIAL_DIVISION_LIMIT:
        return _trial_division(n)
    if n % 2 == 0:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return False
    rng = rng or random.Random(n)
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    return all(_strong_probable_prime(n, rng.randrange(2, n - 1), d, s) for _ in range(rounds))


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        x = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_probable_prime(x, rng):
            return x


def gen_prime(bits: int, rng_seed: int) -> int:
    """Odd prime with exactly ``bits`` bits, drawn from a seeded stream."""
    if bits < 2:
        raise ValueError(f"bits={bits}: an odd prime needs at least 2 bits")
    return _random_prime(bits, random.Random(rng_seed))


def gen_semiprime(bits: int, rng_seed: int) -> tuple[int, int, int, int]:
    """``(N, p, q, n)`` with ``N = p*q`` of exactly ``bits`` bits and ``p <= q``.

    Both primes have ``ceil(bits / 2)`` bits, so ``n`` (the highest factor
    bit index) is ``ceil(bits / 2) - 1``.
    """
    if bits < 4:
        raise ValueError(f"bits={bits}: the smallest odd semiprime 9 has 4 bits")
    fb = (bits + 1) // 2
    rng = random.Random(rng_seed)
    while True:
        p, q = _random_prime(fb, rng), _random_prime(fb, rng)
        N = p * q
        if N.bit_length() == bits:
            p, q = min(p, q), max(p, q)
            return N, p, q, fb - 1


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from a tuple of non-negative integers."""
    lo, hi = np.random.SeedSequence([int(x) for x in parts]).generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


@dataclass(frozen=True)
class ExperimentConfig:
    bit_lengths: tuple[int, ...]
    trials_per_point: int = 10
    instances_per_point: int = 1
    solver: str = "cqm"
    anneal: AnnealParams = AnnealParams()
    penalty_scale: Fraction = DEFAULT_PENALTY_SCALE
    epsilon: Fraction = Fraction(1, 2)
    global_constraint: str = "both"
    master_seed: int = 0
    time_budget_per_trial: Optional[float] = 60.0
    limit_vars: int = DEFAULT_LIMIT_VARS
    memory_vars: tuple[int, ...] = DEFAULT_VAR_COUNTS
    workers: int = 1

    def __post_init__(self):
        if not self.bit_lengths:
            raise ValueError("bit_lengths must not be empty")
        if self.trials_per_point < 1 or self.instances_per_point < 1:
            raise ValueError("trials_per_point and instances_per_point must be at least 1")
        if self.solver not in _BACKENDS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {sorted(_BACKENDS)}")
        if self.global_constraint not in ("on", "off", "both"):
            raise ValueError(f"global_constraint must be on, off or both, not {self.global_constraint!r}")

    @property
    def arms(self) -> tuple[bool, ...]:
        return {"on": (True,), "off": (False,), "both": (False, True)}[self.global_constraint]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "anneal" in d:
            d["anneal"] = AnnealParams(**d["anneal"])
        for key in ("bit_lengths", "memory_vars"):
            if key in d:
                d[key] = tuple(int(x) for x in d[key])
        for key in ("penalty_scale", "epsilon"):
            if key in d:
                d[key] = Fraction(str(d[key]))
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class TrialRow:
    bits: int
    global_on: bool
    instance_index: int
    trial_index: int
    seed: int
    N: int
    n: int
    p: int
    q: int
    success: bool
    abs_error: int
    feasible: Optional[bool]
    energy: int
    timed_out: bool
    elapsed: float = field(default=0.0, compare=False)


def _solve_exact(inst, global_on, cfg, seed):
    return exact_solve(build_hubo(inst), limit_vars=cfg.limit_vars, seed=seed)


def _solve_anneal(inst, global_on, cfg, seed):
    params = AnnealParams(**dict(asdict(cfg.anneal), seed=seed))
    return simulated_anneal(quadratize(build_hubo(inst)), params, time_limit=cfg.time_budget_per_trial)


def _solve_cqm(inst, global_on, cfg, seed):
    params = AnnealParams(**dict(asdict(cfg.anneal), seed=seed))
    model = build_cqm(inst, cfg.epsilon, global_on)
    return cqm_solve(model, params, cfg.penalty_scale, time_limit=cfg.time_budget_per_trial)


_BACKENDS = {"exact": _solve_exact, "anneal": _solve_anneal, "cqm": _solve_cqm}


def _run_one(cfg: ExperimentConfig, bits: int, instance_index: int, trial_index: int, global_on: bool) -> TrialRow:
    N, p_true, q_true, n = gen_semiprime(bits, derive_seed(cfg.master_seed, bits, instance_index))
    seed = derive_seed(cfg.master_seed, bits, instance_index, trial_index, int(global_on))
    # the solver sees only N, n and the bit-fixing flags
    inst = FactorizationInstance(N, n)
    result = _BACKENDS[cfg.solver](inst, global_on, cfg, seed)
    p, q = result.decoded
    check = verify_factorization(p, q, N)
    assert check["abs_error"] == result.abs_error
    return TrialRow(
        bits=bits,
        global_on=global_on,
        instance_index=instance_index,
        trial_index=trial_index,
        seed=seed,
        N=N,
        n=n,
        p=p,
        q=q,
        success=check["valid"],
        abs_error=check["abs_error"],
        feasible=result.feasible,
        energy=result.energy,
        timed_out=bool(result.stats.get("timed_out", False)),
        elapsed=result.elapsed,
    )


def _row_key(row: TrialRow):
    return (row.bits, row.global_on, row.instance_index, row.trial_index)


def run_trials(config: ExperimentConfig, out_dir=None) -> list[TrialRow]:
    """Run every (bits, arm, instance, trial) cell; write CSVs when ``out_dir`` is given.

    Instances depend on ``(master_seed, bits, instance_index)`` only, so both
    arms of the global-constraint ablation see the same semiprimes.
    """
    jobs = [
        (bits, i, t, g)
        for bits in config.bit_lengths
        for g in config.arms
        for i in range(config.instances_per_point)
        for t in range(config.trials_per_point)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_run_one, *zip(*[(config, *j) for j in jobs])))
    else:
        rows = []
        for job in jobs:
            row = _run_one(config, *job)
            log.info("bits=%d global=%s inst=%d trial=%d abs_error=%d", row.bits, row.global_on,
                     row.instance_index, row.trial_index, row.abs_error)
            rows.append(row)
    rows.sort(key=_row_key)
    if out_dir is not None:
        write_outputs(rows, config, out_dir)
    return rows


# -- CSV ---------------------------------------------------------------------

_TRIAL_COLUMNS = [
    "bits", "global_on", "instance_index", "trial_index", "seed", "N", "n",
    "p", "q", "success", "abs_error", "feasible", "energy", "timed_out",
]


def _cell(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if x is None:
        return ""
    return str(x)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def trials_csv(rows: Sequence[TrialRow]) -> str:
    return _csv_text(_TRIAL_COLUMNS, ([getattr(r, c) for c in _TRIAL_COLUMNS] for r in rows))


def _cells(rows: Sequence[TrialRow]) -> dict:
    cells: dict = {}
    for r in rows:
        cells.setdefault((r.bits, r.global_on), []).append(r)
    return dict(sorted(cells.items()))


def _mean(values: Sequence[int]) -> str:
    m = Fraction(sum(values), len(values))
    return str(m.numerator) if m.denominator == 1 else repr(float(m))


def fig2_csv(rows: Sequence[TrialRow]) -> str:
    out = []
    for (bits, g), cell in _cells(rows).items():
        per_instance: dict = {}
        for r in cell:
            per_instance[r.instance_index] = per_instance.get(r.instance_index, 0) + int(r.success)
        counts = list(per_instance.values())
        trials = len(cell) // len(counts)
        out.append((bits, g, len(counts), trials, sum(counts), _mean(counts), min(counts), max(counts)))
    header = ["bits", "global_on", "instances", "trials_per_instance", "successes",
              "mean_successes", "min", "max"]
    return _csv_text(header, out)


def fig3_csv(rows: Sequence[TrialRow]) -> str:
    out = []
    for (bits, g), cell in _cells(rows).items():
        errs = [r.abs_error for r in cell]
        out.append((bits, g, len(errs), _mean(errs), min(errs), max(errs)))
    return _csv_text(["bits", "global_on", "runs", "mean_abs_error", "min", "max"], out)


def timings_csv(rows: Sequence[TrialRow]) -> str:
    return _csv_text(
        ["bits", "global_on", "instance_index", "trial_index", "elapsed"],
        ((r.bits, r.global_on, r.instance_index, r.trial_index, f"{r.elapsed:.6f}") for r in rows),
    )


def memory_table(v_list: Sequence[int] = DEFAULT_VAR_COUNTS) -> str:
    """fig1.csv text: one ``(v, 2**v * v, human readable)`` row per count."""
    rows = []
    for v in v_list:
        est = estimate_memory(v)
        rows.append((v, est.bytes, est.human_readable))
    return _csv_text(["v", "bytes", "human_readable"], rows)


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_outputs(rows: Sequence[TrialRow], config: ExperimentConfig, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "trials.csv": trials_csv(rows),
        "fig1.csv": memory_table(config.memory_vars),
        "fig2.csv": fig2_csv(rows),
        "fig3.csv": fig3_csv(rows),
        "timings.csv": timings_csv(rows),
    }
    paths = {}
    for name, text in files.items():
        _write(out / name, text)
        paths[name] = out / name
    return paths
