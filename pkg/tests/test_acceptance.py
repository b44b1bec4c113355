"""One test per acceptance criterion; each prints a PASS/FAIL line in the terminal summary."""
import csv
import io
import time
from fractions import Fraction

import pytest

from carryfactor.binmul import carry_and_result, carry_bound, encode_bits, multiplication_table, partial_sums
from carryfactor.harness import ExperimentConfig, gen_semiprime, memory_table, run_trials
from carryfactor.models import (
    FactorizationInstance,
    build_cqm,
    build_hubo,
    decode_factors,
    encode_solution,
    quadratize,
)
from carryfactor.solvers import AnnealParams, cqm_solve, estimate_memory, exact_solve, verify_factorization

SMALL_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31]


def odd_semiprimes(max_factor_bits):
    """(N, n, fix_msb) for every odd semiprime whose factors have at most ``max_factor_bits`` bits."""
    primes = [x for x in SMALL_PRIMES if x.bit_length() <= max_factor_bits]
    for i, p in enumerate(primes):
        for q in primes[i:]:
            # the top bit can only be pinned when both factors share a length
            yield p, q, FactorizationInstance(p * q, q.bit_length() - 1, fix_msb=p.bit_length() == q.bit_length())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_c01_worked_table(criterion):
    t0 = time.perf_counter()
    t = multiplication_table(15, 15, 3)
    dt = time.perf_counter() - t0
    assert list(t.S) == [1, 2, 3, 4, 3, 2, 1]
    assert list(t.C) == [0, 1, 2, 3, 3, 2, 1]
    assert list(reversed(t.r)) == [1, 1, 1, 0, 0, 0, 0, 1]
    assert t.product == 225
    assert dt < 1e-3
    criterion.note(f"{dt * 1e6:.0f} us")


def test_c02_carry_bound_law(criterion):
    t0 = time.perf_counter()
    for n in range(7):
        top = 1 << (n + 1)
        worst = [0] * (2 * n + 1)
        bits = [encode_bits(x, n) for x in range(top)]
        for bp in bits:
            for bq in bits:
                C, _ = carry_and_result(partial_sums(bp, bq))
                worst = [max(a, b) for a, b in zip(worst, C)]
        assert worst == [carry_bound(i, n) for i in range(2 * n + 1)], n
    dt = time.perf_counter() - t0
    assert dt < 10
    criterion.note(f"n<=6 exhaustive, {dt:.2f} s")


def test_c03_flagship_instance(criterion):
    t0 = time.perf_counter()
    r = exact_solve(build_hubo(FactorizationInstance(899, 4)), limit_vars=28)
    dt = time.perf_counter() - t0
    assert r.decoded == (29, 31)
    assert r.energy == -5
    assert r.abs_error == 0
    assert dt < 60
    criterion.note(f"{r.stats['states_visited']} states, {dt:.2f} s")


def test_c04_exhaustive_soundness(criterion):
    t0 = time.perf_counter()
    count = 0
    for p, q, inst in odd_semiprimes(5):
        r = exact_solve(build_hubo(inst))
        assert r.abs_error == 0, inst
        assert r.energy == -inst.popcount, inst
        # every ground state is a factorization of N
        assert r.stats["ground_count"] == len(r.stats["ground_states"])
        for a in r.stats["ground_states"]:
            assert decode_factors(a, inst) == (p, q)
        count += 1
    dt = time.perf_counter() - t0
    assert count == 55
    assert dt < 300
    criterion.note(f"{count} semiprimes, {dt:.1f} s")


def test_c05_quadratization_equivalence(criterion):
    t0 = time.perf_counter()
    count = 0
    for p, q, inst in odd_semiprimes(4):
        h = build_hubo(inst)
        qm = quadratize(h)
        rh = exact_solve(h, max_ties=1 << 12)
        rq = exact_solve(qm, max_ties=1 << 12)
        assert rh.energy == rq.energy == -inst.popcount
        proj_h = {decode_factors(a, inst) for a in rh.stats["ground_states"]}
        proj_q = {decode_factors(a, inst) for a in rq.stats["ground_states"]}
        assert rh.stats["ground_count"] == len(rh.stats["ground_states"])
        assert rq.stats["ground_count"] == len(rq.stats["ground_states"])
        assert proj_h == proj_q == {(p, q)}
        count += 1
    dt = time.perf_counter() - t0
    assert dt < 300
    criterion.note(f"{count} instances, {dt:.1f} s")


def test_c06_memory_model(criterion):
    t0 = time.perf_counter()
    est = estimate_memory(32)
    text = memory_table()
    dt = time.perf_counter() - t0
    assert est.bytes == 137_438_953_472
    assert est.human_readable == "128.0 GiB"
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [int(r["v"]) for r in rows] == [4, 10, 16, 24, 32]
    assert [int(r["bytes"]) for r in rows] == [v * 2**v for v in (4, 10, 16, 24, 32)]
    assert dt < 1e-3
    criterion.note(f"{dt * 1e6:.0f} us")


def test_c07_cqm_feasibility_law(criterion):
    t0 = time.perf_counter()
    params = AnnealParams(sweeps=300, restarts=3)
    flagged = 0
    for s in range(100):
        bits = 4 + s % 21
        N, p, q, n = gen_semiprime(bits, s)
        inst = FactorizationInstance(N, n)
        m = build_cqm(inst, epsilon=Fraction(1, 2), global_on=True)
        truth = encode_solution(p, q, inst, m)
        assert m.is_feasible(truth), N
        assert m.objective.evaluate(truth) == 0
        r = cqm_solve(m, AnnealParams(**{**params.__dict__, "seed": s}))
        if r.feasible:
            flagged += 1
            assert r.decoded[0] * r.decoded[1] == N
    dt = time.perf_counter() - t0
    assert dt < 120
    criterion.note(f"100 instances up to 24 bits, {flagged} solver results flagged feasible, {dt:.1f} s")


def test_c08_desk_scale_cqm(criterion, tmp_path):
    cfg = ExperimentConfig(
        bit_lengths=(10, 16), trials_per_point=1, instances_per_point=10,
        solver="cqm", global_constraint="on", time_budget_per_trial=60.0,
    )
    rows = run_trials(cfg)
    wins = {b: sum(r.success for r in rows if r.bits == b) for b in (10, 16)}
    assert all(r.elapsed < 60 for r in rows)
    assert wins[10] >= 9
    assert wins[16] >= 5
    t0 = time.perf_counter()
    check = verify_factorization(1_073_741_789, 1_073_741_783, 1_152_921_423_002_469_787)
    assert time.perf_counter() - t0 < 1e-3
    assert check == {"valid": True, "abs_error": 0}
    slowest = max(r.elapsed for r in rows)
    criterion.note(f"10-bit {wins[10]}/10, 16-bit {wins[16]}/10, slowest trial {slowest:.1f} s")


def test_c09_global_constraint_ablation(criterion, tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(bit_lengths=(16,), trials_per_point=1, instances_per_point=20,
                           solver="cqm", global_constraint="both", master_seed=9)
    rows = run_trials(cfg, out_dir=tmp_path)
    off = [r for r in rows if not r.global_on]
    on = [r for r in rows if r.global_on]
    assert [r.N for r in off] == [r.N for r in on]  # paired instances
    fig3 = {row["global_on"]: row for row in read_csv(tmp_path / "fig3.csv")}
    assert Fraction(fig3["1"]["mean_abs_error"]) <= Fraction(fig3["0"]["mean_abs_error"])
    for arm, group in (("0", off), ("1", on)):
        errs = [r.abs_error for r in group]
        assert (int(fig3[arm]["min"]), int(fig3[arm]["max"])) == (min(errs), max(errs))
    dt = time.perf_counter() - t0
    assert dt < 1800
    criterion.note(
        f"mean with {fig3['1']['mean_abs_error']} <= without {fig3['0']['mean_abs_error']}, "
        f"ranges [{fig3['1']['min']}, {fig3['1']['max']}] / [{fig3['0']['min']}, {fig3['0']['max']}], {dt:.0f} s"
    )


def test_c10_determinism(criterion, tmp_path):
    cfg = ExperimentConfig(bit_lengths=(10, 14, 18), trials_per_point=3, instances_per_point=2,
                           anneal=AnnealParams(sweeps=200, restarts=4), master_seed=123)
    run_trials(cfg, out_dir=tmp_path / "a")
    run_trials(cfg, out_dir=tmp_path / "b")
    names = ["trials.csv", "fig1.csv", "fig2.csv", "fig3.csv"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    criterion.note("4 CSVs byte-identical across two runs")
