import csv
import io
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from carryfactor.harness import (
    DEFAULT_VAR_COUNTS,
    ExperimentConfig,
    derive_seed,
    fig2_csv,
    fig3_csv,
    gen_prime,
    gen_semiprime,
    is_probable_prime,
    memory_table,
    run_trials,
    trials_csv,
)
from carryfactor.solvers import AnnealParams, verify_factorization


def trial_division(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_primality_against_trial_division():
    for n in range(5000):
        assert is_probable_prime(n) == trial_division(n)
    for n in range(2**21 - 300, 2**21 + 300):
        assert is_probable_prime(n) == trial_division(n)


def test_known_large_primes():
    assert is_probable_prime(1_073_741_789)
    assert is_probable_prime(1_073_741_783)
    assert not is_probable_prime(1_073_741_789 * 1_073_741_783)
    assert not is_probable_prime(3_215_031_751)  # strong pseudoprime to bases 2, 3, 5, 7


def test_gen_prime_small():
    assert all(gen_prime(2, s) == 3 for s in range(10))
    assert {gen_prime(5, s) for s in range(200)} <= {17, 19, 23, 29, 31}
    with pytest.raises(ValueError):
        gen_prime(1, 0)


@settings(max_examples=60)
@given(st.integers(2, 20), st.integers(0, 2**64 - 1))
def test_gen_prime_properties(bits, seed):
    x = gen_prime(bits, seed)
    assert x.bit_length() == bits
    assert x % 2 == 1
    assert trial_division(x)
    assert gen_prime(bits, seed) == x


def test_gen_semiprime_examples():
    assert gen_semiprime(4, 0) == (9, 3, 3, 1)
    assert any(gen_semiprime(10, s) == (899, 29, 31, 4) for s in range(200))
    with pytest.raises(ValueError):
        gen_semiprime(3, 0)


def test_gen_semiprime_16_bit_batch():
    for s in range(100):
        N, p, q, n = gen_semiprime(16, s)
        assert verify_factorization(p, q, N)["valid"]
        assert N.bit_length() == 16
        assert p.bit_length() == q.bit_length() == n + 1 == 8
        assert p <= q


def test_derive_seed():
    a = derive_seed(0, 16, 3)
    assert a == derive_seed(0, 16, 3)
    assert a != derive_seed(0, 16, 4)
    assert 0 <= a < 2**64


def test_memory_table_default():
    rows = read_csv(memory_table())
    assert [int(r["v"]) for r in rows] == list(DEFAULT_VAR_COUNTS)
    sizes = [int(r["bytes"]) for r in rows]
    assert sizes[0] == 64 and sizes[-1] == 137_438_953_472
    assert sizes == sorted(set(sizes))
    assert rows[-1]["human_readable"] == "128.0 GiB"
    assert memory_table().endswith("\r\n")


def test_config_validation_and_loading(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(bit_lengths=())
    with pytest.raises(ValueError):
        ExperimentConfig(bit_lengths=(10,), trials_per_point=0)
    with pytest.raises(ValueError):
        ExperimentConfig(bit_lengths=(10,), solver="quantum")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bit_lengths": [10], "colour": "red"})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"bit_lengths": [10], "anneal": {"sweeps": 50}, "epsilon": "0.25"}))
    cfg = ExperimentConfig.load(path)
    assert cfg.anneal == AnnealParams(sweeps=50)
    assert cfg.epsilon == Fraction(1, 4)
    assert cfg.arms == (False, True)


def test_exact_backend_always_succeeds():
    cfg = ExperimentConfig(bit_lengths=(10,), trials_per_point=10, solver="exact")
    rows = run_trials(cfg)
    assert len(rows) == 20
    assert all(r.success and r.abs_error == 0 for r in rows)
    fig2 = read_csv(fig2_csv(rows))
    assert [(r["global_on"], r["successes"]) for r in fig2] == [("0", "10"), ("1", "10")]


def test_summaries_recomputable_from_trials():
    cfg = ExperimentConfig(
        bit_lengths=(12, 14), trials_per_point=2, instances_per_point=3,
        anneal=AnnealParams(sweeps=30, restarts=1),
    )
    rows = run_trials(cfg)
    trials = read_csv(trials_csv(rows))
    assert len(trials) == 2 * 2 * 3 * 2
    for r in trials:
        assert (r["success"] == "1") == (r["abs_error"] == "0")
        # both arms share the instance
    by_inst = {}
    for r in trials:
        by_inst.setdefault((r["bits"], r["instance_index"]), set()).add(r["N"])
    assert all(len(v) == 1 for v in by_inst.values())

    for row in read_csv(fig2_csv(rows)):
        cell = [r for r in trials if r["bits"] == row["bits"] and r["global_on"] == row["global_on"]]
        assert int(row["successes"]) == sum(r["success"] == "1" for r in cell)
        per = [sum(r["success"] == "1" for r in cell if r["instance_index"] == str(i)) for i in range(3)]
        assert (int(row["min"]), int(row["max"])) == (min(per), max(per))
    for row in read_csv(fig3_csv(rows)):
        cell = [int(r["abs_error"]) for r in trials if r["bits"] == row["bits"] and r["global_on"] == row["global_on"]]
        assert Fraction(row["mean_abs_error"]) == pytest.approx(Fraction(sum(cell), len(cell)))
        assert (int(row["min"]), int(row["max"])) == (min(cell), max(cell))


def test_parallel_matches_serial():
    base = dict(bit_lengths=(12,), trials_per_point=3, anneal=AnnealParams(sweeps=50, restarts=2))
    serial = run_trials(ExperimentConfig(**base))
    parallel = run_trials(ExperimentConfig(**base, workers=2))
    assert trials_csv(serial) == trials_csv(parallel)
