from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from .binmul import multiplication_table
from .harness import DEFAULT_VAR_COUNTS, ExperimentConfig, gen_semiprime, memory_table, run_trials
from .models import (
    CqmModel,
    FactorizationInstance,
    HuboModel,
    QuboModel,
    build_cqm,
    build_hubo,
    dump_model,
    load_model,
    quadratize,
    variable_census,
)
from .solvers import (
    DEFAULT_LIMIT_VARS,
    DEFAULT_PENALTY_SCALE,
    AnnealParams,
    cqm_solve,
    estimate_memory,
    exact_solve,
    simulated_anneal,
)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=1)
    sys.stdout.write("\n")


def _instance(args) -> FactorizationInstance:
    return FactorizationInstance(args.N, args.n, fix_lsb=not args.no_fix_lsb, fix_msb=not args.no_fix_msb)


def _anneal_params(args) -> AnnealParams:
    return AnnealParams(
        sweeps=args.sweeps,
        restarts=args.restarts,
        seed=args.seed,
        beta_min=args.beta_min,
        beta_max=args.beta_max,
        beta_steps=args.beta_steps,
    )


def cmd_multiply_table(args) -> int:
    table = multiplication_table(args.p, args.q, args.n)
    print(table.format())
    print(table.to_json())
    return 0


def cmd_build(args) -> int:
    inst = _instance(args)
    if args.command == "build-hubo":
        model = build_hubo(inst)
    elif args.command == "build-qubo":
        model = quadratize(build_hubo(inst), args.penalty_weight)
    else:
        model = build_cqm(inst, Fraction(args.epsilon), global_on=not args.no_global)
    dump_model(model, args.out)
    info = {"kind": model.kind, "out": args.out, "census": variable_census(model)}
    if isinstance(model, CqmModel):
        info["constraints"] = len(model.constraints)
    _print_json(info)
    return 0


def _emit_result(result, out) -> int:
    payload = result.to_json()
    if out:
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    _print_json({k: v for k, v in payload.items() if k != "assignment"} if not out else payload)
    return 0


def cmd_solve(args) -> int:
    model = load_model(args.model)
    if args.command == "solve-exact":
        if isinstance(model, CqmModel):
            raise SystemExit("solve-exact needs a HUBO or QUBO model")
        result = exact_solve(model, limit_vars=args.limit_vars)
    elif args.command == "solve-anneal":
        if isinstance(model, HuboModel):
            model = quadratize(model)
        if not isinstance(model, QuboModel):
            raise SystemExit("solve-anneal needs a HUBO or QUBO model")
        result = simulated_anneal(model, _anneal_params(args), time_limit=args.time_limit)
    else:
        if not isinstance(model, CqmModel):
            raise SystemExit("solve-cqm needs a CQM model")
        result = cqm_solve(model, _anneal_params(args), Fraction(args.penalty_scale), time_limit=args.time_limit)
    return _emit_result(result, args.out)


def cmd_estimate_memory(args) -> int:
    est = estimate_memory(args.vars)
    _print_json({"v": est.v, "bytes": str(est.bytes), "human_readable": est.human_readable})
    return 0


def cmd_memory_table(args) -> int:
    text = memory_table(args.vars)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_semiprime(args) -> int:
    N, p, q, n = gen_semiprime(args.bits, args.seed)
    _print_json({"N": str(N), "p": str(p), "q": str(q), "n": n})
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.load(args.config)
    rows = run_trials(config, out_dir=args.out)
    ok = sum(r.success for r in rows)
    print(f"{len(rows)} trials, {ok} successes, outputs in {args.out}")
    return 0


def cmd_census(args) -> int:
    rows = []
    for n in args.n:
        # any odd N of the right width gives the same variable layout
        inst = FactorizationInstance((1 << (2 * n)) + 1, n)
        hubo = build_hubo(inst)
        rows.append({"n": n, "hubo": variable_census(hubo), "qubo": variable_census(quadratize(hubo))})
    _print_json(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carryfactor", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("multiply-table", help="print the carry-propagation multiplication table")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="highest factor bit index")
    p.set_defaults(func=cmd_multiply_table)

    for name in ("build-hubo", "build-qubo", "build-cqm"):
        p = sub.add_parser(name, help=f"compile a factorization instance ({name[6:].upper()})")
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--no-fix-msb", action="store_true")
        p.add_argument("--no-fix-lsb", action="store_true")
        p.add_argument("--out", required=True)
        if name == "build-qubo":
            p.add_argument("--penalty-weight", type=int, default=None)
        if name == "build-cqm":
            p.add_argument("--epsilon", default="0.5")
            p.add_argument("--no-global", action="store_true")
        p.set_defaults(func=cmd_build)

    for name in ("solve-exact", "solve-anneal", "solve-cqm"):
        p = sub.add_parser(name, help=f"solve a model file ({name[6:]})")
        p.add_argument("--model", required=True)
        p.add_argument("--out", default=None, help="write full result JSON here")
        if name == "solve-exact":
            p.add_argument("--limit-vars", type=int, default=DEFAULT_LIMIT_VARS)
        else:
            d = AnnealParams()
            p.add_argument("--sweeps", type=int, default=d.sweeps)
            p.add_argument("--restarts", type=int, default=d.restarts)
            p.add_argument("--seed", type=int, default=d.seed)
            p.add_argument("--beta-min", type=float, default=None)
            p.add_argument("--beta-max", type=float, default=None)
            p.add_argument("--beta-steps", type=int, default=d.beta_steps)
            p.add_argument("--time-limit", type=float, default=None)
            p.add_argument("--penalty-scale", default=str(DEFAULT_PENALTY_SCALE))
        p.set_defaults(func=cmd_solve)

    p = sub.add_parser("estimate-memory", help="bytes to store all 2^v assignments")
    p.add_argument("--vars", type=int, required=True)
    p.set_defaults(func=cmd_estimate_memory)

    p = sub.add_parser("memory-table", help="fig1.csv for a list of variable counts")
    p.add_argument("--vars", type=_int_list, default=list(DEFAULT_VAR_COUNTS))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_memory_table)

    p = sub.add_parser("gen-semiprime", help="seeded semiprime with equal-length prime factors")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_semiprime)

    p = sub.add_parser("experiment", help="run a trial batch from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("census", help="free-variable counts per role for factor bit indices")
    p.add_argument("--n", type=_int_list, default=[2, 3, 4, 5, 6])
    p.set_defaults(func=cmd_census)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
