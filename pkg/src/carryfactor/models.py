"""Compile semiprime factorization into HUBO, QUBO and CQM models.

Every model is built from the same column equations of the long
multiplication ``p * q``: for each output bit ``i``

    S_i + C_{i-1} - 2 C_i = r_i

where ``S_i`` is the column sum of partial products, ``C_i`` the carry out of
column ``i`` (encoded in binary with the tightest width that fits its
all-ones bound) and ``r_i`` the known bit of ``N``.

* :func:`build_hubo` squares every column equation into one penalty polynomial
  of degree 4.
* :func:`quadratize` reduces a HUBO to degree 2 with auxiliary product
  variables.
* :func:`build_cqm` keeps only column 1 as a quadratic objective and turns the
  remaining columns (plus optionally the full product) into bounded
  constraints.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
import json
from typing import Mapping, Union

from .binmul import carry_and_result, carry_bound, encode_bits, partial_sums
from .pbpoly import Polynomial, Role, UnboundVariableError, VarId, aux, carry_bit, p_bit, q_bit

__all__ = [
    "InvalidInstanceError",
    "FactorizationInstance",
    "CarryLayout",
    "HuboModel",
    "QuboModel",
    "Constraint",
    "CqmModel",
    "build_hubo",
    "build_cqm",
    "quadratize",
    "encode_solution",
    "decode_factors",
    "variable_census",
    "model_to_json",
    "model_from_json",
    "dump_model",
    "load_model",
]


class InvalidInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class FactorizationInstance:
    """Target ``N`` with factors of at most ``n + 1`` bits.

    ``fix_lsb`` pins both factors odd, ``fix_msb`` pins both top bits to one
    (both factors exactly ``n + 1`` bits long).
    """

    N: int
    n: int
    fix_lsb: bool = True
    fix_msb: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInstanceError(f"n={self.n}: factors need at least two bits (n >= 1)")
        if self.N <= 0:
            raise InvalidInstanceError(f"N={self.N} must be positive")
        if self.N >= 1 << (2 * self.n + 2):
            raise InvalidInstanceError(
                f"N={self.N} has {self.N.bit_length()} bits, more than the {2 * self.n + 2}-bit "
                f"product register for n={self.n}"
            )
        if self.fix_lsb and self.N % 2 == 0:
            raise InvalidInstanceError(f"N={self.N} is even but fix_lsb requires odd factors")

    @property
    def bits(self) -> tuple[int, ...]:
        """Bits ``r_0 .. r_{2n+1}`` of ``N``."""
        return encode_bits(self.N, 2 * self.n + 1)

    @property
    def popcount(self) -> int:
        return bin(self.N).count("1")

    def fixed_bits(self) -> dict[VarId, int]:
        fixed: dict[VarId, int] = {}
        if self.fix_lsb:
            fixed[p_bit(0)] = fixed[q_bit(0)] = 1
        if self.fix_msb:
            fixed[p_bit(self.n)] = fixed[q_bit(self.n)] = 1
        return fixed

    def to_json(self) -> dict:
        return {
            "N": str(self.N),
            "n": self.n,
            "flags": {"fix_lsb": self.fix_lsb, "fix_msb": self.fix_msb},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "FactorizationInstance":
        flags = d.get("flags", {})
        return cls(int(d["N"]), int(d["n"]), bool(flags.get("fix_lsb", True)), bool(flags.get("fix_msb", True)))


@dataclass(frozen=True)
class CarryLayout:
    """Binary encoding of the carries ``C_1 .. C_{2n}``; ``C_0`` is always 0."""

    n: int

    def bound(self, i: int) -> int:
        return carry_bound(i, self.n)

    def width(self, i: int) -> int:
        return self.bound(i).bit_length()

    def variables(self, i: int) -> list[VarId]:
        if i <= 0 or i > 2 * self.n:
            return []
        return [carry_bit(i, m) for m in range(self.width(i))]

    def all_variables(self) -> list[VarId]:
        return [v for i in range(1, 2 * self.n + 1) for v in self.variables(i)]

    def expr(self, i: int) -> Polynomial:
        """``C_i`` as a polynomial; zero outside ``1..2n``."""
        return Polynomial({(v,): 1 << v.m for v in self.variables(i)})

    def encode(self, carries: list[int]) -> dict[VarId, int]:
        out: dict[VarId, int] = {}
        for i, c in enumerate(carries):
            if c > self.bound(i):
                raise AssertionError(f"carry C_{i}={c} exceeds its bound {self.bound(i)}")
            for v in self.variables(i):
                out[v] = (c >> v.m) & 1
        return out


def _factor_bits(inst: FactorizationInstance) -> list[VarId]:
    return [p_bit(j) for j in range(inst.n + 1)] + [q_bit(j) for j in range(inst.n + 1)]


def _column_sum(n: int, i: int) -> Polynomial:
    lo = 0 if i <= n else i - n
    hi = i if i <= n else n
    return Polynomial({(p_bit(j), q_bit(i - j)): 1 for j in range(lo, hi + 1)})


def _column_residual(inst: FactorizationInstance, layout: CarryLayout, i: int) -> Polynomial:
    """``S_i + C_{i-1} - 2 C_i`` for column ``i`` (no bit of N subtracted)."""
    return _column_sum(inst.n, i) + layout.expr(i - 1) - 2 * layout.expr(i)


def _registry(inst: FactorizationInstance, layout: CarryLayout) -> list[VarId]:
    fixed = inst.fixed_bits()
    return sorted([v for v in _factor_bits(inst) if v not in fixed] + layout.all_variables())


@dataclass(frozen=True)
class HuboModel:
    instance: FactorizationInstance
    objective: Polynomial
    registry: tuple[VarId, ...]
    fixed: Mapping[VarId, int]
    kind = "hubo"

    @property
    def layout(self) -> CarryLayout:
        return CarryLayout(self.instance.n)

    @property
    def offset(self) -> int:
        """The folded ``-sum r_i^2`` constant, i.e. ``-popcount(N)``."""
        return -self.instance.popcount

    @property
    def energy_lower_bound(self) -> int:
        return self.offset


@dataclass(frozen=True)
class QuboModel:
    instance: FactorizationInstance
    linear: Mapping[VarId, int]
    quadratic: Mapping[tuple[VarId, VarId], int]
    offset: int
    aux_defs: tuple[tuple[VarId, tuple[VarId, VarId], int], ...]
    registry: tuple[VarId, ...]
    fixed: Mapping[VarId, int]
    penalty_weight: int
    kind = "qubo"

    @property
    def layout(self) -> CarryLayout:
        return CarryLayout(self.instance.n)

    @property
    def objective(self) -> Polynomial:
        terms: dict = {(): self.offset}
        terms.update({(v,): c for v, c in self.linear.items()})
        terms.update({pair: c for pair, c in self.quadratic.items()})
        return Polynomial(terms)

    @property
    def energy_lower_bound(self) -> int:
        return -self.instance.popcount


@dataclass(frozen=True)
class Constraint:
    """``lower <= expr <= upper``; with ``strict`` both inequalities are strict."""

    label: str
    expr: Polynomial
    lower: Fraction
    upper: Fraction
    strict: bool = False

    def satisfied_by(self, value: Union[int, Fraction]) -> bool:
        if self.strict:
            return self.lower < value < self.upper
        return self.lower <= value <= self.upper

    def is_satisfied(self, assignment: Mapping[VarId, int]) -> bool:
        return self.satisfied_by(self.expr.evaluate(assignment))

    def violation(self, value: Union[int, Fraction]) -> Fraction:
        if value < self.lower:
            return Fraction(self.lower - value)
        if value > self.upper:
            return Fraction(value - self.upper)
        return Fraction(0)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "expr": self.expr.to_json(),
            "lower": str(self.lower),
            "upper": str(self.upper),
            "strict": self.strict,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Constraint":
        return cls(d["label"], Polynomial.from_json(d["expr"]), Fraction(d["lower"]), Fraction(d["upper"]), bool(d["strict"]))


@dataclass(frozen=True)
class CqmModel:
    instance: FactorizationInstance
    objective: Polynomial
    constraints: tuple[Constraint, ...]
    registry: tuple[VarId, ...]
    fixed: Mapping[VarId, int]
    epsilon: Fraction
    global_on: bool
    kind = "cqm"

    @property
    def layout(self) -> CarryLayout:
        return CarryLayout(self.instance.n)

    @property
    def energy_lower_bound(self) -> int:
        return 0

    def is_feasible(self, assignment: Mapping[VarId, int]) -> bool:
        return all(c.is_satisfied(assignment) for c in self.constraints)

    def violated(self, assignment: Mapping[VarId, int]) -> list[str]:
        return [c.label for c in self.constraints if not c.is_satisfied(assignment)]


Model = Union[HuboModel, QuboModel, CqmModel]


def build_hubo(inst: FactorizationInstance) -> HuboModel:
    """Sum of squared column equations minus the constant ``popcount(N)``.

    The ground energy is ``-popcount(N)`` and is reached exactly at the
    factor/carry assignments of a valid multiplication ``p * q = N``.
    """
    n = inst.n
    layout = CarryLayout(n)
    r = inst.bits
    pieces = [(_column_residual(inst, layout, i) - r[i]) ** 2 for i in range(2 * n + 1)]
    pieces.append((layout.expr(2 * n) - r[2 * n + 1]) ** 2)
    pieces.append(-inst.popcount)
    fixed = inst.fixed_bits()
    objective = Polynomial.sum(pieces).fix(fixed)
    return HuboModel(inst, objective, tuple(_registry(inst, layout)), fixed)


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def build_cqm(inst: FactorizationInstance, epsilon=Fraction(1, 2), global_on: bool = True) -> CqmModel:
    """Column-1 objective plus epsilon-relaxed constraints for columns ``2..2n+1``.

    With ``global_on`` a strict constraint ``N - eps < p * q < N + eps`` on the
    whole product is added.
    """
    eps = _as_fraction(epsilon)
    if eps < 0:
        raise ValueError(f"epsilon={epsilon} must be non-negative")
    if not inst.fix_lsb:
        # column 1 holds p0*q1 + p1*q0, whose square is quartic unless p0 = q0 = 1
        raise InvalidInstanceError("the CQM objective is quadratic only with fix_lsb on")
    n = inst.n
    layout = CarryLayout(n)
    r = inst.bits
    fixed = inst.fixed_bits()

    objective = ((_column_residual(inst, layout, 1) - r[1]) ** 2).fix(fixed)
    constraints = []
    for i in range(2, 2 * n + 1):
        expr = _column_residual(inst, layout, i).fix(fixed)
        constraints.append(Constraint(f"bit{i}", expr, r[i] - eps, r[i] + eps))
    constraints.append(Constraint(f"bit{2 * n + 1}", layout.expr(2 * n), r[2 * n + 1] - eps, r[2 * n + 1] + eps))
    if global_on:
        P = Polynomial({(p_bit(j),): 1 << j for j in range(n + 1)})
        Q = Polynomial({(q_bit(j),): 1 << j for j in range(n + 1)})
        constraints.append(Constraint("global", (P * Q).fix(fixed), inst.N - eps, inst.N + eps, strict=True))
    for c in constraints:
        assert c.expr.degree <= 2, c.label
    assert objective.degree <= 2
    return CqmModel(inst, objective, tuple(constraints), tuple(_registry(inst, layout)), fixed, eps, global_on)


def quadratize(h: HuboModel, penalty_weight: int | None = None) -> QuboModel:
    """Reduce a HUBO to a QUBO by substituting variable pairs with auxiliaries.

    The most frequent pair among the degree >= 3 monomials is replaced first.
    Each auxiliary ``y = x*z`` is enforced with
    ``penalty_weight * (x*z - 2*x*y - 2*z*y + 3*y)``, which is zero when
    ``y == x*z`` and at least ``penalty_weight`` otherwise.
    """
    if penalty_weight is None:
        penalty_weight = 1 + h.objective.abs_sum()
    if penalty_weight <= 0:
        raise ValueError(f"penalty_weight={penalty_weight} must be positive")

    terms = dict(h.objective.items())
    aux_defs = []
    while True:
        high = [m for m in terms if len(m) >= 3]
        if not high:
            break
        counts: Counter = Counter()
        for m in high:
            counts.update(combinations(m, 2))
        # most frequent pair, smallest pair on ties
        x, z = min(counts, key=lambda pair: (-counts[pair], pair))
        y = aux(len(aux_defs))
        aux_defs.append((y, (x, z), penalty_weight))
        rewritten: dict = {}
        for m, c in terms.items():
            if len(m) >= 3 and x in m and z in m:
                m = tuple(sorted([v for v in m if v != x and v != z] + [y]))
            rewritten[m] = rewritten.get(m, 0) + c
        terms = rewritten

    poly = Polynomial(terms)
    for y, (x, z), w in aux_defs:
        poly = poly + Polynomial({(x, z): w, (x, y): -2 * w, (z, y): -2 * w, (y,): 3 * w})

    linear = {m[0]: c for m, c in poly.items() if len(m) == 1}
    quadratic = {m: c for m, c in poly.items() if len(m) == 2}
    registry = tuple(h.registry) + tuple(y for y, _, _ in aux_defs)
    return QuboModel(
        h.instance, linear, quadratic, poly.constant, tuple(aux_defs), registry, h.fixed, penalty_weight
    )


def encode_solution(p: int, q: int, inst: FactorizationInstance, model: Model | None = None) -> dict[VarId, int]:
    """Assignment over the free variables that realizes the multiplication ``p * q``.

    Carries come from the forward table, so the result is the ground state of
    every model when ``p * q == N``. Auxiliary values are filled in when
    ``model`` is a :class:`QuboModel`.
    """
    n = inst.n
    pb, qb = encode_bits(p, n), encode_bits(q, n)
    if (p * q).bit_length() > 2 * n + 2:
        raise ValueError(f"p*q={p * q} does not fit the {2 * n + 2}-bit product register")
    full = {p_bit(j): pb[j] for j in range(n + 1)}
    full.update({q_bit(j): qb[j] for j in range(n + 1)})
    for v, val in inst.fixed_bits().items():
        if full[v] != val:
            raise ValueError(f"p={p}, q={q} conflict with fixed bit {v}={val}")
    carries, _ = carry_and_result(partial_sums(pb, qb))
    layout = CarryLayout(n)
    full.update(layout.encode(carries))
    registry = model.registry if model is not None else _registry(inst, layout)
    if isinstance(model, QuboModel):
        for y, (x, z), _ in model.aux_defs:
            full[y] = full[x] * full[z]
    return {v: full[v] for v in registry}


def decode_factors(assignment: Mapping[VarId, int], inst: FactorizationInstance) -> tuple[int, int]:
    """Factors read from the p/q bits (fixed bits applied), smaller first."""
    fixed = inst.fixed_bits()
    vals = []
    for bit in (p_bit, q_bit):
        x = 0
        for j in range(inst.n + 1):
            v = bit(j)
            if v in fixed:
                b = fixed[v]
            elif v in assignment:
                b = assignment[v]
            else:
                raise UnboundVariableError(v)
            x |= int(b) << j
        vals.append(x)
    p, q = vals
    return (p, q) if p <= q else (q, p)


def variable_census(model: Model) -> dict[str, int]:
    """Free-variable counts by role."""
    counts = Counter(v.role for v in model.registry)
    return {
        "p": counts[Role.P],
        "q": counts[Role.Q],
        "carry": counts[Role.CARRY],
        "aux": counts[Role.AUX],
        "total": len(model.registry),
    }


# -- JSON --------------------------------------------------------------------


def _fixed_json(fixed: Mapping[VarId, int]) -> list[dict]:
    return [{"var": v.to_json(), "value": int(b)} for v, b in sorted(fixed.items())]


def model_to_json(model: Model) -> dict:
    d = {
        "kind": model.kind,
        "instance": model.instance.to_json(),
        "registry": [v.to_json() for v in model.registry],
        "fixed": _fixed_json(model.fixed),
        "objective": model.objective.to_json(),
    }
    if isinstance(model, QuboModel):
        d["penalty_weight"] = str(model.penalty_weight)
        d["aux_defs"] = [
            {"aux": y.to_json(), "pair": [x.to_json(), z.to_json()], "weight": str(w)}
            for y, (x, z), w in model.aux_defs
        ]
    if isinstance(model, CqmModel):
        d["epsilon"] = str(model.epsilon)
        d["global_on"] = model.global_on
        d["constraints"] = [c.to_json() for c in model.constraints]
    return d


def model_from_json(d: Mapping) -> Model:
    inst = FactorizationInstance.from_json(d["instance"])
    registry = tuple(VarId.from_json(v) for v in d["registry"])
    fixed = {VarId.from_json(f["var"]): int(f["value"]) for f in d["fixed"]}
    objective = Polynomial.from_json(d["objective"])
    kind = d["kind"]
    if kind == "hubo":
        return HuboModel(inst, objective, registry, fixed)
    if kind == "qubo":
        aux_defs = tuple(
            (VarId.from_json(a["aux"]), (VarId.from_json(a["pair"][0]), VarId.from_json(a["pair"][1])), int(a["weight"]))
            for a in d["aux_defs"]
        )
        linear = {m[0]: c for m, c in objective.items() if len(m) == 1}
        quadratic = {m: c for m, c in objective.items() if len(m) == 2}
        return QuboModel(inst, linear, quadratic, objective.constant, aux_defs, registry, fixed, int(d["penalty_weight"]))
    if kind == "cqm":
        constraints = tuple(Constraint.from_json(c) for c in d["constraints"])
        return CqmModel(inst, objective, constraints, registry, fixed, Fraction(d["epsilon"]), bool(d["global_on"]))
    raise ValueError(f"unknown model kind {kind!r}")


def dump_model(model: Model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> Model:
    with open(path) as fh:
        return model_from_json(json.load(fh))
