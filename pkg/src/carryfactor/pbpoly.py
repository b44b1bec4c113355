"""Multilinear pseudo-Boolean polynomials with exact integer coefficients.

Variables are :class:`VarId` tuples ordered by role then indices, monomials are
sorted tuples of distinct variables (``x*x == x`` is applied on every
product), and a :class:`Polynomial` maps monomials to non-zero integers.
"""
from __future__ import annotations

from enum import IntEnum
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

__all__ = [
    "Role",
    "VarId",
    "Monomial",
    "Polynomial",
    "UnboundVariableError",
    "p_bit",
    "q_bit",
    "carry_bit",
    "aux",
]


class Role(IntEnum):
    P = 0
    Q = 1
    CARRY = 2
    AUX = 3


_ROLE_NAMES = {Role.P: "p", Role.Q: "q", Role.CARRY: "carry", Role.AUX: "aux"}
_ROLE_BY_NAME = {v: k for k, v in _ROLE_NAMES.items()}


class VarId(NamedTuple):
    """Binary variable name; tuple order is the canonical variable order."""

    role: Role
    i: int
    m: int = 0

    def __str__(self) -> str:
        if self.role == Role.P:
            return f"p{self.i}"
        if self.role == Role.Q:
            return f"q{self.i}"
        if self.role == Role.CARRY:
            return f"c{self.i}_{self.m}"
        return f"a{self.i}"

    def __repr__(self) -> str:
        return str(self)

    def to_json(self) -> dict:
        idx = [self.i, self.m] if self.role == Role.CARRY else [self.i]
        return {"role": _ROLE_NAMES[self.role], "index": idx}

    @classmethod
    def from_json(cls, d: Mapping) -> "VarId":
        role = _ROLE_BY_NAME[d["role"]]
        idx = list(d["index"])
        if role == Role.CARRY:
            return cls(role, int(idx[0]), int(idx[1]))
        return cls(role, int(idx[0]))


def p_bit(j: int) -> VarId:
    return VarId(Role.P, j)


def q_bit(j: int) -> VarId:
    return VarId(Role.Q, j)


def carry_bit(i: int, m: int) -> VarId:
    return VarId(Role.CARRY, i, m)


def aux(k: int) -> VarId:
    return VarId(Role.AUX, k)


Monomial = tuple  # sorted tuple of distinct VarId; () is the constant monomial


class UnboundVariableError(KeyError):
    def __init__(self, var: VarId):
        super().__init__(f"no value assigned to variable {var}")
        self.var = var


def _merge(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(set(a).union(b)))


Scalar = Union[int, "Polynomial"]


class Polynomial:
    """Immutable multilinear polynomial over binary variables.

    Supports ``+``, ``-``, ``*`` (with polynomials and ints) and small
    integer powers. Construction drops zero coefficients and canonicalizes
    monomials, so two equal polynomials always carry identical term maps.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Iterable[VarId], int] | None = None):
        acc: dict[Monomial, int] = {}
        if terms:
            for mono, coeff in terms.items():
                coeff = int(coeff)
                if not coeff:
                    continue
                key = tuple(sorted(set(mono)))
                acc[key] = acc.get(key, 0) + coeff
        self._terms = {k: v for k, v in sorted(acc.items()) if v}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict[Monomial, int]) -> "Polynomial":
        # terms already canonical; only drop zeros and sort
        obj = cls.__new__(cls)
        obj._terms = {k: v for k, v in sorted(terms.items()) if v}
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c: int) -> "Polynomial":
        return cls._raw({(): int(c)})

    @classmethod
    def var(cls, v: VarId, coeff: int = 1) -> "Polynomial":
        return cls._raw({(v,): int(coeff)})

    @classmethod
    def sum(cls, polys: Iterable[Scalar]) -> "Polynomial":
        acc: dict[Monomial, int] = {}
        for p in polys:
            for mono, c in _as_poly(p)._terms.items():
                acc[mono] = acc.get(mono, 0) + c
        return cls._raw(acc)

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> Mapping[Monomial, int]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Monomial, int]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self._terms), default=0)

    @property
    def constant(self) -> int:
        return self._terms.get((), 0)

    def variables(self) -> list[VarId]:
        return sorted({v for m in self._terms for v in m})

    def coeff(self, *vars: VarId) -> int:
        return self._terms.get(tuple(sorted(set(vars))), 0)

    def abs_sum(self, include_constant: bool = True) -> int:
        return sum(abs(c) for m, c in self._terms.items() if m or include_constant)

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: Scalar) -> "Polynomial":
        other = _as_poly(other)
        acc = dict(self._terms)
        for mono, c in other._terms.items():
            acc[mono] = acc.get(mono, 0) + c
        return Polynomial._raw(acc)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Scalar) -> "Polynomial":
        return self + (-_as_poly(other))

    def __rsub__(self, other: Scalar) -> "Polynomial":
        return _as_poly(other) - self

    def __mul__(self, other: Scalar) -> "Polynomial":
        if isinstance(other, int):
            return Polynomial._raw({m: c * other for m, c in self._terms.items()})
        other = _as_poly(other)
        acc: dict[Monomial, int] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                key = _merge(ma, mb)
                acc[key] = acc.get(key, 0) + ca * cb
        return Polynomial._raw(acc)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Polynomial.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    # -- evaluation and substitution -----------------------------------------

    def evaluate(self, assignment: Mapping[VarId, int]) -> int:
        total = 0
        for mono, c in self._terms.items():
            on = True
            for v in mono:
                try:
                    b = assignment[v]
                except KeyError:
                    raise UnboundVariableError(v) from None
                if b not in (0, 1):
                    raise ValueError(f"{v} is assigned {b!r}, expected 0 or 1")
                if not b:
                    on = False
            if on:
                total += c
        return total

    def fix(self, values: Mapping[VarId, int]) -> "Polynomial":
        """Substitute constants for any subset of the variables."""
        if not values:
            return self
        acc: dict[Monomial, int] = {}
        for mono, c in self._terms.items():
            keep = []
            dead = False
            for v in mono:
                if v in values:
                    if not values[v]:
                        dead = True
                        break
                else:
                    keep.append(v)
            if dead:
                continue
            key = tuple(keep)
            acc[key] = acc.get(key, 0) + c
        return Polynomial._raw(acc)

    def fix_variable(self, v: VarId, value: int) -> "Polynomial":
        if value not in (0, 1):
            raise ValueError(f"binary value expected for {v}, got {value!r}")
        return self.fix({v: value})

    def bounds(self) -> tuple[int, int]:
        """Cheap interval containing every value over binary assignments."""
        lo = hi = self.constant
        for mono, c in self._terms.items():
            if mono:
                if c < 0:
                    lo += c
                else:
                    hi += c
        return lo, hi

    # -- serialization ------------------------------------------------------

    def to_json(self) -> list[dict]:
        return [
            {"vars": [v.to_json() for v in mono], "coeff": str(c)}
            for mono, c in self._terms.items()
        ]

    @classmethod
    def from_json(cls, data: Iterable[Mapping]) -> "Polynomial":
        return cls({tuple(VarId.from_json(v) for v in t["vars"]): int(t["coeff"]) for t in data})

    def __repr__(self) -> str:
        if not self._terms:
            return "Polynomial(0)"
        parts = []
        for mono, c in self._terms.items():
            name = "*".join(str(v) for v in mono)
            parts.append(f"{c}" if not mono else (f"{c}*{name}" if c != 1 else name))
        return "Polynomial(" + " + ".join(parts) + ")"


def _as_poly(x: Scalar) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, int):
        return Polynomial.const(x)
    raise TypeError(f"cannot combine Polynomial with {type(x).__name__}")
