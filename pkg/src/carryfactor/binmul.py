"""Radix-2 long multiplication with explicit column sums and carries.

This is the forward oracle for every model in the package: given two
factors it produces the column sums ``S``, the carries ``C`` and the result
bits ``r`` of the multiplication table.

``n`` is always the highest bit *index* of a factor, so factors have
``n + 1`` bits and the product register has ``2n + 2`` bits.
"""
from __future__ import annotations

from dataclasses import dataclass
import json
from typing import Sequence

__all__ = [
    "BitVec",
    "MulTable",
    "encode_bits",
    "reconstruct",
    "partial_sums",
    "carry_and_result",
    "carry_bound",
    "multiplication_table",
]


BitVec = tuple[int, ...]


def reconstruct(bits: Sequence[int]) -> int:
    """Integer value of a little-endian bit sequence."""
    value = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"bit {i} is {b!r}, expected 0 or 1")
        value |= b << i
    return value


def encode_bits(x: int, n: int) -> BitVec:
    """Little-endian bits of ``x`` padded to ``n + 1`` entries."""
    if n < 0:
        raise ValueError(f"bit index bound n={n} must be non-negative")
    if not 0 <= x < (1 << (n + 1)):
        raise ValueError(f"x={x} does not fit in n+1={n + 1} bits (n={n})")
    return tuple((x >> j) & 1 for j in range(n + 1))


def partial_sums(p: Sequence[int], q: Sequence[int]) -> list[int]:
    """Column sums ``S[i] = sum_{j+k=i} p[j] q[k]`` for ``i = 0..2n``."""
    if len(p) != len(q):
        raise ValueError(f"factor lengths differ: {len(p)} != {len(q)}")
    if not p:
        raise ValueError("factors must have at least one bit")
    n = len(p) - 1
    S = []
    for i in range(2 * n + 1):
        lo = 0 if i <= n else i - n
        hi = i if i <= n else n
        S.append(sum(p[j] * q[i - j] for j in range(lo, hi + 1)))
    return S


def carry_and_result(S: Sequence[int]) -> tuple[list[int], list[int]]:
    """Propagate carries upward through the column sums.

    Returns ``(C, r)`` with ``len(C) == len(S)`` and ``len(r) == len(S) + 1``;
    the last result bit is the final carry.
    """
    C: list[int] = []
    r: list[int] = []
    prev = 0
    for i, s in enumerate(S):
        if s < 0:
            raise ValueError(f"column sum S[{i}]={s} is negative")
        total = s + prev
        c = total // 2
        bit = total - 2 * c
        assert bit in (0, 1)
        C.append(c)
        r.append(bit)
        prev = c
    r.append(prev)
    return C, r


def carry_bound(i: int, n: int) -> int:
    """Largest carry any pair of ``(n+1)``-bit factors produces out of column ``i``."""
    if not 0 <= i <= 2 * n:
        raise ValueError(f"position i={i} outside 0..2n={2 * n}")
    if i == 0:
        return 0
    if i <= n:
        return i
    return 2 * n + 1 - i


@dataclass(frozen=True)
class MulTable:
    n: int
    S: tuple[int, ...]
    C: tuple[int, ...]
    r: tuple[int, ...]

    @property
    def product(self) -> int:
        return reconstruct(self.r)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "S": list(self.S),
            "C": list(self.C),
            "r": list(self.r),
            "product": self.product,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def format(self) -> str:
        """Aligned text rendering, most significant column on the left."""
        width = 2 * self.n + 2
        cols = list(range(width - 1, -1, -1))

        def row(label: str, values: dict[int, int]) -> str:
            cells = [f"{values[i]:>4}" if i in values else "    " for i in cols]
            return f"{label:<9}" + "".join(cells)

        lines = [
            row("i", {i: i for i in cols}),
            row("S_i", dict(enumerate(self.S))),
            row("-2C_i", {i: -2 * c for i, c in enumerate(self.C)}),
            row("C_i", {i + 1: c for i, c in enumerate(self.C)}),
            row("r_i", dict(enumerate(self.r))),
        ]
        return "\n".join(lines)


def multiplication_table(p: int, q: int, n: int) -> MulTable:
    if p <= 0 or q <= 0:
        raise ValueError(f"factors must be positive, got p={p}, q={q}")
    S = partial_sums(encode_bits(p, n), encode_bits(q, n))
    C, r = carry_and_result(S)
    return MulTable(n=n, S=tuple(S), C=tuple(C), r=tuple(r))
