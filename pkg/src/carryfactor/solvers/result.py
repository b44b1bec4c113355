from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from ..pbpoly import VarId

__all__ = [
    "SolveResult",
    "MemoryEstimate",
    "ResourceGuardError",
    "InfeasibleInstanceError",
    "estimate_memory",
    "verify_factorization",
]


class ResourceGuardError(RuntimeError):
    pass


class InfeasibleInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class MemoryEstimate:
    """Bytes needed to store every assignment of ``v`` binary variables at one byte per variable."""

    v: int
    bytes: int

    @property
    def human_readable(self) -> str:
        size = float(self.bytes)
        for unit in ("B", "KiB", "MiB", "GiB", "TiB", "PiB", "EiB"):
            if size < 1024 or unit == "EiB":
                break
            size /= 1024
        return f"{self.bytes} B" if unit == "B" else f"{size:.1f} {unit}"


def estimate_memory(v: int) -> MemoryEstimate:
    if v < 1:
        raise ValueError(f"variable count v={v} must be at least 1")
    return MemoryEstimate(v, (1 << v) * v)


def verify_factorization(p: int, q: int, N: int) -> dict:
    if p < 0 or q < 0:
        raise ValueError(f"factors must be non-negative, got p={p}, q={q}")
    err = abs(p * q - N)
    return {"valid": err == 0, "abs_error": err}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass(frozen=True)
class SolveResult:
    best_assignment: Mapping[VarId, int]
    energy: int
    decoded: tuple[int, int]
    abs_error: int
    feasible: Optional[bool] = None
    stats: Mapping[str, Any] = field(default_factory=dict)
    elapsed: float = field(default=0.0, compare=False)

    @property
    def success(self) -> bool:
        return self.abs_error == 0

    def to_json(self) -> dict:
        p, q = self.decoded
        return {
            "p": str(p),
            "q": str(q),
            "abs_error": str(self.abs_error),
            "energy": str(self.energy),
            "feasible": self.feasible,
            "stats": _jsonable(dict(self.stats, elapsed=self.elapsed)),
            "assignment": {str(v): int(b) for v, b in sorted(self.best_assignment.items())},
        }
