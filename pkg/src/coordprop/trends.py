"""Trend series sampled on a coordination-threshold grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

K_TOL = 1e-9


def default_k_grid(step: float = 0.05) -> tuple[float, ...]:
    n = int(round(1.0 / step))
    return tuple(round(i * step, 10) for i in range(n))


@dataclass(frozen=True)
class TrendSeries:
    community: Hashable
    ks: tuple[float, ...]
    values: tuple[float | None, ...]
    users: tuple[int, ...]
    items: tuple[int, ...]

    def value_at(self, k: float) -> float | None:
        for kk, v in zip(self.ks, self.values):
            if abs(kk - k) <= K_TOL:
                return v
        raise KeyError(k)

    def defined(self) -> list[tuple[float, float]]:
        return [(k, v) for k, v in zip(self.ks, self.values) if v is not None]


def check_grid(k_grid: Sequence[float]) -> tuple[float, ...]:
    ks = tuple(float(k) for k in k_grid)
    if not ks:
        raise ValueError("empty k grid")
    if any(not 0.0 <= k <= 1.0 for k in ks):
        raise ValueError("k grid must lie in [0, 1]")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k grid must be strictly increasing")
    return ks


def members_of(assignment: Mapping[str, Hashable], community) -> list[str]:
    members = sorted(u for u, c in assignment.items() if c == community)
    if not members:
        raise KeyError(f"unknown community {community!r}")
    return members
