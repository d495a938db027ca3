"""Agent energy, total energy, price and gross return.

Sign and normalisation conventions used throughout the package:

* the global price coupling and the price use the per-capita imbalance
  ``n_up - n_dn`` in ``[-1, 1]`` rather than raw head counts;
* an agent is a buyer iff its spin is positive and a seller iff negative,
  whatever the spin space;
* only the pairwise imitation term is halved when summing agent energies;
* ``k_B = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lattice import NeighborGraph

__all__ = [
    "SpinSpace",
    "FieldSchedule",
    "ModelParams",
    "MarketState",
    "count_sides",
    "agent_energy",
    "total_energy",
    "price",
    "gross_return",
    "UndefinedReturnError",
]


class UndefinedReturnError(ZeroDivisionError):
    """Gross return requested against a zero previous price."""


@dataclass(frozen=True)
class SpinSpace:
    """Allowed agent states.

    ``SpinSpace.discrete(S)`` holds the ``2S+1`` integers ``-S..S``;
    ``SpinSpace.continuous()`` holds every real in ``[-1, 1]``.
    """

    kind: str = "discrete"
    S: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("discrete", "continuous"):
            raise ValueError(f"unknown spin space kind {self.kind!r}")
        if self.kind == "discrete" and (int(self.S) != self.S or self.S < 1):
            raise ValueError(f"discrete amplitude S must be a positive integer, got {self.S!r}")

    @classmethod
    def discrete(cls, S: int) -> "SpinSpace":
        return cls("discrete", S)

    @classmethod
    def continuous(cls) -> "SpinSpace":
        return cls("continuous", 1)

    @property
    def is_continuous(self) -> bool:
        return self.kind == "continuous"

    @property
    def bound(self) -> float:
        return 1.0 if self.is_continuous else float(self.S)

    def states(self) -> np.ndarray:
        if self.is_continuous:
            raise ValueError("continuous spin space has no finite state list")
        return np.arange(-self.S, self.S + 1, dtype=float)

    def contains(self, value: float | np.ndarray) -> bool | np.ndarray:
        v = np.asarray(value, dtype=float)
        if self.is_continuous:
            ok = (v >= -1.0) & (v <= 1.0)
        else:
            ok = (np.abs(v) <= self.S) & (v == np.round(v))
        return bool(ok) if ok.ndim == 0 else ok

    def label(self) -> str:
        return "continuous" if self.is_continuous else f"S={self.S}"


@dataclass(frozen=True)
class FieldSchedule:
    """Piecewise-constant boosting field; ``H`` acts on sweeps ``t_start <= t < t_end``."""

    segments: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        segs = tuple(sorted((int(a), int(b), float(h)) for a, b, h in self.segments))
        for a, b, _ in segs:
            if not a < b:
                raise ValueError(f"field segment needs t_start < t_end, got ({a}, {b})")
        for (_, b0, _), (a1, _, _) in zip(segs, segs[1:]):
            if a1 < b0:
                raise ValueError("field segments overlap")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def pulse(cls, t1: int, t2: int, H: float) -> "FieldSchedule":
        return cls(((t1, t2, H),))

    def field_at(self, t: int) -> float:
        for a, b, h in self.segments:
            if a <= t < b:
                return h
        return 0.0

    def as_array(self, n_sweeps: int) -> np.ndarray:
        """Field in force for every row ``t = 0..n_sweeps``."""
        out = np.zeros(n_sweeps + 1)
        for a, b, h in self.segments:
            out[max(a, 0):max(min(b, n_sweeps + 1), 0)] = h
        return out


@dataclass(frozen=True)
class ModelParams:
    spin_space: SpinSpace = field(default_factory=SpinSpace)
    J: float = 1.0
    a: float = 3.0
    A: float = 3.0
    T: float = 1.0
    schedule: FieldSchedule = field(default_factory=FieldSchedule)

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"temperature must be positive, got {self.T!r}")
        if self.a < 0:
            raise ValueError(f"price coupling a must be >= 0, got {self.a!r}")


def count_sides(spins: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Buyer and seller fractions, counting by the sign of each spin."""
    s = np.asarray(spins, dtype=float)
    n = s.size
    if n == 0:
        return 0.0, 0.0
    return np.count_nonzero(s > 0) / n, np.count_nonzero(s < 0) / n


@dataclass
class MarketState:
    """Spins at sweep ``t`` with their cached buyer/seller fractions."""

    spins: np.ndarray
    t: int = 0
    n_up: float = field(default=np.nan)
    n_dn: float = field(default=np.nan)

    def __post_init__(self) -> None:
        self.spins = np.asarray(self.spins, dtype=float)
        if np.isnan(self.n_up) or np.isnan(self.n_dn):
            self.n_up, self.n_dn = count_sides(self.spins)

    @property
    def imbalance(self) -> float:
        return self.n_up - self.n_dn

    @property
    def n_sites(self) -> int:
        return self.spins.size

    def is_consistent(self) -> bool:
        return (self.n_up, self.n_dn) == count_sides(self.spins)

    def copy(self) -> "MarketState":
        return MarketState(self.spins.copy(), self.t, self.n_up, self.n_dn)


def agent_energy(
    snapshot: MarketState,
    i: int,
    value: float,
    graph: NeighborGraph,
    params: ModelParams,
    H: float,
) -> float:
    """Energy of agent ``i`` taking ``value`` against a frozen ``snapshot``.

    ``value * (-J * sum_j s_j + a * (n_up - n_dn) - H)``.
    """
    if not params.spin_space.contains(value):
        raise ValueError(f"value {value!r} is outside the spin space {params.spin_space.label()}")
    nbr_sum = float(snapshot.spins[graph.neighbors(i)].sum())
    return value * (-params.J * nbr_sum) + params.a * value * snapshot.imbalance - H * value


def total_energy(state: MarketState, graph: NeighborGraph, params: ModelParams, H: float) -> float:
    """Sum of agent energies with the pairwise term counted once per bond."""
    s = state.spins
    nbr_sum = graph.neighbor_sums(s)
    m_sum = s.sum()
    return float(-0.5 * params.J * np.dot(s, nbr_sum) + params.a * state.imbalance * m_sum - H * m_sum)


def price(n_up: float, n_dn: float, a: float, A: float) -> float:
    """Market price ``A + a * (n_up - n_dn)``; equals ``A`` at clearing."""
    return a * (n_up - n_dn) + A


def gross_return(P_t: float | np.ndarray, P_prev: float | np.ndarray) -> float | np.ndarray:
    """``(P_t - P_prev) / P_prev``."""
    P_prev_arr = np.asarray(P_prev, dtype=float)
    if np.any(P_prev_arr == 0):
        raise UndefinedReturnError("gross return undefined for a zero previous price")
    out = (np.asarray(P_t, dtype=float) - P_prev_arr) / P_prev_arr
    return float(out) if out.ndim == 0 else out
