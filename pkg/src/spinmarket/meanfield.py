"""Two-community time-dependent mean-field map.

Group ``n`` holds average preference ``s_n`` and updates from the previous
step through the Brillouin function of amplitude ``M_n``::

    u1 = (J1 s1 + K12 s2) / T - a (s1 - s2)
    u2 = (J2 s2 + K21 s1) / T - a (s1 - s2)
    s1', s2' = B(u1; M1), B(u2; M2)

By default the price coupling ``a`` enters unscaled; ``scale_a=True``
divides it by ``T`` like the other couplings.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "MeanFieldParams",
    "MeanFieldTrajectory",
    "RegimeReport",
    "TransientError",
    "RegimeOrderError",
    "brillouin",
    "brillouin_sum",
    "mf_step",
    "mf_run",
    "mf_price",
    "classify_regime",
    "regime_boundaries",
    "origin_jacobian",
    "origin_is_stable",
    "write_regime_csv",
]

SERIES_CUTOFF = 1e-4


class TransientError(RuntimeError):
    """Tail fits none of the ordered/oscillating/clearing patterns."""


class RegimeOrderError(ValueError):
    """Regimes along a temperature grid are not ordered -> oscillating -> clearing."""


def brillouin(u: float | np.ndarray, M: int = 1) -> float | np.ndarray:
    """``(M+1/2) coth((M+1/2) u) - 1/2 coth(u/2)``, the mean of ``s`` in ``-M..M``.

    Below ``|u| < 1e-4`` the odd Taylor series is used, where the two coth
    terms cancel catastrophically.
    """
    u_arr = np.asarray(u, dtype=float)
    c = M + 0.5
    small = np.abs(u_arr) < SERIES_CUTOFF
    safe = np.where(small, 1.0, u_arr)
    with np.errstate(over="ignore"):
        direct = c / np.tanh(c * safe) - 0.5 / np.tanh(0.5 * safe)
    k1 = M * (M + 1) / 3.0
    k3 = -M * (M + 1) * (2 * M * M + 2 * M + 1) / 90.0
    series = k1 * u_arr + k3 * u_arr**3
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def brillouin_sum(u: float, M: int = 1) -> float:
    """Direct ratio of exponential sums over ``s = -M..M``; slow but literal."""
    s = np.arange(-M, M + 1, dtype=float)
    w = np.exp(s * u - np.abs(u) * M)
    return float(np.dot(s, w) / w.sum())


@dataclass(frozen=True)
class MeanFieldParams:
    J1: float = 1.0
    J2: float = 0.5
    K12: float = 1.0
    K21: float = -0.5
    a: float = 5.0
    T: float = 1.0
    M1: int = 1
    M2: int = 1
    s1_0: float = 1.0
    s2_0: float = -1.0
    scale_a: bool = False

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError("T must be positive")
        for name, M in (("M1", self.M1), ("M2", self.M2)):
            if int(M) != M or M < 1:
                raise ValueError(f"{name} must be a positive integer")
        if abs(self.s1_0) > self.M1 or abs(self.s2_0) > self.M2:
            raise ValueError("initial group averages must satisfy |s_n(0)| <= M_n")

    @property
    def a_eff(self) -> float:
        return self.a / self.T if self.scale_a else self.a


@dataclass
class MeanFieldTrajectory:
    t: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    P: np.ndarray

    def __len__(self) -> int:
        return self.t.size

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "s1", "s2", "P"])
            for t, a, b, p in zip(self.t, self.s1, self.s2, self.P):
                w.writerow([str(int(t)), f"{a:.12g}", f"{b:.12g}", f"{p:.12g}"])


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    period: float
    amplitude: float
    final: tuple[float, float]


def _fields(s1: float, s2: float, p: MeanFieldParams) -> tuple[float, float]:
    g = p.a_eff * (s1 - s2)
    u1 = (p.J1 * s1 + p.K12 * s2) / p.T - g
    u2 = (p.J2 * s2 + p.K21 * s1) / p.T - g
    return u1, u2


def mf_step(s1: float, s2: float, p: MeanFieldParams) -> tuple[float, float]:
    u1, u2 = _fields(s1, s2, p)
    return brillouin(u1, p.M1), brillouin(u2, p.M2)


def mf_price(s1: float | np.ndarray, s2: float | np.ndarray, a_p: float = 1.0, A: float = 3.0):
    """``A + a_p (s1 + s2) / 2``: clearing price plus the net buying pressure."""
    return A + a_p * (np.asarray(s1) + np.asarray(s2)) / 2


def mf_run(p: MeanFieldParams, steps: int = 2000, a_p: float = 1.0, A: float = 3.0) -> MeanFieldTrajectory:
    """Iterate :func:`mf_step` ``steps`` times; row 0 is the initial condition."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    s1 = np.empty(steps + 1)
    s2 = np.empty(steps + 1)
    s1[0], s2[0] = p.s1_0, p.s2_0
    for t in range(steps):
        s1[t + 1], s2[t + 1] = mf_step(s1[t], s2[t], p)
    return MeanFieldTrajectory(np.arange(steps + 1), s1, s2, mf_price(s1, s2, a_p, A))


def classify_regime(traj: MeanFieldTrajectory, tail: int = 500, tol: float = 1e-3) -> RegimeReport:
    """Label the last ``tail`` steps as ``clearing``, ``ordered`` or ``oscillating``.

    Raises
    ------
    TransientError
        If the tail is neither converged nor a sustained oscillation.
    """
    if not 4 <= tail < len(traj):
        raise ValueError(f"tail must lie in [4, {len(traj)})")
    x = np.column_stack([traj.s1[-tail:], traj.s2[-tail:]])
    final = (float(x[-1, 0]), float(x[-1, 1]))
    amplitude = float(np.ptp(x, axis=0).max())

    if np.abs(x).max() < tol:
        return RegimeReport("clearing", float("nan"), amplitude, final)

    settled = np.abs(np.diff(x, axis=0)).max() < tol
    signs = np.sign(x)
    if settled and np.all(np.abs(x) > tol) and np.all(signs == signs[-1]):
        return RegimeReport("ordered", float("nan"), amplitude, final)

    q = tail // 4
    last = np.ptp(x[-q:], axis=0).max()
    prev = np.ptp(x[-2 * q:-q], axis=0).max()
    if amplitude > tol and last >= 0.9 * prev:
        c = x[:, 0] - x[:, 0].mean()
        if np.ptp(c) <= tol:
            c = x[:, 1] - x[:, 1].mean()
        crossings = np.flatnonzero(np.signbit(c[1:]) != np.signbit(c[:-1]))
        period = 2.0 * float(np.diff(crossings).mean()) if crossings.size >= 2 else float("nan")
        return RegimeReport("oscillating", period, amplitude, final)

    raise TransientError(
        f"tail of {tail} steps neither settled nor sustained (range {amplitude:.3g}); lengthen the run"
    )


def _regime_or_transient(p: MeanFieldParams, steps: int, tail: int, tol: float) -> str:
    try:
        return classify_regime(mf_run(p, steps), tail, tol).regime
    except TransientError:
        return "transient"


def regime_boundaries(
    p: MeanFieldParams,
    T_lo: float,
    T_hi: float,
    tol: float = 0.01,
    steps: int = 2000,
    tail: int = 500,
    class_tol: float = 1e-3,
    n_grid: int = 41,
) -> tuple[float, float]:
    """Temperatures where the ordered regime ends and where clearing begins.

    A coarse grid confirms the sequence ordered -> (oscillating) -> clearing,
    then each boundary is bisected to width ``tol``.  Without an oscillating
    window both values coincide.
    """
    if not T_lo < T_hi:
        raise ValueError("need T_lo < T_hi")
    at = lambda T: _regime_or_transient(replace(p, T=T), steps, tail, class_tol)  # noqa: E731
    grid = np.linspace(T_lo, T_hi, n_grid)
    seen = [at(T) for T in grid]
    if seen[0] != "ordered" or seen[-1] != "clearing":
        raise RegimeOrderError(
            f"need ordered at T_lo and clearing at T_hi, got {seen[0]} at {T_lo:g} and {seen[-1]} at {T_hi:g}"
        )
    rank = {"ordered": 0, "oscillating": 1, "transient": 1, "clearing": 2}
    ranks = [rank[r] for r in seen]
    if any(b < a for a, b in zip(ranks, ranks[1:])):
        listing = ", ".join(f"{T:.4g}:{r}" for T, r in zip(grid, seen))
        raise RegimeOrderError(f"non-monotone regime sequence: {listing}")

    def bisect(lo, hi, pred):
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if pred(at(mid)):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    k1 = next(i for i, r in enumerate(ranks) if r > 0)
    k2 = next(i for i, r in enumerate(ranks) if r == 2)
    t_c1 = bisect(grid[k1 - 1], grid[k1], lambda r: r == "ordered")
    t_c2 = bisect(grid[k2 - 1], grid[k2], lambda r: r != "clearing")
    return t_c1, t_c2


def origin_jacobian(p: MeanFieldParams) -> np.ndarray:
    """Jacobian of :func:`mf_step` at ``(0, 0)``."""
    b1 = p.M1 * (p.M1 + 1) / 3.0
    b2 = p.M2 * (p.M2 + 1) / 3.0
    a = p.a_eff
    return np.array(
        [
            [b1 * (p.J1 / p.T - a), b1 * (p.K12 / p.T + a)],
            [b2 * (p.K21 / p.T - a), b2 * (p.J2 / p.T + a)],
        ]
    )


def origin_is_stable(p: MeanFieldParams) -> bool:
    return bool(np.max(np.abs(np.linalg.eigvals(origin_jacobian(p)))) < 1.0)


def write_regime_csv(path: str | Path, rows: Sequence[tuple[float, RegimeReport | None]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T", "regime", "period", "amplitude"])
        for T, rep in rows:
            if rep is None:
                w.writerow([f"{T:.12g}", "transient", "nan", "nan"])
            else:
                w.writerow([f"{T:.12g}", rep.regime, f"{rep.period:.12g}", f"{rep.amplitude:.12g}"])
