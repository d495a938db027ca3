"""Thermal statistics, critical-point location and price-series diagnostics."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dynamics import RunConfig, TimeSeries, run_market
from .model import FieldSchedule
from .rng import derive_seed

__all__ = [
    "ThermalStats",
    "PersistenceReport",
    "thermal_stats",
    "temperature_scan",
    "estimate_tc",
    "autocorrelation",
    "integrated_time",
    "rolling_volatility",
    "persistence_score",
    "pulse_verdict",
    "find_critical_h",
    "BoundaryPeakError",
    "BracketError",
    "write_scan_csv",
    "write_persistence_csv",
]


class BoundaryPeakError(ValueError):
    """Susceptibility maximum sits on the edge of the temperature grid."""


class BracketError(ValueError):
    """Both ends of an H bracket gave the same persistence verdict."""


@dataclass(frozen=True)
class ThermalStats:
    T: float
    e_mean: float
    c_v: float
    m_mean: float
    chi: float


@dataclass(frozen=True)
class PersistenceReport:
    baseline: float
    during: float
    after: float
    persistent: bool
    retention: float
    noise_floor: float


def thermal_stats(series: TimeSeries, discard: int, T: float) -> ThermalStats:
    """Per-agent energy, specific heat, magnetisation and susceptibility.

    Averages run over rows ``t >= discard``.  With ``m = M/N``::

        C_V = (<E^2> - <E>^2) / (N T^2)
        chi = N (<m^2> - <m>^2) / T
    """
    if discard < 0 or discard >= len(series):
        raise ValueError(f"discard={discard} leaves an empty averaging window (length {len(series)})")
    n = series.n_sites
    E = series.E[discard:]
    m = series.M[discard:] / n
    return ThermalStats(
        T=float(T),
        e_mean=float(E.mean() / n),
        c_v=float(E.var() / (n * T * T)),
        m_mean=float(m.mean()),
        chi=float(n * m.var() / T),
    )


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def temperature_scan(
    base: RunConfig,
    T_grid: Sequence[float],
    discard: int,
    measure: int,
    threads: int = 1,
) -> list[ThermalStats]:
    """One fresh run per temperature, each reduced by :func:`thermal_stats`.

    Run ``i`` uses the seed ``derive_seed(base.seed, "scan", i)`` so results
    do not depend on ``threads``.
    """
    T_grid = [float(T) for T in T_grid]
    if not T_grid:
        raise ValueError("temperature grid is empty")

    def one(item):
        i, T = item
        cfg = base.with_(T=T, n_sweeps=discard + measure, seed=derive_seed(base.seed, "scan", i))
        return thermal_stats(run_market(cfg), discard, T)

    return _map(one, list(enumerate(T_grid)), threads)


def estimate_tc(scan: Sequence[ThermalStats]) -> tuple[float, float]:
    """Susceptibility peak refined by a parabola through the top three points.

    Returns ``(T_c, uncertainty)`` with the uncertainty set to the local grid
    spacing.
    """
    if len(scan) < 3:
        raise ValueError("need at least three temperatures to locate a peak")
    pts = sorted(scan, key=lambda s: s.T)
    T = np.array([s.T for s in pts])
    chi = np.array([s.chi for s in pts])
    k = int(np.argmax(chi))
    if k == 0 or k == len(pts) - 1:
        raise BoundaryPeakError(f"susceptibility peaks at the grid edge T={T[k]:g}; widen the grid")
    x0, x1, x2 = T[k - 1:k + 2]
    y0, y1, y2 = chi[k - 1:k + 2]
    # vertex of the Lagrange parabola through three (possibly uneven) points
    num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    tc = x1 - 0.5 * num / den if den != 0 else x1
    tc = float(np.clip(tc, x0, x2))
    return tc, float(max(x1 - x0, x2 - x1))


def autocorrelation(x: Sequence[float], max_lag: int) -> np.ndarray:
    """Normalised autocorrelation ``C(tau)`` for ``tau = 0..max_lag``.

    Uses the standard biased estimator (lag sums divided by the full length),
    which keeps ``|C(tau)| <= 1``.
    """
    x = np.asarray(x, dtype=float)
    if max_lag < 0 or x.size <= max_lag:
        raise ValueError(f"series of length {x.size} too short for max_lag={max_lag}")
    d = x - x.mean()
    var = np.dot(d, d)
    if var <= 0 or not np.isfinite(var):
        raise ValueError("autocorrelation undefined for a zero-variance series")
    n = x.size
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(d, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1]
    return acov / var


def integrated_time(x: Sequence[float]) -> float:
    """Integrated autocorrelation time ``1 + 2 sum_k C(k)``.

    The sum runs over the initial positive stretch of ``C`` (at most half
    the series).  Returns 1 for a constant series.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 4 or np.ptp(x) == 0:
        return 1.0
    c = autocorrelation(x, x.size // 2)[1:]
    stop = np.flatnonzero(c <= 0)
    k = stop[0] if stop.size else c.size
    return float(max(1.0, 1.0 + 2.0 * c[:k].sum()))


def rolling_volatility(R: Sequence[float], window: int) -> np.ndarray:
    """Standard deviation of returns over each full sliding window."""
    R = np.asarray(R, dtype=float)
    if window < 2:
        raise ValueError("window must be at least 2")
    if R.size < window:
        raise ValueError(f"series of length {R.size} shorter than window {window}")
    return sliding_window_view(R, window).std(axis=-1)


def persistence_score(
    series: TimeSeries,
    t1: int,
    t2: int,
    horizon: int,
    threshold: float = 0.5,
    noise_factor: float = 3.0,
) -> PersistenceReport:
    """Does a price shift caused by a field pulse on ``[t1, t2)`` survive it?

    ``baseline``, ``during`` and ``after`` are mean prices over
    ``[t1-horizon, t1)``, ``[t1, t2)`` and ``[t2, t2+horizon)``.  The pulse
    counts as persistent when the shift during the pulse exceeds
    ``noise_factor`` standard errors and at least ``threshold`` of it
    remains afterwards.  The standard error is that of the difference of
    the two window means, estimated from the baseline window; prices are
    strongly autocorrelated, so each window counts ``length / tau``
    effective samples with ``tau`` from :func:`integrated_time`.
    """
    if not 0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    if horizon < 2 or t1 - horizon < 0 or t2 + horizon > len(series):
        raise ValueError(
            f"windows [{t1 - horizon}, {t2 + horizon}) fall outside a series of length {len(series)}"
        )
    P = series.P
    base_w = P[t1 - horizon:t1]
    baseline = float(base_w.mean())
    during = float(P[t1:t2].mean())
    after = float(P[t2:t2 + horizon].mean())
    # standard error of (during - baseline), both windows sharing the baseline's spread and correlation time
    tau = integrated_time(base_w)
    floor = float(noise_factor * base_w.std(ddof=1) * np.sqrt(tau * (1.0 / base_w.size + 1.0 / (t2 - t1))))
    shift = during - baseline
    if abs(shift) > floor:
        retention = (after - baseline) / shift
        persistent = bool(retention >= threshold)
    else:
        retention = float("nan")
        persistent = False
    return PersistenceReport(baseline, during, after, persistent, float(retention), floor)


def pulse_verdict(
    base: RunConfig,
    T: float,
    H: float,
    t1: int,
    t2: int,
    horizon: int,
    n_seeds: int,
    threads: int = 1,
    tag: str = "pulse",
    **criterion,
) -> tuple[bool, list[PersistenceReport]]:
    """Majority persistence verdict over ``n_seeds`` independent replicas."""
    sched = FieldSchedule.pulse(t1, t2, H)

    def one(r):
        cfg = base.with_(T=T, schedule=sched, n_sweeps=t2 + horizon, seed=derive_seed(base.seed, tag, r))
        return persistence_score(run_market(cfg), t1, t2, horizon, **criterion)

    reports = _map(one, list(range(n_seeds)), threads)
    votes = sum(r.persistent for r in reports)
    return 2 * votes > n_seeds, reports


def find_critical_h(
    base: RunConfig,
    T: float,
    h_lo: float,
    h_hi: float,
    n_seeds: int,
    tol: float,
    t1: int = 400,
    t2: int = 600,
    horizon: int = 200,
    threads: int = 1,
    history: list | None = None,
    **criterion,
) -> tuple[float, float]:
    """Bisect the pulse strength separating transient from persistent shifts.

    If ``history`` is a list, every probe is appended to it as
    ``(H, verdict, reports)``.

    Raises
    ------
    BracketError
        When ``h_lo`` is already persistent or ``h_hi`` is not.
    """
    if not h_lo < h_hi:
        raise ValueError("need h_lo < h_hi")
    if tol <= 0:
        raise ValueError("tol must be positive")

    def verdict(h, probe):
        ok, reports = pulse_verdict(base, T, h, t1, t2, horizon, n_seeds, threads, tag=f"hc-{probe}", **criterion)
        if history is not None:
            history.append((h, ok, reports))
        return ok

    lo_ok, hi_ok = verdict(h_lo, 0), verdict(h_hi, 1)
    if lo_ok or not hi_ok:
        raise BracketError(
            f"bracket [{h_lo:g}, {h_hi:g}] at T={T:g} is not ordered: "
            f"persistent(h_lo)={lo_ok}, persistent(h_hi)={hi_ok}"
        )
    probe = 2
    while h_hi - h_lo > tol:
        mid = 0.5 * (h_lo + h_hi)
        if verdict(mid, probe):
            h_hi = mid
        else:
            h_lo = mid
        probe += 1
    return h_lo, h_hi


def write_scan_csv(path: str | Path, scan: Sequence[ThermalStats]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T", "E", "Cv", "M", "chi"])
        for s in scan:
            w.writerow([f"{v:.12g}" for v in (s.T, s.e_mean, s.c_v, s.m_mean, s.chi)])


def write_persistence_csv(path: str | Path, rows: Sequence[tuple[float, float, PersistenceReport]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["H", "T", "baseline", "during", "after", "retention", "persistent"])
        for H, T, rep in rows:
            d = asdict(rep)
            w.writerow(
                [f"{H:.12g}", f"{T:.12g}"]
                + [f"{d[k]:.12g}" for k in ("baseline", "during", "after", "retention")]
                + [str(rep.persistent).lower()]
            )
