"""Metropolis time evolution of the market.

Two update modes are provided:

``snapshot``
    Every agent in sweep ``t`` reads its neighbours and the buyer/seller
    imbalance from the configuration at the end of sweep ``t-1``.  This is
    the model's own dynamics and the default.
``in_place``
    Ordinary sequential Metropolis: accepted moves are visible immediately
    and the imbalance is updated incrementally.  Snapshot dynamics is a
    synchronous update and does not satisfy detailed balance, so this mode
    exists to check the sampler against exact Gibbs weights.

Random numbers come from two generators, one for proposals and one for the
acceptance draws.  Keeping them separate makes the stream independent of
how many sweeps are drawn at once, so ``metropolis_sweep`` called ``k``
times and ``run_market`` over ``k`` sweeps consume identical numbers.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numba
import numpy as np

from .lattice import NeighborGraph
from .model import MarketState, ModelParams, SpinSpace, count_sides
from .rng import derive_generator

__all__ = [
    "RunConfig",
    "TimeSeries",
    "SweepRNG",
    "init_state",
    "field_at",
    "metropolis_sweep",
    "run_market",
    "UPDATE_MODES",
]

UPDATE_MODES = ("snapshot", "in_place")
_BLOCK_BYTES = 1 << 22


@dataclass(frozen=True)
class RunConfig:
    graph: NeighborGraph
    params: ModelParams
    n_sweeps: int
    init: tuple[float, float] = (0.4, 0.6)
    seed: int = 0
    update_mode: str = "snapshot"

    def __post_init__(self) -> None:
        f_up, f_dn = self.init
        if f_up < 0 or f_dn < 0 or f_up + f_dn > 1 + 1e-12:
            raise ValueError(f"initial fractions must be >= 0 and sum to <= 1, got {self.init}")
        if self.n_sweeps < 0:
            raise ValueError("n_sweeps must be >= 0")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}, got {self.update_mode!r}")

    def with_(self, **changes) -> "RunConfig":
        """Copy with some fields replaced; ``T`` and ``schedule`` reach into params."""
        pchanges = {k: changes.pop(k) for k in ("T", "schedule", "a", "J", "A") if k in changes}
        cfg = replace(self, **changes)
        if pchanges:
            cfg = replace(cfg, params=replace(cfg.params, **pchanges))
        return cfg


class SweepRNG:
    """Proposal and acceptance streams for one chain."""

    def __init__(self, proposal: np.random.Generator, accept: np.random.Generator):
        self.proposal = proposal
        self.accept = accept

    @classmethod
    def from_seed(cls, seed: int) -> "SweepRNG":
        return cls(derive_generator(seed, "proposal"), derive_generator(seed, "accept"))

    def draw(self, n_sweeps: int, n_sites: int, space: SpinSpace) -> tuple[np.ndarray, np.ndarray]:
        shape = (n_sweeps, n_sites)
        if space.is_continuous:
            prop = self.proposal.uniform(-1.0, 1.0, size=shape)
        else:
            prop = self.proposal.integers(-space.S, space.S + 1, size=shape, dtype=np.int64).astype(np.float64)
        return prop, self.accept.random(size=shape)


@dataclass
class TimeSeries:
    """Per-sweep observables; row 0 is the initial state.

    ``E`` and ``M`` are extensive totals.  ``R[0]`` is NaN (no previous
    price), as is any return following a zero price.
    """

    t: np.ndarray
    E: np.ndarray
    M: np.ndarray
    n_up: np.ndarray
    n_dn: np.ndarray
    P: np.ndarray
    R: np.ndarray
    H: np.ndarray
    n_sites: int
    final_state: MarketState | None = field(default=None, repr=False)
    spins: np.ndarray | None = field(default=None, repr=False)

    COLUMNS = ("t", "E", "M", "n_up", "n_dn", "P", "R", "H")

    def __len__(self) -> int:
        return self.t.size

    @property
    def m(self) -> np.ndarray:
        """Magnetisation per agent."""
        return self.M / self.n_sites

    @property
    def imbalance(self) -> np.ndarray:
        return self.n_up - self.n_dn

    def window(self, start: int, stop: int | None = None) -> "TimeSeries":
        sl = slice(start, stop)
        return TimeSeries(
            *(getattr(self, c)[sl] for c in self.COLUMNS), n_sites=self.n_sites, final_state=None
        )

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
                w.writerow([str(int(row[0]))] + [f"{v:.12g}" for v in row[1:]])

    @classmethod
    def from_csv(cls, path: str | Path, n_sites: int) -> "TimeSeries":
        data = np.genfromtxt(path, delimiter=",", names=True)
        cols = {c: np.atleast_1d(data[c]).astype(float) for c in cls.COLUMNS}
        cols["t"] = cols["t"].astype(np.int64)
        return cls(**cols, n_sites=n_sites)


# --------------------------------------------------------------------------- kernels


@numba.njit(cache=True, nogil=True)
def _neighbor_sums(spins, indptr, indices):
    n = spins.size
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += spins[indices[k]]
        out[i] = acc
    return out


@numba.njit(cache=True, nogil=True)
def _observe(spins, nbsum, J, a, H):
    n = spins.size
    nu = 0
    nd = 0
    msum = 0.0
    pair = 0.0
    for i in range(n):
        s = spins[i]
        msum += s
        pair += s * nbsum[i]
        if s > 0:
            nu += 1
        elif s < 0:
            nd += 1
    up = nu / n
    dn = nd / n
    E = -0.5 * J * pair + a * (up - dn) * msum - H * msum
    return E, msum, up, dn


@numba.njit(cache=True, nogil=True)
def _sweeps(spins, indptr, indices, proposals, uniforms, J, a, T, H, snapshot, E, M, UP, DN, trace):
    """Run ``proposals.shape[0]`` sweeps in place, recording after each.

    ``trace`` receives the spins after every sweep unless it has zero rows.

    Neighbour sums are carried along and patched only where spins changed.
    """
    n = spins.size
    nbsum = _neighbor_sums(spins, indptr, indices)
    delta = np.zeros(n)
    nu = 0
    nd = 0
    for i in range(n):
        if spins[i] > 0:
            nu += 1
        elif spins[i] < 0:
            nd += 1
    for b in range(proposals.shape[0]):
        h_ext = H[b]
        if snapshot:
            shift = -a * (nu - nd) / n + h_ext
            for i in range(n):
                old = spins[i]
                new = proposals[b, i]
                dE = -(new - old) * (J * nbsum[i] + shift)
                if dE <= 0.0 or uniforms[b, i] < np.exp(-dE / T):
                    delta[i] = new - old
                else:
                    delta[i] = 0.0
            for i in range(n):
                d = delta[i]
                if d != 0.0:
                    old = spins[i]
                    # assign the proposal itself, not old + d, so continuous spins stay exact
                    spins[i] = proposals[b, i]
                    if old > 0:
                        nu -= 1
                    elif old < 0:
                        nd -= 1
                    if spins[i] > 0:
                        nu += 1
                    elif spins[i] < 0:
                        nd += 1
                    for k in range(indptr[i], indptr[i + 1]):
                        nbsum[indices[k]] += d
        else:
            for i in range(n):
                old = spins[i]
                new = proposals[b, i]
                dE = -(new - old) * (J * nbsum[i] - a * (nu - nd) / n + h_ext)
                if dE <= 0.0 or uniforms[b, i] < np.exp(-dE / T):
                    if old > 0:
                        nu -= 1
                    elif old < 0:
                        nd -= 1
                    if new > 0:
                        nu += 1
                    elif new < 0:
                        nd += 1
                    spins[i] = new
                    d = new - old
                    for k in range(indptr[i], indptr[i + 1]):
                        nbsum[indices[k]] += d
        e, m, up, dn = _observe(spins, nbsum, J, a, h_ext)
        E[b] = e
        M[b] = m
        UP[b] = up
        DN[b] = dn
        if trace.shape[0] > 0:
            trace[b, :] = spins


# --------------------------------------------------------------------------- public API


def field_at(schedule, t: int) -> float:
    """Field in force during sweep ``t`` (zero outside every segment)."""
    return schedule.field_at(t)


def init_state(config: RunConfig) -> MarketState:
    """Random initial market with the requested buyer and seller fractions.

    Exactly ``round(f_up*N)`` agents are drawn positive and ``round(f_dn*N)``
    negative, at seed-determined positions.  Multi-valued buyers (sellers)
    are spread uniformly over the positive (negative) states.  Undecided
    agents start at 0, or for the continuous space at a uniform value in
    ``[-0.05, 0.05]``, in which case they are counted by their sign.
    """
    n = config.graph.n_sites
    space = config.params.spin_space
    rng = derive_generator(config.seed, "init")
    f_up, f_dn = config.init
    n_up = int(round(f_up * n))
    n_dn = min(int(round(f_dn * n)), n - n_up)
    perm = rng.permutation(n)
    up_idx, dn_idx, rest = perm[:n_up], perm[n_up:n_up + n_dn], perm[n_up + n_dn:]
    spins = np.zeros(n)
    if space.is_continuous:
        spins[up_idx] = 1.0 - rng.random(n_up)
        spins[dn_idx] = -(1.0 - rng.random(n_dn))
        spins[rest] = rng.uniform(-0.05, 0.05, rest.size)
    else:
        spins[up_idx] = rng.integers(1, space.S + 1, n_up)
        spins[dn_idx] = -rng.integers(1, space.S + 1, n_dn)
    return MarketState(spins, t=0)


def _block_size(n_sites: int, n_sweeps: int) -> int:
    return max(1, min(n_sweeps, _BLOCK_BYTES // (16 * max(n_sites, 1))))


_NO_TRACE = np.empty((0, 0))


def _advance(state, graph, params, H_per_sweep, rng, mode, out, trace=_NO_TRACE):
    k = H_per_sweep.size
    prop, unif = rng.draw(k, graph.n_sites, params.spin_space)
    _sweeps(
        state.spins, graph.indptr, graph.indices, prop, unif,
        float(params.J), float(params.a), float(params.T),
        np.ascontiguousarray(H_per_sweep, dtype=np.float64), mode == "snapshot", *out, trace,
    )


def metropolis_sweep(
    state: MarketState,
    graph: NeighborGraph,
    params: ModelParams,
    H: float,
    rng: SweepRNG,
    mode: str = "snapshot",
) -> MarketState:
    """One Metropolis sweep; sites are visited in index order.

    Returns a new state, ``state`` itself is left untouched.
    """
    if mode not in UPDATE_MODES:
        raise ValueError(f"mode must be one of {UPDATE_MODES}")
    new = MarketState(state.spins.copy(), t=state.t + 1)
    out = tuple(np.empty(1) for _ in range(4))
    _advance(new, graph, params, np.array([H], dtype=float), rng, mode, out)
    new.n_up, new.n_dn = float(out[2][0]), float(out[3][0])
    return new


def run_market(config: RunConfig, state: MarketState | None = None, record_spins: bool = False) -> TimeSeries:
    """Evolve the market for ``config.n_sweeps`` sweeps from ``init_state``.

    Row ``t`` holds the state after sweep ``t``; sweep ``t`` is run with the
    field ``schedule.field_at(t)``.  With ``record_spins`` the full
    configuration of every row is kept in ``TimeSeries.spins`` (meant for
    small graphs).
    """
    graph, params = config.graph, config.params
    n, steps = graph.n_sites, config.n_sweeps
    state = init_state(config) if state is None else state.copy()
    H = params.schedule.as_array(steps)
    E = np.empty(steps + 1)
    M = np.empty(steps + 1)
    UP = np.empty(steps + 1)
    DN = np.empty(steps + 1)
    trace = np.empty((steps + 1, n)) if record_spins else None
    if record_spins:
        trace[0] = state.spins
    E[0], M[0], UP[0], DN[0] = _observe(
        state.spins, _neighbor_sums(state.spins, graph.indptr, graph.indices),
        float(params.J), float(params.a), float(H[0]),
    )
    rng = SweepRNG.from_seed(config.seed)
    block = _block_size(n, steps)
    t = 1
    while t <= steps:
        k = min(block, steps + 1 - t)
        sl = slice(t, t + k)
        _advance(
            state, graph, params, H[sl], rng, config.update_mode, (E[sl], M[sl], UP[sl], DN[sl]),
            trace[sl] if record_spins else _NO_TRACE,
        )
        t += k
    state.t = steps
    state.n_up, state.n_dn = count_sides(state.spins)
    P = params.a * (UP - DN) + params.A
    R = np.full(steps + 1, np.nan)
    prev = P[:-1]
    ok = prev != 0
    R[1:][ok] = (P[1:][ok] - prev[ok]) / prev[ok]
    return TimeSeries(
        t=np.arange(steps + 1), E=E, M=M, n_up=UP, n_dn=DN, P=P, R=R, H=H,
        n_sites=n, final_state=state, spins=trace,
    )
