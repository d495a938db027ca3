"""Agent interaction networks.

The FCC lattice is stored as ``L**3`` conventional cubic cells, each holding a
four-site basis at (0,0,0), (1/2,1/2,0), (1/2,0,1/2) and (0,1/2,1/2).  Site
``index = basis + 4 * (x + L*y + L*L*z)``.

Adjacency is kept in CSR form (``indptr``, ``indices``) so regular and
irregular graphs share the same kernels.
"""
from __future__ import annotations

import csv
import itertools
from functools import cached_property
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = ["NeighborGraph", "build_fcc", "build_custom", "fcc_displacements", "site_position"]

# basis offsets in half-cell units
_FCC_BASIS = np.array([[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=np.int64)


def fcc_displacements() -> np.ndarray:
    """The 12 nearest-neighbour vectors of the FCC lattice in half-cell units.

    These are all permutations of (+-1, +-1, 0), i.e. (+-1/2, +-1/2, 0) in
    units of the cubic cell.
    """
    out = []
    for zero_axis in range(3):
        for s1, s2 in itertools.product((1, -1), repeat=2):
            d = [0, 0, 0]
            axes = [ax for ax in range(3) if ax != zero_axis]
            d[axes[0]], d[axes[1]] = s1, s2
            out.append(d)
    return np.array(out, dtype=np.int64)


@dataclass(frozen=True)
class NeighborGraph:
    """Immutable undirected graph with sorted CSR adjacency.

    Attributes
    ----------
    n_sites : int
    indptr, indices : ndarray
        Neighbours of site ``i`` are ``indices[indptr[i]:indptr[i+1]]``.
    kind : {"fcc", "custom"}
    linear_size : int or None
        ``L`` for FCC graphs.
    """

    n_sites: int
    indptr: np.ndarray
    indices: np.ndarray
    kind: str = "custom"
    linear_size: int | None = None

    def __post_init__(self) -> None:
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.indices.size // 2)

    @cached_property
    def sources(self) -> np.ndarray:
        """Row index of every entry of ``indices``."""
        return np.repeat(np.arange(self.n_sites), self.degrees)

    def neighbor_sums(self, values: np.ndarray) -> np.ndarray:
        """``sum_{j in nbrs(i)} values[j]`` for every site ``i``."""
        return np.bincount(self.sources, weights=values[self.indices], minlength=self.n_sites)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.n_sites)]

    def edges(self) -> np.ndarray:
        """Unordered edges as an ``(n_edges, 2)`` array with ``i < j``."""
        src = self.sources
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    def dense_neighbors(self) -> np.ndarray:
        """``(n_sites, z)`` neighbour table; only valid for regular graphs."""
        deg = self.degrees
        if deg.size and np.any(deg != deg[0]):
            raise ValueError("graph is not regular")
        z = int(deg[0]) if deg.size else 0
        return self.indices.reshape(self.n_sites, z)

    def to_csv(self, path: str | Path) -> None:
        """Write one ``site,neighbor`` row per directed pair."""
        src = self.sources
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["site", "neighbor"])
            w.writerows(zip(src.tolist(), self.indices.tolist()))


def _from_pairs(n_sites: int, i: np.ndarray, j: np.ndarray, kind: str, L: int | None) -> NeighborGraph:
    src = np.concatenate([i, j])
    dst = np.concatenate([j, i])
    key = np.unique(src * n_sites + dst)
    src, dst = np.divmod(key, n_sites)
    indptr = np.zeros(n_sites + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return NeighborGraph(n_sites, indptr, dst.astype(np.int64), kind=kind, linear_size=L)


def site_position(index: int | np.ndarray, L: int) -> np.ndarray:
    """Position of an FCC site in half-cell units, in ``[0, 2L)^3``."""
    index = np.asarray(index)
    basis = index % 4
    cell = index // 4
    x, y, z = cell % L, (cell // L) % L, cell // (L * L)
    return 2 * np.stack([x, y, z], axis=-1) + _FCC_BASIS[basis]


def build_fcc(L: int) -> NeighborGraph:
    """Periodic FCC lattice with ``4 * L**3`` sites, each of coordination 12.

    Raises
    ------
    ValueError
        If ``L < 2``; smaller boxes alias periodic images onto the same site.
    """
    if int(L) != L or L < 2:
        raise ValueError(f"FCC linear size must be an integer >= 2, got {L!r}")
    L = int(L)
    n = 4 * L**3
    pos = site_position(np.arange(n), L)
    nbr_pos = (pos[:, None, :] + fcc_displacements()[None, :, :]) % (2 * L)

    # invert site_position: recover cell and basis from the wrapped coordinates
    cell_xyz = nbr_pos // 2
    parity = nbr_pos % 2
    basis_lookup = {tuple(b): k for k, b in enumerate(_FCC_BASIS.tolist())}
    par_code = parity[..., 0] * 4 + parity[..., 1] * 2 + parity[..., 2]
    code_to_basis = np.full(8, -1, dtype=np.int64)
    for b, k in basis_lookup.items():
        code_to_basis[b[0] * 4 + b[1] * 2 + b[2]] = k
    basis = code_to_basis[par_code]
    if np.any(basis < 0):
        raise AssertionError("neighbour displacement left the FCC sublattice")
    nbr = basis + 4 * (cell_xyz[..., 0] + L * cell_xyz[..., 1] + L * L * cell_xyz[..., 2])

    src = np.repeat(np.arange(n), 12)
    graph = _from_pairs(n, src, nbr.ravel(), "fcc", L)
    if np.any(graph.degrees != 12):
        raise AssertionError("FCC construction produced a site without 12 neighbours")
    return graph


def build_custom(edges: Iterable[tuple[int, int]], n_sites: int) -> NeighborGraph:
    """Undirected graph from an edge list; repeated pairs collapse to one edge."""
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if arr.size:
        if arr.min() < 0 or arr.max() >= n_sites:
            raise ValueError(f"edge index out of range for n_sites={n_sites}")
        loops = arr[:, 0] == arr[:, 1]
        if loops.any():
            raise ValueError(f"self-loop at site {int(arr[loops][0, 0])}")
    return _from_pairs(n_sites, arr[:, 0], arr[:, 1], "custom", None)
