"""Contrasted-view generators: eigenspace-filtered views and a zoo of common augmentations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, normalized_adjacency
from .spectral import SpectralDecomposition

KEEP_RATES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class FilterSpec:
    """Which eigenspaces a filtered view keeps.

    ``band`` is the band being re-filled at ``keep_rate``; with ``base_band_kept`` the
    complementary band is retained in full. ``band="both"`` applies the rate to both
    halves and ignores ``base_band_kept``.
    """

    band: str = "low"
    keep_rate: float = 0.2
    order: str = "low_to_high"
    base_band_kept: bool = True

    def __post_init__(self):
        if self.band not in ("low", "high", "both"):
            raise ValueError(f"band must be low/high/both, got {self.band!r}")
        if self.order not in ("low_to_high", "high_to_low"):
            raise ValueError(f"unknown order {self.order!r}")
        if not 0.0 <= self.keep_rate <= 1.0:
            raise ValueError(f"keep_rate must lie in [0, 1], got {self.keep_rate}")


def _take(indices: np.ndarray, rate: float, order: str) -> np.ndarray:
    count = math.floor(rate * len(indices) + 1e-9)
    if count == 0:
        return indices[:0]
    return indices[:count] if order == "low_to_high" else indices[-count:]


def kept_indices(n: int, spec: FilterSpec) -> np.ndarray:
    low = np.arange(n // 2)
    high = np.arange(n // 2, n)
    if spec.band == "both":
        parts = [_take(low, spec.keep_rate, spec.order), _take(high, spec.keep_rate, spec.order)]
    else:
        target, other = (low, high) if spec.band == "low" else (high, low)
        parts = [_take(target, spec.keep_rate, spec.order)]
        if spec.base_band_kept:
            parts.append(other)
    return np.sort(np.concatenate(parts)).astype(int)


def eigenspace_filter_view(d: SpectralDecomposition, spec: FilterSpec) -> np.ndarray:
    """Sum of unit-weight eigenspace projectors over the kept indices."""
    if d.source != "laplacian":
        raise ValueError("filtered views are built from a Laplacian decomposition")
    keep = kept_indices(d.n, spec)
    Uk = d.U[:, keep]
    return Uk @ Uk.T


# ------------------------------------------------------------ topology zoo

TOPOLOGY_MODES = ("edge_drop", "node_drop", "edge_perturb", "subgraph")


def random_topology_augment(g: Graph, mode: str, rate: float, seed: int = 0) -> Graph:
    if mode not in TOPOLOGY_MODES:
        raise ValueError(f"unknown augmentation mode {mode!r}")
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"rate must lie in [0, 1), got {rate}")
    rng = np.random.default_rng(seed)
    edges = list(g.edges)
    m = len(edges)

    if mode == "edge_drop":
        k = math.floor(rate * m)
        drop = set(rng.choice(m, size=k, replace=False).tolist()) if k else set()
        return g.with_edges(e for t, e in enumerate(edges) if t not in drop)

    if mode == "node_drop":
        k = math.floor(rate * g.n)
        dropped = set(rng.choice(g.n, size=k, replace=False).tolist()) if k else set()
        return g.with_edges(e for e in edges if e[0] not in dropped and e[1] not in dropped)

    if mode == "edge_perturb":
        k = math.floor(rate * m)
        if k == 0:
            return g
        drop = set(rng.choice(m, size=k, replace=False).tolist())
        existing = {(i, j) for i, j, _ in edges}
        iu, ju = np.triu_indices(g.n, 1)
        free = [t for t, (i, j) in enumerate(zip(iu, ju)) if (int(i), int(j)) not in existing]
        if len(free) < k:
            raise ValueError("not enough non-edges to perturb at this rate")
        add = rng.choice(len(free), size=k, replace=False)
        kept = [e for t, e in enumerate(edges) if t not in drop]
        new = [(int(iu[free[t]]), int(ju[free[t]]), 1.0) for t in add]
        return g.with_edges(kept + new)

    # subgraph: grow a node set by random-walk frontier expansion
    size = math.ceil((1.0 - rate) * g.n)
    nbrs = [set() for _ in range(g.n)]
    for i, j, _ in edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    start = int(rng.integers(g.n))
    chosen = {start}
    frontier = set(nbrs[start])
    while len(chosen) < size:
        frontier -= chosen
        if frontier:
            cand = sorted(frontier)
            nxt = cand[int(rng.integers(len(cand)))]
        else:
            nxt = min(set(range(g.n)) - chosen)
        chosen.add(nxt)
        frontier |= nbrs[nxt]
    return g.with_edges(e for e in edges if e[0] in chosen and e[1] in chosen)


def diffusion_matrix(g, mode: str, param: float) -> np.ndarray:
    """PPR ``a (I - (1-a) A_loops)^{-1}`` or heat ``exp(-t (I - A_loops))``.

    ``A_loops`` is the symmetric normalization of ``A + I``.
    """
    A_loops = normalized_adjacency(g, self_loops=True)
    n = len(A_loops)
    if mode == "ppr":
        if not 0.0 < param < 1.0:
            raise ValueError(f"PPR teleport probability must lie in (0, 1), got {param}")
        M = np.eye(n) - (1.0 - param) * A_loops
        if np.linalg.cond(M) > 1e12:
            raise np.linalg.LinAlgError("PPR system is numerically singular")
        out = param * np.linalg.inv(M)
    elif mode == "heat":
        if param < 0:
            raise ValueError(f"heat time must be nonnegative, got {param}")
        lam, U = np.linalg.eigh(np.eye(n) - A_loops)
        out = (U * np.exp(-param * lam)) @ U.T
        if param == 0:
            out = np.eye(n)
    else:
        raise ValueError(f"unknown diffusion mode {mode!r}")
    out = 0.5 * (out + out.T)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("diffusion produced non-finite entries")
    return out


def matrix_power_view(g: Graph, k: int = 2) -> Graph:
    """Binary graph linking pairs joined by a walk of length two."""
    if k != 2:
        raise ValueError("only the two-hop view (k=2) is supported")
    B = (g.adjacency() > 0).astype(float)
    P = B @ B
    np.fill_diagonal(P, 0.0)
    iu, ju = np.nonzero(np.triu(P, 1) > 0)
    return g.with_edges((int(i), int(j), 1.0) for i, j in zip(iu, ju))
