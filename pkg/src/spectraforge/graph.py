"""Graph container, edge-list I/O, SBM generation and the normalized operators."""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Malformed graph input (edge list, feature or label file)."""


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph on nodes ``0..n-1``.

    ``edges`` holds ``(i, j, w)`` with ``i < j``; it is canonical (sorted, no
    duplicates, no self loops), so two graphs with the same edge set compare equal.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    features: np.ndarray | None = field(default=None, compare=False, repr=False)
    labels: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n <= 0:
            raise GraphFormatError(f"node count must be positive, got {self.n}")
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n):
                raise GraphFormatError(f"edge ({i}, {j}) is not canonical for n={self.n}")
            if (i, j) in seen:
                raise GraphFormatError(f"duplicate edge ({i}, {j})")
            if not np.isfinite(w) or w < 0:
                raise GraphFormatError(f"edge ({i}, {j}) has invalid weight {w}")
            seen.add((i, j))
        if self.features is not None and len(self.features) != self.n:
            raise GraphFormatError("feature rows do not match node count")
        if self.labels is not None and len(self.labels) != self.n:
            raise GraphFormatError("label count does not match node count")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], features=None, labels=None) -> "Graph":
        """Build from loose ``(i, j[, w])`` tuples; reversed duplicates keep the first weight."""
        merged: dict[tuple[int, int], float] = {}
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if i == j:
                raise GraphFormatError(f"self loop at node {i}")
            if w < 0:
                raise GraphFormatError(f"negative weight on edge ({i}, {j})")
            key = (min(i, j), max(i, j))
            merged.setdefault(key, w)
        canon = tuple(sorted((i, j, w) for (i, j), w in merged.items()))
        return cls(n, canon, features, labels)

    @classmethod
    def from_adjacency(cls, adj: np.ndarray, features=None, labels=None, tol: float = 0.0) -> "Graph":
        """Read the upper triangle of a symmetric matrix; entries ``<= tol`` are dropped."""
        adj = np.asarray(adj, dtype=float)
        iu, ju = np.nonzero(np.triu(adj, 1) > tol)
        edges = tuple((int(i), int(j), float(adj[i, j])) for i, j in zip(iu, ju))
        return cls(adj.shape[0], edges, features, labels)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j, _ in self.edges]

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            A[i, j] = A[j, i] = w
        return A

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def is_binary(self) -> bool:
        return all(w == 1.0 for _, _, w in self.edges)

    def with_edges(self, edges: Iterable[Sequence]) -> "Graph":
        """Same nodes, features and labels; new edge set."""
        return Graph.from_edges(self.n, edges, self.features, self.labels)


# ---------------------------------------------------------------- file formats


def load_edge_list(path) -> Graph:
    """Parse ``i j [w]`` lines (0-based ids). ``#`` starts a comment; ``#n N`` fixes the node count."""
    header_n = None
    raw = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            parts = s[1:].split()
            if len(parts) == 2 and parts[0] == "n":
                try:
                    header_n = int(parts[1])
                except ValueError:
                    raise GraphFormatError(f"line {lineno}: bad node-count header {s!r}") from None
            continue
        parts = s.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"line {lineno}: expected 'i j [w]', got {s!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-numeric field in {s!r}") from None
        if i < 0 or j < 0:
            raise GraphFormatError(f"line {lineno}: negative node id")
        if i == j:
            raise GraphFormatError(f"line {lineno}: self loop at node {i}")
        if w < 0 or not np.isfinite(w):
            raise GraphFormatError(f"line {lineno}: invalid weight {parts[2]}")
        raw.append((i, j, w))
    n = max((max(i, j) for i, j, _ in raw), default=-1) + 1
    if header_n is not None:
        if header_n < n:
            raise GraphFormatError(f"header declares n={header_n} but ids reach {n - 1}")
        n = header_n
    if n == 0:
        raise GraphFormatError("empty edge list without a '#n' header")
    return Graph.from_edges(n, raw)


def format_weight(w: float) -> str:
    return "%d" % w if float(w).is_integer() else "%.12g" % w


def edge_list_text(g: Graph, header: bool = True) -> str:
    lines = [f"#n {g.n}"] if header else []
    binary = g.is_binary()
    for i, j, w in g.edges:
        lines.append(f"{i} {j}" if binary else f"{i} {j} {format_weight(w)}")
    return "\n".join(lines) + "\n"


def save_edge_list(g: Graph, path) -> None:
    Path(path).write_text(edge_list_text(g), encoding="utf-8")


def load_features(path) -> np.ndarray:
    """CSV without header, row r = features of node r."""
    X = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(X)):
        raise GraphFormatError(f"{path}: non-finite feature value")
    return X


def load_labels(path, n: int | None = None) -> np.ndarray:
    """CSV ``node,label`` with that header line. Unlisted nodes get label -1."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["node", "label"]:
        raise GraphFormatError(f"{path}: expected header 'node,label'")
    pairs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            pairs.append((int(row[0]), int(row[1])))
        except (ValueError, IndexError):
            raise GraphFormatError(f"{path}: line {lineno}: bad row {row!r}") from None
    size = n if n is not None else max(p[0] for p in pairs) + 1
    labels = np.full(size, -1, dtype=int)
    for node, lab in pairs:
        if not 0 <= node < size:
            raise GraphFormatError(f"{path}: node {node} out of range")
        labels[node] = lab
    return labels


def attach(g: Graph, features=None, labels=None) -> Graph:
    return Graph(g.n, g.edges, features if features is not None else g.features,
                 labels if labels is not None else g.labels)


# ------------------------------------------------------------------- synthetic


def generate_sbm(blocks: Sequence[int], p_in: float, p_out: float, seed: int = 0) -> Graph:
    """Stochastic block model with contiguous blocks; labels are block ids."""
    if len(blocks) == 0:
        raise ValueError("need at least one block")
    if any(b <= 0 for b in blocks):
        raise ValueError("block sizes must be positive")
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    labels = np.repeat(np.arange(len(blocks)), blocks)
    n = len(labels)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    p = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(len(iu)) < p
    edges = [(int(i), int(j), 1.0) for i, j in zip(iu[keep], ju[keep])]
    return Graph(n, tuple(edges), labels=labels)


def gaussian_block_features(labels: np.ndarray, dim: int, sep: float = 1.0, noise: float = 1.0,
                            seed: int = 0) -> np.ndarray:
    """Features drawn around one random unit-scaled center per class."""
    rng = np.random.default_rng(seed)
    k = int(labels.max()) + 1
    centers = rng.normal(size=(k, dim))
    centers *= sep / np.linalg.norm(centers, axis=1, keepdims=True)
    return centers[labels] + noise * rng.normal(size=(len(labels), dim))


# ------------------------------------------------------------ derived matrices


def _as_matrix(g) -> np.ndarray:
    return g.adjacency() if isinstance(g, Graph) else np.asarray(g, dtype=float)


def inv_sqrt_degree(deg: np.ndarray) -> np.ndarray:
    """``d^{-1/2}`` with 0 for isolated nodes."""
    out = np.zeros_like(deg, dtype=float)
    pos = deg > 0
    out[pos] = 1.0 / np.sqrt(deg[pos])
    return out


def normalized_adjacency(g, self_loops: bool = False) -> np.ndarray:
    """``D^{-1/2} A D^{-1/2}``, optionally on ``A + I``. Accepts a Graph or a dense matrix."""
    A = _as_matrix(g)
    if self_loops:
        A = A + np.eye(len(A))
    s = inv_sqrt_degree(A.sum(axis=1))
    # outer(s, s) first keeps the result exactly symmetric
    return np.outer(s, s) * A


def normalized_laplacian(g) -> np.ndarray:
    """``I - D^{-1/2} A D^{-1/2}``; isolated nodes get a 1 on the diagonal."""
    A_hat = normalized_adjacency(g, self_loops=False)
    return np.eye(len(A_hat)) - A_hat


def laplacian(g) -> np.ndarray:
    """Unnormalized ``D - A``."""
    A = _as_matrix(g)
    return np.diag(A.sum(axis=1)) - A


@dataclass(frozen=True)
class ScopeMask:
    S: np.ndarray
    hops: int


def scope_mask(g, hops: int = 1) -> ScopeMask:
    """Binary mask of node pairs within ``hops`` steps, diagonal excluded."""
    if hops not in (1, 2):
        raise ValueError(f"hops must be 1 or 2, got {hops}")
    B = (_as_matrix(g) > 0).astype(float)
    if hops == 2:
        B = B + B @ B
    S = (B > 0).astype(float)
    np.fill_diagonal(S, 0.0)
    return ScopeMask(S, hops)


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; -1 for unreachable nodes."""
    nbrs = [[] for _ in range(g.n)]
    for i, j, _ in g.edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    dist = np.full(g.n, -1)
    dist[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        for v in nbrs[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist
