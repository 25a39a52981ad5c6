"""Minimal contrastive-learning lab: one-layer GCN encoder, InfoNCE, linear probe, bound checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.special import log_softmax, logsumexp, softmax

from .graph import Graph, normalized_adjacency


@dataclass(frozen=True)
class Embeddings:
    h: np.ndarray
    view_tag: str = ""


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 8
    lr: float = 0.001
    tau: float = 0.5
    epochs: int = 300
    weight_decay: float = 0.0
    linear_encoder: bool = False
    similarity: str = "cosine"
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.epochs < 0:
            raise ValueError("dim must be positive and epochs nonnegative")
        if self.tau <= 0 or self.lr <= 0:
            raise ValueError("tau and lr must be positive")
        if self.similarity not in ("dot", "cosine"):
            raise ValueError(f"unknown similarity {self.similarity!r}")


def encoder_view(adj) -> np.ndarray:
    """GCN propagation matrix for an adjacency-like view (self loops, symmetric norm)."""
    return normalized_adjacency(adj, self_loops=True)


def init_weights(d: int, k: int, seed: int) -> np.ndarray:
    s = math.sqrt(6.0 / (d + k))
    return np.random.default_rng(seed).uniform(-s, s, size=(d, k))


def gcn_encode(adj_view, x, w, linear: bool = False, view_tag: str = "") -> Embeddings:
    """``act(adj_view @ x @ w)`` with ``act = tanh`` unless ``linear``."""
    adj_view = np.asarray(adj_view, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if adj_view.shape[1] != x.shape[0] or x.shape[1] != w.shape[0]:
        raise ValueError(f"cannot encode: view {adj_view.shape}, features {x.shape}, weights {w.shape}")
    with np.errstate(invalid="ignore", over="ignore"):
        h = adj_view @ x @ w
        if not linear:
            h = np.tanh(h)
    if not np.all(np.isfinite(h)):
        raise FloatingPointError("encoder produced non-finite embeddings")
    return Embeddings(h, view_tag)


def _rows(h):
    return h.h if isinstance(h, Embeddings) else np.asarray(h, dtype=float)


def _normalize_rows(h):
    norms = np.linalg.norm(h, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cosine similarity undefined for a zero embedding row")
    return h / norms, norms


def infonce(h1, h2, tau: float = 0.5, similarity: str = "cosine") -> float:
    """Symmetric InfoNCE log-likelihood; every term is a log-probability, so the value is <= 0."""
    return infonce_and_grad(h1, h2, tau, similarity)[0]


def infonce_and_grad(h1, h2, tau: float = 0.5, similarity: str = "cosine"):
    """Value of the symmetric InfoNCE objective and its gradients w.r.t. both embedding matrices.

    With ``S_ik = sim(h1_i, h2_k) / tau``, the objective is
    ``sum_i 1/2 (S_ii - lse_k S_ik) + 1/2 (S_ii - lse_k S_ki)``.
    """
    a, b = _rows(h1), _rows(h2)
    if a.shape != b.shape:
        raise ValueError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if similarity == "cosine":
        za, na = _normalize_rows(a)
        zb, nb = _normalize_rows(b)
    elif similarity == "dot":
        za, zb = a, b
    else:
        raise ValueError(f"unknown similarity {similarity!r}")
    S = za @ zb.T / tau
    diag = np.trace(S)
    value = diag - 0.5 * (logsumexp(S, axis=1).sum() + logsumexp(S, axis=0).sum())
    G = np.eye(len(S)) - 0.5 * (softmax(S, axis=1) + softmax(S, axis=0))
    ga = G @ zb / tau
    gb = G.T @ za / tau
    if similarity == "cosine":
        ga = (ga - za * np.sum(ga * za, axis=1, keepdims=True)) / na
        gb = (gb - zb * np.sum(gb * zb, axis=1, keepdims=True)) / nb
    return float(value), ga, gb


def directional_infonce_terms(ha, hv) -> np.ndarray:
    """``L(h_i^A, h_i^V)`` per node for dot similarity and unit temperature."""
    S = _rows(ha) @ _rows(hv).T
    return np.diag(log_softmax(S, axis=1))


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool


def invariance_bound_check(hA, hV) -> BoundCheck:
    """Compare ``sum_i L(h_i^A, h_i^V)`` with ``tr(H_A H_V^T) - sum(H_A H_V^T) / N``."""
    a, v = _rows(hA), _rows(hV)
    if a.shape != v.shape:
        raise ValueError("embedding shapes differ")
    lhs = float(directional_infonce_terms(a, v).sum())
    P = a @ v.T
    rhs = float(np.trace(P) - P.sum() / len(P))
    return BoundCheck(lhs, rhs, lhs <= rhs + 1e-9)


def polynomial_proximity(adj_view, weights) -> np.ndarray:
    """``w_0 I + w_1 A + ... + w_q A^q``."""
    if len(weights) == 0:
        raise ValueError("need at least one weight")
    A = np.asarray(adj_view, dtype=float)
    M = np.zeros_like(A)
    P = np.eye(len(A))
    for w in weights:
        M = M + w * P
        P = P @ A
    return M


def fit_proximity_weights(adj_view, M, q: int):
    """Least-squares polynomial ``p`` of degree ``q`` with ``M ~ U p(Lambda) U^T``.

    Returns ``(weights, theta, relative_residual)`` where ``theta_i = p(lambda_i)``.
    """
    lam, U = np.linalg.eigh(np.asarray(adj_view, dtype=float))
    target = np.einsum("ki,kl,li->i", U, np.asarray(M, dtype=float), U)
    V = np.vander(lam, q + 1, increasing=True)
    w, *_ = np.linalg.lstsq(V, target, rcond=None)
    theta = V @ w
    approx = (U * theta) @ U.T
    rel = np.linalg.norm(M - approx) / max(np.linalg.norm(M), 1e-300)
    return w, theta, float(rel)


def contrastive_invariance_bound(lambdas, gammas, thetas) -> float:
    """``(1 + N)/2 * sum_i theta_i (2 - (lambda_i - gamma_i)^2)``."""
    lam, gam, th = (np.asarray(x, dtype=float) for x in (lambdas, gammas, thetas))
    return float((1 + len(lam)) / 2.0 * np.sum(th * (2.0 - (lam - gam) ** 2)))


# ---------------------------------------------------------------- training


@dataclass
class TrainResult:
    embeddings: Embeddings
    loss_trace: list = field(default_factory=list)
    weights: np.ndarray | None = None


ViewProvider = Callable[[int], tuple]


def fixed_views(v1, v2) -> ViewProvider:
    return lambda epoch: (v1, v2)


def train_contrastive(g: Graph, view_provider: ViewProvider, cfg: TrainConfig,
                      x: np.ndarray | None = None, anchor_view=None) -> TrainResult:
    """Gradient ascent of InfoNCE over the shared encoder weights.

    ``view_provider(epoch)`` returns the two propagation matrices for that epoch.
    ``loss_trace[e]`` is the objective at the weights used in epoch ``e``; the returned
    embeddings encode ``anchor_view`` (default: the first view of epoch 0) with the
    final weights.
    """
    x = g.features if x is None else x
    if x is None:
        raise ValueError("training needs node features")
    x = np.asarray(x, dtype=float)
    W = init_weights(x.shape[1], cfg.dim, cfg.seed)
    v1_0, _ = view_provider(0)
    anchor = np.asarray(v1_0 if anchor_view is None else anchor_view, dtype=float)
    trace = []
    for epoch in range(cfg.epochs):
        v1, v2 = view_provider(epoch)
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                P1, P2 = np.asarray(v1) @ x, np.asarray(v2) @ x
                Z1, Z2 = P1 @ W, P2 @ W
                H1 = Z1 if cfg.linear_encoder else np.tanh(Z1)
                H2 = Z2 if cfg.linear_encoder else np.tanh(Z2)
                value, g1, g2 = infonce_and_grad(H1, H2, cfg.tau, cfg.similarity)
                if not cfg.linear_encoder:
                    g1 = g1 * (1.0 - H1 ** 2)
                    g2 = g2 * (1.0 - H2 ** 2)
                grad = P1.T @ g1 + P2.T @ g2 - cfg.weight_decay * W
                W = W + cfg.lr * grad
        except FloatingPointError as exc:
            raise FloatingPointError(f"contrastive training diverged at epoch {epoch}: {exc}") from None
        if not (math.isfinite(value) and np.all(np.isfinite(W))):
            raise FloatingPointError(f"contrastive training diverged at epoch {epoch}")
        trace.append(value)
    emb = gcn_encode(anchor, x, W, cfg.linear_encoder, view_tag="A")
    return TrainResult(emb, trace, W)


# -------------------------------------------------------------- evaluation


def planetoid_split(labels, per_class: int = 20, n_val: int = 500, n_test: int = 1000,
                    seed: int = 0) -> dict:
    """Fixed-size train set per class; validation and test drawn from the remainder."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train = []
    for c in np.unique(labels[labels >= 0]):
        idx = np.flatnonzero(labels == c)
        train.extend(rng.choice(idx, size=min(per_class, len(idx)), replace=False).tolist())
    rest = np.setdiff1d(np.flatnonzero(labels >= 0), train)
    rest = rng.permutation(rest)
    n_val = min(n_val, len(rest) // 2)
    return {"train": np.sort(train), "val": np.sort(rest[:n_val]),
            "test": np.sort(rest[n_val:n_val + n_test])}


def _f1_scores(y_true, y_pred, classes):
    f1 = []
    for c in classes:
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        f1.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(f1))


def fit_logistic(Z, y, n_classes: int, steps: int = 2000, tol: float = 1e-6, lr: float = 0.5,
                 l2: float = 0.0):
    """Full-batch gradient descent on mean softmax cross-entropy."""
    W = np.zeros((Z.shape[1], n_classes))
    b = np.zeros(n_classes)
    Y = np.eye(n_classes)[y]
    prev = np.inf
    for _ in range(steps):
        logits = Z @ W + b
        logp = log_softmax(logits, axis=1)
        loss = -np.mean(np.sum(Y * logp, axis=1)) + 0.5 * l2 * np.sum(W ** 2)
        if abs(prev - loss) < tol:
            break
        prev = loss
        G = (np.exp(logp) - Y) / len(Z)
        W -= lr * (Z.T @ G + l2 * W)
        b -= lr * G.sum(axis=0)
    return W, b


def evaluate_embeddings(e, labels, splits: dict, seed: int = 0) -> dict:
    """Linear-probe accuracy and F1 on the test split.

    The probe is trained on standardized train-split embeddings; ``seed`` only
    feeds a deterministic row shuffle, so results do not depend on row order.
    """
    Z = _rows(e)
    if not np.all(np.isfinite(Z)):
        raise FloatingPointError("embeddings contain non-finite values")
    labels = np.asarray(labels)
    tr = np.asarray(splits["train"])
    te = np.asarray(splits["test"])
    for name in ("train", "test"):
        idx = np.asarray(splits[name])
        if idx.size and (idx.max() >= len(labels) or np.any(labels[idx] < 0)):
            raise ValueError(f"{name} split references nodes without labels")
    if te.size == 0:
        raise ValueError("test split is empty")
    classes = np.unique(labels[tr])
    if len(classes) < 2:
        raise ValueError("training split holds a single class")
    remap = {c: i for i, c in enumerate(classes)}
    tr = np.random.default_rng(seed).permutation(tr)
    with np.errstate(over="raise", invalid="raise"):
        mu = Z[tr].mean(axis=0)
        sd = Z[tr].std(axis=0)
    sd[sd == 0] = 1.0
    with np.errstate(over="raise", invalid="raise"):
        Zs = (Z - mu) / sd
    y_tr = np.array([remap[c] for c in labels[tr]])
    W, b = fit_logistic(Zs[tr], y_tr, len(classes))
    pred = classes[np.argmax(Zs[te] @ W + b, axis=1)]
    y_te = labels[te]
    acc = float(np.mean(pred == y_te))
    return {"accuracy": acc,
            "macro_f1": _f1_scores(y_te, pred, np.unique(np.concatenate([y_te, classes]))),
            "micro_f1": acc}


def mean_metrics(runs: Iterable[dict]) -> dict:
    runs = list(runs)
    return {k: float(np.mean([r[k] for r in runs])) for k in runs[0]}


def shared_basis_embeddings(U, lambdas, gammas, thetas):
    """Linear-encoder embeddings ``H_A = A F`` and ``H_V = V F`` with ``F F^T = U diag(theta) U^T``.

    ``A = U diag(lambdas) U^T`` and ``V = U diag(gammas) U^T``; ``thetas`` must be nonnegative.
    """
    th = np.asarray(thetas, dtype=float)
    if np.any(th < 0):
        raise ValueError("proximity amplitudes must be nonnegative to factor M")
    U = np.asarray(U, dtype=float)
    F = U * np.sqrt(th)
    A = (U * np.asarray(lambdas, dtype=float)) @ U.T
    V = (U * np.asarray(gammas, dtype=float)) @ U.T
    return A @ F, V @ F
