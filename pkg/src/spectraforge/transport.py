"""Sinkhorn matrix scaling and its Hilbert-metric convergence diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

LOG_DOMAIN_THRESHOLD = 500.0


@dataclass(frozen=True)
class SinkhornResult:
    """Output of a scaling run.

    ``u`` and ``v`` may over/underflow when the run went through the log domain;
    ``log_u`` and ``log_v`` are always finite and exact.
    """

    scaled: np.ndarray
    u: np.ndarray
    v: np.ndarray
    iterations: int
    row_residual: float
    col_residual: float
    log_u: np.ndarray
    log_v: np.ndarray


def _check_marginals(a, b, n):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (n,) or b.shape != (n,):
        raise ValueError(f"marginals must be length-{n} vectors")
    if np.any(a <= 0) or np.any(b <= 0) or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("marginals must be strictly positive and finite")
    if abs(a.sum() - b.sum()) > 1e-6 * max(a.sum(), b.sum()):
        raise ValueError(f"inconsistent marginal masses {a.sum():.6g} vs {b.sum():.6g}")
    return a, b


def _residuals(P, a, b):
    return float(np.max(np.abs(P.sum(axis=1) - a))), float(np.max(np.abs(P.sum(axis=0) - b)))


def sinkhorn_scale(k, a, b, iters: int = 3, mode: str = "literal", tol: float = 1e-8,
                   max_iters: int = 1000) -> SinkhornResult:
    """Scale ``k`` to ``diag(u) k diag(v)`` with row sums ``a`` and column sums ``b``.

    ``literal`` runs exactly ``iters`` sweeps of
    ``u <- 1 ./ (diag(1/a) k (b ./ k^T u))`` starting from ``u = 1/N`` and then sets
    ``v = b ./ k^T u``. ``converge`` keeps sweeping until the row residual is at most
    ``tol`` or ``max_iters`` sweeps have run.
    """
    k = np.asarray(k, dtype=float)
    n = _check_kernel(k, log_kernel=False)
    a, b = _check_marginals(a, b, n)
    if iters < 1:
        raise ValueError("iters must be at least 1")
    if mode not in ("literal", "converge"):
        raise ValueError(f"unknown mode {mode!r}")
    limit = iters if mode == "literal" else max_iters

    u = np.full(n, 1.0 / n)
    K_bar = k / a[:, None]
    it = 0
    while it < limit:
        it += 1
        with np.errstate(all="ignore"):
            u = 1.0 / (K_bar @ (b / (k.T @ u)))
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise FloatingPointError(f"non-finite scaling vector at iteration {it}")
        if mode == "converge":
            v = b / (k.T @ u)
            P = u[:, None] * k * v[None, :]
            if _residuals(P, a, b)[0] <= tol:
                break
    v = b / (k.T @ u)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError(f"non-finite column scaling after iteration {it}")
    P = u[:, None] * k * v[None, :]
    row_res, col_res = _residuals(P, a, b)
    return SinkhornResult(P, u, v, it, row_res, col_res, np.log(u), np.log(v))


def sinkhorn_scale_log(log_k, a, b, iters: int = 3, mode: str = "literal", tol: float = 1e-8,
                       max_iters: int = 1000) -> SinkhornResult:
    """Same iteration as :func:`sinkhorn_scale` carried out on ``log k``.

    Entries equal to ``-inf`` are masked kernel zeros and stay exact zeros.
    """
    log_k = np.asarray(log_k, dtype=float)
    n = _check_kernel(log_k, log_kernel=True)
    a, b = _check_marginals(a, b, n)
    if iters < 1:
        raise ValueError("iters must be at least 1")
    if mode not in ("literal", "converge"):
        raise ValueError(f"unknown mode {mode!r}")
    limit = iters if mode == "literal" else max_iters
    la, lb = np.log(a), np.log(b)

    def col_update(lu):
        return lb - logsumexp(log_k + lu[:, None], axis=0)

    lu = np.full(n, -np.log(n))
    it = 0
    while it < limit:
        it += 1
        lt = col_update(lu)
        lu = la - logsumexp(log_k + lt[None, :], axis=1)
        if not np.all(np.isfinite(lu)):
            raise FloatingPointError(f"non-finite log scaling at iteration {it}")
        if mode == "converge":
            lv = col_update(lu)
            P = np.exp(lu[:, None] + log_k + lv[None, :])
            if _residuals(P, a, b)[0] <= tol:
                break
    lv = col_update(lu)
    P = np.exp(lu[:, None] + log_k + lv[None, :])
    row_res, col_res = _residuals(P, a, b)
    with np.errstate(over="ignore", under="ignore"):
        u, v = np.exp(lu), np.exp(lv)
    return SinkhornResult(P, u, v, it, row_res, col_res, lu, lv)


def _check_kernel(k: np.ndarray, log_kernel: bool) -> int:
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel must be square, got shape {k.shape}")
    if log_kernel:
        if np.any(np.isnan(k)) or np.any(k == np.inf):
            raise ValueError("log-kernel has NaN or +inf entries")
        pos = k > -np.inf
    else:
        if not np.all(np.isfinite(k)):
            raise ValueError("kernel has non-finite entries")
        if np.any(k < 0):
            raise ValueError("kernel has negative entries")
        pos = k > 0
    if not pos.any(axis=1).all():
        raise ValueError(f"kernel row {int(np.argmin(pos.any(axis=1)))} is all zero")
    if not pos.any(axis=0).all():
        raise ValueError(f"kernel column {int(np.argmin(pos.any(axis=0)))} is all zero")
    return k.shape[0]


# ----------------------------------------------------------- Hilbert metric


def hilbert_metric(x, y) -> float:
    """``log max_{i,k} x_i y_k / (y_i x_k)`` on the positive cone."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("vectors must have equal length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("Hilbert metric needs strictly positive vectors")
    return log_hilbert_metric(np.log(x), np.log(y))


def log_hilbert_metric(log_x, log_y) -> float:
    r = np.asarray(log_x) - np.asarray(log_y)
    return float(r.max() - r.min())


def projective_diameter(log_k) -> float:
    """``log max_{i,j,k,l} K_ik K_jl / (K_jk K_il)`` from log entries.

    For each row pair the inner max over ``(k, l)`` is ``max_k r - min_l r`` with
    ``r = log K_i. - log K_j.``, which gives the quartic closed form in cubic time.
    """
    L = np.asarray(log_k, dtype=float)
    best = 0.0
    for i in range(L.shape[0]):
        R = L[i][None, :] - L
        best = max(best, float(np.max(R.max(axis=1) - R.min(axis=1))))
    return best


def _positive_log_kernel(k, log_kernel: bool) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if log_kernel:
        if not np.all(np.isfinite(k)):
            raise ValueError("contraction ratio needs a strictly positive kernel")
        return k
    if np.any(k <= 0) or not np.all(np.isfinite(k)):
        raise ValueError("contraction ratio needs a strictly positive kernel")
    return np.log(k)


def birkhoff_contraction(k, log_kernel: bool = False) -> float:
    """Contraction ratio ``(sqrt(N) - 1) / (sqrt(N) + 1)`` with ``N = exp(diameter)``."""
    return float(np.tanh(projective_diameter(_positive_log_kernel(k, log_kernel)) / 4.0))


def log_contraction_gap(k, log_kernel: bool = False) -> float:
    """``log(1 - kappa(K))`` without cancellation; stays finite when kappa rounds to 1."""
    x = projective_diameter(_positive_log_kernel(k, log_kernel)) / 4.0
    return float(np.log(2.0) - np.logaddexp(0.0, 2.0 * x))


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    alpha_grid: np.ndarray
    gamma: float
    hilbert_r: float
    hilbert_c: float
    log_one_minus_gamma: float
    lhs_entries: np.ndarray
    rhs_entries: np.ndarray
    checked: int
    skipped: int
    violations: int
    min_slack: float

    @property
    def holds(self) -> bool:
        return self.violations == 0


def theorem5_bound_report(k, a, b, c, eps: float, m, delta_prev, delta_new, support,
                          log_kernel: bool = False) -> BoundReport:
    """Evaluate the per-entry bound on ``|alpha Delta_ij - Delta'_ij|`` after scaling.

    ``alpha_ij = eps / (2 C_ij^2)``. Entries of ``support`` with ``C_ij = 0`` have no
    finite alpha and are skipped (and counted). ``alpha_grid`` holds NaN there.

    ``1 - gamma`` is taken from :func:`log_contraction_gap`, so steep kernels whose
    ratio rounds to 1.0 still give a finite (if enormous) right-hand side.
    """
    c = np.asarray(c, dtype=float)
    S = support.S if hasattr(support, "S") else np.asarray(support)
    L = np.asarray(k, dtype=float) if log_kernel else np.log(np.asarray(k, dtype=float))
    gamma = birkhoff_contraction(L, log_kernel=True)
    log_gap = log_contraction_gap(L, log_kernel=True)
    la, lb = np.log(np.asarray(a, dtype=float)), np.log(np.asarray(b, dtype=float))
    d_r = log_hilbert_metric(logsumexp(L, axis=1), la)
    d_c = log_hilbert_metric(logsumexp(L, axis=0), lb)

    on = S > 0
    usable = on & (c != 0)
    skipped = int(np.sum(on & (c == 0)))
    alpha = np.full(c.shape, np.nan)
    alpha[usable] = eps / (2.0 * c[usable] ** 2)
    A = alpha[usable]
    lhs = np.abs(A * np.asarray(delta_new)[usable] - np.asarray(delta_prev)[usable])
    with np.errstate(over="ignore"):
        scale = np.exp(np.log(A) - 2.0 * np.log(eps) - log_gap)
        rhs = scale * (d_r + d_c) + A * (1.0 + np.abs(np.asarray(m)[usable]) / eps)
    slack = rhs - lhs
    return BoundReport(
        lhs=float(lhs.max()) if lhs.size else 0.0,
        rhs=float(rhs.min()) if rhs.size else float("inf"),
        alpha_grid=alpha, gamma=gamma, hilbert_r=d_r, hilbert_c=d_c, log_one_minus_gamma=log_gap,
        lhs_entries=lhs, rhs_entries=rhs, checked=int(lhs.size), skipped=skipped,
        violations=int(np.sum(slack < 0)),
        min_slack=float(slack.min()) if slack.size else float("inf"),
    )
