"""SpCo edge-plan learner: curriculum cost, Sinkhorn-solved add/delete plans, view combination."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .game import band_masks, game_margin
from .graph import Graph, ScopeMask, normalized_laplacian, scope_mask
from .spectral import (
    adjacency_amplitudes,
    decompose,
    estimate_eigenvalue_shifts,
    frobenius_inner,
    spectrum_curve,
)
from .transport import LOG_DOMAIN_THRESHOLD, SinkhornResult, sinkhorn_scale, sinkhorn_scale_log

MARGINAL_MODES = ("degree", "degree_normalized", "uniform")
COST_FORMS = ("laplacian", "i_plus_l", "i_plus_l_plus_l2")
# exp() overflows just above 709
KERNEL_EXP_LIMIT = 700.0
DEGREE_FLOOR = 1e-6


@dataclass(frozen=True)
class SpcoConfig:
    theta_final: float = 0.1
    total_epochs: int = 10
    update_epochs: int = 1
    eps: float = 1e-2
    eta: float = 0.5
    hops: int = 1
    iters: int = 3
    marginal_mode: str = "degree"
    cost_form: str = "laplacian"
    seed: int = 0

    def __post_init__(self):
        if self.theta_final <= 0:
            raise ValueError("theta_final must be positive")
        if self.total_epochs < 1 or self.update_epochs < 1:
            raise ValueError("epoch counts must be at least 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.hops not in (1, 2):
            raise ValueError("hops must be 1 or 2")
        if self.iters < 1:
            raise ValueError("iters must be at least 1")
        if self.marginal_mode not in MARGINAL_MODES:
            raise ValueError(f"marginal_mode must be one of {MARGINAL_MODES}")
        if self.cost_form not in COST_FORMS:
            raise ValueError(f"cost_form must be one of {COST_FORMS}")


@dataclass(frozen=True)
class CostMatrix:
    c: np.ndarray
    theta: float


@dataclass(frozen=True)
class DeltaPlan:
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    prev_plus: np.ndarray
    prev_minus: np.ndarray
    epoch: int
    theta: float
    match_plus: float
    match_minus: float
    result_plus: SinkhornResult | None = None
    result_minus: SinkhornResult | None = None

    @property
    def delta(self) -> np.ndarray:
        return self.delta_plus - self.delta_minus


def theta_schedule(t: int, total: int, theta_final: float) -> float:
    """Linear curriculum ``(t / T) * theta_final``."""
    if total <= 0:
        raise ValueError("total epochs must be positive")
    if not 0 <= t <= total:
        raise ValueError(f"epoch {t} outside [0, {total}]")
    return t / total * theta_final


def build_cost(lap, theta: float, form: str = "laplacian") -> CostMatrix:
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    lap = np.asarray(lap, dtype=float)
    if form == "laplacian":
        base = lap
    elif form == "i_plus_l":
        base = np.eye(len(lap)) + lap
    elif form == "i_plus_l_plus_l2":
        base = np.eye(len(lap)) + lap + lap @ lap
    else:
        raise ValueError(f"unknown cost form {form!r}")
    return CostMatrix(theta * base, float(theta))


def kernel_exponent(cost: CostMatrix, delta_prev, eps: float, sign: str) -> np.ndarray:
    """``+-2 <C, Delta'> C / eps`` (the log of the kernel)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if sign not in ("plus", "minus"):
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    s = 1.0 if sign == "plus" else -1.0
    return s * 2.0 * frobenius_inner(cost.c, delta_prev) * cost.c / eps


def build_kernel(cost: CostMatrix, delta_prev, eps: float, sign: str) -> np.ndarray:
    E = kernel_exponent(cost, delta_prev, eps, sign)
    if np.max(E, initial=0.0) > KERNEL_EXP_LIMIT:
        raise OverflowError("kernel exponent too large for a direct kernel; use kernel_exponent "
                            "with the log-domain scaler")
    return np.exp(E)


def marginals(g, mode: str = "degree") -> tuple[np.ndarray, np.ndarray]:
    """Row/column targets. Zero degrees are floored so every marginal stays positive."""
    A = g.adjacency() if isinstance(g, Graph) else np.asarray(g, dtype=float)
    deg = A.sum(axis=1)
    n = len(deg)
    if mode == "degree":
        a = np.maximum(deg, DEGREE_FLOOR)
    elif mode == "degree_normalized":
        a = np.maximum(deg, DEGREE_FLOOR)
        a = a * n / a.sum()
    elif mode == "uniform":
        a = np.ones(n)
    else:
        raise ValueError(f"unknown marginal mode {mode!r}")
    return a, a.copy()


def initial_plan(a, b) -> DeltaPlan:
    """Rank-one start ``a b^T / sum(b)``, which meets both marginals."""
    P = np.outer(a, b) / np.sum(b)
    return DeltaPlan(P, P.copy(), P.copy(), P.copy(), 0, 0.0, 0.0, 0.0)


def scale_kernel(log_k: np.ndarray, a, b, iters: int) -> SinkhornResult:
    if np.max(np.abs(log_k), initial=0.0) > LOG_DOMAIN_THRESHOLD:
        return sinkhorn_scale_log(log_k, a, b, iters)
    return sinkhorn_scale(np.exp(log_k), a, b, iters)


def spco_epoch(plan: DeltaPlan, cost: CostMatrix, cfg: SpcoConfig, a, b) -> DeltaPlan:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if abs(a.sum() - b.sum()) > 1e-6 * max(a.sum(), b.sum()):
        raise ValueError("marginals a and b carry different mass")
    res_p = scale_kernel(kernel_exponent(cost, plan.delta_plus, cfg.eps, "plus"), a, b, cfg.iters)
    res_m = scale_kernel(kernel_exponent(cost, plan.delta_minus, cfg.eps, "minus"), a, b, cfg.iters)
    return DeltaPlan(
        delta_plus=res_p.scaled,
        delta_minus=res_m.scaled,
        prev_plus=plan.delta_plus,
        prev_minus=plan.delta_minus,
        epoch=plan.epoch + 1,
        theta=cost.theta,
        match_plus=frobenius_inner(cost.c, res_p.scaled),
        match_minus=frobenius_inner(cost.c, res_m.scaled),
        result_plus=res_p,
        result_minus=res_m,
    )


def combine_view(g, plan: DeltaPlan, eta: float, mask: ScopeMask) -> np.ndarray:
    """``A + eta * (S * (Delta+ - Delta-))``, symmetrized and clamped at zero."""
    A = g.adjacency() if isinstance(g, Graph) else np.asarray(g, dtype=float)
    S = mask.S if isinstance(mask, ScopeMask) else np.asarray(mask, dtype=float)
    if S.shape != A.shape or plan.delta_plus.shape != A.shape:
        raise ValueError("mask, plan and graph shapes differ")
    A_ = A + eta * (S * plan.delta)
    A_ = 0.5 * (A_ + A_.T)
    return np.maximum(A_, 0.0)


# ------------------------------------------------------ objective auditing


def entropy(P) -> float:
    """``-sum P (log P - 1)`` with ``0 log 0 = 0``."""
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("entropy needs nonnegative entries")
    pos = P > 0
    return float(-np.sum(P[pos] * (np.log(P[pos]) - 1.0)))


def objective_value(delta, c, eps: float, f, g, a, b) -> float:
    """Matching term squared + entropy + the two Lagrange terms."""
    delta = np.asarray(delta, dtype=float)
    C = c.c if isinstance(c, CostMatrix) else np.asarray(c, dtype=float)
    match = frobenius_inner(C, delta)
    lagr_r = float(np.dot(f, delta.sum(axis=1) - np.asarray(a)))
    lagr_c = float(np.dot(g, delta.sum(axis=0) - np.asarray(b)))
    return match ** 2 + eps * entropy(delta) + lagr_r + lagr_c


def dual_potentials(res: SinkhornResult, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """``f = eps log u`` and ``g = eps log v``."""
    return eps * res.log_u, eps * res.log_v


def m_matrix(cost: CostMatrix, delta_prev) -> np.ndarray:
    """Remainder ``2 <C, D'> C_ij - 2 C_ij^2 D'_ij`` of the stationarity condition."""
    C = cost.c
    return 2.0 * frobenius_inner(C, delta_prev) * C - 2.0 * C ** 2 * np.asarray(delta_prev)


def stationarity(delta, c_ij, f_i, g_j, m_ij, eps):
    """``m + 2 C^2 delta - eps log delta + f + g``."""
    return m_ij + 2.0 * c_ij ** 2 * delta - eps * np.log(delta) + f_i + g_j


def theorem4_feasibility(c_ij: float, f_i: float, g_j: float, m_ij: float, eps: float) -> str:
    """Classify an entry as ``condition1``, ``condition2`` or ``infeasible``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = f_i + g_j + m_ij
    c2 = c_ij ** 2
    if s < 0 and c2 < -s / 2.0:
        return "condition1"
    if s + eps < 0 and eps / 2.0 < c2 < eps / 2.0 * np.exp(-(s + eps) / 2.0):
        return "condition2"
    return "infeasible"


# --------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class EpochState:
    plan: DeltaPlan
    cost: CostMatrix
    view: np.ndarray
    record: dict


def spectral_gap_report(A, A_, bins: int = 20, normalization: str = "paper_literal"):
    """Perturbation-estimated adjacency spectra of ``A`` and ``A_`` binned over ``[0, 2]``.

    Returns ``(curve_A, curve_A_, diffs)`` where ``diffs`` is the per-bin
    ``|phi_A - phi_A_|``.
    """
    A = np.asarray(A, dtype=float)
    d = decompose(normalized_laplacian(A))
    dA = np.asarray(A_, dtype=float) - A
    shift = estimate_eigenvalue_shifts(d, dA, normalization=normalization,
                                       degrees=A.sum(axis=1)).delta_lambdas
    phi = adjacency_amplitudes(d)
    c_a = spectrum_curve(d, phi, bins)
    c_b = spectrum_curve(d, phi - shift, bins)
    return c_a, c_b, np.abs(c_a.amplitudes - c_b.amplitudes)


def band_means(curve, diffs) -> tuple[float, float]:
    """Mean of per-bin diffs over occupied low-band and high-band bins."""
    low, high = band_masks(curve.band_edges)
    occ = curve.counts > 0
    lo = diffs[low & occ]
    hi = diffs[high & occ]
    return (float(lo.mean()) if lo.size else float("nan"),
            float(hi.mean()) if hi.size else float("nan"))


def iterate_spco(g: Graph, cfg: SpcoConfig, bins: int = 20) -> Iterator[EpochState]:
    """Run the SpCo outer loop, yielding the plan and combined view of every epoch."""
    A = g.adjacency()
    lap = normalized_laplacian(A)
    mask = scope_mask(A, cfg.hops)
    a, b = marginals(A, cfg.marginal_mode)
    plan = initial_plan(a, b)
    for t in range(1, cfg.total_epochs + 1):
        cost = build_cost(lap, theta_schedule(t, cfg.total_epochs, cfg.theta_final), cfg.cost_form)
        plan = spco_epoch(plan, cost, cfg, a, b)
        view = combine_view(A, plan, cfg.eta, mask)
        try:
            c_a, c_b, _ = spectral_gap_report(A, view, bins)
            margin = game_margin(c_a, c_b).margin
        except ValueError:
            margin = float("nan")
        record = {
            "epoch": t,
            "theta": cost.theta,
            "match_plus": plan.match_plus,
            "match_minus": plan.match_minus,
            "row_residual_plus": plan.result_plus.row_residual,
            "col_residual_plus": plan.result_plus.col_residual,
            "row_residual_minus": plan.result_minus.row_residual,
            "col_residual_minus": plan.result_minus.col_residual,
            "game_margin": margin,
            # entries above 1 leave the (0, 1) domain of the feasibility check; reported, never clamped
            "delta_plus_max": float(plan.delta_plus.max()),
            "delta_minus_max": float(plan.delta_minus.max()),
        }
        yield EpochState(plan, cost, view, record)


def run_spco(g: Graph, cfg: SpcoConfig, bins: int = 20) -> tuple[np.ndarray, list[dict], DeltaPlan]:
    """Full run; returns the final combined view, the per-epoch trace and the final plan."""
    trace, state = [], None
    for state in iterate_spco(g, cfg, bins):
        trace.append(state.record)
    return state.view, trace, state.plan
