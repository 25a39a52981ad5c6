"""Registry of the acceptance checks, grouped into suites for ``spectraforge verify``."""
from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .augment import FilterSpec, eigenspace_filter_view
from .graph import (
    attach,
    gaussian_block_features,
    generate_sbm,
    normalized_adjacency,
    normalized_laplacian,
    scope_mask,
)
from .lab import (
    TrainConfig,
    encoder_view,
    evaluate_embeddings,
    fixed_views,
    invariance_bound_check,
    planetoid_split,
    polynomial_proximity,
    train_contrastive,
)
from .spco import (
    SpcoConfig,
    band_means,
    iterate_spco,
    kernel_exponent,
    marginals,
    m_matrix,
    run_spco,
    spectral_gap_report,
    theorem4_feasibility,
)
from .spectral import (
    decompose,
    degree_shift_terms,
    eigenspace,
    estimate_eigenvalue_shifts,
)
from .transport import sinkhorn_scale, theorem5_bound_report


@dataclass(frozen=True)
class Outcome:
    cid: int
    suite: str
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"[{'pass' if self.passed else 'FAIL'}] #{self.cid:<2d} {self.suite:<9s} {self.title}: {self.detail}"


@dataclass(frozen=True)
class Criterion:
    cid: int
    suite: str
    title: str
    fn: Callable[[], tuple[bool, str]]


REGISTRY: list[Criterion] = []


def criterion(cid: int, suite: str, title: str):
    def wrap(fn):
        REGISTRY.append(Criterion(cid, suite, title, fn))
        return fn
    return wrap


# ------------------------------------------------------------- helpers


def random_graph(n: int, p: float, rng, weighted: bool = False) -> np.ndarray:
    mask = np.triu(rng.random((n, n)) < p, 1)
    w = rng.uniform(0.5, 1.5, (n, n)) if weighted else np.ones((n, n))
    A = np.where(mask, w, 0.0)
    return A + A.T


def perturbation_fixture():
    """Fixed weighted 12-node graph and a perturbation direction on its edges."""
    rng = np.random.default_rng(0)
    A = random_graph(12, 0.5, rng, weighted=True)
    E = np.triu((A > 0) * rng.uniform(-1, 1, (12, 12)), 1)
    return A, E + E.T


def stationarity_root(c_ij, f_i, g_j, m_ij, eps, steps: int = 200):
    """Bisection for a zero of the stationarity function on ``(0, 1)``, in ``t = log delta``.

    Returns the log of the root, or None when no sign change is bracketed.
    """
    s = f_i + g_j + m_ij

    def h(t):
        # stationarity(exp(t), ...) without the underflow of exp(t) for very negative t
        return s + 2.0 * c_ij ** 2 * math.exp(t) - eps * t

    # for t < s/eps the entropy term alone outweighs s, so h > 0
    lo = min(s / eps, 0.0) - 1.0
    c2 = c_ij ** 2
    cands = [0.0]
    if c2 > eps / 2.0:
        cands.append(math.log(eps / (2.0 * c2)))
    hi = next((t for t in cands if h(t) <= 0), None)
    if hi is None or h(lo) <= 0:
        return None
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


CASE_SPECS = {
    "low20_plus_high": FilterSpec("low", 0.2, "low_to_high", True),
    "high_only": FilterSpec("low", 0.0, "low_to_high", True),
    "high80": FilterSpec("high", 0.8, "low_to_high", False),
    "high20": FilterSpec("high", 0.2, "low_to_high", False),
}


def case_study(seeds=range(5), blocks=(50, 50, 50), feat_dim: int = 16, cfg: TrainConfig | None = None):
    """Mean probe accuracy per filtered view on an SBM with Gaussian block features."""
    acc = {k: [] for k in CASE_SPECS}
    for seed in seeds:
        g = generate_sbm(list(blocks), 0.2, 0.02, seed)
        x = gaussian_block_features(np.asarray(g.labels), feat_dim, sep=1.0, noise=1.0, seed=seed)
        g = attach(g, x, g.labels)
        d = decompose(normalized_laplacian(g), "laplacian")
        A = encoder_view(g.adjacency())
        split = planetoid_split(g.labels, 20, 30, 1000, seed)
        c = cfg or TrainConfig(seed=seed)
        c = TrainConfig(**{**c.__dict__, "seed": seed})
        for name, spec in CASE_SPECS.items():
            V = eigenspace_filter_view(d, spec)
            res = train_contrastive(g, fixed_views(A, V), c)
            acc[name].append(evaluate_embeddings(res.embeddings, g.labels, split, seed)["accuracy"])
    return {k: float(np.mean(v)) for k, v in acc.items()}, acc


# ------------------------------------------------------------ criteria


@criterion(1, "transport", "Sinkhorn converge-mode marginals")
def _c1():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    sweeps = 0
    for _ in range(20):
        K = rng.uniform(0.01, 1.0, (50, 50))
        a = rng.uniform(0.5, 1.5, 50)
        b = rng.uniform(0.5, 1.5, 50)
        b *= a.sum() / b.sum()
        res = sinkhorn_scale(K, a, b, mode="converge", tol=1e-8, max_iters=1000)
        worst = max(worst, res.row_residual, res.col_residual)
        sweeps = max(sweeps, res.iterations)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and sweeps <= 1000 and dt < 1.0
    return ok, f"max residual {worst:.2e}, max sweeps {sweeps}, {dt:.3f}s"


@criterion(2, "transport", "Literal mode one-step feasibility")
def _c2():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(10):
        a = rng.uniform(0.5, 2.0, 30)
        b = rng.uniform(0.5, 2.0, 30)
        b *= a.sum() / b.sum()
        K = np.outer(a, b) / b.sum()
        res = sinkhorn_scale(K, a, b, iters=1, mode="literal")
        worst = max(worst, res.row_residual, res.col_residual)
    return worst <= 1e-12, f"max residual {worst:.2e}"


@criterion(3, "spectral", "Eigen-perturbation O(s^2) convergence")
def _c3():
    A, E = perturbation_fixture()
    d = decompose(normalized_laplacian(A))
    errs = []
    for s in (1e-2, 1e-3):
        exact = np.sort(np.linalg.eigvalsh(normalized_laplacian(A + s * E))) - d.lambdas
        est = estimate_eigenvalue_shifts(d, s * E, normalization="d_normalized",
                                         degrees=A.sum(axis=1)).delta_lambdas
        errs.append(float(np.max(np.abs(est - exact))))
    ok = errs[1] <= errs[0] / 50.0
    return ok, f"err(1e-2)={errs[0]:.3e}, err(1e-3)={errs[1]:.3e}, ratio {errs[0] / errs[1]:.1f}"


@criterion(4, "spectral", "Eigenspace orthogonality and completeness")
def _c4():
    rng = np.random.default_rng(4)
    worst_inner = worst_sum = 0.0
    done = 0
    while done < 10:
        n = int(rng.integers(5, 101))
        A = random_graph(n, float(rng.uniform(0.1, 0.6)), rng, weighted=True)
        d = decompose(normalized_laplacian(A))
        if np.min(np.diff(d.lambdas)) < 1e-6:
            continue
        S = np.stack([eigenspace(d, i) for i in range(n)])
        G = np.einsum("ikl,jkl->ij", S, S)
        np.fill_diagonal(G, 0.0)
        worst_inner = max(worst_inner, float(np.max(np.abs(G))))
        worst_sum = max(worst_sum, float(np.max(np.abs(S.sum(axis=0) - np.eye(n)))))
        done += 1
    ok = worst_inner <= 1e-8 and worst_sum <= 1e-8
    return ok, f"max |<S_i,S_j>| {worst_inner:.2e}, max |sum S - I| {worst_sum:.2e}"


@criterion(5, "spectral", "Degree-shift term bound")
def _c5():
    rng = np.random.default_rng(5)
    violations = 0
    for _ in range(100):
        n = int(rng.integers(3, 40))
        A = random_graph(n, float(rng.uniform(0.1, 0.7)), rng)
        d = decompose(normalized_laplacian(A))
        flips = np.triu(rng.random((n, n)) < 0.2, 1)
        dA = np.where(flips, 1.0 - 2.0 * A, 0.0)
        dA = dA + dA.T
        terms = degree_shift_terms(d, dA.sum(axis=1))
        violations += int(np.sum(terms > n * np.abs(d.lambdas) + 1e-9))
    return violations == 0, f"{violations} violations over 100 instances"


@criterion(6, "lab", "High-order proximity diagonalization and trace identity")
def _c6():
    rng = np.random.default_rng(6)
    worst_fit = worst_trace = 0.0
    negative = 0
    for _ in range(20):
        n = int(rng.integers(4, 30))
        A = normalized_adjacency(random_graph(n, 0.4, rng), self_loops=True)
        q = int(rng.integers(0, 6))
        w = rng.normal(size=q + 1)
        M = polynomial_proximity(A, w)
        lam, U = np.linalg.eigh(A)
        theta = np.polyval(w[::-1], lam)
        # negative amplitudes fall outside the factorization the bound proof relies on; logged only
        negative += bool(np.any(theta < 0))
        worst_fit = max(worst_fit, np.linalg.norm(M - (U * theta) @ U.T) / np.linalg.norm(M))
        gam = rng.uniform(-1, 1, n)
        V = (U * gam) @ U.T
        lhs = np.trace(A @ M @ V)
        rhs = float(np.sum(lam * theta * gam))
        worst_trace = max(worst_trace, abs(lhs - rhs) / max(abs(rhs), 1e-12))
    ok = worst_fit <= 1e-8 and worst_trace <= 1e-6
    return ok, f"max relative fit residual {worst_fit:.2e}, max relative trace gap {worst_trace:.2e}, " \
                f"{negative}/20 instances with negative amplitudes"


@criterion(7, "lab", "InfoNCE bound chain")
def _c7():
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(100):
        n = int(rng.integers(1, 21))
        k = int(rng.integers(1, 9))
        scale = float(rng.uniform(0.1, 3.0))
        chk = invariance_bound_check(rng.normal(0, scale, (n, k)), rng.normal(0, scale, (n, k)))
        violations += not chk.holds
    return violations == 0, f"{violations} violations over 100 trials"


@criterion(8, "transport", "Plan-update error bound over SpCo epochs")
def _c8():
    g = generate_sbm([8, 8], 0.5, 0.1, seed=0)
    cfg = SpcoConfig(eps=0.1, marginal_mode="degree")
    a, b = marginals(g.adjacency(), cfg.marginal_mode)
    support = scope_mask(g, cfg.hops)
    violations = checked = skipped = 0
    slack = math.inf
    for st in iterate_spco(g, cfg):
        plan = st.plan
        for sign, prev, new in (("plus", plan.prev_plus, plan.delta_plus),
                                     ("minus", plan.prev_minus, plan.delta_minus)):
            log_k = kernel_exponent(st.cost, prev, cfg.eps, sign)
            m = m_matrix(st.cost, prev)
            rep = theorem5_bound_report(log_k, a, b, st.cost.c, cfg.eps, m, prev, new,
                                        support, log_kernel=True)
            violations += rep.violations
            checked += rep.checked
            skipped += rep.skipped
            slack = min(slack, rep.min_slack)
    ok = violations == 0 and checked > 0
    return ok, f"{checked} entries checked, {skipped} skipped (C_ij=0), {violations} violations, min slack {slack:.3g}"


@criterion(9, "spco", "Entry feasibility implies a stationary root")
def _c9():
    rng = np.random.default_rng(9)
    eps_choices = (1e-1, 1e-2, 1e-3, 1e-4, 1.0)
    contradictions = 0
    counts = {"condition1": 0, "condition2": 0}
    for _ in range(200):
        eps = float(rng.choice(eps_choices))
        c = float(np.sqrt(10.0 ** rng.uniform(-5, 3)))
        f, gg, m = rng.uniform(-6, 1, 3)
        label = theorem4_feasibility(c, f, gg, m, eps)
        if label == "infeasible":
            continue
        counts[label] += 1
        t = stationarity_root(c, f, gg, m, eps)
        if t is None or not t < 0:
            contradictions += 1
    return contradictions == 0, f"{counts['condition1']} condition1, {counts['condition2']} condition2, {contradictions} without a root"


@criterion(10, "spco", "SpCo output differs more at high frequencies")
def _c10():
    rows = []
    ok = True
    for seed in (1, 2, 3):
        g = generate_sbm([50, 50], 0.1, 0.01, seed=seed)
        view, _, _ = run_spco(g, SpcoConfig(total_epochs=10, seed=seed))
        curve, _, diffs = spectral_gap_report(g.adjacency(), view)
        low, high = band_means(curve, diffs)
        ok &= high > low
        rows.append(f"seed {seed}: high {high:.3g} vs low {low:.3g}")
    return bool(ok), "; ".join(rows)


@criterion(11, "lab", "Case-study accuracy trend")
def _c11():
    t0 = time.perf_counter()
    means, _ = case_study()
    dt = time.perf_counter() - t0
    a = means["low20_plus_high"] > means["high_only"]
    b = means["high80"] > means["high20"]
    detail = ", ".join(f"{k} {v:.3f}" for k, v in means.items()) + f", {dt:.1f}s"
    return bool(a and b and dt < 300), detail


@criterion(12, "cli", "Byte-identical reruns of spco and train")
def _c12():
    from .cli import main
    from .graph import save_edge_list

    with tempfile.TemporaryDirectory() as tmp:
        g = generate_sbm([10, 10], 0.5, 0.1, seed=0)
        x = gaussian_block_features(np.asarray(g.labels), 4, seed=0)
        gpath = os.path.join(tmp, "g.edges")
        fpath = os.path.join(tmp, "x.csv")
        lpath = os.path.join(tmp, "y.csv")
        save_edge_list(g, gpath)
        np.savetxt(fpath, x, delimiter=",", fmt="%.17g")
        with open(lpath, "w") as fh:
            fh.write("node,label\n" + "".join(f"{i},{c}\n" for i, c in enumerate(g.labels)))
        out = os.path.join(tmp, "out")
        runs = {
            "spco": ["spco", "--graph", gpath, "--total-epochs", "3", "--out", out],
            "train": ["train", "--graph", gpath, "--features", fpath, "--labels", lpath,
                      "--epochs", "20", "--per-class", "5", "--out", out],
        }
        same = []
        for name, argv in runs.items():
            snaps = []
            for _ in range(2):
                code = main(argv)
                if code != 0:
                    return False, f"{name} exited with {code}"
                snaps.append({f: open(os.path.join(out, f), "rb").read() for f in sorted(os.listdir(out))
                              if f.startswith(name)})
            same.append(snaps[0] == snaps[1] and len(snaps[0]) > 0)
        detail = ", ".join(f"{k} {'identical' if ok else 'differs'}" for k, ok in zip(runs, same))
        return all(same), detail


SUITES = ("transport", "spectral", "lab", "spco", "cli")


def run_criteria(suite: str | None = None, ids=None) -> list[Outcome]:
    out = []
    for c in sorted(REGISTRY, key=lambda c: c.cid):
        if suite not in (None, "all") and c.suite != suite:
            continue
        if ids is not None and c.cid not in ids:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = c.fn()
        except Exception as exc:  # a crash is a failed criterion, reported as such
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(Outcome(c.cid, c.suite, c.title, bool(ok), detail, time.perf_counter() - t0))
    return out
