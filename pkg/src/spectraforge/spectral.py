"""Eigendecomposition, eigenspace projectors, spectrum curves and eigenvalue-shift estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import inv_sqrt_degree
from .report import tsv_text

SYM_TOL = 1e-10
SYM_REJECT = 1e-6
DEFAULT_BINS = 20


@dataclass(frozen=True)
class SpectralDecomposition:
    lambdas: np.ndarray
    U: np.ndarray
    source: str = "laplacian"

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.lambdas) @ self.U.T

    def low_band(self) -> np.ndarray:
        """Indices of the low-frequency half, ``0..floor(n/2)-1``."""
        return np.arange(self.n // 2)

    def high_band(self) -> np.ndarray:
        return np.arange(self.n // 2, self.n)


def decompose(m, source: str = "laplacian") -> SpectralDecomposition:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if source not in ("laplacian", "adjacency", "custom"):
        raise ValueError(f"unknown source tag {source!r}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYM_REJECT:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    if asym > 0:
        m = 0.5 * (m + m.T)
    lambdas, U = np.linalg.eigh(m)
    return SpectralDecomposition(lambdas, U, source)


def eigenspace(d: SpectralDecomposition, i: int) -> np.ndarray:
    """Rank-one projector ``u_i u_i^T``."""
    if not 0 <= i < d.n:
        raise IndexError(f"eigen index {i} out of range for n={d.n}")
    u = d.U[:, i]
    return np.outer(u, u)


def frobenius_inner(p, q) -> float:
    """Sum of the entries of the elementwise product."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    return float(np.sum(p * q))


def rayleigh_terms(d: SpectralDecomposition, m: np.ndarray) -> np.ndarray:
    """``u_i^T m u_i`` for every eigenvector."""
    return np.einsum("ki,kl,li->i", d.U, m, d.U)


@dataclass(frozen=True)
class EigenShift:
    delta_lambdas: np.ndarray
    normalization: str


def estimate_eigenvalue_shifts(d: SpectralDecomposition, delta_a, delta_d=None,
                               normalization: str = "paper_literal",
                               degrees=None) -> EigenShift:
    """First-order eigenvalue changes under an edge-weight change ``delta_a``.

    ``paper_literal``: ``u_i^T dA u_i - lambda_i u_i^T diag(dD) u_i`` with the
    orthonormal Laplacian eigenvectors, exactly as the perturbation rule is usually
    quoted.

    ``d_normalized``: the consistent first-order rule for the pencil
    ``A x = mu D x`` (``mu = 1 - lambda``): with ``x_i = D^{-1/2} u_i``,
    ``d_mu = (x^T dA x - mu x^T dD x) / x^T (D + dD) x`` and the returned Laplacian
    shift is ``-d_mu``. Needs ``degrees``.
    """
    if d.source != "laplacian":
        raise ValueError("eigenvalue shifts are defined for Laplacian decompositions")
    delta_a = np.asarray(delta_a, dtype=float)
    n = d.n
    if delta_a.shape != (n, n):
        raise ValueError(f"delta_a has shape {delta_a.shape}, expected {(n, n)}")
    row = delta_a.sum(axis=1)
    if delta_d is None:
        delta_d = row
    delta_d = np.asarray(delta_d, dtype=float)
    if delta_d.shape != (n,):
        raise ValueError("delta_d must be a length-n vector")
    if np.max(np.abs(delta_d - row), initial=0.0) > 1e-8:
        raise ValueError("delta_d is not the row-sum of delta_a")

    if normalization == "paper_literal":
        shift = rayleigh_terms(d, delta_a) - d.lambdas * rayleigh_terms(d, np.diag(delta_d))
    elif normalization == "d_normalized":
        if degrees is None:
            raise ValueError("d_normalized mode needs the degree vector")
        deg = np.asarray(degrees, dtype=float)
        X = inv_sqrt_degree(deg)[:, None] * d.U
        mu = 1.0 - d.lambdas
        xa = np.einsum("ki,kl,li->i", X, delta_a, X)
        xd = np.einsum("ki,k,ki->i", X, delta_d, X)
        den = np.einsum("ki,k,ki->i", X, deg + delta_d, X)
        with np.errstate(divide="ignore", invalid="ignore"):
            d_mu = np.where(den > 0, (xa - mu * xd) / np.where(den > 0, den, 1.0), 0.0)
        shift = -d_mu
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    if not np.all(np.isfinite(shift)):
        raise ValueError("non-finite eigenvalue shift")
    return EigenShift(shift, normalization)


def degree_shift_terms(d: SpectralDecomposition, delta_d) -> np.ndarray:
    """``|lambda_i u_i^T diag(dD) u_i|`` per eigenpair."""
    return np.abs(d.lambdas * rayleigh_terms(d, np.diag(np.asarray(delta_d, dtype=float))))


# ----------------------------------------------------------------- spectra


def adjacency_amplitudes(d: SpectralDecomposition) -> np.ndarray:
    """Amplitude of each frequency in ``D^{-1/2} A D^{-1/2}`` (no self loops)."""
    return 1.0 - d.lambdas


def operator_amplitudes(d: SpectralDecomposition, op) -> np.ndarray:
    """Amplitudes ``u_i^T op u_i`` of an operator in the decomposition's eigenbasis."""
    return rayleigh_terms(d, np.asarray(op, dtype=float))


@dataclass(frozen=True)
class SpectrumCurve:
    band_edges: np.ndarray
    amplitudes: np.ndarray
    counts: np.ndarray

    @property
    def bins(self) -> int:
        return len(self.amplitudes)

    def to_tsv(self) -> str:
        rows = [(self.band_edges[k], self.band_edges[k + 1], self.amplitudes[k], int(self.counts[k]))
                for k in range(self.bins)]
        return tsv_text(["lambda_lo", "lambda_hi", "amplitude", "count"], rows)


def bin_index(lambdas, bins: int) -> np.ndarray:
    """Bin of each eigenvalue on ``[0, 2]``: left-inclusive, last bin right-inclusive."""
    # search the same edges the curve reports, so lambda = 0.6 lands in [0.6, 0.7)
    edges = band_edges(bins)
    idx = np.searchsorted(edges, np.asarray(lambdas, dtype=float), side="right") - 1
    return np.clip(idx, 0, bins - 1)


def band_edges(bins: int) -> np.ndarray:
    return np.linspace(0.0, 2.0, bins + 1)


def spectrum_curve(d: SpectralDecomposition, amplitudes, bins: int = DEFAULT_BINS) -> SpectrumCurve:
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.shape != d.lambdas.shape:
        raise ValueError(f"{len(amplitudes)} amplitudes for {d.n} eigenvalues")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    idx = bin_index(d.lambdas, bins)
    counts = np.bincount(idx, minlength=bins)
    sums = np.bincount(idx, weights=amplitudes, minlength=bins)
    means = np.divide(sums, counts, out=np.zeros(bins), where=counts > 0)
    return SpectrumCurve(band_edges(bins), means, counts)
