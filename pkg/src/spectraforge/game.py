"""GAME-rule check: do two views differ more at high frequencies than at low ones?"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .report import to_plain
from .spectral import SpectrumCurve

EDGE_TOL = 1e-12


@dataclass(frozen=True)
class GameReport:
    low_band_diffs: np.ndarray
    high_band_diffs: np.ndarray
    strict_pass: bool
    fraction_pass: float
    margin: float

    def to_json(self) -> dict:
        return {k: to_plain(getattr(self, k)) for k in
                ("strict_pass", "fraction_pass", "margin", "low_band_diffs", "high_band_diffs")}


def band_masks(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bins entirely inside ``[0, 1]`` and entirely inside ``[1, 2]``.

    A bin with 1 strictly inside it belongs to neither band.
    """
    lo, hi = edges[:-1], edges[1:]
    low = hi <= 1.0 + EDGE_TOL
    high = lo >= 1.0 - EDGE_TOL
    return low, high


def game_margin(c1: SpectrumCurve, c2: SpectrumCurve) -> GameReport:
    if c1.band_edges.shape != c2.band_edges.shape or not np.allclose(c1.band_edges, c2.band_edges,
                                                                     rtol=0, atol=EDGE_TOL):
        raise ValueError("spectrum curves use different binning")
    low, high = band_masks(c1.band_edges)
    occupied = (c1.counts > 0) & (c2.counts > 0)
    diff = np.abs(c1.amplitudes - c2.amplitudes)
    low_d = diff[low & occupied]
    high_d = diff[high & occupied]
    if low_d.size == 0 and high_d.size == 0:
        raise ValueError("both frequency bands are empty")
    if low_d.size == 0 or high_d.size == 0:
        raise ValueError("one frequency band has no occupied bins; the rule is undefined")
    margin = float(high_d.min() - low_d.max())
    fraction = float(np.mean(high_d[:, None] > low_d[None, :]))
    return GameReport(low_d, high_d, margin > 0, fraction, margin)
