"""Directional scans and event statistics along a search direction.

A scan samples (F, F') on a step-size grid; under dynamic sub-sampling
each grid point sees its own mini-batch, so the sampled restriction is
discontinuous. Two event detectors run over a scan: derivative sign
changes from negative to non-negative (the gradient-only surrogate for a
minimizer) and strict local minima of the function values (the quantity a
minimization line search would latch onto). Aggregating event locations
over many scans yields empirical probability density estimates; the
support of the sign-change histogram measures the bounded region that
contains all such points along the direction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class ScanResult:
    alphas: np.ndarray
    f_values: np.ndarray
    fp_values: np.ndarray
    snngpp_events: np.ndarray
    local_min_events: np.ndarray

    @property
    def b_eps_support(self) -> tuple[float, float] | None:
        """[min, max] step size over detected sign-change events."""
        if self.snngpp_events.size == 0:
            return None
        lo = float(self.alphas[self.snngpp_events.min()])
        hi = float(self.alphas[self.snngpp_events.max()])
        return (lo, hi)


def _sign_change_events(fp: np.ndarray) -> np.ndarray:
    """Indices i+1 where fp[i] < 0 and fp[i+1] >= 0."""
    fp = np.asarray(fp)
    hits = np.nonzero((fp[:-1] < 0) & (fp[1:] >= 0))[0] + 1
    return hits.astype(np.intp)


def _strict_min_events(f: np.ndarray) -> np.ndarray:
    """Interior indices with f[i-1] > f[i] < f[i+1]; plateaus excluded."""
    f = np.asarray(f)
    if f.size < 3:
        return np.empty(0, dtype=np.intp)
    interior = np.nonzero((f[:-2] > f[1:-1]) & (f[1:-1] < f[2:]))[0] + 1
    return interior.astype(np.intp)


def scan_line(lf, alphas) -> ScanResult:
    """Sample (F, F') at every grid point and detect both event kinds.

    The grid must be strictly increasing. Each grid point costs one
    counted evaluation; dynamic samplers therefore redraw per point.
    """
    grid = np.asarray(alphas, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty scan grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("scan grid must be strictly increasing")
    f = np.empty(grid.size)
    fp = np.empty(grid.size)
    for i, a in enumerate(grid):
        f[i], fp[i] = lf.value_and_derivative(float(a))
    return ScanResult(alphas=grid, f_values=f, fp_values=fp,
                      snngpp_events=_sign_change_events(fp),
                      local_min_events=_strict_min_events(f))


def detect_snngpp(scan: ScanResult) -> np.ndarray:
    """Negative-to-non-negative derivative sign changes in a scan."""
    return _sign_change_events(scan.fp_values)


def detect_local_min(scan: ScanResult) -> np.ndarray:
    """Strict interior local minima of the scanned function values."""
    if scan.alphas.size < 3:
        raise ValueError("local-minimum detection needs a grid of length >= 3")
    return _strict_min_events(scan.f_values)


@dataclass
class PdfEstimate:
    """Empirical event distribution over a scan grid."""

    bin_edges: np.ndarray
    probabilities: np.ndarray
    n_runs: int

    @property
    def occupied(self) -> np.ndarray:
        return np.nonzero(self.probabilities > 0)[0]

    @property
    def support(self) -> tuple[float, float] | None:
        occ = self.occupied
        if occ.size == 0:
            return None
        return (float(self.bin_edges[occ.min()]), float(self.bin_edges[occ.max()]))

    @property
    def support_width(self) -> float:
        sup = self.support
        return 0.0 if sup is None else sup[1] - sup[0]

    @property
    def occupied_fraction(self) -> float:
        return self.occupied.size / self.bin_edges.size


def estimate_pdf(event_lists, grid) -> PdfEstimate:
    """Per-bin event frequency normalized by the total event count.

    ``event_lists`` holds one index array per run, all referring to the
    same grid. With no events anywhere the estimate is empty (all-zero
    probabilities).
    """
    grid = np.asarray(grid, dtype=np.float64)
    counts = np.zeros(grid.size)
    n_runs = 0
    for events in event_lists:
        n_runs += 1
        events = np.asarray(events, dtype=np.intp)
        if events.size and (events.min() < 0 or events.max() >= grid.size):
            raise ValueError("event index outside the grid")
        np.add.at(counts, events, 1.0)
    total = counts.sum()
    probs = counts / total if total > 0 else counts
    return PdfEstimate(bin_edges=grid, probabilities=probs, n_runs=n_runs)


def write_pdf_csv(path, grid, pdf_snngpp: PdfEstimate,
                  pdf_localmin: PdfEstimate) -> None:
    """(alpha_bin, pdf_snngpp, pdf_localmin) rows, one per grid point."""
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha_bin", "pdf_snngpp", "pdf_localmin"])
        for a, ps, pm in zip(grid, pdf_snngpp.probabilities,
                             pdf_localmin.probabilities):
            writer.writerow([repr(float(a)), repr(float(ps)), repr(float(pm))])
