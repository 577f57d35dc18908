"""Dense vector arithmetic and reproducible random sampling.

All quantities are 64-bit floats throughout: the line search has to cover
step sizes spanning many orders of magnitude, which rules out single
precision. Vectors are plain ``numpy.ndarray`` objects of dtype float64;
the helpers here add the contract checks (matching lengths, valid power
domains) that the rest of the package relies on.
"""

from __future__ import annotations

import numpy as np

Vec = np.ndarray


def as_vec(values) -> Vec:
    """Coerce to a 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def dot(u: Vec, v: Vec) -> float:
    """Inner product sum_i u_i v_i. Lengths must match."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return float(u @ v)


def elementwise_multiply(u: Vec, v: Vec) -> Vec:
    """Hadamard (componentwise) product."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return u * v


def elementwise_pow(v: Vec, q: float) -> Vec:
    """Hadamard power v_i**q.

    Fractional q requires a non-negative base; negative q requires a
    strictly positive base (callers regularize with a small epsilon
    before inverting).
    """
    v = np.asarray(v, dtype=np.float64)
    if q < 0 and np.any(v <= 0):
        raise ValueError("elementwise_pow: negative exponent needs a strictly positive base")
    if q != int(q) and np.any(v < 0):
        raise ValueError("elementwise_pow: fractional exponent needs a non-negative base")
    return np.power(v, q)


class SeededRng:
    """Deterministic random generator (PCG64) with independent sub-streams.

    The generator algorithm is pinned to numpy's PCG64 so that a (seed,
    stream) pair reproduces the identical sample sequence on the same
    build. Streams derived from one seed with different ``stream`` ids are
    statistically independent, which keeps e.g. weight initialization
    stable when the batch-sampling stream is reconfigured.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def uniform(self, lo: float, hi: float, size: int | None = None):
        return self._gen.uniform(lo, hi, size=size)

    def integers(self, n: int, size: int | None = None):
        """Uniform integers in [0, n)."""
        return self._gen.integers(0, n, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def uniform_init(rng: SeededRng, p: int, lo: float, hi: float) -> Vec:
    """p independent uniform draws in [lo, hi); consumes rng state."""
    if not lo < hi:
        raise ValueError(f"uniform_init requires lo < hi, got [{lo}, {hi}]")
    if p < 1:
        raise ValueError("uniform_init requires p >= 1")
    return rng.uniform(lo, hi, size=p)


def l2_norm(v: Vec) -> float:
    return float(np.linalg.norm(v))
