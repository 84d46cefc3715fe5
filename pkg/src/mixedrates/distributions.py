"""Deterministic, stream-splittable sampling for the simulation experiments.

Every sampler is a pure function of its parameters and a :class:`SeedStream`.
Streams are realized with the counter-based Philox generator keyed by
``(master_seed, stream_index)``, so replicate ``r`` of experiment ``e`` can be
regenerated bit-for-bit regardless of scheduling order, and distinct streams
are statistically independent.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SeedStream",
    "derive_stream_index",
    "BrownianPath",
    "CovMatrix",
    "IndefiniteCovarianceError",
    "sample_laplace",
    "sample_two_line",
    "sample_gaussian_vector",
    "sample_brownian_path",
]

_MASK64 = (1 << 64) - 1


def derive_stream_index(*parts) -> int:
    """Map an arbitrary tuple (experiment label, n, replicate, role, ...) to a
    64-bit stream index through a stable cryptographic hash.

    Unlike built-in ``hash``, the result does not depend on the interpreter
    session, so seeds recorded in a manifest stay reproducible.
    """
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeedStream:
    """Identifier of one independent random stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {type(v).__name__}")

    def generator(self) -> np.random.Generator:
        """Fresh generator for this stream; calling twice replays the stream."""
        key = [self.master_seed & _MASK64, self.stream_index & _MASK64]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *parts) -> "SeedStream":
        """Derived stream for a sub-task, mixing the parent index in."""
        return SeedStream(self.master_seed, derive_stream_index(self.stream_index, *parts))


def sample_laplace(n: int, stream: SeedStream) -> np.ndarray:
    """``n`` i.i.d. draws with density exp(-|y|)/2 (mean 0, variance 2).

    Sampled as sign times a unit exponential, both by inverse CDF, which is
    exact and reproducible across platforms up to float rounding.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = stream.generator()
    signs = gen.integers(0, 2, size=n) * 2 - 1
    magnitudes = gen.standard_exponential(size=n, method="inv")
    return signs * magnitudes


def sample_two_line(n: int, stream: SeedStream) -> np.ndarray:
    """``n`` points (x, y) with x = +/-1 equiprobable and, independently,
    y standard double exponential: the planar law concentrated on two parallel
    lines whose two optimal 2-means configurations tie exactly.

    Returns an (n, 2) array.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = stream.generator()
    x = (gen.integers(0, 2, size=n) * 2 - 1).astype(np.float64)
    signs = gen.integers(0, 2, size=n) * 2 - 1
    y = signs * gen.standard_exponential(size=n, method="inv")
    return np.column_stack([x, y])


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric positive-semidefinite covariance matrix."""

    dimension: int
    entries: np.ndarray

    def __init__(self, entries):
        m = np.asarray(entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "dimension", m.shape[0])
        object.__setattr__(self, "entries", m)


class IndefiniteCovarianceError(ValueError):
    """Square-root factorization failed: the matrix has a negative eigenvalue."""


def _sqrt_factor(cov: CovMatrix) -> np.ndarray:
    """Symmetric square root via eigendecomposition; rejects indefinite input."""
    w, q = np.linalg.eigh(cov.entries)
    scale = max(abs(w[-1]), 1.0)
    if w[0] < -1e-10 * scale:
        raise IndefiniteCovarianceError(
            f"smallest eigenvalue {w[0]:.3e} is negative; matrix is not PSD"
        )
    w = np.clip(w, 0.0, None)
    return (q * np.sqrt(w)) @ q.T


def sample_gaussian_vector(
    cov: CovMatrix, stream: SeedStream, draws: int | None = None
) -> np.ndarray:
    """Draw from N(0, cov) through the symmetric square root of ``cov``.

    Returns a vector of length d, or a (draws, d) matrix when ``draws`` is
    given.
    """
    root = _sqrt_factor(cov)
    gen = stream.generator()
    if draws is None:
        return root @ gen.standard_normal(cov.dimension)
    z = gen.standard_normal((draws, cov.dimension))
    return z @ root.T


@dataclass(frozen=True)
class BrownianPath:
    """Two-sided Brownian motion on the closed grid {-T, -T+h, ..., T}.

    ``values[i]`` is B(times[i]); B(0) = 0 exactly, and the two sides of the
    origin are built from independent N(0, h) increments.
    """

    horizon: float
    step: float
    times: np.ndarray
    values: np.ndarray

    @property
    def origin_index(self) -> int:
        return (len(self.values) - 1) // 2

    def value_at(self, t: float) -> float:
        i = int(round((t + self.horizon) / self.step))
        if not (0 <= i < len(self.values)) or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t} is not a grid point")
        return float(self.values[i])


def _validate_grid(T: float, h: float) -> int:
    if not T > 0:
        raise ValueError("horizon T must be positive")
    if not 0 < h <= T:
        raise ValueError("step h must satisfy 0 < h <= T")
    steps = T / h
    n = round(steps)
    if n < 1 or abs(steps - n) > 1e-8 * max(1.0, steps):
        raise ValueError(f"T/h = {steps} is not integral")
    return int(n)


def _two_sided_values(gen: np.random.Generator, paths: int, n: int, h: float) -> np.ndarray:
    """(paths, 2n+1) matrix of B on the grid; column n is the pinned origin.

    Increment draw order is fixed (positive side first, then negative) so a
    given stream always reproduces the same paths.
    """
    sd = np.sqrt(h)
    pos = np.cumsum(gen.standard_normal((paths, n)) * sd, axis=1)
    neg = np.cumsum(gen.standard_normal((paths, n)) * sd, axis=1)
    out = np.empty((paths, 2 * n + 1), dtype=np.float64)
    out[:, n] = 0.0
    out[:, n + 1 :] = pos
    out[:, :n] = neg[:, ::-1]
    return out


def sample_brownian_path(T: float, h: float, stream: SeedStream) -> BrownianPath:
    """One two-sided Brownian path as cumulative sums of N(0, h) increments
    outward from the pinned origin."""
    n = _validate_grid(T, h)
    gen = stream.generator()
    values = _two_sided_values(gen, 1, n, h)[0]
    times = (np.arange(2 * n + 1) - n) * h
    return BrownianPath(horizon=T, step=h, times=times, values=values)
