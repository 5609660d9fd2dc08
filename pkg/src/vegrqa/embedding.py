"""
Delay-coordinate embedding and the usual data-driven parameter choices:
delay from the first minimum of the histogram mutual information, dimension
from Kennel's false-nearest-neighbour fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import DegenerateInputError, ParameterError, SizeError
from .signal import TimeSeries

FNN_RTOL = 10.0
FNN_ATOL = 2.0
FNN_VANISH = 0.01


@dataclass(frozen=True)
class EmbeddingConfig:
    m: int = 3
    tau: int = 1

    def __post_init__(self):
        if self.m < 1 or self.tau < 1:
            raise ParameterError(f"embedding needs m >= 1 and tau >= 1, got m={self.m}, tau={self.tau}")

    def n_points(self, n: int) -> int:
        return n - (self.m - 1) * self.tau

    def check(self, n: int) -> None:
        if self.n_points(n) < 2:
            raise SizeError(
                f"series of length {n} too short for m={self.m}, tau={self.tau}"
            )


@dataclass(frozen=True)
class PhaseTrajectory:
    """Delay vectors as rows of ``points`` (shape ``(N', m)``)."""

    points: np.ndarray
    config: EmbeddingConfig
    source_len: int

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @classmethod
    def from_points(cls, points, source_len: Optional[int] = None) -> "PhaseTrajectory":
        """Wrap raw state vectors (e.g. a multivariate system) as a trajectory."""
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts.setflags(write=False)
        n = pts.shape[0] if source_len is None else source_len
        return cls(pts, EmbeddingConfig(pts.shape[1], 1), n)


def embed(series, config: EmbeddingConfig) -> PhaseTrajectory:
    """Point ``i`` is ``(u_i, u_{i+tau}, ..., u_{i+(m-1)tau})``."""
    u = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    n = u.size
    config.check(n)
    count = config.n_points(n)
    pts = np.empty((count, config.m))
    for j in range(config.m):
        pts[:, j] = u[j * config.tau : j * config.tau + count]
    pts.setflags(write=False)
    return PhaseTrajectory(pts, config, n)


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)


def sturges_bins(n: int) -> int:
    return int(math.ceil(math.log2(n))) + 1


def _bin_index(u: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = u.min(), u.max()
    idx = np.floor((u - lo) / (hi - lo) * bins).astype(int)
    return np.clip(idx, 0, bins - 1)


def mutual_information_curve(series, max_lag: int, bins: Optional[int] = None) -> np.ndarray:
    """Histogram mutual information (bits) between ``u_t`` and ``u_{t+k}``.

    Equal-width bins span the observed min-max range of the whole series;
    the same partition is used for both coordinates at every lag.
    """
    u = _values(series)
    n = u.size
    if bins is None:
        bins = sturges_bins(n)
    if bins < 2:
        raise ParameterError(f"bins must be >= 2, got {bins}")
    if max_lag < 0 or max_lag >= n / 2:
        raise ParameterError(f"max_lag must satisfy 0 <= max_lag < N/2 = {n / 2}")
    if u.max() == u.min():
        raise DegenerateInputError("constant series has zero entropy; delay selection undefined")
    idx = _bin_index(u, bins)
    curve = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        a, b = idx[: n - k], idx[k:]
        joint = np.bincount(a * bins + b, minlength=bins * bins).reshape(bins, bins)
        p = joint / joint.sum()
        pa, pb = p.sum(axis=1), p.sum(axis=0)
        nz = p > 0
        curve[k] = float(np.sum(p[nz] * np.log2(p[nz] / np.outer(pa, pb)[nz])))
    return curve


def first_local_minimum(curve) -> Optional[int]:
    """Index of the first strict local minimum; plateaus never qualify."""
    c = np.asarray(curve)
    for k in range(1, c.size - 1):
        if c[k - 1] > c[k] < c[k + 1]:
            return k
    return None


def select_delay(series, max_lag: int = 20, bins: Optional[int] = None) -> Tuple[int, List[float]]:
    """Delay at the first local minimum of the MI curve (``max_lag`` if none)."""
    curve = mutual_information_curve(series, max_lag, bins)
    tau = first_local_minimum(curve)
    return (max_lag if tau is None else tau), curve.tolist()


def _nearest_neighbours(points: np.ndarray, dup_tol: float, chunk: int = 512):
    """Exact Euclidean nearest neighbour of every point.

    Self-matches and exact duplicates (distance <= ``dup_tol``) are skipped;
    such pairs carry no information about unfolding.
    Returns ``(index, distance)``; index is -1 when no admissible neighbour exists.
    """
    n = points.shape[0]
    nn = np.full(n, -1)
    dist = np.full(n, np.inf)
    for start in range(0, n, chunk):
        block = points[start : start + chunk]
        d2 = np.zeros((block.shape[0], n))
        for j in range(points.shape[1]):
            d2 += (block[:, j, None] - points[None, :, j]) ** 2
        d = np.sqrt(d2)
        d[d <= dup_tol] = np.inf
        best = np.argmin(d, axis=1)
        bd = d[np.arange(block.shape[0]), best]
        ok = np.isfinite(bd)
        nn[start : start + block.shape[0]][ok] = best[ok]
        dist[start : start + block.shape[0]][ok] = bd[ok]
    return nn, dist


def fnn_fraction(
    series,
    m: int,
    tau: int,
    rtol: float = FNN_RTOL,
    atol: float = FNN_ATOL,
) -> float:
    """Fraction of nearest neighbours at dimension ``m`` that are false at ``m + 1``."""
    u = _values(series)
    n = u.size
    count = n - m * tau
    if count < 2:
        raise SizeError(f"series of length {n} too short for FNN at m={m}, tau={tau}")
    attractor = float(np.std(u))
    if attractor == 0:
        raise DegenerateInputError("constant series; false-neighbour test undefined")
    pts = np.column_stack([u[j * tau : j * tau + count] for j in range(m)])
    extra = u[m * tau : m * tau + count]
    nn, r = _nearest_neighbours(pts, dup_tol=1e-12 * attractor)
    valid = nn >= 0
    if not valid.any():
        return 0.0
    gap = np.abs(extra[valid] - extra[nn[valid]])
    rv = r[valid]
    false_ratio = gap > rtol * rv
    false_size = np.sqrt(rv**2 + gap**2) > atol * attractor
    return float(np.mean(false_ratio | false_size))


def select_dimension(
    series,
    tau: int,
    m_max: int = 10,
    rtol: float = FNN_RTOL,
    atol: float = FNN_ATOL,
) -> Tuple[int, Dict[int, float]]:
    """Smallest ``m`` whose FNN fraction drops below 1 %, else ``m_max``.

    Returns the selected dimension and the mapping ``m -> fraction`` for
    ``m = 1 .. m_max``.
    """
    if m_max < 2:
        raise ParameterError(f"m_max must be >= 2, got {m_max}")
    if tau < 1:
        raise ParameterError(f"tau must be >= 1, got {tau}")
    n = _values(series).size
    if n - m_max * tau < 2:
        raise SizeError(f"series of length {n} too short to test m up to {m_max} at tau={tau}")
    fractions = {m: fnn_fraction(series, m, tau, rtol, atol) for m in range(1, m_max + 1)}
    chosen = next((m for m, f in fractions.items() if f < FNN_VANISH), m_max)
    return chosen, fractions
