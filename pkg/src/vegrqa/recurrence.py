"""
Recurrence matrices: thresholded pairwise distances of phase-space states,
joint (element-wise AND) matrices and plain-image rendering.

Matrices are stored bit-packed, row-major (``np.packbits`` along rows), so a
323-sample series costs about 13 KB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .embedding import PhaseTrajectory
from .errors import DimensionError, ParameterError, SizeError

NORMS = ("max", "euclidean", "manhattan")
DEFAULT_EPSILON = 0.1
DEFAULT_TARGET_RR = 0.30


@dataclass(frozen=True)
class ThresholdConfig:
    """How the recurrence threshold is chosen.

    ``fixed_epsilon`` uses ``epsilon`` directly; ``target_rr`` picks the
    smallest distance giving at least ``target_rr`` recurrence rate.
    ``theiler`` is the half-width of the band around the main diagonal that
    line statistics ignore.
    """

    mode: str = "fixed_epsilon"
    epsilon: Optional[float] = DEFAULT_EPSILON
    target_rr: Optional[float] = None
    norm: str = "max"
    theiler: int = 0

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ParameterError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.theiler < 0:
            raise ParameterError(f"theiler must be >= 0, got {self.theiler}")
        if self.mode == "fixed_epsilon":
            if self.target_rr is not None:
                raise ParameterError("target_rr is not used in fixed_epsilon mode")
            if self.epsilon is None or not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
                raise ParameterError(f"epsilon must be a finite value >= 0, got {self.epsilon}")
        elif self.mode == "target_rr":
            if self.epsilon is not None:
                raise ParameterError("epsilon is not used in target_rr mode")
            if self.target_rr is None or not (0 < self.target_rr <= 1):
                raise ParameterError(f"target_rr must lie in (0, 1], got {self.target_rr}")
        else:
            raise ParameterError(f"unknown threshold mode {self.mode!r}")

    @classmethod
    def fixed(cls, epsilon: float, norm: str = "max", theiler: int = 0) -> "ThresholdConfig":
        return cls("fixed_epsilon", epsilon, None, norm, theiler)

    @classmethod
    def rate(cls, target_rr: float = DEFAULT_TARGET_RR, norm: str = "max", theiler: int = 0) -> "ThresholdConfig":
        return cls("target_rr", None, target_rr, norm, theiler)


@dataclass(frozen=True, eq=False)
class RecurrenceMatrix:
    packed: np.ndarray
    n: int
    threshold_used: float = math.nan
    config: Optional[ThresholdConfig] = None
    kind: str = "plain"
    _count: int = field(default=-1, repr=False)

    @classmethod
    def from_bits(cls, bits, threshold_used=math.nan, config=None, kind="plain") -> "RecurrenceMatrix":
        b = np.asarray(bits)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DimensionError(f"recurrence matrix must be square, got shape {b.shape}")
        b = b.astype(bool)
        packed = np.packbits(b, axis=1)
        packed.setflags(write=False)
        return cls(packed, b.shape[0], float(threshold_used), config, kind, int(b.sum()))

    @property
    def bits(self) -> np.ndarray:
        """Unpacked boolean ``(n, n)`` view (a fresh array)."""
        return np.unpackbits(self.packed, axis=1, count=self.n).astype(bool)

    @property
    def recurrence_count(self) -> int:
        if self._count < 0:
            return int(self.bits.sum())
        return self._count

    @property
    def recurrence_rate(self) -> float:
        return self.recurrence_count / float(self.n * self.n)

    def __eq__(self, other):
        if not isinstance(other, RecurrenceMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.packed, other.packed)

    __hash__ = None

    def __len__(self):
        return self.n


def _points(traj) -> np.ndarray:
    if isinstance(traj, PhaseTrajectory):
        return traj.points
    pts = np.asarray(traj, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def distance_matrix(traj, norm: str = "max") -> np.ndarray:
    """All pairwise distances; coordinates are accumulated in index order."""
    x = _points(traj)
    if norm not in NORMS:
        raise ParameterError(f"norm must be one of {NORMS}, got {norm!r}")
    n, m = x.shape
    d = np.zeros((n, n))
    for j in range(m):
        diff = np.abs(x[:, j, None] - x[None, :, j])
        if norm == "max":
            np.maximum(d, diff, out=d)
        elif norm == "euclidean":
            # hypot keeps tiny and huge differences from under/overflowing
            np.hypot(d, diff, out=d)
        else:
            d += diff
    return d


def _quantile_epsilon(dist: np.ndarray, target_rr: float) -> float:
    flat = dist.ravel()
    # 1e-9 guards against 7/9 * 9 = 7.000000000000001
    k = max(1, int(math.ceil(target_rr * flat.size - 1e-9)))
    return float(np.partition(flat, k - 1)[k - 1])


def epsilon_for_target_rr(traj, target_rr: float, norm: str = "max") -> float:
    """Smallest pairwise distance ``d`` with ``#{D_ij <= d} / N^2 >= target_rr``.

    Diagonal (zero) distances are part of the N^2 population, matching the
    recurrence-rate definition that counts the line of identity.
    """
    if not (0 < target_rr <= 1):
        raise ParameterError(f"target_rr must lie in (0, 1], got {target_rr}")
    return _quantile_epsilon(distance_matrix(traj, norm), target_rr)


def build_matrix(traj, config: Optional[ThresholdConfig] = None) -> RecurrenceMatrix:
    """``R_ij = 1`` iff ``||x_i - x_j|| <= eps`` (ties are recurrent)."""
    config = config or ThresholdConfig()
    x = _points(traj)
    if x.shape[0] < 2:
        raise SizeError(f"trajectory needs at least 2 points, got {x.shape[0]}")
    dist = distance_matrix(x, config.norm)
    if config.mode == "target_rr":
        eps = _quantile_epsilon(dist, config.target_rr)
    else:
        eps = float(config.epsilon)
    return RecurrenceMatrix.from_bits(dist <= eps, eps, config, "plain")


def joint_matrix(a: RecurrenceMatrix, b: RecurrenceMatrix, *more: RecurrenceMatrix) -> RecurrenceMatrix:
    """Element-wise product (logical AND) of two or more recurrence matrices."""
    mats = (a, b) + more
    for other in mats[1:]:
        if other.n != a.n:
            raise DimensionError(f"cannot join matrices of size {a.n} and {other.n}")
    packed = a.packed
    for other in mats[1:]:
        packed = np.bitwise_and(packed, other.packed)
    packed = np.array(packed)
    packed.setflags(write=False)
    count = int(np.unpackbits(packed, axis=1, count=a.n).sum())
    return RecurrenceMatrix(packed, a.n, math.nan, a.config, "joint", count)


def render_plot(rm: RecurrenceMatrix, format: str = "pgm") -> bytes:
    """Render as binary PGM (P5) or ASCII art.

    Both put matrix row 0 at the bottom so time runs up and to the right.
    Recurrent entries are black (0) in PGM and ``#`` in ASCII.
    """
    img = rm.bits[::-1]
    if format == "pgm":
        pixels = np.where(img, 0, 255).astype(np.uint8)
        header = f"P5\n{rm.n} {rm.n}\n255\n".encode("ascii")
        return header + pixels.tobytes()
    if format == "ascii":
        lines = ["".join("#" if v else "." for v in row) for row in img]
        return ("\n".join(lines) + "\n").encode("ascii")
    raise ParameterError(f"unknown render format {format!r}")


def read_pgm(data: bytes) -> np.ndarray:
    """Parse a P5 image written by :func:`render_plot` back to a uint8 array."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)
