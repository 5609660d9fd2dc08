"""
Line statistics and recurrence quantification measures.

Diagonal lines exclude the main diagonal and the Theiler band around it;
vertical lines are counted over complete columns. Lines touching the border
count at their truncated length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .embedding import EmbeddingConfig, embed
from .errors import DimensionError, ParameterError, SizeError
from .recurrence import RecurrenceMatrix, ThresholdConfig, build_matrix, joint_matrix
from .signal import TimeSeries

MEASURE_NAMES = ("rr", "det", "lam", "div", "lmax")


@dataclass(frozen=True)
class LineHistograms:
    diagonal: Dict[int, int]
    vertical: Dict[int, int]

    @staticmethod
    def mass(hist: Dict[int, int], lmin: int = 1) -> int:
        return sum(l * c for l, c in hist.items() if l >= lmin)


@dataclass(frozen=True)
class RqaMeasures:
    """RR, DET, LAM, DIV and the longest diagonal line.

    ``None`` marks an undefined measure (empty line histogram or no diagonal
    line at all).
    """

    rr: float
    det: Optional[float]
    lam: Optional[float]
    div: Optional[float]
    lmax: int

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {k: getattr(self, k) for k in MEASURE_NAMES}


@dataclass(frozen=True)
class WindowedMeasures:
    window_len: int
    step: int
    entries: Tuple[Tuple[int, RqaMeasures], ...]

    def column(self, name: str) -> List[Optional[float]]:
        return [getattr(m, name) for _, m in self.entries]

    def starts(self) -> List[int]:
        return [s for s, _ in self.entries]


def _runs(rows: np.ndarray) -> np.ndarray:
    """Lengths of maximal runs of True along axis 1, over all rows."""
    if rows.size == 0:
        return np.empty(0, dtype=np.int64)
    r, c = rows.shape
    padded = np.zeros((r, c + 2), dtype=np.int8)
    padded[:, 1:-1] = rows
    d = np.diff(padded.ravel())
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return ends - starts


def _diagonals(bits: np.ndarray) -> np.ndarray:
    """Row ``k`` holds diagonal ``k`` (``bits[i, i + k]``), zero-padded to length n."""
    n = bits.shape[0]
    padded = np.zeros((n, 2 * n), dtype=bool)
    padded[:, :n] = bits
    s = padded.strides[1]
    view = as_strided(padded, shape=(n, n), strides=(s, (2 * n + 1) * s), writeable=False)
    return np.array(view)


def _histogram(lengths: np.ndarray) -> Dict[int, int]:
    if lengths.size == 0:
        return {}
    counts = np.bincount(lengths)
    return {int(l): int(c) for l, c in enumerate(counts) if c > 0}


def diagonal_lengths(bits: np.ndarray, theiler: int = 0) -> np.ndarray:
    upper = _diagonals(bits)[theiler + 1 :]
    lower = _diagonals(bits.T)[theiler + 1 :]
    return np.concatenate([_runs(upper), _runs(lower)])


def vertical_lengths(bits: np.ndarray) -> np.ndarray:
    return _runs(bits.T)


def _as_bits(rm) -> np.ndarray:
    return rm.bits if isinstance(rm, RecurrenceMatrix) else np.asarray(rm, dtype=bool)


def line_histograms(rm, theiler: int = 0) -> LineHistograms:
    """Diagonal and vertical line-length histograms ``{length: count}``."""
    if theiler < 0:
        raise ParameterError(f"theiler must be >= 0, got {theiler}")
    bits = _as_bits(rm)
    return LineHistograms(
        _histogram(diagonal_lengths(bits, theiler)), _histogram(vertical_lengths(bits))
    )


def _ratio(lengths: np.ndarray, lmin: int) -> Optional[float]:
    total = int(lengths.sum())
    if total == 0:
        return None
    return int(lengths[lengths >= lmin].sum()) / total


def measures(rm, lmin: int = 2, vmin: int = 2, theiler: Optional[int] = None) -> RqaMeasures:
    """RR, DET, LAM, DIV and Lmax of a recurrence matrix.

    ``theiler`` defaults to the value stored in the matrix's threshold
    config (0 if none). RR always counts every entry, LOI included.
    """
    if lmin < 2 or vmin < 2:
        raise ParameterError(f"lmin and vmin must be >= 2, got lmin={lmin}, vmin={vmin}")
    if theiler is None:
        cfg = getattr(rm, "config", None)
        theiler = cfg.theiler if cfg is not None else 0
    bits = _as_bits(rm)
    n = bits.shape[0]
    diag = diagonal_lengths(bits, theiler)
    vert = vertical_lengths(bits)
    lmax = int(diag.max()) if diag.size else 0
    return RqaMeasures(
        rr=int(bits.sum()) / float(n * n),
        det=_ratio(diag, lmin),
        lam=_ratio(vert, vmin),
        div=(1.0 / lmax) if lmax else None,
        lmax=lmax,
    )


def series_measures(
    series,
    config: EmbeddingConfig,
    thr: ThresholdConfig,
    lmin: int = 2,
    vmin: int = 2,
) -> RqaMeasures:
    """Embed, threshold and quantify one series."""
    return measures(build_matrix(embed(series, config), thr), lmin, vmin, thr.theiler)


def _window_starts(n: int, window_len: int, step: int, config: EmbeddingConfig) -> range:
    if step < 1:
        raise ParameterError(f"step must be >= 1, got {step}")
    if window_len > n:
        raise SizeError(f"window_len {window_len} exceeds series length {n}")
    if config.n_points(window_len) < 2:
        raise SizeError(
            f"window of {window_len} samples too small to embed with m={config.m}, tau={config.tau}"
        )
    return range(0, n - window_len + 1, step)


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)


def windowed_measures(
    series,
    config: EmbeddingConfig,
    thr: ThresholdConfig,
    window_len: int,
    step: int = 1,
    lmin: int = 2,
    vmin: int = 2,
) -> WindowedMeasures:
    """RQA in sliding windows; in ``target_rr`` mode eps is refit per window."""
    u = _values(series)
    entries = []
    for s in _window_starts(u.size, window_len, step, config):
        entries.append((s, series_measures(u[s : s + window_len], config, thr, lmin, vmin)))
    return WindowedMeasures(window_len, step, tuple(entries))


def windowed_joint_measures(
    a,
    b,
    config: EmbeddingConfig,
    thr: ThresholdConfig,
    window_len: int,
    step: int = 1,
    lmin: int = 2,
    vmin: int = 2,
    thr_b: Optional[ThresholdConfig] = None,
) -> WindowedMeasures:
    """Sliding-window joint RQA (Joint-RR, Joint-DET, Joint-LAM, ...).

    Each window builds one matrix per series and quantifies their AND.
    ``thr_b`` lets the second series use its own threshold; by default both
    share ``thr``.
    """
    ua, ub = _values(a), _values(b)
    if ua.size != ub.size:
        raise DimensionError(f"joint analysis needs equal lengths, got {ua.size} and {ub.size}")
    thr_b = thr_b or thr
    entries = []
    for s in _window_starts(ua.size, window_len, step, config):
        ra = build_matrix(embed(ua[s : s + window_len], config), thr)
        rb = build_matrix(embed(ub[s : s + window_len], config), thr_b)
        entries.append((s, measures(joint_matrix(ra, rb), lmin, vmin, thr.theiler)))
    return WindowedMeasures(window_len, step, tuple(entries))


def disruption_profile(rm, band: int = 1) -> np.ndarray:
    """Column recurrence density, smoothed by a centred moving average.

    Low values mark white bands, i.e. epochs whose states are seldom
    revisited. Near the borders the average runs over the samples that exist.
    """
    bits = _as_bits(rm)
    n = bits.shape[0]
    if not (1 <= band <= n):
        raise ParameterError(f"band must lie in [1, {n}], got {band}")
    density = bits.mean(axis=0)
    lo = band // 2
    hi = band - lo
    csum = np.concatenate([[0.0], np.cumsum(density)])
    idx = np.arange(n)
    left = np.clip(idx - lo, 0, n)
    right = np.clip(idx + hi, 0, n)
    return (csum[right] - csum[left]) / (right - left)


def format_value(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def measures_row(m: RqaMeasures) -> List[str]:
    return [format_value(getattr(m, k)) for k in MEASURE_NAMES]


def windowed_rows(wm: WindowedMeasures, offset: int = 0):
    """Rows of the ``start_index,end_index,rr,det,lam,div,lmax`` CSV."""
    yield ["start_index", "end_index"] + list(MEASURE_NAMES)
    for s, m in wm.entries:
        yield [str(offset + s), str(offset + s + wm.window_len - 1)] + measures_row(m)
