"""
Time series containers, EVI, CSV ingestion, splitting and synthetic dynamics.

The three generators (sine, uniform white noise, Lorenz) provide the
canonical periodic, stochastic and chaotic reference dynamics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from .errors import (
    DegenerateInputError,
    FormatError,
    ParameterError,
    ParseError,
    SizeError,
    SplitIndexError,
)

MODIS_DT_DAYS = 16.0
MISSING_TOKENS = {"", "na", "nan", "null", "none"}


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar series.

    ``t0_index`` is the offset of the first sample inside the parent series
    (non-zero only for the halves produced by :func:`split_series`).
    """

    values: np.ndarray
    dt_days: float = MODIS_DT_DAYS
    t0_index: int = 0

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1:
            raise ParameterError("TimeSeries values must be one-dimensional")
        if arr.size < 2:
            raise SizeError(f"TimeSeries needs at least 2 samples, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DegenerateInputError("TimeSeries contains non-finite values")
        if not self.dt_days > 0:
            raise ParameterError(f"dt_days must be positive, got {self.dt_days}")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.dt_days == other.dt_days
            and self.t0_index == other.t0_index
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class BandSample:
    """Unit-scaled surface reflectances of one observation."""

    nir: float
    red: float
    blue: float

    def __post_init__(self):
        for name in ("nir", "red", "blue"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ParameterError(f"{name} reflectance must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class SplitSpec:
    """Inclusive end of the pre-event part and inclusive start of the post part."""

    pre_end: int
    post_start: int

    def validate(self, length: int) -> None:
        if not (0 <= self.pre_end < self.post_start < length):
            raise SplitIndexError(
                f"split requires 0 <= pre_end < post_start < {length}, "
                f"got pre_end={self.pre_end}, post_start={self.post_start}"
            )


@dataclass(frozen=True)
class PixelStack:
    """Equal-length series keyed by pixel id, sharing one group label."""

    series: Dict[str, TimeSeries]
    group: str = "group"

    def __post_init__(self):
        if not self.series:
            raise SizeError("PixelStack must contain at least one pixel")
        lengths = {len(s) for s in self.series.values()}
        if len(lengths) != 1:
            raise FormatError(
                f"pixel series have unequal lengths {sorted(lengths)}", pixel=None
            )
        object.__setattr__(self, "series", dict(self.series))

    @property
    def length(self) -> int:
        return len(next(iter(self.series.values())))

    @property
    def pixel_ids(self):
        return list(self.series)

    def __len__(self) -> int:
        return len(self.series)

    def mean_series(self) -> TimeSeries:
        first = next(iter(self.series.values()))
        data = np.vstack([s.values for s in self.series.values()])
        return TimeSeries(data.mean(axis=0), first.dt_days, first.t0_index)

    def relabel(self, group: str) -> "PixelStack":
        return PixelStack(self.series, group)


# ---------------------------------------------------------------------------
# EVI


def compute_evi(sample: BandSample) -> float:
    """Enhanced Vegetation Index of one band sample.

    ``2.5 * (NIR - RED) / (NIR + 6 RED - 7.5 BLUE + 1)``
    """
    denom = sample.nir + 6.0 * sample.red - 7.5 * sample.blue + 1.0
    if abs(denom) <= 1e-9:
        raise DegenerateInputError(
            f"EVI denominator vanishes for sample nir={sample.nir}, "
            f"red={sample.red}, blue={sample.blue}"
        )
    return 2.5 * (sample.nir - sample.red) / denom


def compute_evi_array(nir, red, blue) -> np.ndarray:
    """Vectorised EVI; raises on the first near-zero denominator."""
    nir, red, blue = (np.asarray(a, dtype=float) for a in (nir, red, blue))
    for name, a in (("nir", nir), ("red", red), ("blue", blue)):
        if np.any(~np.isfinite(a)) or np.any((a < 0) | (a > 1)):
            raise ParameterError(f"{name} reflectances must lie in [0, 1]")
    denom = nir + 6.0 * red - 7.5 * blue + 1.0
    bad = np.flatnonzero(np.abs(denom) <= 1e-9)
    if bad.size:
        i = int(bad[0])
        raise DegenerateInputError(
            f"EVI denominator vanishes at sample {i} "
            f"(nir={nir[i]}, red={red[i]}, blue={blue[i]})"
        )
    return 2.5 * (nir - red) / denom


# ---------------------------------------------------------------------------
# Synthetic dynamics


def lorenz_rhs(state: np.ndarray, sigma: float, rho: float, beta: float) -> np.ndarray:
    x, y, z = state
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def lorenz_trajectory(
    x0=(1.0, 1.0, 1.0),
    dt: float = 0.01,
    n_steps: int = 100,
    sigma: float = 10.0,
    rho: float = 28.0,
    beta: float = 8.0 / 3.0,
) -> np.ndarray:
    """Integrate the Lorenz system with classic fixed-step RK4.

    Returns an array of shape ``(n_steps + 1, 3)`` whose first row is ``x0``.
    """
    if not dt > 0:
        raise ParameterError(f"Lorenz step size must be positive, got {dt}")
    out = np.empty((n_steps + 1, 3))
    s = np.array(x0, dtype=float)
    out[0] = s
    h = dt
    for i in range(1, n_steps + 1):
        k1 = lorenz_rhs(s, sigma, rho, beta)
        k2 = lorenz_rhs(s + 0.5 * h * k1, sigma, rho, beta)
        k3 = lorenz_rhs(s + 0.5 * h * k2, sigma, rho, beta)
        k4 = lorenz_rhs(s + h * k3, sigma, rho, beta)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i] = s
    return out


def generate(kind: str, n: int, seed: int = 0, **params):
    """Generate a synthetic series.

    Parameters
    ----------
    kind : {'sine', 'white_noise', 'lorenz'}
    n : int
        Number of samples (>= 2).
    seed : int
        Seed for the white-noise generator (PCG64).
    **params
        sine: ``period`` (default 24), ``phase`` (0), ``amplitude`` (1).
        lorenz: ``dt`` (0.01), ``sigma``, ``rho``, ``beta``, ``x0`` ((1,1,1)),
        ``transient`` steps discarded (1000), ``sample_every`` (1).

    Returns
    -------
    TimeSeries, or a tuple of three TimeSeries (x, y, z) for ``lorenz``.
    """
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    dt_days = params.pop("dt_days", MODIS_DT_DAYS)
    if kind == "sine":
        period = float(params.pop("period", 24.0))
        phase = float(params.pop("phase", 0.0))
        amplitude = float(params.pop("amplitude", 1.0))
        _no_extra(kind, params)
        if not period > 0:
            raise ParameterError(f"sine period must be positive, got {period}")
        i = np.arange(n)
        return TimeSeries(amplitude * np.sin(2.0 * np.pi * i / period + phase), dt_days)
    if kind == "white_noise":
        _no_extra(kind, params)
        rng = np.random.default_rng(seed)
        return TimeSeries(rng.uniform(0.0, 1.0, n), dt_days)
    if kind == "lorenz":
        dt = float(params.pop("dt", 0.01))
        sigma = float(params.pop("sigma", 10.0))
        rho = float(params.pop("rho", 28.0))
        beta = float(params.pop("beta", 8.0 / 3.0))
        x0 = tuple(params.pop("x0", (1.0, 1.0, 1.0)))
        transient = int(params.pop("transient", 1000))
        every = int(params.pop("sample_every", 1))
        _no_extra(kind, params)
        if not dt > 0:
            raise ParameterError(f"Lorenz step size must be positive, got {dt}")
        if transient < 0 or every < 1:
            raise ParameterError("transient must be >= 0 and sample_every >= 1")
        traj = lorenz_trajectory(x0, dt, transient + (n - 1) * every, sigma, rho, beta)
        kept = traj[transient::every][:n]
        return tuple(TimeSeries(kept[:, k], dt_days) for k in range(3))
    raise ParameterError(f"unknown generator kind {kind!r}")


def _no_extra(kind, params):
    if params:
        raise ParameterError(f"unexpected parameters for {kind}: {sorted(params)}")


# ---------------------------------------------------------------------------
# Splitting


def split_series(series: TimeSeries, spec: SplitSpec) -> Tuple[TimeSeries, TimeSeries]:
    """Cut ``series`` into ``[0, pre_end]`` and ``[post_start, end]``.

    Samples strictly between the two indices (the transition) are dropped.
    """
    spec.validate(len(series))
    v = series.values
    pre = TimeSeries(v[: spec.pre_end + 1], series.dt_days, series.t0_index)
    post = TimeSeries(
        v[spec.post_start :], series.dt_days, series.t0_index + spec.post_start
    )
    return pre, post


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_cell(text: str, path, row: int, column: str) -> float:
    if text.strip().lower() in MISSING_TOKENS:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric cell {text!r}", path, row, column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {text!r}", path, row, column)
    return value


def fill_gaps(values: np.ndarray) -> np.ndarray:
    """Linear interpolation over interior NaNs, constant extension at the ends."""
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values)
    if not ok.any():
        raise DegenerateInputError("series has no valid samples to interpolate from")
    idx = np.arange(values.size)
    return np.interp(idx, idx[ok], values[ok])


def _finish(values, path, pixel, fill_missing, scale, dt_days) -> TimeSeries:
    values = np.asarray(values, dtype=float)
    missing = np.flatnonzero(np.isnan(values))
    if missing.size:
        if not fill_missing:
            raise ParseError(
                "missing value (use fill_missing / --fill-missing to interpolate)",
                path,
                row=int(missing[0]) + 2,
                pixel=pixel,
            )
        values = fill_gaps(values)
    if scale is not None:
        values = values * float(scale)
    try:
        return TimeSeries(values, dt_days)
    except SizeError as exc:
        raise FormatError(str(exc), path, pixel=pixel) from None


def detect_format(header: Iterable[str]) -> str:
    cols = [c.strip() for c in header]
    if cols == ["time", "value"]:
        return "single"
    if cols == ["pixel_id", "t_index", "value"]:
        return "long"
    if len(cols) >= 2 and cols[0] == "time" and all(c.startswith("pixel_") for c in cols[1:]):
        return "wide"
    raise FormatError(f"unrecognised CSV header {','.join(cols)!r}")


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise FormatError("empty file, header row required", path)
    return rows[0], rows[1:]


def load_series(
    path: Union[str, Path],
    format: str = "auto",
    fill_missing: bool = False,
    scale: Optional[float] = None,
    group: Optional[str] = None,
    dt_days: float = MODIS_DT_DAYS,
) -> Union[TimeSeries, PixelStack]:
    """Read a CSV in the ``single``, ``wide`` or ``long`` layout.

    Lines starting with ``#`` (provenance headers) are skipped. ``single``
    returns a TimeSeries; the two multi-pixel layouts return a PixelStack.
    """
    path = Path(path)
    header, rows = _read_rows(path)
    detected = detect_format(header)
    if format != "auto" and format != detected:
        raise FormatError(f"header matches {detected!r} layout, not {format!r}", path)
    group = group or path.stem
    width = len(header)
    for r, row in enumerate(rows, start=2):
        if len(row) != width:
            raise FormatError(f"expected {width} fields, got {len(row)}", path, row=r)

    if detected == "single":
        vals = [_parse_cell(row[1], path, r, "value") for r, row in enumerate(rows, 2)]
        return _finish(vals, path, None, fill_missing, scale, dt_days)

    if detected == "wide":
        series = {}
        for c, name in enumerate(header[1:], start=1):
            pid = name.strip()[len("pixel_"):]
            if pid in series:
                raise FormatError(f"duplicate pixel column {name!r}", path, column=name)
            vals = [_parse_cell(row[c], path, r, name) for r, row in enumerate(rows, 2)]
            series[pid] = _finish(vals, path, pid, fill_missing, scale, dt_days)
        return PixelStack(series, group)

    by_pixel: Dict[str, Dict[int, float]] = {}
    for r, row in enumerate(rows, start=2):
        pid = row[0].strip()
        try:
            t = int(row[1])
        except ValueError:
            raise ParseError(f"non-integer t_index {row[1]!r}", path, r, "t_index", pid) from None
        cells = by_pixel.setdefault(pid, {})
        if t in cells:
            raise FormatError(f"duplicate t_index {t}", path, row=r, pixel=pid)
        cells[t] = _parse_cell(row[2], path, r, "value")
    lengths = {pid: len(c) for pid, c in by_pixel.items()}
    if len(set(lengths.values())) > 1:
        detail = ", ".join(f"{p}:{n}" for p, n in lengths.items())
        raise FormatError(f"ragged pixel lengths ({detail})", path)
    series = {}
    for pid, cells in by_pixel.items():
        if sorted(cells) != list(range(len(cells))):
            raise FormatError("t_index must be dense 0..N-1", path, pixel=pid)
        vals = [cells[t] for t in range(len(cells))]
        series[pid] = _finish(vals, path, pid, fill_missing, scale, dt_days)
    if not series:
        raise FormatError("no data rows", path)
    return PixelStack(series, group)


def series_to_rows(series: TimeSeries):
    yield ["time", "value"]
    for i, v in enumerate(series.values):
        yield [str(series.t0_index + i), repr(float(v))]


def stack_to_rows(stack: PixelStack):
    yield ["time"] + [f"pixel_{pid}" for pid in stack.series]
    cols = [s.values for s in stack.series.values()]
    for i in range(stack.length):
        yield [str(i)] + [repr(float(c[i])) for c in cols]
