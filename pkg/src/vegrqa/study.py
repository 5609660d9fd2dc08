"""
Three-step group study over pixel stacks.

1. Full-series RQA per pixel (m=3, tau=1), group means and pairwise t-tests.
2. The same on the pre- and post-event parts of every pixel (m=1, tau=1).
3. Sliding-window joint RQA of group-mean series for designated group
   pairs, plus disruption profiles of the group-mean recurrence plots.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .embedding import EmbeddingConfig, embed
from .errors import ConfigurationError, DataError, DimensionError, RqaError
from .provenance import atomic_write_bytes, write_csv
from .recurrence import (
    RecurrenceMatrix,
    ThresholdConfig,
    build_matrix,
    epsilon_for_target_rr,
    joint_matrix,
    render_plot,
)
from .rqa import (
    MEASURE_NAMES,
    RqaMeasures,
    WindowedMeasures,
    disruption_profile,
    format_value,
    measures_row,
    series_measures,
    windowed_joint_measures,
    windowed_rows,
)
from .signal import PixelStack, SplitSpec, split_series
from .stats import TTestResult, pooled_t_test, welch_t_test

TESTED_MEASURES = ("rr", "det", "lam", "div")
PixelTable = List[Tuple[str, RqaMeasures]]


class PixelError(DataError):
    """A single pixel failed; the batch is aborted."""


@dataclass(frozen=True)
class MeasureSummary:
    mean: Optional[float]
    sd: Optional[float]
    n: int
    excluded: int


@dataclass(frozen=True)
class GroupSummary:
    measures: Dict[str, MeasureSummary]
    count: int

    def __getitem__(self, name: str) -> MeasureSummary:
        return self.measures[name]


@dataclass(frozen=True)
class TTestRow:
    measure: str
    group_a: str
    group_b: str
    result: Optional[TTestResult]


@dataclass(frozen=True)
class StudyParams:
    full_embedding: EmbeddingConfig = EmbeddingConfig(3, 1)
    split_embedding: EmbeddingConfig = EmbeddingConfig(1, 1)
    window_embedding: EmbeddingConfig = EmbeddingConfig(1, 1)
    threshold: ThresholdConfig = ThresholdConfig()
    lmin: int = 2
    vmin: int = 2
    window_lens: Tuple[int, ...] = (46, 69)
    window_step: int = 1
    band: int = 5
    pooled: bool = False
    shared_epsilon: bool = False

    def echo(self) -> Dict[str, object]:
        """Flat ``key -> value`` view written into every report header."""
        thr = self.threshold
        return {
            "full_m": self.full_embedding.m,
            "full_tau": self.full_embedding.tau,
            "split_m": self.split_embedding.m,
            "split_tau": self.split_embedding.tau,
            "window_m": self.window_embedding.m,
            "window_tau": self.window_embedding.tau,
            "threshold_mode": thr.mode,
            "epsilon": "NA" if thr.epsilon is None else thr.epsilon,
            "target_rr": "NA" if thr.target_rr is None else thr.target_rr,
            "norm": thr.norm,
            "theiler": thr.theiler,
            "lmin": self.lmin,
            "vmin": self.vmin,
            "window_lens": " ".join(str(w) for w in self.window_lens),
            "window_step": self.window_step,
            "band": self.band,
            "test": "pooled" if self.pooled else "welch",
            "shared_epsilon": self.shared_epsilon,
        }


# ---------------------------------------------------------------------------
# per-pixel batch


def _pixel_job(args):
    pid, values, config, thr, lmin, vmin = args
    return pid, series_measures(values, config, thr, lmin, vmin)


def _shared_threshold(stack_values: Sequence[np.ndarray], config, thr: ThresholdConfig) -> ThresholdConfig:
    """Median of the per-pixel target-RR epsilons, frozen as a fixed threshold."""
    if thr.mode != "target_rr":
        return thr
    eps = [epsilon_for_target_rr(embed(v, config), thr.target_rr, thr.norm) for v in stack_values]
    return ThresholdConfig.fixed(float(np.median(eps)), thr.norm, thr.theiler)


def per_pixel_measures(
    stack: PixelStack,
    config: EmbeddingConfig = EmbeddingConfig(3, 1),
    thr: ThresholdConfig = ThresholdConfig(),
    lmin: int = 2,
    vmin: int = 2,
    workers: int = 1,
    shared_epsilon: bool = False,
) -> PixelTable:
    """RQA measures of every pixel, in the stack's pixel order.

    A failing pixel aborts the batch with :class:`PixelError` naming it.
    """
    values = {pid: s.values for pid, s in stack.series.items()}
    if shared_epsilon:
        thr = _shared_threshold(list(values.values()), config, thr)
    jobs = [(pid, v, config, thr, lmin, vmin) for pid, v in values.items()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            it = pool.map(_safe_job, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
            results = list(it)
    else:
        results = [_safe_job(j) for j in jobs]
    for r in results:
        if isinstance(r, PixelError):
            raise r
    return results


def _safe_job(args):
    try:
        return _pixel_job(args)
    except RqaError as exc:
        return PixelError(f"{type(exc).__name__}: {exc}", pixel=args[0])


def group_summary(table: PixelTable) -> GroupSummary:
    """Mean and sample SD (n-1) of every measure; undefined values are excluded."""
    if not table:
        raise ValueError("cannot summarise an empty table")
    out = {}
    for name in MEASURE_NAMES:
        vals = [getattr(m, name) for _, m in table]
        defined = [float(v) for v in vals if v is not None]
        excluded = len(vals) - len(defined)
        if not defined:
            out[name] = MeasureSummary(None, None, 0, excluded)
            continue
        mean = math.fsum(defined) / len(defined)
        sd = None
        if len(defined) > 1:
            sd = math.sqrt(math.fsum((v - mean) ** 2 for v in defined) / (len(defined) - 1))
        out[name] = MeasureSummary(mean, sd, len(defined), excluded)
    return GroupSummary(out, len(table))


def _defined(table: PixelTable, name: str) -> List[float]:
    return [float(getattr(m, name)) for _, m in table if getattr(m, name) is not None]


def compare(table_a, table_b, label_a, label_b, pooled=False) -> List[TTestRow]:
    test = pooled_t_test if pooled else welch_t_test
    rows = []
    for name in TESTED_MEASURES:
        a, b = _defined(table_a, name), _defined(table_b, name)
        result = test(a, b) if len(a) >= 2 and len(b) >= 2 else None
        rows.append(TTestRow(name, label_a, label_b, result))
    return rows


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class JointResult:
    pair: Tuple[str, str]
    windowed: Dict[int, WindowedMeasures]
    matrix: RecurrenceMatrix
    profile: np.ndarray


@dataclass
class StudyReport:
    params: StudyParams
    split: SplitSpec
    labels: List[str]
    step1_pixels: Dict[str, PixelTable]
    step1_summary: Dict[str, GroupSummary]
    step1_tests: List[TTestRow]
    step2_pixels: Dict[str, PixelTable]
    step2_summary: Dict[str, GroupSummary]
    step2_tests: List[TTestRow]
    mean_matrices: Dict[str, RecurrenceMatrix]
    mean_profiles: Dict[str, np.ndarray]
    joint: List[JointResult] = field(default_factory=list)

    def echo(self) -> Dict[str, object]:
        meta = dict(self.params.echo())
        meta["pre_end"] = self.split.pre_end
        meta["post_start"] = self.split.post_start
        meta["groups"] = " ".join(self.labels)
        meta["pairs"] = " ".join(f"{a}:{b}" for a, b in (j.pair for j in self.joint))
        return meta


def phase_label(label: str, phase: str) -> str:
    return f"{label}/{phase}"


def run_pipeline(
    stacks: Mapping[str, PixelStack],
    split: SplitSpec,
    params: StudyParams = StudyParams(),
    pairs: Sequence[Tuple[str, str]] = (),
    workers: int = 1,
) -> StudyReport:
    """Run all three steps over labelled pixel stacks."""
    if not stacks:
        raise ConfigurationError("at least one pixel stack is required")
    labels = list(stacks)
    lengths = {lab: s.length for lab, s in stacks.items()}
    if len(set(lengths.values())) != 1:
        raise DimensionError(f"stacks differ in series length: {lengths}")
    n = next(iter(lengths.values()))
    split.validate(n)
    for a, b in pairs:
        for lab in (a, b):
            if lab not in stacks:
                raise ConfigurationError(f"pair references unknown group {lab!r}")
    thr = params.threshold
    kw = dict(lmin=params.lmin, vmin=params.vmin, workers=workers, shared_epsilon=params.shared_epsilon)

    # step 1
    s1 = {lab: per_pixel_measures(stacks[lab], params.full_embedding, thr, **kw) for lab in labels}
    s1_sum = {lab: group_summary(t) for lab, t in s1.items()}
    s1_tests = []
    for a, b in itertools.combinations(labels, 2):
        s1_tests += compare(s1[a], s1[b], a, b, params.pooled)

    # step 2
    s2: Dict[str, PixelTable] = {}
    for lab in labels:
        parts = {pid: split_series(ts, split) for pid, ts in stacks[lab].series.items()}
        for k, phase in enumerate(("pre", "post")):
            sub = PixelStack({pid: p[k] for pid, p in parts.items()}, phase_label(lab, phase))
            s2[sub.group] = per_pixel_measures(sub, params.split_embedding, thr, **kw)
    s2_sum = {key: group_summary(t) for key, t in s2.items()}
    s2_tests = []
    for phase in ("pre", "post"):
        for a, b in itertools.combinations(labels, 2):
            pa, pb = phase_label(a, phase), phase_label(b, phase)
            s2_tests += compare(s2[pa], s2[pb], pa, pb, params.pooled)
    for lab in labels:
        pa, pb = phase_label(lab, "pre"), phase_label(lab, "post")
        s2_tests += compare(s2[pa], s2[pb], pa, pb, params.pooled)

    # step 3
    means = {lab: stacks[lab].mean_series() for lab in labels}
    mats = {lab: build_matrix(embed(means[lab], params.full_embedding), thr) for lab in labels}
    band = min(params.band, mats[labels[0]].n)
    profiles = {lab: disruption_profile(m, band) for lab, m in mats.items()}
    joint = []
    for a, b in pairs:
        windowed = {
            w: windowed_joint_measures(
                means[a], means[b], params.window_embedding, thr, w, params.window_step, params.lmin, params.vmin
            )
            for w in params.window_lens
        }
        jm = joint_matrix(mats[a], mats[b])
        joint.append(JointResult((a, b), windowed, jm, disruption_profile(jm, band)))

    return StudyReport(params, split, labels, s1, s1_sum, s1_tests, s2, s2_sum, s2_tests, mats, profiles, joint)


# ---------------------------------------------------------------------------
# report output


def pixel_rows(tables: Mapping[str, PixelTable]):
    yield ["group", "pixel_id"] + list(MEASURE_NAMES)
    for lab, table in tables.items():
        for pid, m in table:
            yield [lab, pid] + measures_row(m)


def summary_rows(summaries: Mapping[str, GroupSummary]):
    yield ["group", "measure", "mean", "sd", "n", "excluded"]
    for lab, gs in summaries.items():
        for name in MEASURE_NAMES:
            s = gs[name]
            yield [lab, name, format_value(s.mean), format_value(s.sd), str(s.n), str(s.excluded)]


def ttest_rows(tests: Sequence[TTestRow]):
    yield ["measure", "group_a", "group_b", "t", "df", "p"]
    for row in tests:
        r = row.result
        vals = ["NA"] * 3 if r is None else [format_value(r.t), format_value(r.df), format_value(r.p)]
        yield [row.measure, row.group_a, row.group_b] + vals


def profile_rows(profiles: Mapping[str, np.ndarray]):
    names = list(profiles)
    yield ["index"] + names
    cols = [profiles[k] for k in names]
    for i in range(len(cols[0]) if cols else 0):
        yield [str(i)] + [format_value(float(c[i])) for c in cols]


def _safe(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label)


def write_report(report: StudyReport, out_dir, extra_meta: Optional[Mapping[str, object]] = None) -> List[Path]:
    """Write every table and plot of ``report`` into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    meta = dict(extra_meta or {})
    meta.update(report.echo())
    written = []

    def csv_out(name, rows, **more):
        p = out / name
        m = dict(meta)
        m.update(more)
        write_csv(p, rows, m)
        written.append(p)

    csv_out("step1_per_pixel.csv", pixel_rows(report.step1_pixels), step="1")
    csv_out("step1_summary.csv", summary_rows(report.step1_summary), step="1")
    csv_out("step1_ttests.csv", ttest_rows(report.step1_tests), step="1")
    csv_out("step2_per_pixel.csv", pixel_rows(report.step2_pixels), step="2")
    csv_out("step2_summary.csv", summary_rows(report.step2_summary), step="2")
    csv_out("step2_ttests.csv", ttest_rows(report.step2_tests), step="2")
    csv_out("step3_mean_profiles.csv", profile_rows(report.mean_profiles), step="3")
    for lab, m in report.mean_matrices.items():
        p = out / f"rp_{_safe(lab)}.pgm"
        atomic_write_bytes(p, render_plot(m, "pgm"))
        written.append(p)
    for j in report.joint:
        a, b = j.pair
        tag = f"{_safe(a)}__{_safe(b)}"
        for w, wm in j.windowed.items():
            csv_out(f"step3_jra_{tag}_w{w}.csv", windowed_rows(wm), step="3", pair=f"{a}:{b}", window_len=w)
        csv_out(f"step3_joint_profile_{tag}.csv", profile_rows({f"{a}:{b}": j.profile}), step="3", pair=f"{a}:{b}")
        p = out / f"jrp_{tag}.pgm"
        atomic_write_bytes(p, render_plot(j.matrix, "pgm"))
        written.append(p)
    return written
