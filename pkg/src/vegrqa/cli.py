"""
Command-line interface.

Exit codes: 0 success, 1 usage error (bad flag or out-of-range value),
2 data error (missing/malformed input, failing pixel).
"""

from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .embedding import EmbeddingConfig, embed, select_delay, select_dimension
from .errors import ConfigurationError, DataError, ParameterError, RqaError
from .provenance import atomic_write_bytes, write_csv
from .recurrence import DEFAULT_EPSILON, NORMS, ThresholdConfig, build_matrix, render_plot
from .rqa import MEASURE_NAMES, measures_row, windowed_joint_measures, windowed_measures, windowed_rows
from .signal import (
    PixelStack,
    SplitSpec,
    TimeSeries,
    compute_evi_array,
    generate,
    load_series,
    series_to_rows,
    stack_to_rows,
)
from .study import StudyParams, per_pixel_measures, run_pipeline, write_report

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument types: each rejects out-of-range values before any work starts


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _min2_int(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {v}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a finite value >= 0, got {text}")
    return v


def _pos_float(text):
    v = float(text)
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a finite value > 0, got {text}")
    return v


def _rate(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def _finite_float(text):
    v = float(text)
    if not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return v


# -- shared flag groups


def _add_output(p, required=True):
    p.add_argument("-o", "--output", required=required, help="output file (written atomically)")


def _add_ingest(p):
    p.add_argument("--format", choices=("auto", "single", "wide", "long"), default="auto",
                   help="input CSV layout (default: %(default)s)")
    p.add_argument("--scale", type=_finite_float, default=None, help="multiply input values by this factor")
    p.add_argument("--fill-missing", action="store_true",
                   help="interpolate missing values instead of rejecting the file")


def _add_embedding(p, m=3, tau=1, auto=True):
    p.add_argument("--embedding-dim", type=_pos_int, default=m, help="embedding dimension m (default: %(default)s)")
    p.add_argument("--delay", type=_pos_int, default=tau, help="time delay tau (default: %(default)s)")
    if auto:
        p.add_argument("--auto-embed", action="store_true",
                       help="choose tau by mutual information and m by false nearest neighbours")
        p.add_argument("--max-lag", type=_pos_int, default=20, help="largest lag tried by --auto-embed (default: %(default)s)")
        p.add_argument("--m-max", type=_min2_int, default=10, help="largest m tried by --auto-embed (default: %(default)s)")


def _add_threshold(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--epsilon", type=_nonneg_float, default=None,
                   help=f"fixed recurrence threshold (default mode; default value {DEFAULT_EPSILON})")
    g.add_argument("--target-rr", type=_rate, default=None, help="choose epsilon to reach this recurrence rate")
    p.add_argument("--norm", choices=NORMS, default="max", help="distance norm (default: %(default)s)")
    p.add_argument("--theiler", type=_nonneg_int, default=0,
                   help="half-width of the diagonal band excluded from line statistics (default: %(default)s)")


def _add_lines(p):
    p.add_argument("--lmin", type=_min2_int, default=2, help="minimum diagonal line length (default: %(default)s)")
    p.add_argument("--vmin", type=_min2_int, default=2, help="minimum vertical line length (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vegrqa", description="Recurrence quantification analysis of index time series.")
    parser.add_argument("--version", action="version", version="vegrqa 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic series (sine, white noise, Lorenz)")
    p.add_argument("--kind", choices=("sine", "white_noise", "lorenz"), required=True)
    p.add_argument("--n", type=_min2_int, default=200, help="number of samples (default: %(default)s)")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="random seed (default: %(default)s)")
    p.add_argument("--period", type=_pos_float, default=24.0, help="sine period in samples (default: %(default)s)")
    p.add_argument("--phase", type=_finite_float, default=0.0, help="sine phase in radians (default: %(default)s)")
    p.add_argument("--amplitude", type=_finite_float, default=1.0, help="sine amplitude (default: %(default)s)")
    p.add_argument("--dt", type=_pos_float, default=0.01, help="Lorenz RK4 step (default: %(default)s)")
    p.add_argument("--transient", type=_nonneg_int, default=1000, help="Lorenz steps discarded (default: %(default)s)")
    p.add_argument("--sample-every", type=_pos_int, default=1, help="keep every k-th Lorenz step (default: %(default)s)")
    p.add_argument("--component", choices=("x", "y", "z", "all"), default="x",
                   help="Lorenz component to write; 'all' writes a wide file (default: %(default)s)")
    _add_output(p)

    p = sub.add_parser("evi", help="compute EVI from a time,nir,red,blue CSV")
    p.add_argument("input")
    p.add_argument("--scale", type=_finite_float, default=None,
                   help="multiply band values first (e.g. 0.0001 for MODIS integers)")
    _add_output(p)

    p = sub.add_parser("embed-params", help="mutual-information delay and false-nearest-neighbour dimension")
    p.add_argument("input")
    _add_ingest(p)
    p.add_argument("--max-lag", type=_pos_int, default=20, help="largest lag of the MI curve (default: %(default)s)")
    p.add_argument("--bins", type=_min2_int, default=None, help="histogram bins (default: Sturges)")
    p.add_argument("--m-max", type=_min2_int, default=10, help="largest dimension tested (default: %(default)s)")
    _add_output(p)

    p = sub.add_parser("analyze", help="RQA measures of every series in a file")
    p.add_argument("input")
    _add_ingest(p)
    _add_embedding(p, 3, 1)
    _add_threshold(p)
    _add_lines(p)
    p.add_argument("--shared-epsilon", action="store_true",
                   help="in target-RR mode, use the median per-pixel epsilon for all pixels")
    p.add_argument("--workers", type=_pos_int, default=1, help="worker processes (default: %(default)s)")
    _add_output(p)

    for name, help_text in (("window", "sliding-window RQA of one series"),
                            ("jra", "sliding-window joint RQA of two series")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input")
        if name == "jra":
            p.add_argument("input_b")
        _add_ingest(p)
        _add_embedding(p, 1, 1, auto=False)
        _add_threshold(p)
        _add_lines(p)
        p.add_argument("--window", type=_min2_int, default=46, help="window length in samples (default: %(default)s)")
        p.add_argument("--step", type=_pos_int, default=1, help="window step (default: %(default)s)")
        _add_output(p)

    p = sub.add_parser("pipeline", help="three-step group study over pixel stacks")
    p.add_argument("--stack", action="append", required=True, metavar="LABEL=PATH",
                   help="pixel stack file (wide or long layout); repeat per group")
    p.add_argument("--pre-end", type=_nonneg_int, required=True, help="last sample index before the event")
    p.add_argument("--post-start", type=_nonneg_int, required=True, help="first sample index after the event")
    p.add_argument("--pair", action="append", default=[], metavar="A:B",
                   help="group pair for joint recurrence analysis; repeatable")
    p.add_argument("--windows", type=_min2_int, nargs="+", default=[46, 69],
                   help="window lengths for joint analysis (default: 46 69)")
    p.add_argument("--window-step", type=_pos_int, default=1, help="window step (default: %(default)s)")
    p.add_argument("--band", type=_pos_int, default=5, help="disruption-profile smoothing width (default: %(default)s)")
    _add_ingest(p)
    p.add_argument("--embedding-dim", type=_pos_int, default=3, help="m for full series (default: %(default)s)")
    p.add_argument("--delay", type=_pos_int, default=1, help="tau for full series (default: %(default)s)")
    p.add_argument("--split-embedding-dim", type=_pos_int, default=1, help="m for split series (default: %(default)s)")
    p.add_argument("--split-delay", type=_pos_int, default=1, help="tau for split series (default: %(default)s)")
    p.add_argument("--window-embedding-dim", type=_pos_int, default=1, help="m in windows (default: %(default)s)")
    p.add_argument("--window-delay", type=_pos_int, default=1, help="tau in windows (default: %(default)s)")
    _add_threshold(p)
    _add_lines(p)
    p.add_argument("--pooled", action="store_true", help="pooled-variance Student t-test instead of Welch")
    p.add_argument("--shared-epsilon", action="store_true",
                   help="in target-RR mode, one epsilon per group (median of per-pixel values)")
    p.add_argument("--workers", type=_pos_int, default=1, help="worker processes (default: %(default)s)")
    p.add_argument("--out-dir", required=True, help="directory receiving all report files")

    p = sub.add_parser("render", help="recurrence plot image of one series")
    p.add_argument("input")
    _add_ingest(p)
    _add_embedding(p, 3, 1, auto=False)
    _add_threshold(p)
    p.add_argument("--image-format", choices=("pgm", "ascii"), default="pgm", help="(default: %(default)s)")
    _add_output(p, required=False)
    return parser


# -- provenance


# scheduling only; kept out of headers so outputs match across worker counts
NON_SEMANTIC = ("workers",)


def canonical_argv(parser: argparse.ArgumentParser, ns: argparse.Namespace) -> List[str]:
    """Re-create an argv with every flag spelled out, defaults included."""
    sub = _subparser(parser, ns.command)
    argv = [ns.command]
    positionals = []
    for action in sub._actions:
        if isinstance(action, argparse._HelpAction) or action.dest in NON_SEMANTIC:
            continue
        value = getattr(ns, action.dest, None)
        if not action.option_strings:
            positionals.append(str(value))
            continue
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
        elif value is None:
            continue
        elif isinstance(action, argparse._AppendAction) or action.nargs == "+":
            if isinstance(action, argparse._AppendAction):
                for v in value:
                    argv += [flag, str(v)]
            elif value:
                argv += [flag] + [str(v) for v in value]
        else:
            argv += [flag, str(value)]
    return argv + positionals


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def provenance(parser, ns) -> Dict[str, object]:
    meta: Dict[str, object] = {"command": ns.command}
    for key, value in sorted(vars(ns).items()):
        if key == "command" or key in NON_SEMANTIC:
            continue
        if isinstance(value, list):
            value = " ".join(str(v) for v in value)
        meta[key] = "NA" if value is None else value
    meta["argv"] = shlex.join(canonical_argv(parser, ns))
    return meta


# -- helpers


def _threshold(ns) -> ThresholdConfig:
    if ns.target_rr is not None:
        return ThresholdConfig.rate(ns.target_rr, ns.norm, ns.theiler)
    return ThresholdConfig.fixed(ns.epsilon, ns.norm, ns.theiler)


def _load(ns, path=None):
    return load_series(path or ns.input, ns.format, ns.fill_missing, ns.scale)


def _as_stack(obj, name="series") -> PixelStack:
    return obj if isinstance(obj, PixelStack) else PixelStack({name: obj}, name)


def _single(obj, path) -> TimeSeries:
    if isinstance(obj, TimeSeries):
        return obj
    if len(obj) == 1:
        return next(iter(obj.series.values()))
    raise DataError("expected a single series, found several pixels", path)


def _auto_config(series, ns) -> EmbeddingConfig:
    n = len(series)
    max_lag = min(ns.max_lag, (n - 1) // 2)
    tau, _ = select_delay(series, max_lag)
    m_max = max(2, min(ns.m_max, (n - 2) // tau))
    m, _ = select_dimension(series, tau, m_max)
    return EmbeddingConfig(m, tau)


# -- commands


def cmd_generate(parser, ns):
    if ns.kind == "sine":
        out = generate("sine", ns.n, ns.seed, period=ns.period, phase=ns.phase, amplitude=ns.amplitude)
    elif ns.kind == "white_noise":
        out = generate("white_noise", ns.n, ns.seed)
    else:
        xyz = generate("lorenz", ns.n, ns.seed, dt=ns.dt, transient=ns.transient, sample_every=ns.sample_every)
        if ns.component == "all":
            out = PixelStack(dict(zip("xyz", xyz)), "lorenz")
        else:
            out = xyz["xyz".index(ns.component)]
    rows = series_to_rows(out) if isinstance(out, TimeSeries) else stack_to_rows(out)
    write_csv(ns.output, rows, provenance(parser, ns))


def cmd_evi(parser, ns):
    import csv

    path = Path(ns.input)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["time", "nir", "red", "blue"]:
        raise DataError("EVI input needs header time,nir,red,blue", path, row=1)
    times, bands = [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise DataError(f"expected 4 fields, got {len(row)}", path, row=r)
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError:
            raise DataError("non-numeric band value", path, row=r) from None
        times.append(row[0])
        bands.append(vals)
    arr = np.array(bands, dtype=float).reshape(-1, 3)
    if ns.scale is not None:
        arr = arr * ns.scale
    try:
        evi = compute_evi_array(arr[:, 0], arr[:, 1], arr[:, 2])
    except RqaError as exc:
        raise DataError(str(exc), path) from None
    out = [["time", "value"]] + [[t, repr(float(v))] for t, v in zip(times, evi)]
    write_csv(ns.output, out, provenance(parser, ns))


def cmd_embed_params(parser, ns):
    series = _single(_load(ns), ns.input)
    n = len(series)
    tau, curve = select_delay(series, min(ns.max_lag, (n - 1) // 2), ns.bins)
    m_max = max(2, min(ns.m_max, (n - 2) // tau))
    m, fractions = select_dimension(series, tau, m_max)
    rows = [["quantity", "index", "value"], ["selected_delay", "0", str(tau)], ["selected_dimension", "0", str(m)]]
    rows += [["mutual_information", str(k), repr(v)] for k, v in enumerate(curve)]
    rows += [["fnn_fraction", str(k), repr(v)] for k, v in fractions.items()]
    write_csv(ns.output, rows, provenance(parser, ns))


def cmd_analyze(parser, ns):
    stack = _as_stack(_load(ns))
    thr = _threshold(ns)
    rows = [["pixel_id", "m", "tau"] + list(MEASURE_NAMES)]
    if ns.auto_embed:
        for pid, ts in stack.series.items():
            cfg = _auto_config(ts, ns)
            table = per_pixel_measures(PixelStack({pid: ts}, pid), cfg, thr, ns.lmin, ns.vmin)
            rows.append([pid, str(cfg.m), str(cfg.tau)] + measures_row(table[0][1]))
    else:
        cfg = EmbeddingConfig(ns.embedding_dim, ns.delay)
        table = per_pixel_measures(stack, cfg, thr, ns.lmin, ns.vmin, ns.workers, ns.shared_epsilon)
        rows += [[pid, str(cfg.m), str(cfg.tau)] + measures_row(m) for pid, m in table]
    write_csv(ns.output, rows, provenance(parser, ns))


def cmd_window(parser, ns):
    series = _single(_load(ns), ns.input)
    cfg = EmbeddingConfig(ns.embedding_dim, ns.delay)
    wm = windowed_measures(series, cfg, _threshold(ns), ns.window, ns.step, ns.lmin, ns.vmin)
    write_csv(ns.output, windowed_rows(wm, series.t0_index), provenance(parser, ns))


def cmd_jra(parser, ns):
    a = _single(_load(ns, ns.input), ns.input)
    b = _single(_load(ns, ns.input_b), ns.input_b)
    if len(a) != len(b):
        raise DataError(f"series lengths differ ({len(a)} vs {len(b)})", ns.input_b)
    cfg = EmbeddingConfig(ns.embedding_dim, ns.delay)
    wm = windowed_joint_measures(a, b, cfg, _threshold(ns), ns.window, ns.step, ns.lmin, ns.vmin)
    write_csv(ns.output, windowed_rows(wm), provenance(parser, ns))


def _parse_stack_arg(text):
    label, sep, path = text.partition("=")
    if not sep or not label or not path:
        raise UsageError(f"vegrqa pipeline: argument --stack: expected LABEL=PATH, got {text!r}")
    return label, path


def cmd_pipeline(parser, ns):
    specs = [_parse_stack_arg(s) for s in ns.stack]
    pairs = []
    for text in ns.pair:
        a, sep, b = text.partition(":")
        if not sep or not a or not b:
            raise UsageError(f"vegrqa pipeline: argument --pair: expected A:B, got {text!r}")
        pairs.append((a, b))
    labels = [lab for lab, _ in specs]
    if len(set(labels)) != len(labels):
        raise UsageError("vegrqa pipeline: argument --stack: duplicate group label")
    for a, b in pairs:
        for lab in (a, b):
            if lab not in labels:
                raise UsageError(f"vegrqa pipeline: argument --pair: unknown group {lab!r}")
    if ns.pre_end >= ns.post_start:
        raise UsageError("vegrqa pipeline: argument --post-start: must exceed --pre-end")
    params = StudyParams(
        full_embedding=EmbeddingConfig(ns.embedding_dim, ns.delay),
        split_embedding=EmbeddingConfig(ns.split_embedding_dim, ns.split_delay),
        window_embedding=EmbeddingConfig(ns.window_embedding_dim, ns.window_delay),
        threshold=_threshold(ns),
        lmin=ns.lmin,
        vmin=ns.vmin,
        window_lens=tuple(ns.windows),
        window_step=ns.window_step,
        band=ns.band,
        pooled=ns.pooled,
        shared_epsilon=ns.shared_epsilon,
    )
    stacks = {}
    for label, path in specs:
        obj = load_series(path, ns.format, ns.fill_missing, ns.scale, group=label)
        stacks[label] = _as_stack(obj, label).relabel(label)
    report = run_pipeline(stacks, SplitSpec(ns.pre_end, ns.post_start), params, pairs, ns.workers)
    write_report(report, ns.out_dir, provenance(parser, ns))


def cmd_render(parser, ns):
    series = _single(_load(ns), ns.input)
    rm = build_matrix(embed(series, EmbeddingConfig(ns.embedding_dim, ns.delay)), _threshold(ns))
    data = render_plot(rm, ns.image_format)
    if ns.output:
        atomic_write_bytes(ns.output, data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


COMMANDS = {
    "generate": cmd_generate,
    "evi": cmd_evi,
    "embed-params": cmd_embed_params,
    "analyze": cmd_analyze,
    "window": cmd_window,
    "jra": cmd_jra,
    "pipeline": cmd_pipeline,
    "render": cmd_render,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        try:
            ns = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        if getattr(ns, "epsilon", 0) is None and ns.target_rr is None:
            ns.epsilon = DEFAULT_EPSILON
        COMMANDS[ns.command](parser, ns)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ConfigurationError) as exc:
        print(f"vegrqa: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"vegrqa: data error: input file not found (file={exc.filename})", file=sys.stderr)
        return EXIT_DATA
    except (DataError, RqaError) as exc:
        print(f"vegrqa: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
