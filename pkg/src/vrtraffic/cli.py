"""Command-line interface: analyze, fit, generate, simulate, report.

Exit codes: 0 ok, 1 internal error, 2 input/parse error, 3 domain error
(no video flow, too few frames, degenerate data). Machine-readable output
goes to stdout or ``--out``; logs go to stderr.

Option defaults can be overridden per subcommand by a JSON config file
(``--config`` or $VRTRAFFIC_CONFIG), e.g. ``{"simulate": {"owd_us": 1000}}``.
Explicit flags win over the config file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dists
from .dists import DegenerateDataError, FitError
from .flows import NoVideoFlowError
from .frames import AnalyzerConfig, InsufficientFramesError, frames_from_jsonl, frames_to_jsonl
from .generator import BurstMode, TrafficModel, add_ideal_acks, generate_frames, packetize
from .linksim import LinkConfig, capacity_sweep, simulate_link, sweep_to_csv
from .metrics import (MetricsReport, NoLatencySamplesError, analyze_trace, comparison_table,
                      reports_to_csv, summarize_frames)
from .presets import BEAT_SABER_CLOUD_IAT, BEAT_SABER_CLOUD_SIZE, THROTTLE_LIMITS_MBPS
from .trace import TraceParseError, format_for_path, read_trace_file, write_trace

log = logging.getLogger("vrtraffic")

CONFIG_ENV = "VRTRAFFIC_CONFIG"

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3

DEFAULTS = {
    "analyze": {"delta_t_thr_ms": 3.0, "mtu": 1514, "ack_max_len": 60, "ack_grace_ms": 0.0,
                "format": "json", "jobs": 1},
    "fit": {"field": "size", "bins": dists.DEFAULT_BINS, "delta_t_thr_ms": 3.0},
    "generate": {"duration": 30.0, "seed": 0, "burst_mode": "single", "intra_burst_gap_us": 1500,
                 "mtu": 1514},
    "simulate": {"queue_kib": 256.0, "owd_us": 2000, "ack_turnaround_us": 0, "delta_t_thr_ms": 3.0,
                 "jobs": 1},
    "report": {"format": "markdown", "layout": "table", "columns": "game,mode", "row_key": "limit"},
}


class InputError(Exception):
    """Bad paths or unreadable inputs (exit code 2)."""


def _atomic_write(path, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _emit(data: bytes | str, out: str | None) -> None:
    if out:
        _atomic_write(out, data)
    else:
        sys.stdout.write(data.decode() if isinstance(data, bytes) else data)
        sys.stdout.flush()


def _check_inputs(paths) -> None:
    for p in paths:
        if not Path(p).is_file():
            raise InputError(f"cannot read input file: {p}")


def _check_output_dir(path) -> None:
    if path and not Path(path).resolve().parent.is_dir():
        raise InputError(f"output directory does not exist: {Path(path).parent}")


def _labels(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InputError(f"--label expects key=value, got {item!r}")
        out[key] = value
    return out


def _analyzer(args) -> AnalyzerConfig:
    return AnalyzerConfig(
        delta_t_thr=round(args.delta_t_thr_ms * 1000),
        mtu_len=getattr(args, "mtu", 1514),
        ack_max_len=getattr(args, "ack_max_len", 60),
        ack_grace=round(getattr(args, "ack_grace_ms", 0.0) * 1000),
    )


# --- analyze -----------------------------------------------------------------

def _analyze_one(path: str, cfg: AnalyzerConfig, labels: dict):
    trace = read_trace_file(path, metadata={"trace": Path(path).name, **labels})
    fs = analyze_trace(trace, cfg)
    return summarize_frames(fs, trace.metadata), frames_to_jsonl(fs)


def cmd_analyze(args) -> int:
    _check_inputs(args.inputs)
    _check_output_dir(args.out)
    cfg = _analyzer(args)
    labels = _labels(args.label)
    if args.jobs > 1 and len(args.inputs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_analyze_one, args.inputs, [cfg] * len(args.inputs),
                                    [labels] * len(args.inputs)))
    else:
        results = [_analyze_one(p, cfg, labels) for p in args.inputs]

    if args.frames_out:
        if len(args.inputs) == 1:
            _atomic_write(args.frames_out, results[0][1])
        else:
            os.makedirs(args.frames_out, exist_ok=True)
            for path, (_, frames) in zip(args.inputs, results):
                _atomic_write(Path(args.frames_out) / f"{Path(path).stem}.frames.jsonl", frames)

    reports = [r for r, _ in results]
    for r in reports:
        log.info("%s: %d frames, %.2f Mbps, loss %.4f", r.labels.get("trace"), r.frame_count,
                 r.data_rate, r.frame_loss_rate)
    if args.format == "csv":
        text = reports_to_csv(reports)
    elif len(reports) == 1:
        text = reports[0].to_json() + "\n"
    else:
        text = json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


# --- fit ---------------------------------------------------------------------

def _load_frames(path: str, cfg: AnalyzerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Frame sizes (bytes) and first-TX times (us) from a frames JSONL or a packet trace."""
    raw = Path(path).read_bytes()
    first = raw.split(b"\n", 1)[0]
    is_trace = str(path).endswith(".csv") or b'"ts_us"' in first
    if is_trace:
        fs = analyze_trace(read_trace_file(path), cfg)
        sizes = [f.size for f in fs.frames]
        starts = [f.first_tx for f in fs.frames]
    else:
        try:
            rows = frames_from_jsonl(raw)
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from None
        sizes = [r["size"] for r in rows]
        starts = [r["first_tx_us"] for r in rows]
    return np.asarray(sizes, dtype=float), np.asarray(starts, dtype=float)


def cmd_fit(args) -> int:
    _check_inputs([args.frames])
    _check_output_dir(args.out)
    sizes, starts = _load_frames(args.frames, _analyzer(args))
    if args.field == "size":
        samples = sizes
    else:
        samples = np.diff(starts) / 1000.0  # ms
    dist = args.dist or ("loglogistic" if args.field == "size" else "burr")
    result = dists.FITTERS[dist](samples, bins=args.bins)
    log.info("fitted %s to %d %s samples: %s (R^2=%.4f)", dist, result.n_samples, args.field,
             result.params.as_dict(), result.r_squared)
    _emit(result.to_model_json() + "\n", args.out)
    return EXIT_OK


# --- generate ----------------------------------------------------------------

def _read_model(path, expected: str, fallback):
    if path is None:
        return fallback
    _check_inputs([path])
    try:
        model = dists.load_model(Path(path).read_text())
    except (ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if model.name != expected:
        raise InputError(f"{path}: expected a {expected} model, got {model.name}")
    return model


def cmd_generate(args) -> int:
    _check_output_dir(args.out)
    size_model = _read_model(args.size_model, "loglogistic", BEAT_SABER_CLOUD_SIZE)
    iat_model = _read_model(args.iat_model, "burr", BEAT_SABER_CLOUD_IAT)
    model = TrafficModel(size_model, iat_model, duration=args.duration, seed=args.seed,
                         burst_mode=BurstMode(args.burst_mode), intra_burst_gap=args.intra_burst_gap_us,
                         mtu=args.mtu)
    fs = generate_frames(model)
    trace = packetize(fs, model.mtu, model.burst_mode, model.intra_burst_gap)
    if args.ack_delay_us is not None:
        trace = add_ideal_acks(trace, args.ack_delay_us)
    log.info("generated %d frames, %d packets", len(fs), len(trace))
    if args.frames_out:
        _atomic_write(args.frames_out, frames_to_jsonl(fs))
    fmt = args.format or (format_for_path(args.out) if args.out else "csv")
    _emit(write_trace(trace, fmt), args.out)
    return EXIT_OK


# --- simulate ----------------------------------------------------------------

def _suffixed(path: str, capacity: float, many: bool) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}_{capacity:g}Mbps{p.suffix}") if many else p


def _simulate_one(path: str, capacities, link: LinkConfig, cfg: AnalyzerConfig, trace_out):
    trace = read_trace_file(path, metadata={"trace": Path(path).name})
    points = capacity_sweep(trace, capacities, link, cfg)
    if trace_out:
        for cap in capacities:
            res = simulate_link(trace, replace(link, capacity=cap))
            _atomic_write(_suffixed(trace_out, cap, len(capacities) > 1),
                          write_trace(res.server_trace, format_for_path(trace_out)))
    return sweep_to_csv(points)


def cmd_simulate(args) -> int:
    _check_inputs(args.inputs)
    _check_output_dir(args.sweep_out)
    _check_output_dir(args.trace_out)
    if args.trace_out and len(args.inputs) > 1:
        raise InputError("--trace-out needs a single input trace")
    capacities = args.capacity_mbps or list(THROTTLE_LIMITS_MBPS)
    link = LinkConfig(capacity=max(capacities), queue_limit=round(args.queue_kib * 1024),
                      base_owd=args.owd_us, ack_turnaround=args.ack_turnaround_us)
    cfg = _analyzer(args)
    jobs = [(p, capacities, link, cfg, args.trace_out) for p in args.inputs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            tables = list(pool.map(_simulate_one, *zip(*jobs)))
    else:
        tables = [_simulate_one(*j) for j in jobs]
    if len(tables) == 1:
        text = tables[0]
    else:
        header, *_ = tables[0].splitlines()
        lines = ["trace," + header]
        for path, table in zip(args.inputs, tables):
            lines += [f"{Path(path).name},{row}" for row in table.splitlines()[1:]]
        text = "\n".join(lines) + "\n"
    _emit(text, args.sweep_out)
    return EXIT_OK


# --- report ------------------------------------------------------------------

def cmd_report(args) -> int:
    _check_inputs(args.reports)
    _check_output_dir(args.out)
    reports = []
    for path in args.reports:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc.msg}") from None
        items = data if isinstance(data, list) else [data]
        try:
            reports += [MetricsReport.from_dict(d) for d in items]
        except (TypeError, KeyError) as exc:
            raise InputError(f"{path}: not a metrics report ({exc})") from None
    if args.layout == "rows":
        text = reports_to_csv(reports)
    else:
        fmt = "csv" if args.format == "csv" else "markdown"
        text = comparison_table(reports, fmt, [c for c in args.columns.split(",") if c], args.row_key)
    _emit(text, args.out)
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def _analyzer_flags(p, full=True):
    p.add_argument("--delta-t-thr-ms", type=float, help="frame-split gap threshold in ms (default 3)")
    if full:
        p.add_argument("--mtu", type=int, help="MTU-sized packet length in bytes (default 1514)")
        p.add_argument("--ack-max-len", type=int, help="longest uplink packet treated as an ACK (default 60)")
        p.add_argument("--ack-grace-ms", type=float, help="shift of the ACK matching window in ms (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrtraffic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--config", help=f"JSON defaults file (or ${CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="frame metrics report for packet traces")
    p.add_argument("inputs", nargs="+", help="CSV or JSONL packet traces")
    _analyzer_flags(p)
    p.add_argument("--label", action="append", metavar="KEY=VALUE", help="label echoed in the report")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--frames-out", help="frame JSONL file (a directory for several inputs)")
    p.add_argument("--jobs", type=int, help="worker processes for several inputs")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="fit a frame size or inter-arrival model")
    p.add_argument("frames", help="frame JSONL from 'analyze --frames-out', or a packet trace")
    p.add_argument("--dist", choices=["loglogistic", "burr"],
                   help="default: loglogistic for size, burr for iat")
    p.add_argument("--field", choices=["size", "iat"])
    p.add_argument("--bins", type=int, help="histogram bins for R^2 (default 100)")
    _analyzer_flags(p, full=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", help="synthesize a packet trace from frame models")
    p.add_argument("--size-model", help="loglogistic model JSON (bytes)")
    p.add_argument("--iat-model", help="Burr model JSON (ms)")
    p.add_argument("--duration", type=float, help="seconds (default 30)")
    p.add_argument("--seed", type=int)
    p.add_argument("--burst-mode", choices=[m.value for m in BurstMode])
    p.add_argument("--intra-burst-gap-us", type=int)
    p.add_argument("--mtu", type=int)
    p.add_argument("--ack-delay-us", type=int, default=None,
                   help="also emit one uplink ACK per burst this many us later")
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--out")
    p.add_argument("--frames-out", help="also write the generated frames as JSONL")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="replay traces through a throttled bottleneck link")
    p.add_argument("inputs", nargs="+", help="downlink-only packet traces")
    p.add_argument("--capacity-mbps", type=float, action="append",
                   help="repeatable; default sweep is 54, 40.5 and 27")
    p.add_argument("--queue-kib", type=float)
    p.add_argument("--owd-us", type=int, help="one-way propagation delay (default 2000)")
    p.add_argument("--ack-turnaround-us", type=int)
    _analyzer_flags(p, full=False)
    p.add_argument("--trace-out", help="server-side capture of the simulated run (suffixed per capacity)")
    p.add_argument("--sweep-out", help="sweep CSV path (default stdout)")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="tabulate several analyze reports")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--format", choices=["markdown", "csv"])
    p.add_argument("--layout", choices=["table", "rows"],
                   help="table: metric blocks by rate limit; rows: one CSV row per report")
    p.add_argument("--columns", help="comma-separated label keys forming table columns")
    p.add_argument("--row-key", help="label key for table rows")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_defaults(args) -> None:
    config = {}
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        try:
            config = json.loads(Path(path).read_text()).get(args.command, {})
        except (OSError, json.JSONDecodeError, AttributeError) as exc:
            raise InputError(f"bad config file {path}: {exc}") from None
    for key, default in DEFAULTS[args.command].items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, default))
    for key in ("size_model", "iat_model", "out", "frames_out", "trace_out", "sweep_out",
                "label", "dist", "capacity_mbps"):
        if hasattr(args, key) and getattr(args, key) is None and key in config:
            setattr(args, key, config[key])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_defaults(args)
        return args.func(args)
    except (TraceParseError, InputError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (NoVideoFlowError, InsufficientFramesError, DegenerateDataError, NoLatencySamplesError,
            FitError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
