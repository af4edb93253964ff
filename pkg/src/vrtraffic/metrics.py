"""Frame-level QoS metrics: ACK matching, frame loss, frame latency and trace summaries."""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_right
from dataclasses import asdict, dataclass, field, replace
from statistics import fmean
from typing import Sequence

from .flows import FlowSignatures, classify_flows
from .frames import AnalyzerConfig, FrameSequence, identify_frames, inter_arrival_times
from .trace import Direction, PacketRecord, PacketTrace


class NoLatencySamplesError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    avg_frame_size: float  # bytes
    data_rate: float  # Mbps (1e6 bit/s)
    avg_inter_arrival: float  # ms
    frame_loss_rate: float  # fraction
    avg_frame_latency: float | None  # ms; None when no frame was acked
    frame_count: int
    duration: float  # s
    total_bytes: int
    labels: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def match_acks(fs: FrameSequence, video_uplink: Sequence[PacketRecord],
               cfg: AnalyzerConfig | None = None) -> FrameSequence:
    """Attach each uplink ACK to the frame that was on the air when it came back.

    An ACK at time t belongs to the latest frame whose first packet left at
    or before t - grace, so each frame's window is
    [first_tx(f) + grace, first_tx(f+1) + grace). ACKs earlier than the
    first frame are dropped; packets longer than ack_max_len are not ACKs.
    """
    cfg = cfg or fs.config
    starts = [f.first_tx for f in fs.frames]
    if not starts:
        return fs
    assigned: list[list[int]] = [[] for _ in starts]
    for p in video_uplink:
        if p.length > cfg.ack_max_len or p.ts < starts[0]:
            continue
        idx = max(bisect_right(starts, p.ts - cfg.ack_grace) - 1, 0)
        assigned[idx].append(p.ts)
    frames = tuple(replace(f, ack_times=tuple(a)) for f, a in zip(fs.frames, assigned))
    return replace(fs, frames=frames)


def frame_loss_rate(fs: FrameSequence) -> float:
    """Number of frames without an ACK over the total number of frames."""
    if not fs.frames:
        raise ValueError("no frames")
    unacked = sum(1 for f in fs.frames if not f.ack_times)
    return unacked / len(fs.frames)


def frame_latency(fs: FrameSequence) -> list[int]:
    """Per acked frame: RX time of its last ACK minus TX time of its first packet (us)."""
    out = [f.latency for f in fs.frames if f.ack_times]
    if not out:
        raise NoLatencySamplesError("no latency samples")
    return out


def analyze_trace(trace: PacketTrace, cfg: AnalyzerConfig | None = None) -> FrameSequence:
    """Classify flows, identify video frames and match their ACKs."""
    cfg = cfg or AnalyzerConfig()
    flows = classify_flows(trace, FlowSignatures(mtu_len=cfg.mtu_len, ack_max_len=cfg.ack_max_len))
    video = flows.video
    downlink = trace.select(Direction.DOWNLINK, video)
    uplink = trace.select(Direction.UPLINK, video)
    return match_acks(identify_frames(downlink, cfg), uplink, cfg)


def summarize_frames(fs: FrameSequence, labels: dict | None = None) -> MetricsReport:
    iats = inter_arrival_times(fs)
    total = sum(f.size for f in fs.frames)
    # duration spans the first to the last video packet, not frame starts
    duration_us = fs.frames[-1].last_tx - fs.frames[0].first_tx
    try:
        latency_ms = fmean(frame_latency(fs)) / 1000.0
    except NoLatencySamplesError:
        latency_ms = None
    return MetricsReport(
        avg_frame_size=total / len(fs.frames),
        data_rate=total * 8 / duration_us,  # bit/us == Mbit/s
        avg_inter_arrival=fmean(iats) / 1000.0,
        frame_loss_rate=frame_loss_rate(fs),
        avg_frame_latency=latency_ms,
        frame_count=len(fs.frames),
        duration=duration_us / 1e6,
        total_bytes=total,
        labels=dict(labels or {}),
    )


def summarize(trace: PacketTrace, cfg: AnalyzerConfig | None = None) -> MetricsReport:
    return summarize_frames(analyze_trace(trace, cfg), trace.metadata)


# --- multi-trace exports -------------------------------------------------

_FLAT_FIELDS = ("avg_frame_size", "data_rate", "avg_inter_arrival", "frame_loss_rate",
                "avg_frame_latency", "frame_count", "duration", "total_bytes")

TABLE_METRICS = (
    ("Avg. frame size (byte)", lambda r: r.avg_frame_size, "{:.0f}"),
    ("Data rate (Mbps)", lambda r: r.data_rate, "{:.2f}"),
    ("Avg. frame inter-arrival time (ms)", lambda r: r.avg_inter_arrival, "{:.1f}"),
    ("Frame loss rate (%)", lambda r: r.frame_loss_rate * 100, "{:.2f}"),
    ("Avg. frame latency (ms)", lambda r: r.avg_frame_latency, "{:.1f}"),
)


def reports_to_csv(reports: Sequence[MetricsReport]) -> str:
    """One row per trace; label columns first, in order of first appearance."""
    label_keys: list[str] = []
    for r in reports:
        label_keys += [k for k in r.labels if k not in label_keys]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*label_keys, *_FLAT_FIELDS])
    for r in reports:
        d = r.to_dict()
        w.writerow([r.labels.get(k, "") for k in label_keys]
                   + ["" if d[k] is None else d[k] for k in _FLAT_FIELDS])
    return buf.getvalue()


def comparison_table(reports: Sequence[MetricsReport], fmt: str = "markdown",
                     column_keys: Sequence[str] = ("game", "mode"),
                     row_key: str = "limit") -> str:
    """Lay reports out as metric blocks, one row per rate limit and one column per game/mode."""
    if not reports:
        raise ValueError("no reports to tabulate")
    columns, rows, cells = [], [], {}
    for r in reports:
        col = " ".join(str(r.labels.get(k, "-")) for k in column_keys)
        row = str(r.labels.get(row_key, "-"))
        if col not in columns:
            columns.append(col)
        if row not in rows:
            rows.append(row)
        cells[row, col] = r

    table = []
    for name, get, fmt_str in TABLE_METRICS:
        for row in rows:
            line = [name, row]
            for col in columns:
                r = cells.get((row, col))
                value = get(r) if r is not None else None
                line.append("" if value is None else fmt_str.format(value))
            table.append(line)

    header = ["Metric", "Data rate limit (Mbps)", *columns]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(table)
        return buf.getvalue()
    if fmt != "markdown":
        raise ValueError(f"unknown table format {fmt!r}")
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    prev = None
    for line in table:
        shown = [line[0] if line[0] != prev else "", *line[1:]]
        prev = line[0]
        out.append("| " + " | ".join(shown) + " |")
    return "\n".join(out) + "\n"
