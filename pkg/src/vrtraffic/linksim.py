"""Rate-limited FIFO bottleneck with a tail-drop byte buffer and ACK emulation.

The link is a single deterministic server, so the event loop reduces to
the Lindley recursion: a packet starts service at max(arrival, previous
finish). Buffer occupancy counts every accepted packet that has not
finished serialization, including the one on the wire.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .frames import AnalyzerConfig, FrameSequence
from .metrics import MetricsReport, analyze_trace, summarize_frames
from .trace import Direction, PacketRecord, PacketTrace

ACK_LEN = 60


@dataclass(frozen=True)
class LinkConfig:
    capacity: float  # Mbps, i.e. bits per microsecond
    queue_limit: int = 256 * 1024  # bytes
    base_owd: int = 2000  # us, each direction
    ack_turnaround: int = 0  # us
    ack_len: int = ACK_LEN
    mtu: int = 1514

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError("capacity must be > 0")
        if self.queue_limit <= self.mtu:
            raise ValueError("queue_limit must exceed the MTU")
        if self.base_owd < 0 or self.ack_turnaround < 0:
            raise ValueError("delays must be >= 0")


@dataclass(frozen=True)
class SimResult:
    delivered: PacketTrace  # downlink at headset arrival time, merged with the uplink ACKs
    server_trace: PacketTrace  # what a capture at the server sees: original TX times plus ACK RX times
    acks: tuple[PacketRecord, ...]
    ack_bursts: tuple[int, ...]  # TX timestamp of the burst each ACK acknowledges
    lost_bursts: tuple[int, ...]  # TX timestamps of bursts that lost at least one packet
    dropped_packets: int
    delays: tuple[float, ...]  # us, per delivered packet, in delivery order
    dropped: tuple[bool, ...]  # per input packet

    @property
    def delivered_count(self) -> int:
        return len(self.delays)


def _ceil_us(t: float) -> int:
    # absorb float noise so exact integer instants are not pushed up by one
    return math.ceil(round(t, 6))


def simulate_link(trace: PacketTrace | Sequence[PacketRecord], cfg: LinkConfig) -> SimResult:
    packets = trace.packets if isinstance(trace, PacketTrace) else tuple(trace)
    metadata = trace.metadata if isinstance(trace, PacketTrace) else {}
    for a, b in zip(packets, packets[1:]):
        if b.ts < a.ts:
            raise ValueError("input packets are not sorted by timestamp")
    if any(p.direction is not Direction.DOWNLINK for p in packets):
        raise ValueError("link simulation expects downlink packets only")

    in_service: deque[tuple[float, int]] = deque()  # (finish time, length)
    queued = 0
    busy_until = -math.inf
    delivered, delays, dropped = [], [], []
    # a burst is acknowledged once its final packet arrives, and only if no packet
    # of it was dropped (an incomplete frame cannot be decoded); None marks a loss
    burst_tail: dict[tuple[int, tuple[int, int]], tuple[float, PacketRecord] | None] = {}

    for p in packets:
        while in_service and in_service[0][0] <= p.ts:
            queued -= in_service.popleft()[1]
        if queued + p.length > cfg.queue_limit:
            dropped.append(True)
            burst_tail[p.ts, p.port_pair] = None
            continue
        dropped.append(False)
        key = (p.ts, p.port_pair)
        start = max(float(p.ts), busy_until)
        busy_until = start + p.length * 8.0 / cfg.capacity
        in_service.append((busy_until, p.length))
        queued += p.length
        arrival = busy_until + cfg.base_owd
        delays.append(arrival - p.ts)
        delivered.append(PacketRecord(_ceil_us(arrival), p.direction, p.src_port, p.dst_port, p.length))
        if burst_tail.get(key, ()) is not None:
            burst_tail[key] = (arrival, p)

    acked_bursts = []
    for tail in burst_tail.values():
        if tail is None:
            continue
        arrival, p = tail
        ack = PacketRecord(_ceil_us(arrival + cfg.ack_turnaround + cfg.base_owd), Direction.UPLINK,
                           p.dst_port, p.src_port, cfg.ack_len)
        acked_bursts.append((p.ts, ack))
    acked_bursts.sort(key=lambda x: x[1].ts)
    acks = [a for _, a in acked_bursts]
    return SimResult(
        delivered=PacketTrace.from_unsorted([*delivered, *acks], metadata=metadata),
        server_trace=PacketTrace.from_unsorted([*packets, *acks], metadata=metadata),
        acks=tuple(acks),
        ack_bursts=tuple(ts for ts, _ in acked_bursts),
        lost_bursts=tuple(sorted(ts for (ts, _), tail in burst_tail.items() if tail is None)),
        dropped_packets=sum(dropped),
        delays=tuple(delays),
        dropped=tuple(dropped),
    )


def attribute_acks(fs: FrameSequence, res: SimResult) -> FrameSequence:
    """Attach ACKs to frames using the simulator's own burst bookkeeping.

    This is the exact association that timing-based matching tries to
    recover; it stays correct when latency exceeds the frame interval.
    A frame with any incomplete burst gets no ACKs, so it counts as lost
    even if its other eye half made it through.
    """
    starts = [f.first_tx for f in fs.frames]

    def frame_of(burst_ts):
        idx = bisect_right(starts, burst_ts) - 1
        return idx if idx >= 0 and burst_ts <= fs.frames[idx].last_tx else None

    broken = {frame_of(ts) for ts in res.lost_bursts}
    assigned: list[list[int]] = [[] for _ in starts]
    for burst_ts, ack in zip(res.ack_bursts, res.acks):
        idx = frame_of(burst_ts)
        if idx is not None and idx not in broken:
            assigned[idx].append(ack.ts)
    return replace(fs, frames=tuple(replace(f, ack_times=tuple(a)) for f, a in zip(fs.frames, assigned)))


@dataclass(frozen=True)
class SweepPoint:
    capacity: float
    dropped_packets: int
    mean_delay_us: float
    report: MetricsReport  # frame metrics with simulator-attributed ACKs
    window_report: MetricsReport  # same trace through the timing-window analyzer

    @property
    def loss_rate(self) -> float:
        return self.report.frame_loss_rate

    @property
    def avg_latency_ms(self) -> float | None:
        return self.report.avg_frame_latency


def capacity_sweep(trace: PacketTrace, capacities: Iterable[float], base: LinkConfig | None = None,
                   analyzer: AnalyzerConfig | None = None) -> list[SweepPoint]:
    """Simulate ``trace`` at each capacity and compute frame metrics for the server-side capture."""
    base = base or LinkConfig(capacity=1.0)
    analyzer = analyzer or AnalyzerConfig()
    points = []
    for cap in capacities:
        res = simulate_link(trace, replace(base, capacity=cap))
        mean_delay = sum(res.delays) / len(res.delays) if res.delays else math.nan
        windowed = analyze_trace(res.server_trace, analyzer)
        exact = attribute_acks(windowed, res)
        points.append(SweepPoint(cap, res.dropped_packets, mean_delay,
                                 summarize_frames(exact, trace.metadata),
                                 summarize_frames(windowed, trace.metadata)))
    return points


def _ms(v: float | None) -> str:
    return "" if v is None else f"{v:.3f}"


def sweep_to_csv(points: Sequence[SweepPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["capacity", "loss_rate", "avg_latency_ms", "window_loss_rate", "window_latency_ms",
                "dropped_packets", "mean_packet_delay_ms"])
    for pt in points:
        w.writerow([f"{pt.capacity:g}", f"{pt.loss_rate:.6f}", _ms(pt.avg_latency_ms),
                    f"{pt.window_report.frame_loss_rate:.6f}", _ms(pt.window_report.avg_frame_latency),
                    pt.dropped_packets, f"{pt.mean_delay_us / 1000:.3f}"])
    return buf.getvalue()
