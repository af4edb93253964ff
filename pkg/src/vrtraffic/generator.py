"""Synthetic VR video streams: sample frames from fitted models, then packetize them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dists import BurrParams, LogLogisticParams, draw
from .frames import FrameRecord, FrameSequence
from .presets import BEAT_SABER_CLOUD_IAT, BEAT_SABER_CLOUD_SIZE
from .trace import Direction, PacketRecord, PacketTrace

SYNTHETIC_PORTS = (9000, 54321)  # (server, headset)
ACK_LEN = 60


class BurstMode(str, enum.Enum):
    SINGLE = "single"
    TWO = "two"  # left/right eye halves


@dataclass(frozen=True)
class TrafficModel:
    size_model: LogLogisticParams = BEAT_SABER_CLOUD_SIZE  # bytes
    iat_model: BurrParams = BEAT_SABER_CLOUD_IAT  # ms
    duration: float = 30.0  # s
    seed: int = 0
    burst_mode: BurstMode = BurstMode.SINGLE
    intra_burst_gap: int = 1500  # us, between the two halves in TWO mode
    mtu: int = 1514
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if self.intra_burst_gap < 0:
            raise ValueError("intra_burst_gap must be >= 0")
        object.__setattr__(self, "burst_mode", BurstMode(self.burst_mode))


def generate_frames(model: TrafficModel) -> FrameSequence:
    """Draw frame sizes and start times until the stream reaches ``model.duration``.

    Sizes are rounded to whole bytes with a floor of one MTU packet;
    inter-arrival times are rounded to whole microseconds with a floor of 1.
    """
    size_rng, iat_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(model.seed).spawn(2))
    horizon = round(model.duration * 1e6)
    chunk = max(64, math.ceil(horizon / max(model.iat_model.median() * 1000.0, 1.0) * 1.1))

    starts = [0]
    while starts[-1] < horizon:
        gaps = np.maximum(np.rint(draw(model.iat_model, chunk, iat_rng) * 1000.0), 1).astype(np.int64)
        t = starts[-1]
        for g in gaps.tolist():
            t += g
            starts.append(t)
            if t >= horizon:
                break
    # the last start time reached the horizon, so it is not part of the stream
    starts.pop()

    sizes = np.maximum(np.rint(draw(model.size_model, len(starts), size_rng)), model.mtu).astype(np.int64)
    frames = tuple(
        FrameRecord(index=i, size=int(s), first_tx=t, last_tx=t)
        for i, (s, t) in enumerate(zip(sizes.tolist(), starts))
    )
    return FrameSequence(frames)


def _burst(nbytes: int, mtu: int) -> list[int]:
    full, rem = divmod(nbytes, mtu)
    return [mtu] * full + ([rem] if rem else [])


def packetize(fs: FrameSequence, mtu: int = 1514, burst_mode: BurstMode | str = BurstMode.SINGLE,
              intra_burst_gap: int = 1500, ports: tuple[int, int] = SYNTHETIC_PORTS,
              metadata: dict | None = None) -> PacketTrace:
    """Turn frames into downlink MTU packets plus a remainder packet per burst.

    Every packet of a burst carries the burst's timestamp. In TWO mode the
    frame is split into two byte halves, the second sent
    ``intra_burst_gap`` us after the first.
    """
    burst_mode = BurstMode(burst_mode)
    src, dst = ports
    packets = []
    for f in fs.frames:
        if f.size < 1:
            raise ValueError(f"frame {f.index} has non-positive size")
        if burst_mode is BurstMode.SINGLE:
            bursts = [(f.first_tx, f.size)]
        else:
            first = (f.size + 1) // 2
            bursts = [(f.first_tx, first), (f.first_tx + intra_burst_gap, f.size - first)]
        for ts, nbytes in bursts:
            packets.extend(PacketRecord(ts, Direction.DOWNLINK, src, dst, n) for n in _burst(nbytes, mtu))
    return PacketTrace.from_unsorted(packets, metadata=dict(metadata or {}))


def generate_trace(model: TrafficModel) -> PacketTrace:
    return packetize(generate_frames(model), model.mtu, model.burst_mode,
                     model.intra_burst_gap, metadata=model.metadata)


def add_ideal_acks(trace: PacketTrace, delay: int, ack_len: int = ACK_LEN) -> PacketTrace:
    """Append one uplink ACK per same-timestamp downlink burst, ``delay`` us later."""
    acks = []
    seen = set()
    for p in trace.packets:
        if p.direction is Direction.DOWNLINK and (p.ts, p.port_pair) not in seen:
            seen.add((p.ts, p.port_pair))
            acks.append(PacketRecord(p.ts + delay, Direction.UPLINK, p.dst_port, p.src_port, ack_len))
    return PacketTrace.from_unsorted([*trace.packets, *acks], epoch=trace.epoch, metadata=trace.metadata)
