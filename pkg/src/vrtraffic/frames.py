"""Group downlink video packets into frames with an inter-packet gap threshold."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .trace import PacketRecord


class InsufficientFramesError(ValueError):
    pass


@dataclass(frozen=True)
class AnalyzerConfig:
    delta_t_thr: int = 3000  # us; a gap >= this starts a new frame
    mtu_len: int = 1514
    ack_max_len: int = 60
    ack_grace: int = 0  # us

    def __post_init__(self):
        if self.delta_t_thr <= 0:
            raise ValueError("delta_t_thr must be positive")
        if self.mtu_len <= self.ack_max_len:
            raise ValueError("mtu_len must exceed ack_max_len")
        if self.ack_grace < 0:
            raise ValueError("ack_grace must be non-negative")


@dataclass(frozen=True)
class FrameRecord:
    index: int
    size: int
    first_tx: int
    last_tx: int
    # slice of the video downlink packet list; None for synthesized frames
    packets: range | None = None
    ack_times: tuple[int, ...] = ()

    @property
    def acked(self) -> bool:
        return bool(self.ack_times)

    @property
    def latency(self) -> int | None:
        """Last ACK reception minus first data transmission, in us."""
        return max(self.ack_times) - self.first_tx if self.ack_times else None

    def to_dict(self) -> dict:
        return {"i": self.index, "size": self.size, "first_tx_us": self.first_tx,
                "latency_us": self.latency, "acked": self.acked}


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[FrameRecord, ...]
    config: AnalyzerConfig = field(default_factory=AnalyzerConfig)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]


def identify_frames(video_downlink: Sequence[PacketRecord], cfg: AnalyzerConfig | None = None) -> FrameSequence:
    """Split time-sorted packets into maximal runs whose successive gaps are < delta_t_thr."""
    cfg = cfg or AnalyzerConfig()
    if not video_downlink:
        raise ValueError("no video packets")
    ts = [p.ts for p in video_downlink]
    cuts = [0]
    for i in range(1, len(ts)):
        gap = ts[i] - ts[i - 1]
        if gap < 0:
            raise ValueError("video packets are not sorted by timestamp")
        if gap >= cfg.delta_t_thr:
            cuts.append(i)
    cuts.append(len(ts))

    frames = []
    for k in range(len(cuts) - 1):
        lo, hi = cuts[k], cuts[k + 1]
        frames.append(FrameRecord(
            index=k,
            size=sum(p.length for p in video_downlink[lo:hi]),
            first_tx=ts[lo],
            last_tx=ts[hi - 1],
            packets=range(lo, hi),
        ))
    return FrameSequence(tuple(frames), cfg)


def frame_sizes(fs: FrameSequence) -> list[int]:
    return [f.size for f in fs.frames]


def inter_arrival_times(fs: FrameSequence) -> list[int]:
    """First-packet to first-packet spacing of consecutive frames (us)."""
    if len(fs.frames) < 2:
        raise InsufficientFramesError("insufficient frames")
    return [b.first_tx - a.first_tx for a, b in zip(fs.frames, fs.frames[1:])]


def frames_to_jsonl(fs: FrameSequence) -> bytes:
    return "".join(json.dumps(f.to_dict(), separators=(",", ":")) + "\n" for f in fs.frames).encode()


def frames_from_jsonl(data: bytes | str) -> list[dict]:
    """Read the frame JSONL back as plain dicts (keys i, size, first_tx_us, ...)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    rows = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: invalid JSON: {exc.msg}") from None
        for key in ("size", "first_tx_us"):
            if type(row.get(key)) is not int:
                raise ValueError(f"line {lineno}: field {key} must be an integer")
        rows.append(row)
    return rows
