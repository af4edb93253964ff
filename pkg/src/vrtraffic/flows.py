"""Label port pairs as video, audio or control flows from their size signatures."""

from __future__ import annotations

import enum
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .trace import Direction, PacketTrace


class FlowLabel(str, enum.Enum):
    VIDEO = "Video"
    AUDIO = "Audio"
    CONTROL = "Control"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class FlowSignatures:
    """Exact packet lengths (bytes, on-wire) that identify each flow type."""

    mtu_len: int = 1514
    ack_max_len: int = 60
    control_uplink: int = 358
    control_downlink_ack: int = 54
    audio_downlink: int = 1222
    audio_uplink: int = 390


@dataclass(frozen=True)
class FlowEvidence:
    downlink_bytes: int
    uplink_bytes: int
    downlink_packets: int
    uplink_packets: int
    modal_downlink_len: int | None
    modal_uplink_len: int | None
    # modes over packets longer than the ACK size, i.e. payload-bearing ones
    modal_downlink_data_len: int | None
    modal_uplink_data_len: int | None


@dataclass(frozen=True)
class FlowMap:
    entries: dict[tuple[int, int], FlowLabel]
    evidence: dict[tuple[int, int], FlowEvidence] = field(default_factory=dict)

    def ports_for(self, label: FlowLabel) -> list[tuple[int, int]]:
        return [k for k, v in self.entries.items() if v is label]

    @property
    def video(self) -> tuple[int, int] | None:
        found = self.ports_for(FlowLabel.VIDEO)
        return found[0] if found else None

    def to_json(self) -> str:
        flows = []
        for ports in sorted(self.entries):
            ev = self.evidence[ports]
            flows.append({"ports": list(ports), "label": self.entries[ports].value, **ev.__dict__})
        return json.dumps({"flows": flows}, sort_keys=False)


class NoVideoFlowError(ValueError):
    """No port pair carries the MTU-sized downlink signature of a video flow."""

    def __init__(self, flow_map: FlowMap):
        self.flow_map = flow_map
        super().__init__("no video flow found")


def _mode(counter: Counter) -> int | None:
    if not counter:
        return None
    # most frequent; ties go to the smaller length so the result is deterministic
    return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def _evidence(trace: PacketTrace, ack_max_len: int) -> dict[tuple[int, int], FlowEvidence]:
    lens = defaultdict(lambda: {Direction.DOWNLINK: Counter(), Direction.UPLINK: Counter()})
    for p in trace.packets:
        lens[p.port_pair][p.direction][p.length] += 1
    out = {}
    for ports, by_dir in lens.items():
        dl, ul = by_dir[Direction.DOWNLINK], by_dir[Direction.UPLINK]
        out[ports] = FlowEvidence(
            downlink_bytes=sum(k * v for k, v in dl.items()),
            uplink_bytes=sum(k * v for k, v in ul.items()),
            downlink_packets=sum(dl.values()),
            uplink_packets=sum(ul.values()),
            modal_downlink_len=_mode(dl),
            modal_uplink_len=_mode(ul),
            modal_downlink_data_len=_mode(Counter({k: v for k, v in dl.items() if k > ack_max_len})),
            modal_uplink_data_len=_mode(Counter({k: v for k, v in ul.items() if k > ack_max_len})),
        )
    return out


def classify_flows(trace: PacketTrace, sig: FlowSignatures | None = None) -> FlowMap:
    """Assign a FlowLabel to every port pair in ``trace``.

    Video is the highest-volume pair whose modal downlink length is the
    MTU. Control needs modal uplink 358 B with 54 B downlink ACKs; audio
    needs 1222 B downlink data and 390 B uplink data. Raises
    NoVideoFlowError (carrying the partial map) when no video flow exists.
    """
    if not trace.packets:
        raise ValueError("empty trace")
    sig = sig or FlowSignatures()
    evidence = _evidence(trace, sig.ack_max_len)
    labels = {ports: FlowLabel.UNKNOWN for ports in evidence}

    video_candidates = [p for p, ev in evidence.items() if ev.modal_downlink_len == sig.mtu_len]
    if video_candidates:
        video = min(video_candidates, key=lambda p: (-evidence[p].downlink_bytes, p))
        labels[video] = FlowLabel.VIDEO

    for ports, ev in evidence.items():
        if labels[ports] is not FlowLabel.UNKNOWN:
            continue
        if ev.modal_uplink_len == sig.control_uplink and ev.modal_downlink_len == sig.control_downlink_ack:
            labels[ports] = FlowLabel.CONTROL
        elif ev.modal_downlink_data_len == sig.audio_downlink and ev.modal_uplink_data_len == sig.audio_uplink:
            labels[ports] = FlowLabel.AUDIO

    flow_map = FlowMap(labels, evidence)
    if not video_candidates:
        raise NoVideoFlowError(flow_map)
    return flow_map
