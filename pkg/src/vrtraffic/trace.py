"""Canonical packet-trace model plus CSV/JSONL ingestion and serialization.

A trace is what a server-side capture exporter produces: one row per
packet with an integer microsecond timestamp, a direction, the port pair
and the on-wire (Ethernet) length.  pcap files are converted externally,
e.g.::

    tshark -r cap.pcap -T fields -E separator=, \\
        -e frame.time_relative -e udp.srcport -e udp.dstport -e frame.len

followed by a tiny script that scales time to integer microseconds and
assigns ``D``/``U`` from the server address.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

CSV_HEADER = "ts_us,dir,src_port,dst_port,len"
FIELDS = ("ts_us", "dir", "src_port", "dst_port", "len")


class TraceFormat(str, enum.Enum):
    CSV = "csv"
    JSONL = "jsonl"


class Direction(str, enum.Enum):
    DOWNLINK = "D"  # server -> headset
    UPLINK = "U"  # headset -> server


class TraceParseError(ValueError):
    """Malformed trace input; ``line`` is 1-based, ``field`` a column name."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True, slots=True)
class PacketRecord:
    ts: int
    direction: Direction
    src_port: int
    dst_port: int
    length: int

    def __post_init__(self):
        if self.ts < 0:
            raise ValueError(f"negative timestamp {self.ts}")
        if self.length < 1:
            raise ValueError(f"non-positive length {self.length}")
        for p in (self.src_port, self.dst_port):
            if not 0 <= p <= 65535:
                raise ValueError(f"port out of range: {p}")

    @property
    def port_pair(self) -> tuple[int, int]:
        """Unordered port pair, normalised as (low, high)."""
        a, b = self.src_port, self.dst_port
        return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class PacketTrace:
    packets: tuple[PacketRecord, ...]
    epoch: float = 0.0
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        pkts = tuple(self.packets)
        object.__setattr__(self, "packets", pkts)
        if any(pkts[i].ts > pkts[i + 1].ts for i in range(len(pkts) - 1)):
            raise ValueError("packets must be sorted by timestamp")

    @classmethod
    def from_unsorted(cls, packets: Iterable[PacketRecord], **kwargs) -> "PacketTrace":
        # sorted() is stable, so equal timestamps keep their input order
        return cls(tuple(sorted(packets, key=lambda p: p.ts)), **kwargs)

    def __len__(self) -> int:
        return len(self.packets)

    def select(self, direction: Direction, ports: tuple[int, int] | None = None) -> list[PacketRecord]:
        return [
            p for p in self.packets
            if p.direction is direction and (ports is None or p.port_pair == ports)
        ]


def _parse_int(text: str, line: int, name: str, *, lo: int, hi: int | None = None) -> int:
    if not text.isascii() or not text.isdigit():
        raise TraceParseError(f"expected non-negative integer, got {text!r}", line, name)
    value = int(text)
    if value < lo or (hi is not None and value > hi):
        raise TraceParseError(f"value {value} out of range", line, name)
    return value


def _parse_dir(text: str, line: int) -> Direction:
    try:
        return Direction(text)
    except ValueError:
        raise TraceParseError(f"direction must be D or U, got {text!r}", line, "dir") from None


def _row(line: int, ts: str, d: str, sp: str, dp: str, ln: str) -> PacketRecord:
    return PacketRecord(
        ts=_parse_int(ts, line, "ts", lo=0),
        direction=_parse_dir(d, line),
        src_port=_parse_int(sp, line, "src_port", lo=0, hi=65535),
        dst_port=_parse_int(dp, line, "dst_port", lo=0, hi=65535),
        length=_parse_int(ln, line, "len", lo=1),
    )


def _parse_csv(lines: list[str]) -> list[PacketRecord]:
    packets = []
    for lineno, text in enumerate(lines, start=1):
        if lineno == 1 and text == CSV_HEADER:
            continue
        cols = text.split(",")
        if len(cols) != 5:
            raise TraceParseError(f"expected 5 columns, got {len(cols)}", lineno)
        packets.append(_row(lineno, *cols))
    return packets


def _json_int(obj: dict, key: str, line: int) -> str:
    value = obj.get(key)
    # bool is an int subclass; reject it explicitly
    if type(value) is not int:
        raise TraceParseError(f"expected integer, got {value!r}", line, key)
    return str(value)


def _parse_jsonl(lines: list[str]) -> list[PacketRecord]:
    packets = []
    for lineno, text in enumerate(lines, start=1):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise TraceParseError("expected a JSON object", lineno)
        missing = [k for k in FIELDS if k not in obj]
        if missing:
            raise TraceParseError("missing key", lineno, missing[0])
        d = obj["dir"]
        if not isinstance(d, str):
            raise TraceParseError(f"expected string, got {d!r}", lineno, "dir")
        packets.append(_row(
            lineno,
            _json_int(obj, "ts_us", lineno),
            d,
            _json_int(obj, "src_port", lineno),
            _json_int(obj, "dst_port", lineno),
            _json_int(obj, "len", lineno),
        ))
    return packets


def parse_trace(data: bytes | str, fmt: TraceFormat | str = TraceFormat.CSV,
                metadata: Mapping[str, str] | None = None) -> PacketTrace:
    """Parse a CSV or JSONL trace.

    The CSV header line is optional on input. Rows are stably sorted by
    timestamp after parsing. Line numbers in errors count physical lines.
    """
    fmt = TraceFormat(fmt)
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TraceParseError(f"input is not UTF-8: {exc.reason}") from None
    if not data:
        raise TraceParseError("empty trace")
    lines = data.split("\n")
    if lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceParseError("empty trace")
    packets = _parse_csv(lines) if fmt is TraceFormat.CSV else _parse_jsonl(lines)
    return PacketTrace.from_unsorted(packets, metadata=dict(metadata or {}))


def write_trace(trace: PacketTrace, fmt: TraceFormat | str = TraceFormat.CSV) -> bytes:
    fmt = TraceFormat(fmt)
    if fmt is TraceFormat.CSV:
        out = [CSV_HEADER]
        out.extend(
            f"{p.ts},{p.direction.value},{p.src_port},{p.dst_port},{p.length}"
            for p in trace.packets
        )
    else:
        out = [
            json.dumps(dict(zip(FIELDS, (p.ts, p.direction.value, p.src_port, p.dst_port, p.length))),
                       separators=(",", ":"))
            for p in trace.packets
        ]
    return "".join(line + "\n" for line in out).encode("utf-8")


def format_for_path(path: str) -> TraceFormat:
    return TraceFormat.JSONL if str(path).endswith((".jsonl", ".ndjson")) else TraceFormat.CSV


def read_trace_file(path, fmt: TraceFormat | str | None = None, **kwargs) -> PacketTrace:
    with open(path, "rb") as fh:
        return parse_trace(fh.read(), fmt or format_for_path(path), **kwargs)


def write_trace_file(trace: PacketTrace, path, fmt: TraceFormat | str | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(write_trace(trace, fmt or format_for_path(path)))
