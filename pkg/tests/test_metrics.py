import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vrtraffic.flows import NoVideoFlowError
from vrtraffic.frames import AnalyzerConfig, FrameRecord, FrameSequence
from vrtraffic.generator import BurstMode, add_ideal_acks, packetize
from vrtraffic.linksim import LinkConfig, simulate_link
from vrtraffic.metrics import (MetricsReport, NoLatencySamplesError, analyze_trace, comparison_table,
                               frame_latency, frame_loss_rate, match_acks, reports_to_csv, summarize)
from vrtraffic.trace import Direction, PacketRecord, PacketTrace


def frames_at(*starts):
    return FrameSequence(tuple(FrameRecord(i, 1514, t, t) for i, t in enumerate(starts)))


def acks(*ts, length=60):
    return [PacketRecord(t, Direction.UPLINK, 54321, 9000, length) for t in ts]


def test_match_two_frames():
    fs = match_acks(frames_at(0, 12_000), acks(5_000, 14_000))
    assert [f.ack_times for f in fs] == [(5_000,), (14_000,)]


def test_ack_before_first_frame_ignored():
    fs = match_acks(frames_at(1_000, 12_000), acks(500, 2_000))
    assert [f.ack_times for f in fs] == [(2_000,), ()]


def test_long_uplink_packets_are_not_acks():
    fs = match_acks(frames_at(0), acks(100, length=358))
    assert fs[0].ack_times == ()


def test_grace_moves_late_acks_to_previous_frame():
    fs = match_acks(frames_at(0, 11_000), acks(12_000), AnalyzerConfig(ack_grace=2_000))
    assert [f.ack_times for f in fs] == [(12_000,), ()]
    fs = match_acks(frames_at(0, 11_000), acks(12_000))
    assert [f.ack_times for f in fs] == [(), (12_000,)]


def test_loss_two_of_hundred():
    starts = [i * 11_000 for i in range(100)]
    ack_ts = [t + 4_000 for i, t in enumerate(starts) if i not in (17, 63)]
    fs = match_acks(frames_at(*starts), acks(*ack_ts))
    assert frame_loss_rate(fs) == pytest.approx(0.02, abs=0)


def test_all_acked():
    fs = match_acks(frames_at(0, 11_000), acks(1_000, 12_000))
    assert frame_loss_rate(fs) == 0.0


def test_loss_needs_frames():
    with pytest.raises(ValueError):
        frame_loss_rate(FrameSequence(()))


def test_latency_arithmetic():
    # first data TX at 10.0 ms, last ACK RX at 37.6 ms
    fs = match_acks(frames_at(10_000), acks(20_000, 37_600))
    assert frame_latency(fs) == [27_600]


def test_single_packet_latency():
    fs = match_acks(frames_at(0), acks(1_000))
    assert frame_latency(fs) == [1_000]


def test_no_latency_samples():
    with pytest.raises(NoLatencySamplesError, match="no latency samples"):
        frame_latency(frames_at(0, 10_000))


@given(st.lists(st.integers(3_000, 20_000), min_size=1, max_size=60),
       st.lists(st.integers(0, 400_000), max_size=80))
def test_loss_and_latency_invariants(gaps, ack_ts):
    starts = [0]
    for g in gaps:
        starts.append(starts[-1] + g)
    fs = match_acks(frames_at(*starts), acks(*sorted(ack_ts)))
    acked = sum(1 for f in fs if f.ack_times)
    assert frame_loss_rate(fs) == (len(fs) - acked) / len(fs)
    assert frame_loss_rate(fs) == pytest.approx(1 - acked / len(fs), abs=1e-15)
    if acked:
        lat = frame_latency(fs)
        assert len(lat) == acked
        assert all(v >= 0 for v in lat)
    # every ACK at or after the first frame lands somewhere, exactly once
    assert sum(len(f.ack_times) for f in fs) == sum(1 for t in ack_ts if t >= 0)


def mtu_frames(starts, packets_per_frame):
    return FrameSequence(tuple(FrameRecord(i, 1514 * packets_per_frame, t, t) for i, t in enumerate(starts)))


@pytest.mark.parametrize("mode", list(BurstMode))
def test_closed_loop_latency_matches_link_delays(mode):
    # 12112 Mbps serializes one 1514 B packet in exactly 1 us
    d = 2_000
    starts = [i * 11_111 for i in range(200)]
    trace = packetize(mtu_frames(starts, 8), burst_mode=mode)
    res = simulate_link(trace, LinkConfig(capacity=12_112, base_owd=d))
    fs = analyze_trace(res.server_trace)
    assert all(f.ack_times for f in fs)
    # last burst: 8 (single) or 4 (two bursts) packets of 1 us each, then one-way delay both ways
    last_burst = 8 if mode is BurstMode.SINGLE else 4
    assert frame_latency(fs) == [(f.last_tx - f.first_tx) + last_burst + 2 * d for f in fs]


def ninety_hz_trace(n=900, size=58_000, ack_delay=4_000):
    starts = [round(i * 1e6 / 90) for i in range(n)]
    fs = FrameSequence(tuple(FrameRecord(i, size, t, t) for i, t in enumerate(starts)))
    return add_ideal_acks(packetize(fs), ack_delay)


def test_summarize_ninety_hz():
    r = summarize(ninety_hz_trace())
    assert r.avg_inter_arrival == pytest.approx(11.111, abs=0.001)
    assert r.data_rate == pytest.approx(58_000 * 8 * 90 / 1e6, rel=2e-3)
    assert r.frame_loss_rate == 0
    assert r.avg_frame_latency == pytest.approx(4.0)
    assert r.frame_count == 900
    assert r.avg_frame_size * r.frame_count == r.total_bytes == 900 * 58_000


def test_summarize_without_video():
    t = PacketTrace.from_unsorted([PacketRecord(i, Direction.DOWNLINK, 1, 2, 100) for i in range(10)])
    with pytest.raises(NoVideoFlowError, match="no video flow found"):
        summarize(t)


def test_summarize_without_acks_reports_total_loss():
    fs = FrameSequence(tuple(FrameRecord(i, 3028, i * 11_000, i * 11_000) for i in range(10)))
    r = summarize(packetize(fs))
    assert r.frame_loss_rate == 1.0
    assert r.avg_frame_latency is None


def test_report_is_deterministic():
    t = ninety_hz_trace(50)
    assert summarize(t).to_json() == summarize(t).to_json()
    d = json.loads(summarize(t).to_json())
    assert set(d) == {"avg_frame_size", "data_rate", "avg_inter_arrival", "frame_loss_rate",
                      "avg_frame_latency", "frame_count", "duration", "total_bytes", "labels"}
    assert MetricsReport.from_dict(d) == summarize(t)


def _report(**labels):
    return MetricsReport(58000.0, 40.0, 11.1, 0.01, 25.0, 100, 1.1, 5_800_000, labels)


def test_comparison_table_blocks():
    reports = [_report(game=g, mode=m, limit=lim)
               for g in ("Beat Saber", "Steam VR Home") for m in ("Local", "Cloud")
               for lim in ("Normal", "54", "40.5", "27")]
    md = comparison_table(reports)
    lines = md.strip().splitlines()
    assert len(lines) == 2 + 5 * 4
    assert lines[0].count("|") == 2 + 4 + 1
    csv_text = comparison_table(reports, "csv")
    rows = csv_text.strip().splitlines()
    assert len(rows) == 1 + 20
    assert rows[1].startswith("Avg. frame size (byte),Normal,58000")
    assert rows[-1].startswith("Avg. frame latency (ms),27,25.0")


def test_comparison_table_single_report():
    csv_text = comparison_table([_report(game="g", mode="m", limit="27")], "csv")
    assert len(csv_text.strip().splitlines()) == 1 + 5


def test_comparison_table_empty():
    with pytest.raises(ValueError):
        comparison_table([])


def test_reports_csv_one_row_per_trace():
    text = reports_to_csv([_report(game="a"), _report(game="b", limit="27")])
    lines = text.strip().splitlines()
    assert lines[0].startswith("game,limit,avg_frame_size")
    assert len(lines) == 3
