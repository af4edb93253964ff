"""Replay synthetic VR streams through a throttled link and tabulate frame loss and latency.

    python scripts/throttle_sweep.py --seconds 10 --out sweep.csv

Rows cover a fixed-rate 40 Mbps stream and a stream drawn from the Beat
Saber cloud models, each in single- and two-burst packetization.
"""

import argparse
import csv
import sys

from vrtraffic.frames import FrameRecord, FrameSequence
from vrtraffic.generator import BurstMode, TrafficModel, generate_frames, packetize
from vrtraffic.linksim import LinkConfig, capacity_sweep
from vrtraffic.presets import THROTTLE_LIMITS_MBPS


def fixed_rate(rate_mbps, fps, seconds):
    size = round(rate_mbps * 1e6 / 8 / fps)
    starts = [round(i * 1e6 / fps) for i in range(int(fps * seconds))]
    return FrameSequence(tuple(FrameRecord(i, size, t, t) for i, t in enumerate(starts)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rate-mbps", type=float, default=40.0, help="fixed-rate stream bit rate")
    ap.add_argument("--owd-us", type=int, default=2000)
    ap.add_argument("--queue-kib", type=float, default=256.0)
    ap.add_argument("--capacity", type=float, action="append",
                    help="Mbps, repeatable (default: 1000 plus the three throttle limits)")
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args(argv)

    caps = args.capacity or [1000.0, *THROTTLE_LIMITS_MBPS]
    link = LinkConfig(capacity=1.0, queue_limit=round(args.queue_kib * 1024), base_owd=args.owd_us)
    sources = {
        "fixed": fixed_rate(args.rate_mbps, 90, args.seconds),
        "model": generate_frames(TrafficModel(duration=args.seconds, seed=args.seed)),
    }
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["stream", "burst_mode", "capacity", "dropped_packets", "loss_rate", "avg_latency_ms",
                "window_loss_rate", "window_latency_ms"])
    for name, fs in sources.items():
        for mode in BurstMode:
            for p in capacity_sweep(packetize(fs, burst_mode=mode), caps, link):
                wl = p.window_report.avg_frame_latency
                w.writerow([name, mode.value, f"{p.capacity:g}", p.dropped_packets, f"{p.loss_rate:.4f}",
                            f"{p.avg_latency_ms:.2f}" if p.avg_latency_ms is not None else "",
                            f"{p.window_report.frame_loss_rate:.4f}", f"{wl:.2f}" if wl is not None else ""])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
