"""Sample every preset frame-size / inter-arrival model, refit it, and report recovery error.

    python scripts/refit_presets.py --n 50000

A quick check that the fitters recover all sixteen tabulated parameter sets,
not only the Beat Saber cloud one exercised by the test suite.
"""

import argparse
import time

from vrtraffic.dists import cdf_distance, fit_burr, fit_loglogistic, sample
from vrtraffic.presets import MODEL_TABLE


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50_000, help="samples per model")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print(f"{'game':14s} {'limit':>6s} {'LC':2s} {'mu':>8s} {'sigma':>7s} {'KS':>8s} "
          f"{'alpha':>7s} {'c':>7s} {'k':>6s} {'KS':>8s} {'s':>5s}")
    for i, ((game, limit, where), (size, iat)) in enumerate(sorted(MODEL_TABLE.items())):
        t0 = time.perf_counter()
        ll = fit_loglogistic(sample(size, args.n, args.seed + 2 * i))
        bu = fit_burr(sample(iat, args.n, args.seed + 2 * i + 1))
        print(f"{game:14s} {limit:>6s} {where:2s} {ll.params.mu:8.4f} {ll.params.sigma:7.4f} "
              f"{cdf_distance(ll.params, size):8.1e} {bu.params.alpha:7.3f} {bu.params.c:7.3f} "
              f"{bu.params.k:6.3f} {cdf_distance(bu.params, iat):8.1e} {time.perf_counter() - t0:5.1f}")


if __name__ == "__main__":
    main()
