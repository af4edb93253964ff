"""Published frame-size (loglogistic, bytes) and inter-arrival (Burr, ms) model parameters.

Keys are (game, rate limit, setup) with limit "Normal" meaning unthrottled
and setup "L" local / "C" cloud, all measured with adaptive bitrate.
"""

from .dists import BurrParams, LogLogisticParams

# (mu, sigma, alpha, c, k)
_ROWS = {
    ("Beat Saber", "Normal", "L"): (10.95, 0.11, 9.72, 21.29, 0.33),
    ("Beat Saber", "54", "L"): (10.86, 0.10, 9.41, 21.91, 0.26),
    ("Beat Saber", "40.5", "L"): (10.59, 0.12, 9.23, 25.22, 0.20),
    ("Beat Saber", "27", "L"): (10.24, 0.14, 9.12, 23.97, 0.19),
    ("Beat Saber", "Normal", "C"): (10.94, 0.13, 10.56, 19.21, 0.61),
    ("Beat Saber", "54", "C"): (10.73, 0.12, 10.38, 26.11, 0.38),
    ("Beat Saber", "40.5", "C"): (10.54, 0.13, 9.82, 28.88, 0.24),
    ("Beat Saber", "27", "C"): (10.22, 0.13, 9.78, 29.49, 0.21),
    ("Steam VR Home", "Normal", "L"): (10.96, 0.12, 12.35, 39.47, 0.39),
    ("Steam VR Home", "54", "L"): (10.83, 0.17, 12.97, 12.49, 0.79),
    ("Steam VR Home", "40.5", "L"): (10.58, 0.16, 12.98, 26.14, 0.55),
    ("Steam VR Home", "27", "L"): (10.25, 0.16, 13.17, 33.48, 0.39),
    ("Steam VR Home", "Normal", "C"): (10.91, 0.19, 13.27, 24.91, 0.76),
    ("Steam VR Home", "54", "C"): (10.74, 0.20, 12.10, 46.94, 0.26),
    ("Steam VR Home", "40.5", "C"): (10.47, 0.25, 12.82, 27.87, 0.44),
    ("Steam VR Home", "27", "C"): (10.91, 0.19, 12.34, 30.96, 0.30),
}

MODEL_TABLE: dict[tuple[str, str, str], tuple[LogLogisticParams, BurrParams]] = {
    key: (LogLogisticParams(mu, sigma), BurrParams(alpha, c, k))
    for key, (mu, sigma, alpha, c, k) in _ROWS.items()
}

BEAT_SABER_CLOUD_SIZE, BEAT_SABER_CLOUD_IAT = MODEL_TABLE["Beat Saber", "Normal", "C"]

# router throttling limits used in the measurements, Mbps
THROTTLE_LIMITS_MBPS = (54.0, 40.5, 27.0)
