"""Loglogistic and Burr (type XII) distributions: densities, inverses, MLE fits, R^2, sampling.

Frame sizes are modelled as loglogistic in bytes, frame inter-arrival
times as Burr in milliseconds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import optimize

MIN_FIT_SAMPLES = 50
DEFAULT_BINS = 100


class FitError(RuntimeError):
    pass


class DegenerateDataError(ValueError):
    pass


def _positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"{name} must be > 0")
    return arr


def _probability(p):
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("p must lie in the open interval (0, 1)")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class LogLogisticParams:
    mu: float  # location of ln x
    sigma: float  # scale of ln x

    name = "loglogistic"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    def _z(self, x):
        return (np.log(x) - self.mu) / self.sigma

    def logpdf(self, x):
        x = _positive(x)
        z = self._z(x)
        a = np.abs(z)
        # e^z / (1 + e^z)^2 == e^-|z| / (1 + e^-|z|)^2, overflow-free
        return _out(-a - 2.0 * np.log1p(np.exp(-a)) - np.log(self.sigma) - np.log(x))

    def pdf(self, x):
        return _out(np.exp(self.logpdf(x)))

    def cdf(self, x):
        x = _positive(x)
        return _out(1.0 / (1.0 + np.exp(-self._z(x))))

    def quantile(self, p):
        p = _probability(p)
        return _out(np.exp(self.mu + self.sigma * (np.log(p) - np.log1p(-p))))

    def mean(self) -> float:
        if self.sigma >= 1:
            return math.inf
        ps = math.pi * self.sigma
        return math.exp(self.mu) * ps / math.sin(ps)

    def median(self) -> float:
        return math.exp(self.mu)

    def as_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class BurrParams:
    alpha: float  # scale
    c: float  # shape
    k: float  # shape

    name = "burr"

    def __post_init__(self):
        if not (self.alpha > 0 and self.c > 0 and self.k > 0):
            raise ValueError("alpha, c and k must all be > 0")

    def _log1p_yc(self, x):
        # log(1 + (x/alpha)^c) without overflowing for large c
        return np.logaddexp(0.0, self.c * np.log(x / self.alpha))

    def logpdf(self, x):
        x = _positive(x)
        ly = np.log(x / self.alpha)
        return _out(math.log(self.k * self.c / self.alpha) + (self.c - 1.0) * ly
                    - (self.k + 1.0) * np.logaddexp(0.0, self.c * ly))

    def pdf(self, x):
        return _out(np.exp(self.logpdf(x)))

    def cdf(self, x):
        x = _positive(x)
        return _out(-np.expm1(-self.k * self._log1p_yc(x)))

    def quantile(self, p):
        p = _probability(p)
        # alpha * ((1-p)^(-1/k) - 1)^(1/c)
        return _out(self.alpha * np.expm1(-np.log1p(-p) / self.k) ** (1.0 / self.c))

    def mean(self) -> float:
        if self.c * self.k <= 1:
            return math.inf
        from scipy.special import beta
        return self.alpha * self.k * beta(self.k - 1.0 / self.c, 1.0 + 1.0 / self.c)

    def median(self) -> float:
        return float(self.quantile(0.5))

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "c": self.c, "k": self.k}


Params = Union[LogLogisticParams, BurrParams]


def loglogistic_pdf(x, p: LogLogisticParams):
    return p.pdf(x)


def burr_pdf(x, p: BurrParams):
    return p.pdf(x)


def loglogistic_quantile(prob, params: LogLogisticParams):
    return params.quantile(prob)


def burr_quantile(prob, params: BurrParams):
    return params.quantile(prob)


# --- goodness of fit ----------------------------------------------------

def r_squared(samples, pdf: Callable, bins: int = DEFAULT_BINS) -> float:
    """Coefficient of determination between a density histogram and ``pdf`` at bin centres."""
    if bins < 10:
        raise ValueError("bins must be >= 10")
    x = np.asarray(samples, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise DegenerateDataError("degenerate sample range (max == min)")
    density, edges = np.histogram(x, bins=bins, range=(lo, hi), density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    predicted = np.asarray(pdf(centres), dtype=float)
    ss_res = float(np.sum((density - predicted) ** 2))
    ss_tot = float(np.sum((density - density.mean()) ** 2))
    return 1.0 - ss_res / ss_tot


def cdf_distance(a: Params, b: Params, grid_points: int = 20001) -> float:
    """Sup-norm distance between two CDFs, evaluated on both models' quantile grids."""
    probs = np.linspace(0.0, 1.0, grid_points)[1:-1]
    probs = np.concatenate([probs, np.geomspace(1e-9, probs[0], 200), 1 - np.geomspace(1e-9, probs[0], 200)])
    xs = np.concatenate([a.quantile(probs), b.quantile(probs)])
    return float(np.max(np.abs(a.cdf(xs) - b.cdf(xs))))


def ks_statistic(samples, model: Params) -> float:
    """One-sample Kolmogorov-Smirnov statistic of ``samples`` against ``model``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    f = model.cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


# --- maximum likelihood ----------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    params: Params
    r_squared: float
    log_likelihood: float
    n_samples: int
    bins: int = DEFAULT_BINS

    def to_model_json(self) -> str:
        return json.dumps({"dist": self.params.name, "params": self.params.as_dict(),
                           "r2": self.r_squared, "n": self.n_samples})


def log_likelihood(samples, params: Params) -> float:
    return float(np.sum(params.logpdf(np.asarray(samples, dtype=float))))


def _check_samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} samples, got {len(x)}")
    if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite and > 0")
    if np.ptp(x) == 0:
        raise DegenerateDataError("all samples are equal; scale parameter would collapse to 0")
    return x


def _multistart(nll: Callable, starts: list[np.ndarray], what: str) -> np.ndarray:
    best, failures = None, []
    for x0 in starts:
        res = optimize.minimize(
            nll, x0, method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 10_000, "maxfev": 20_000},
        )
        if not (res.success and np.isfinite(res.fun)):
            failures.append(f"start={np.round(x0, 4).tolist()}: {res.message}")
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitError(f"{what} fit did not converge from any start: " + "; ".join(failures))
    return best.x


def _loglogistic_starts(lx: np.ndarray) -> tuple[float, float, list[np.ndarray]]:
    mu0 = float(np.median(lx))
    q1, q3 = np.percentile(lx, [25, 75])
    sigma0 = float(q3 - q1) / (2.0 * math.log(3.0))
    if not sigma0 > 0:
        sigma0 = float(np.std(lx)) * math.sqrt(3.0) / math.pi
    sigma_m = float(np.std(lx)) * math.sqrt(3.0) / math.pi
    starts = [
        np.array([mu0, math.log(sigma0)]),
        np.array([mu0, math.log(sigma0 / 2)]),
        np.array([mu0, math.log(sigma0 * 2)]),
        np.array([float(np.mean(lx)), math.log(sigma_m)]),
    ]
    return mu0, sigma0, starts


def fit_loglogistic(samples, bins: int = DEFAULT_BINS) -> FitResult:
    x = _check_samples(samples)
    lx = np.log(x)
    _, _, starts = _loglogistic_starts(lx)
    n = len(x)

    def nll(theta):
        mu, log_s = theta
        s = math.exp(log_s)
        z = (lx - mu) / s
        a = np.abs(z)
        return -float(np.mean(-a - 2.0 * np.log1p(np.exp(-a)))) + log_s + float(np.mean(lx))

    theta = _multistart(nll, starts, "loglogistic")
    params = LogLogisticParams(float(theta[0]), math.exp(theta[1]))
    return FitResult(params, r_squared(x, params.pdf, bins), log_likelihood(x, params), n, bins)


def fit_burr(samples, bins: int = DEFAULT_BINS) -> FitResult:
    x = _check_samples(samples)
    lx = np.log(x)
    mu0, sigma0, _ = _loglogistic_starts(lx)
    alpha0 = float(np.median(x))
    starts = [np.log([alpha0, c0, 1.0]) for c0 in (1.0, 5.0, 20.0)]
    # Burr with k = 1 is loglogistic(ln alpha, 1/c)
    starts.append(np.array([mu0, -math.log(sigma0), 0.0]))
    mean_lx = float(np.mean(lx))

    def nll(theta):
        la, lc, lk = theta
        c, k = math.exp(lc), math.exp(lk)
        ly = lx - la
        ll = lk + lc - la + (c - 1.0) * (mean_lx - la) - (k + 1.0) * float(np.mean(np.logaddexp(0.0, c * ly)))
        return -ll if math.isfinite(ll) else math.inf

    theta = _multistart(nll, starts, "burr")
    params = BurrParams(*(float(v) for v in np.exp(theta)))
    return FitResult(params, r_squared(x, params.pdf, bins), log_likelihood(x, params), len(x), bins)


FITTERS = {"loglogistic": fit_loglogistic, "burr": fit_burr}


# --- sampling ----------------------------------------------------------------

def draw(model: Params, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws using a caller-owned generator."""
    # uniform on (0, 1): the lower bound is excluded so the quantile stays finite
    u = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=n)
    return model.quantile(u) if n else np.empty(0)


def sample(model: Params, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.atleast_1d(draw(model, n, np.random.default_rng(seed)))


# --- model files ---------------------------------------------------------------

def params_from_dict(dist: str, params: dict) -> Params:
    if dist == "loglogistic":
        return LogLogisticParams(float(params["mu"]), float(params["sigma"]))
    if dist == "burr":
        return BurrParams(float(params["alpha"]), float(params["c"]), float(params["k"]))
    raise ValueError(f"unknown distribution {dist!r}")


def model_to_json(params: Params, r2: float | None = None, n: int | None = None) -> str:
    return json.dumps({"dist": params.name, "params": params.as_dict(), "r2": r2, "n": n})


def load_model(text: str) -> Params:
    d = json.loads(text)
    try:
        return params_from_dict(d["dist"], d["params"])
    except KeyError as exc:
        raise ValueError(f"model file missing key {exc}") from None
