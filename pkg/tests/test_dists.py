import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bisect_quantile, burr_pdf_mp, integrate_pdf, loglogistic_pdf_mp
from vrtraffic.dists import (BurrParams, DegenerateDataError, LogLogisticParams, burr_pdf,
                             burr_quantile, cdf_distance, fit_burr, fit_loglogistic, ks_statistic,
                             load_model, log_likelihood, loglogistic_pdf, loglogistic_quantile,
                             model_to_json, r_squared, sample)
from vrtraffic.presets import MODEL_TABLE

LL = LogLogisticParams(10.94, 0.13)
BURR = BurrParams(10.56, 19.21, 0.61)

# frozen from the 50-digit mpmath evaluation in oracles.loglogistic_pdf_mp
LL_PDF_AT_MEDIAN = 3.41047620933623e-5
# frozen from bisection on the CDF (oracles.bisect_quantile)
BURR_Q90 = 12.837405105635082


def test_loglogistic_symmetry_point():
    assert loglogistic_pdf(1.0, LogLogisticParams(0.0, 1.0)) == pytest.approx(0.25, rel=1e-15)


def test_loglogistic_pdf_at_median():
    x = math.exp(10.94)
    assert loglogistic_pdf(x, LL) == pytest.approx(LL_PDF_AT_MEDIAN, rel=1e-12)
    assert loglogistic_pdf(x, LL) == pytest.approx(1 / (4 * 0.13 * x), rel=1e-12)
    assert loglogistic_pdf(56388, LL) == pytest.approx(3.41e-5, rel=1e-3)


def test_burr_at_scale():
    assert burr_pdf(1.0, BurrParams(1.0, 2.0, 1.0)) == pytest.approx(0.5, rel=1e-15)
    a, c, k = 10.56, 19.21, 0.61
    assert burr_pdf(a, BURR) == pytest.approx(k * c / (a * 2 ** (k + 1)), rel=1e-13)


@pytest.mark.parametrize("x", [0.3, 5.0, 10.0, 10.56, 11.2, 14.0, 40.0])
def test_burr_pdf_matches_high_precision(x):
    assert burr_pdf(x, BURR) == pytest.approx(float(burr_pdf_mp(x, 10.56, 19.21, 0.61)), rel=1e-11)


@pytest.mark.parametrize("x", [1e3, 3e4, 56388.0, 8e4, 5e5])
def test_loglogistic_pdf_matches_high_precision(x):
    assert loglogistic_pdf(x, LL) == pytest.approx(float(loglogistic_pdf_mp(x, 10.94, 0.13)), rel=1e-11)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_nonpositive_x_rejected(bad):
    with pytest.raises(ValueError):
        loglogistic_pdf(bad, LL)
    with pytest.raises(ValueError):
        burr_pdf(bad, BURR)


@pytest.mark.parametrize("key", sorted(MODEL_TABLE))
def test_normalization(key):
    size, iat = MODEL_TABLE[key]
    assert integrate_pdf(size.pdf, size.median(), size.sigma) == pytest.approx(1.0, abs=1e-6)
    assert integrate_pdf(iat.pdf, iat.median(), 1 / iat.c) == pytest.approx(1.0, abs=1e-6)


def test_quantiles():
    assert loglogistic_quantile(0.5, LL) == pytest.approx(math.exp(10.94), rel=1e-14)
    assert burr_quantile(1e-300, BURR) < 1e-10
    assert burr_quantile(0.9, BURR) == pytest.approx(BURR_Q90, rel=1e-12)
    assert bisect_quantile(BURR.cdf, 0.9, 1e-9, 1000.0) == pytest.approx(BURR_Q90, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(p):
    with pytest.raises(ValueError):
        loglogistic_quantile(p, LL)
    with pytest.raises(ValueError):
        burr_quantile(p, BURR)


def test_burr_cdf_closed_form_and_inverse():
    xs = np.random.default_rng(3).uniform(1.0, 30.0, 100)
    with mpmath.workdps(40):
        expect = [float(1 - (1 + (mpmath.mpf(x) / mpmath.mpf("10.56")) ** mpmath.mpf("19.21"))
                        ** -mpmath.mpf("0.61")) for x in xs]
    # the naive double-precision expression cancels badly in the left tail
    assert np.allclose(BURR.cdf(xs), expect, rtol=1e-12, atol=0)
    assert np.allclose(BURR.quantile(BURR.cdf(xs)), xs, rtol=1e-9)


@settings(max_examples=300)
@given(st.floats(1e-6, 1 - 1e-6), st.sampled_from(sorted(MODEL_TABLE)))
def test_cdf_quantile_round_trip(p, key):
    for m in MODEL_TABLE[key]:
        assert m.cdf(m.quantile(p)) == pytest.approx(p, rel=1e-10)


def test_param_validation():
    with pytest.raises(ValueError):
        LogLogisticParams(1.0, 0.0)
    with pytest.raises(ValueError):
        BurrParams(1.0, -1.0, 1.0)


def test_shape_trends():
    grid = np.linspace(1e3, 1e6, 200_001)
    for mu in (10.0, 10.94):
        a, b = LogLogisticParams(mu, 0.13).pdf(grid), LogLogisticParams(mu + 0.5, 0.13).pdf(grid)
        assert grid[b.argmax()] > grid[a.argmax()]
        assert b.max() < a.max()
    tgrid = np.linspace(0.1, 60, 200_001)
    a, b = BURR.pdf(tgrid), BurrParams(10.56 + 0.5, 19.21, 0.61).pdf(tgrid)
    assert tgrid[b.argmax()] > tgrid[a.argmax()]
    assert b.max() < a.max()


def test_sampling_deterministic():
    assert np.array_equal(sample(LL, 1000, 7), sample(LL, 1000, 7))
    assert not np.array_equal(sample(LL, 1000, 7), sample(LL, 1000, 8))
    with pytest.raises(ValueError):
        sample(LL, 0, 1)


def test_sample_median_and_mean():
    x = sample(LL, 10**6, 11)
    assert np.median(x) == pytest.approx(math.exp(10.94), rel=5e-3)
    closed = math.exp(10.94) * math.pi * 0.13 / math.sin(math.pi * 0.13)
    assert closed == pytest.approx(5.80e4, rel=1e-3)
    assert x.mean() == pytest.approx(closed, rel=0.01)


def test_sample_matches_model():
    assert ks_statistic(sample(BURR, 50_000, 2), BURR) < 0.01


def test_fit_rejects_constant_data():
    with pytest.raises(DegenerateDataError):
        fit_loglogistic([5e4] * 100)
    with pytest.raises(DegenerateDataError):
        fit_burr([11.0] * 100)


def test_fit_rejects_bad_samples():
    with pytest.raises(ValueError):
        fit_loglogistic([1.0] * 10)
    with pytest.raises(ValueError):
        fit_burr(list(range(-1, 99)))


@pytest.mark.parametrize("true, fitter", [
    (LogLogisticParams(10.5, 0.2), fit_loglogistic),
    (BurrParams(12.35, 39.47, 0.39), fit_burr),
    (BurrParams(13.0, 12.5, 0.8), fit_burr),
])
def test_fit_recovers_model(true, fitter):
    x = sample(true, 20_000, 4)
    res = fitter(x)
    assert cdf_distance(res.params, true) < 0.015
    # MLE: the fitted likelihood cannot be below the generating parameters'
    assert res.log_likelihood >= log_likelihood(x, true) - 1e-6
    assert res.n_samples == 20_000 and res.bins == 100
    assert res.r_squared > 0.95


def test_r_squared_triangular():
    # a flat density would leave no variance to explain, so use a ramp
    ramp = lambda c: 2 * c
    x = np.sqrt(np.random.default_rng(0).uniform(0.0, 1.0, 10**6))
    big = r_squared(x, ramp)
    assert big > 0.99
    assert r_squared(x[:2_000], ramp) < big
    assert r_squared(x, lambda c: 2 - 2 * c) < 0


def test_r_squared_self_fit():
    x = sample(LL, 10**6, 5)
    assert r_squared(x, LL.pdf) > 0.99


def test_r_squared_errors():
    with pytest.raises(ValueError):
        r_squared([1.0, 2.0], LL.pdf, bins=5)
    with pytest.raises(DegenerateDataError):
        r_squared([3.0] * 20, LL.pdf)


def test_model_json_round_trip():
    for m in (LL, BURR):
        assert load_model(model_to_json(m, 0.99, 10)) == m
    with pytest.raises(ValueError):
        load_model('{"dist": "gamma", "params": {}}')
