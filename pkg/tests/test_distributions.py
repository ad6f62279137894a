import math

import numpy as np
import pytest
from scipy import integrate, stats

from cpa_auctions.config import parse_distribution
from cpa_auctions.distributions import (DerivedPriceToBeat, Exponential, LogNormal, PointMass, Power,
                                        Uniform, expected_max, expected_max_quadrature,
                                        second_order_stat)
from cpa_auctions.errors import ConfigError

from conftest import ALL_DISTS, CONTINUOUS


@pytest.mark.parametrize("dist", CONTINUOUS, ids=str)
@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_expected_max_closed_form_matches_quadrature(dist, k):
    assert expected_max(dist, k) == pytest.approx(expected_max_quadrature(dist, k), rel=1e-7)


def test_expected_max_known_values():
    # E max of k uniforms on [0,1] is k/(k+1); exponential gives harmonic numbers
    assert expected_max(Uniform(0, 1), 4) == pytest.approx(0.8, abs=1e-14)
    assert expected_max(Exponential(2.0), 3) == pytest.approx((1 + 1 / 2 + 1 / 3) / 2, abs=1e-14)
    assert expected_max(Power(2.0), 1) == pytest.approx(2 / 3, abs=1e-14)


def test_lognormal_two_draw_max_closed_form():
    # E max(X1, X2) = 2 e^{mu + s^2/2} Phi(s / sqrt2)
    mu, s = 0.3, 0.9
    want = 2 * math.exp(mu + s * s / 2) * stats.norm.cdf(s / math.sqrt(2))
    assert expected_max(LogNormal(mu, s), 2) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("dist", CONTINUOUS, ids=str)
def test_cdf_ppf_roundtrip(dist):
    q = np.array([0.01, 0.25, 0.5, 0.9, 0.999])
    assert np.allclose(dist.cdf(dist.ppf(q)), q, atol=1e-12)


@pytest.mark.parametrize("dist", CONTINUOUS, ids=str)
def test_pdf_integrates_to_one(dist):
    lo, hi = dist.lower, dist.upper_truncated()
    total, _ = integrate.quad(lambda x: float(dist.pdf(x)), lo, hi, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("dist", CONTINUOUS, ids=str)
def test_partial_expectation_matches_quad(dist):
    x = float(dist.ppf(0.6))
    want, _ = integrate.quad(lambda y: y * float(dist.pdf(y)), dist.lower, x, limit=200)
    assert dist.partial_expectation(x) == pytest.approx(want, rel=1e-7, abs=1e-12)
    assert dist.partial_expectation(dist.lower) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("dist", ALL_DISTS, ids=str)
def test_sample_mean_within_noise(dist, rng):
    x = dist.sample(rng, 200_000)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - dist.mean()) <= 5 * se + 1e-12


def test_second_order_stat_uniform():
    # second highest of n uniforms has mean (n-1)/(n+1)
    assert second_order_stat(Uniform(0, 1), 3) == pytest.approx(0.5, abs=1e-12)


def test_point_mass_is_strictly_below():
    d = PointMass(0.5)
    assert d.prob_below(0.5) == 0.0
    assert d.prob_below(0.50001) == 1.0
    assert d.cdf(0.5) == 1.0


@pytest.mark.parametrize("bad", [lambda: Uniform(1, 1), lambda: Power(0.0), lambda: Exponential(-1),
                                 lambda: LogNormal(0, 0), lambda: PointMass(-1)])
def test_invalid_parameters(bad):
    with pytest.raises(ConfigError):
        bad()


def test_record_roundtrip():
    for d in ALL_DISTS:
        assert parse_distribution(d.to_record()) == d


def test_derived_price_to_beat_is_scaled_max():
    ptb = DerivedPriceToBeat(Uniform(0, 1), opponents=2, slope=0.5)
    # max of two uniforms scaled by 1/2 has cdf (2b)^2 on [0, 1/2]
    assert ptb.prob_below(0.25) == pytest.approx(0.25)
    assert ptb.mean() == pytest.approx(0.5 * 2 / 3)
    assert ptb.partial_expectation(0.25) == pytest.approx(
        integrate.quad(lambda b: b * 8 * b, 0, 0.25)[0], rel=1e-9)


def test_derived_price_to_beat_atoms():
    none = DerivedPriceToBeat(Uniform(0, 1), opponents=0)
    assert none.prob_below(1e-9) == 1.0
    assert none.mean() == 0.0
    flat = DerivedPriceToBeat(Uniform(0, 1), opponents=3, slope=0.0, intercept=0.4)
    assert flat.prob_below(0.4) == 0.0
    assert flat.prob_below(0.41) == 1.0
