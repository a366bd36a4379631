import math

import numpy as np
import pytest
from scipy.integrate import quad

from levy_pide import (COSConfig, DiffusionSpec, DomainError, MarketParams, NIGParams, Payoff,
                       bs_closed_form, cos_price)
from levy_pide.cos import cumulants, log_return_cf_exponent


def _nig_exponent(u, al, be, de):
    # written out independently of the package
    return de * (np.sqrt(al ** 2 - be ** 2) - np.sqrt(al ** 2 - (be + 1j * u) ** 2))


def _lewis_call(al, be, de, s0, k, r, sigma, t):
    c = -_nig_exponent(-1j, al, be, de).real
    drift = r + c - 0.5 * sigma ** 2

    def cf(u):
        return np.exp(1j * u * drift * t - 0.5 * sigma ** 2 * u * u * t
                      + t * _nig_exponent(u, al, be, de))

    x = math.log(s0 / k)
    integral, _ = quad(lambda u: (np.exp(1j * u * x) * cf(u - 0.5j)).real / (u * u + 0.25),
                       0, np.inf, limit=2000, epsabs=1e-12)
    return s0 - math.sqrt(s0 * k) * math.exp(-r * t) / math.pi * integral


def test_nig_matches_lewis_integral_with_wide_interval(market, nig_neg):
    # the semi-heavy left tail needs a wider interval than the default to reach 1e-6
    got = cos_price(nig_neg, market, Payoff("call", 100.0), 0.01, COSConfig(1024, 30.0))
    ref = _lewis_call(10.0, -5.7, 0.2, 100.0, 100.0, 0.05, 0.15, 0.01)
    assert got == pytest.approx(ref, abs=1e-6)


def test_nig_default_settings_close_to_lewis(market, nig_pos):
    got = cos_price(nig_pos, market, Payoff("call", 100.0), 0.01)
    ref = _lewis_call(10.0, 5.7, 0.2, 100.0, 100.0, 0.05, 0.15, 0.01)
    assert got == pytest.approx(ref, rel=1e-3)


def test_nig_reference_matches_tabulated(market, nig_neg):
    assert cos_price(nig_neg, market, Payoff("call", 100.0), 0.01) == pytest.approx(0.757782,
                                                                                     rel=0.01)


def test_gh_reference_matches_tabulated(market, gh_low):
    assert cos_price(gh_low, market, Payoff("call", 100.0), 0.01) == pytest.approx(0.73746,
                                                                                    rel=0.01)


def test_meixner_reference_matches_tabulated(market, meixner):
    assert cos_price(meixner, market, Payoff("call", 100.0), 0.01) == pytest.approx(1.0145,
                                                                                     rel=0.01)


@pytest.mark.parametrize("kind", ["call", "put", "digital"])
def test_vanishing_jumps_give_black_scholes(kind):
    m = MarketParams(100.0, 95.0, 0.05, 0.0, 0.2, 0.5, 0.5)
    model = NIGParams(10.0, -5.7, 1e-12)
    pay = Payoff(kind, 95.0)
    bs = bs_closed_form(DiffusionSpec.from_market(m), m, pay, 0.5, np.array([0.0]))[0]
    assert cos_price(model, m, pay, 0.5) == pytest.approx(bs, abs=1e-8)


def test_digital_is_minus_strike_derivative_of_call(market, nig_neg):
    cfg = COSConfig(1024, 20.0)
    dk = 1e-3
    up = cos_price(nig_neg, market, Payoff("call", 100.0 + dk), 0.01, cfg)
    dn = cos_price(nig_neg, market, Payoff("call", 100.0 - dk), 0.01, cfg)
    dig = cos_price(nig_neg, market, Payoff("digital", 100.0), 0.01, cfg)
    assert dig == pytest.approx(-(up - dn) / (2 * dk), abs=1e-5)


def test_cumulants_of_gaussian():
    m = MarketParams(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 1.0)
    psi = log_return_cf_exponent(NIGParams(10.0, 0.0, 1e-12), m, 1.0)
    c1, c2, c4 = cumulants(psi)
    assert c1 == pytest.approx(0.05 - 0.02, abs=1e-8)
    assert c2 == pytest.approx(0.04, rel=1e-6)
    assert abs(c4) < 1e-6


def test_zero_time_returns_payoff(market, nig_neg):
    assert cos_price(nig_neg, market, Payoff("put", 110.0), 0.0) == 10.0


def test_config_validation():
    with pytest.raises(DomainError):
        COSConfig(terms=2)
