import csv
import math

import numpy as np
import pytest
from conftest import bm_table
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from roughpricer.charfn import SolverConfig
from roughpricer.contours import AnalyticityDomain, choose_sinh_params
from roughpricer.fracriccati import REFERENCE_PARAMS, ModelParams
from roughpricer.inversion import OptionSpec, PriceEstimate, price_sinh
from roughpricer.vol import (IVPoint, atm_skew, bs_price, implied_vol, implied_vol_estimate,
                             iv_curve, iv_surface, write_iv_csv, write_skew_csv)

SHORT_SMILE_PARAMS = ModelParams(alpha=0.6, gamma=2.0, rho=-0.6, theta=0.0225, nu=0.2, v0=0.0225)


def test_bs_price_closed_forms():
    assert bs_price(1.0, 0.9, 1.0, 0.05, 1e-12) == pytest.approx(1.0 - 0.9 * math.exp(-0.05))
    assert bs_price(1.0, 0.9, 1.0, 0.05, 0.0, "put") == 0.0
    # at the money with r = 0 and sigma sqrt(T) = 0.2
    assert bs_price(2.0, 2.0, 0.25, 0.0, 0.4) == pytest.approx(2.0 * (2 * norm.cdf(0.1) - 1), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(S=st.floats(0.5, 2.0), K=st.floats(0.5, 2.0), T=st.floats(0.01, 5.0),
       r=st.floats(0.0, 0.2), sigma=st.floats(0.05, 1.0))
def test_bs_parity(S, K, T, r, sigma):
    c = bs_price(S, K, T, r, sigma)
    p = bs_price(S, K, T, r, sigma, "put")
    assert c - p == pytest.approx(S - K * math.exp(-r * T), abs=1e-13)


def test_bs_unknown_kind():
    with pytest.raises(ValueError):
        bs_price(1.0, 1.0, 1.0, 0.0, 0.2, "straddle")


@settings(max_examples=80, deadline=None)
@given(K=st.floats(0.7, 1.4), T=st.floats(0.02, 3.0), sigma=st.floats(0.05, 1.2),
       kind=st.sampled_from(["call", "put"]))
def test_implied_vol_round_trip(K, T, sigma, kind):
    price = bs_price(1.0, K, T, 0.0, sigma, kind)
    pt = implied_vol(price, 1.0, K, T, kind=kind)
    if pt.available:
        assert abs(bs_price(1.0, K, T, 0.0, pt.sigma, kind) - price) < 1e-10
        assert pt.log_moneyness == pytest.approx(math.log(K))
    else:
        # only vanishing time value is allowed to lose the volatility
        intrinsic = max(1.0 - K, 0.0) if kind == "call" else max(K - 1.0, 0.0)
        assert price - intrinsic < 1e-12 or pt.reason == "out_of_bounds"


def test_implied_vol_exact_round_trip():
    price = bs_price(1.0, 1.1, 0.5, 0.0, 0.2)
    assert implied_vol(price, 1.0, 1.1, 0.5).sigma == pytest.approx(0.2, abs=1e-10)


def test_implied_vol_with_rate_uses_the_driftless_convention():
    r, T = 0.05, 1.0
    price = math.exp(-r * T) * bs_price(1.0, 1.1, T, 0.0, 0.3)
    assert implied_vol(price, 1.0, 1.1, T, r).sigma == pytest.approx(0.3, abs=1e-10)


def test_leg_invariance():
    put = bs_price(1.0, 0.9, 1.0, 0.0, 0.27, "put")
    call = put + 1.0 - 0.9
    a = implied_vol(put, 1.0, 0.9, 1.0, kind="put").sigma
    b = implied_vol(call, 1.0, 0.9, 1.0, kind="call").sigma
    assert a == pytest.approx(b, abs=1e-10)


@pytest.mark.parametrize("price,reason", [(-0.01, "out_of_bounds"), (1.5, "out_of_bounds"),
                                          (math.nan, "out_of_bounds"), (1e-14, "price_too_small")])
def test_unavailable_points_carry_reasons(price, reason):
    pt = implied_vol(price, 1.0, 1.3, 0.1)
    assert not pt.available and pt.reason == reason
    assert pt.render() is None and pt.render(zero_for_missing=True) == 0.0


def test_price_below_intrinsic_is_out_of_bounds():
    assert implied_vol(0.0999, 1.0, 0.9, 1.0).reason == "out_of_bounds"


def test_published_implied_vols():
    assert implied_vol(6.1236, 1000.0, 800.0, 0.5, kind="put").sigma == pytest.approx(0.23466, abs=5e-6)
    assert implied_vol(23.8966, 1000.0, 1000.0, 1 / 12).sigma == pytest.approx(0.20753, abs=5e-6)


def test_flagged_estimate_has_no_vol():
    est = PriceEstimate(2.0, "x", OptionSpec(1.0, 1.0, 1.0), outside_no_arbitrage=True)
    assert implied_vol_estimate(est).reason == "out_of_bounds"


def test_short_maturity_smile():
    # the deepest OTM call is excluded: its price is ~1e-9 and not stable in print
    strikes = [0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1]
    expected = [0.4269, 0.3686, 0.3039, 0.2274, 0.1280, 0.1313, 0.1687]
    pts = iv_curve(SHORT_SMILE_PARAMS, 1.0, strikes, 1 / 52, epsilon=1e-12,
                   config=SolverConfig("mod2", 1000))
    np.testing.assert_allclose([p.sigma for p in pts], expected, atol=5e-4)


def _bm_pricer(sigma):
    """A pricer with the price_auto signature backed by a Brownian table."""
    domain = AnalyticityDomain()

    def pricer(params, specs, epsilon, config, r):
        out = []
        for s in specs:
            leg = "put" if s.K <= s.S0 else "call"
            c = choose_sinh_params(domain, leg, 1e-20, omega=0.1 if leg == "put" else -0.1)
            c = c.with_terms(math.ceil(math.log(4000 / c.b) / c.zeta))
            out.append(price_sinh(params, s, c, r=r, table=bm_table(params, c.nodes(), s.T, sigma)))
        return out
    return pricer


def test_brownian_surface_is_flat():
    grid = iv_surface(REFERENCE_PARAMS, 1.0, [0.8, 1.0, 1.2], [0.25, 1.0], pricer=_bm_pricer(0.3))
    assert [len(row) for row in grid] == [3, 3]
    for row in grid:
        for p in row:
            assert p.sigma == pytest.approx(0.3, abs=1e-8)


def test_brownian_skew_is_zero():
    assert abs(atm_skew(REFERENCE_PARAMS, 0.5, pricer=_bm_pricer(0.25))) < 1e-8


def test_rough_skew_is_negative_and_decays():
    T = [0.25, 0.5, 1.0, 2.0, 5.0]
    skew = [atm_skew(REFERENCE_PARAMS, t) for t in T]
    assert all(s < 0 for s in skew)
    assert np.all(np.diff(np.abs(skew)) < 0)


def test_skew_bump_refinement():
    a = atm_skew(REFERENCE_PARAMS, 0.5, bump=1e-3)
    b = atm_skew(REFERENCE_PARAMS, 0.5, bump=5e-4)
    assert a == pytest.approx(b, rel=0.01)


def test_skew_rejects_bad_bump():
    with pytest.raises(ValueError):
        atm_skew(REFERENCE_PARAMS, 0.5, bump=0.0)


def test_skew_propagates_missing_vols():
    def broken(params, specs, epsilon, config, r):
        return [PriceEstimate(-1.0, "x", s) for s in specs]
    with pytest.raises(ArithmeticError, match="unavailable"):
        atm_skew(REFERENCE_PARAMS, 0.5, pricer=broken)


def test_csv_writers(tmp_path):
    pts = [IVPoint(-0.1, 0.5, 0.21), IVPoint(0.3, 0.5, None, "price_too_small")]
    path = tmp_path / "iv.csv"
    write_iv_csv(pts, path)
    rows = list(csv.DictReader(path.open()))
    assert rows[0] == {"k": "-0.1", "T": "0.5", "sigma_imp": "0.21", "reason": ""}
    assert rows[1]["sigma_imp"] == "" and rows[1]["reason"] == "price_too_small"
    write_iv_csv(pts, path, zero_for_missing=True)
    assert list(csv.DictReader(path.open()))[1]["sigma_imp"] == "0.0"
    write_skew_csv([(np.float64(0.25), np.float64(-0.05))], tmp_path / "skew.csv")
    assert (tmp_path / "skew.csv").read_text().splitlines() == ["T,atm_skew", "0.25,-0.05"]
