import math

import numpy as np
import pytest
from conftest import bm_table
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from roughpricer.charfn import SolverConfig, heston_log_charfn
from roughpricer.contours import AnalyticityDomain, FlatContour, choose_sinh_params
from roughpricer.fracriccati import REFERENCE_PARAMS
from roughpricer.inversion import (OptionSpec, PriceEstimate, auto_contour, convert,
                                   fft_grid_strikes, gauss_legendre_01, leg_of_line,
                                   no_arbitrage_bounds, outside_bounds, payoff_transform,
                                   price_auto, price_cm_fft, price_cos, price_flat_ift,
                                   price_flat_ift_bm, price_lewis, price_sinh,
                                   price_sinh_surface, select_leg)
from roughpricer.vol import bs_price

DOMAIN = AnalyticityDomain()
HESTON = REFERENCE_PARAMS.replace(alpha=1.0)
STRIKES = [0.8, 0.9, 1.0, 1.1, 1.25]


def _heston_call_by_quadrature(params, S0, K, T):
    """Covered-call representation on Im xi = -1/2, integrated adaptively."""
    k = math.log(S0 / K)

    def f(u):
        xi = u - 0.5j
        return (np.exp(1j * u * k + heston_log_charfn(params, xi, T)) / (u * u + 0.25)).real

    integral = quad(f, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    return S0 - math.sqrt(S0 * K) / math.pi * integral


# ---------------------------------------------------------------- Black-Scholes oracle


@pytest.mark.parametrize("leg,omega", [("put", 0.2), ("call", -0.2), ("covered_call", 0.0)])
@pytest.mark.parametrize("T", [1 / 52, 1.0])
def test_sinh_reproduces_black_scholes(leg, omega, T):
    sigma = 0.25
    # far strikes at short maturity have a large strip norm; use a fine step
    c = choose_sinh_params(DOMAIN, leg, 1e-30, omega=omega)
    # run the contour out to |xi| ~ 2000, far past where the Gaussian has decayed
    c = c.with_terms(math.ceil(math.log(4000 / c.b) / c.zeta))
    table = bm_table(REFERENCE_PARAMS, c.nodes(), T, sigma)
    for K in STRIKES:
        for kind in ("call", "put"):
            est = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, K, T, kind), c, table=table)
            assert est.value == pytest.approx(bs_price(1.0, K, T, 0.0, sigma, kind), abs=1e-11)


@pytest.mark.parametrize("omega1", [-1.5, -0.5, 0.5])
def test_flat_ift_reproduces_black_scholes(omega1):
    sigma, T = 0.3, 0.5
    f = FlatContour(omega1, 0.05, 800)
    table = bm_table(REFERENCE_PARAMS, f.nodes(), T, sigma)
    specs = [OptionSpec(1.0, K, T, "call") for K in STRIKES]
    ests = price_flat_ift(REFERENCE_PARAMS, specs, omega1, 0.05, 800, table=table)
    for s, e in zip(specs, ests):
        assert e.value == pytest.approx(bs_price(1.0, s.K, T, 0.0, sigma), abs=1e-12)


def test_flat_ift_bm_is_exact_when_the_control_is_the_model():
    sigma, T = 0.2, 1.0
    f = FlatContour(-0.5, 0.5, 10)
    table = bm_table(REFERENCE_PARAMS, f.nodes(), T, sigma)
    est = price_flat_ift_bm(REFERENCE_PARAMS, OptionSpec(1.0, 1.1, T), sigma, -0.5, 0.5, 10,
                            table=table)
    assert est.value == pytest.approx(bs_price(1.0, 1.1, T, 0.0, sigma), abs=1e-15)


def test_discount_factor_and_rate():
    sigma, T, r = 0.2, 1.0, 0.05
    c = choose_sinh_params(DOMAIN, "put", 1e-12, omega=0.1).with_terms(120)
    table = bm_table(REFERENCE_PARAMS, c.nodes(), T, sigma)
    est = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, 0.9, T, "put"), c, r=r, table=table)
    # driftless convention: forward = spot, discount e^{-rT}
    assert est.value == pytest.approx(math.exp(-r * T) * bs_price(1.0, 0.9, T, 0.0, sigma, "put"),
                                      abs=1e-12)


# ---------------------------------------------------------------- Heston oracle


@pytest.mark.parametrize("K", [0.85, 1.0, 1.2])
def test_adams_sinh_pipeline_matches_heston_quadrature(K):
    T = 1.0
    expected = _heston_call_by_quadrature(HESTON, 1.0, K, T)
    leg = "put" if K <= 1 else "call"
    c = choose_sinh_params(DOMAIN, leg, 1e-12, omega=0.1 if leg == "put" else -0.1)
    c = c.with_terms(80)
    est = price_sinh(HESTON, OptionSpec(1.0, K, T, "call"), c, SolverConfig("mod3", 2000))
    assert est.value == pytest.approx(expected, abs=2e-8)


# ---------------------------------------------------------------- cross-method agreement


@pytest.fixture(scope="module")
def reference_calls():
    T = 0.5
    out = {}
    for K in STRIKES:
        leg = select_leg(OptionSpec(1.0, K, T))
        c = choose_sinh_params(DOMAIN, leg, 1e-12, omega=0.1 if leg == "put" else -0.1)
        c = c.with_terms(90)
        out[K] = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, K, T, "call"), c,
                            SolverConfig("mod3", 1500)).value
    return T, out


def test_lewis_agrees_with_sinh(reference_calls):
    T, ref = reference_calls
    ests = price_lewis(REFERENCE_PARAMS, [OptionSpec(1.0, K, T) for K in STRIKES], 200,
                       SolverConfig("mod2", 1500))
    for e in ests:
        assert e.value == pytest.approx(ref[e.spec.K], abs=1e-7)


def test_cos_agrees_with_sinh(reference_calls):
    T, ref = reference_calls
    ests = price_cos(REFERENCE_PARAMS, [OptionSpec(1.0, K, T) for K in STRIKES], 10.0, 400,
                     SolverConfig("mod2", 1500))
    for e in ests:
        assert e.value == pytest.approx(ref[e.spec.K], abs=1e-7)


def test_flat_ift_bm_agrees_with_sinh(reference_calls):
    T, ref = reference_calls
    ests = price_flat_ift_bm(REFERENCE_PARAMS, [OptionSpec(1.0, K, T) for K in STRIKES], 0.2,
                             -0.5, 0.2, 300, SolverConfig("mod2", 1500))
    for e in ests:
        assert e.value == pytest.approx(ref[e.spec.K], abs=1e-7)


def test_price_auto_meets_its_tolerance(reference_calls):
    T, ref = reference_calls
    ests = price_auto(REFERENCE_PARAMS, [OptionSpec(1.0, K, T) for K in STRIKES], epsilon=1e-8,
                      config=SolverConfig("mod3", 1500))
    for e in ests:
        assert e.value == pytest.approx(ref[e.spec.K], abs=1e-8)
        assert e.clean


@pytest.mark.parametrize("T", [1 / 52, 2.0])
def test_price_auto_a_posteriori_truncation(T):
    # the a-priori truncation alone undersizes tilted call contours
    cfg = SolverConfig("mod3", 1500)
    specs = [OptionSpec(1.0, K, T) for K in (0.9, 1.1, 1.25)]
    refs = []
    for s in specs:
        leg = select_leg(s)
        c = choose_sinh_params(DOMAIN, leg, 1e-13, omega=0.1 if leg == "put" else -0.1)
        refs.append(price_sinh(REFERENCE_PARAMS, s, c.with_terms(200), cfg).value)
    fixed = price_auto(REFERENCE_PARAMS, specs, 1e-8, cfg, adaptive=False)
    ests = price_auto(REFERENCE_PARAMS, specs, 1e-8, cfg)
    for e, f, ref in zip(ests, fixed, refs):
        assert abs(e.value - ref) <= 1e-8
        assert e.contour["N"] >= f.contour["N"]


def test_cm_fft_on_grid_equals_flat_ift():
    T, zeta, M = 0.5, 0.25, 256
    K = fft_grid_strikes(1.0, zeta, M)[M // 2 + 3]
    cfg = SolverConfig("mod2", 100)
    fft = price_cm_fft(REFERENCE_PARAMS, OptionSpec(1.0, K, T), -1.5, zeta, M, "linear", cfg)
    flat = price_flat_ift(REFERENCE_PARAMS, OptionSpec(1.0, K, T), -1.5, zeta, M - 1, cfg)
    assert fft.value == pytest.approx(flat.value, abs=1e-12)


@pytest.mark.parametrize("interp", ["linear", "cubic"])
def test_cm_fft_interpolates_between_grid_strikes(reference_calls, interp):
    T, ref = reference_calls
    ests = price_cm_fft(REFERENCE_PARAMS, [OptionSpec(1.0, K, T) for K in STRIKES], -1.5, 0.05,
                        8192, interp, SolverConfig("mod2", 200))
    tol = 1e-4 if interp == "linear" else 1e-6
    for e in ests:
        assert e.value == pytest.approx(ref[e.spec.K], abs=tol)


def test_cm_fft_validation():
    with pytest.raises(ValueError, match="even"):
        price_cm_fft(REFERENCE_PARAMS, OptionSpec(1.0, 1.0, 0.5), -1.5, 0.25, 255)
    with pytest.raises(ValueError, match="interpolation"):
        price_cm_fft(REFERENCE_PARAMS, OptionSpec(1.0, 1.0, 0.5), -1.5, 0.25, 64, "nearest",
                     SolverConfig("mod2", 10))


def test_surface_matches_individual_pricing():
    T_max, M = 2.0, 80
    put = choose_sinh_params(DOMAIN, "put", 1e-8, omega=0.1).with_terms(30)
    call = choose_sinh_params(DOMAIN, "call", 1e-8, omega=-0.1).with_terms(30)
    cfg = SolverConfig("mod3", M)
    rows = price_sinh_surface(REFERENCE_PARAMS, 1.0, STRIKES, [0.5, T_max], {"put": put, "call": call},
                              cfg, n_terms={0.5: 30, T_max: 22})
    for row, T in zip(rows, (0.5, T_max)):
        n = 30 if T == 0.5 else 22
        for e in row:
            c = (put if e.spec.K <= 1 else call).with_terms(n)
            direct = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, e.spec.K, T), c,
                                SolverConfig("mod3", int(round(M * T / T_max))))
            assert e.value == pytest.approx(direct.value, abs=1e-13)
            assert e.contour["N"] == n


def test_surface_rejects_off_grid_maturity_and_long_truncation():
    c = choose_sinh_params(DOMAIN, "put", 1e-6, omega=0.1).with_terms(10)
    with pytest.raises(ValueError, match="not a node"):
        price_sinh_surface(REFERENCE_PARAMS, 1.0, [1.0], [0.33, 1.0], {"put": c},
                           SolverConfig("mod3", 10))
    with pytest.raises(ValueError, match="truncation"):
        price_sinh_surface(REFERENCE_PARAMS, 1.0, [1.0], [1.0], {"put": c},
                           SolverConfig("mod3", 10), n_terms={1.0: 11})


# ---------------------------------------------------------------- plumbing


def test_parity_between_independent_legs():
    T = 1.0
    put = auto_contour(REFERENCE_PARAMS, OptionSpec(1.0, 1.05, T), 1e-10, omega=0.1, leg="put")
    call = auto_contour(REFERENCE_PARAMS, OptionSpec(1.0, 1.05, T), 1e-10, omega=-0.1, leg="call")
    cfg = SolverConfig("mod3", 800)
    p = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, 1.05, T, "put"), put, cfg).value
    c = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, 1.05, T, "call"), call, cfg).value
    assert c - p == pytest.approx(1.0 - 1.05, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(v=st.floats(0, 10), S0=st.floats(0.5, 2), K=st.floats(0.5, 2), T=st.floats(0.01, 5),
       r=st.floats(0, 0.3), a=st.sampled_from(["call", "put", "covered_call"]),
       b=st.sampled_from(["call", "put", "covered_call"]))
def test_convert_round_trip(v, S0, K, T, r, a, b):
    there = convert(v, a, b, S0, K, T, r)
    assert convert(there, b, a, S0, K, T, r) == pytest.approx(v, abs=1e-12)


def test_bounds_and_flags():
    s = OptionSpec(1.0, 0.9, 1.0, "call")
    assert no_arbitrage_bounds(s) == (pytest.approx(0.1), 1.0)
    assert outside_bounds(0.05, s) and outside_bounds(1.2, s) and outside_bounds(math.nan, s)
    assert not outside_bounds(0.15, s)
    put = OptionSpec(1.0, 1.2, 1.0, "put")
    # driftless convention: the forward is the spot, so both bounds are discounted
    lo, hi = no_arbitrage_bounds(put, r=0.1)
    assert lo == pytest.approx(math.exp(-0.1) * 0.2) and hi == pytest.approx(math.exp(-0.1) * 1.2)


def test_leg_routing():
    assert leg_of_line(-1.5) == "call" and leg_of_line(-0.5) == "covered_call"
    assert leg_of_line(0.5) == "put"
    with pytest.raises(ValueError):
        leg_of_line(-1.0)
    assert select_leg(OptionSpec(1.0, 1.0, 1.0)) == "put"
    assert select_leg(OptionSpec(1.0, 1.01, 1.0)) == "call"


def test_payoff_transform_poles():
    s = OptionSpec(1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="pole"):
        payoff_transform(s, 0.0)
    with pytest.raises(ValueError, match="pole"):
        payoff_transform(s, -1j)
    assert payoff_transform(s, 1.0 + 0.5j) == pytest.approx(-1.0 / ((1 + 0.5j) * (1 + 1.5j)))


@pytest.mark.parametrize("bad", [dict(S0=0.0), dict(K=-1.0), dict(T=0.0), dict(kind="digital")])
def test_option_spec_validation(bad):
    kw = dict(S0=1.0, K=1.0, T=1.0, kind="call") | bad
    with pytest.raises(ValueError):
        OptionSpec(**kw)


def test_batches_must_share_maturity():
    c = choose_sinh_params(DOMAIN, "put", 1e-4, omega=0.1).with_terms(10)
    with pytest.raises(ValueError, match="share"):
        price_sinh(REFERENCE_PARAMS, [OptionSpec(1, 1, 0.5), OptionSpec(1, 1, 1.0)], c)
    with pytest.raises(ValueError, match="no options"):
        price_sinh(REFERENCE_PARAMS, [], c)


def test_blown_nodes_are_reported():
    # a long, coarse contour reaches nodes where the coarse solve blows down
    c = choose_sinh_params(DOMAIN, "put", 1e-4, omega=0.1).with_terms(60)
    est = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, 1.0, 0.5, "put"), c, SolverConfig("mod2", 20))
    assert est.blown_nodes > 0 and not est.clean


def test_estimate_row_flattens_contour():
    c = choose_sinh_params(DOMAIN, "put", 1e-4, omega=0.1).with_terms(10)
    row = price_sinh(REFERENCE_PARAMS, OptionSpec(1.0, 1.0, 0.5, "put"), c,
                     SolverConfig("mod3", 20)).as_row()
    assert row["contour.N"] == 10 and row["method"] == "sinh" and row["kind"] == "put"
    assert isinstance(PriceEstimate(1.0, "x", OptionSpec(1, 1, 1)).clean, bool)


def test_gauss_legendre_nodes():
    x, w = gauss_legendre_01(30)
    assert w.sum() == pytest.approx(1.0, rel=1e-14)
    assert (x**7 * w).sum() == pytest.approx(1 / 8, rel=1e-14)
    with pytest.raises(ValueError):
        gauss_legendre_01(1)
