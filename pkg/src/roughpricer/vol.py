"""Black-Scholes prices, implied volatilities, smiles and ATM skew."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .charfn import SolverConfig
from .fracriccati import ModelParams
from .inversion import OptionSpec, no_arbitrage_bounds, price_auto

PRICE_FLOOR = 1e-12


def bs_price(spot: float, strike: float, T: float, r: float, sigma: float, kind: str = "call") -> float:
    """Black-Scholes price with continuous rate r and no dividends."""
    disc = math.exp(-r * T)
    if sigma <= 0 or T <= 0:
        intrinsic = max(spot - strike * disc, 0.0) if kind == "call" else max(strike * disc - spot, 0.0)
        return intrinsic
    sq = sigma * math.sqrt(T)
    d1 = (math.log(spot / strike) + r * T) / sq + 0.5 * sq
    d2 = d1 - sq
    if kind == "call":
        return float(spot * ndtr(d1) - strike * disc * ndtr(d2))
    if kind == "put":
        return float(strike * disc * ndtr(-d2) - spot * ndtr(-d1))
    raise ValueError(f"unknown kind {kind!r}")


def bs_vega(spot, strike, T, r, sigma):
    sq = sigma * math.sqrt(T)
    d1 = (math.log(spot / strike) + r * T) / sq + 0.5 * sq
    return spot * math.sqrt(T) * math.exp(-0.5 * d1 * d1) / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class IVPoint:
    log_moneyness: float
    T: float
    sigma: float | None
    reason: str = ""

    @property
    def available(self) -> bool:
        return self.sigma is not None

    def render(self, zero_for_missing: bool = False):
        if self.sigma is None:
            return 0.0 if zero_for_missing else None
        return self.sigma


def implied_vol(price: float, spot: float, strike: float, T: float, r: float = 0.0,
                kind: str = "call", tol: float = 1e-12) -> IVPoint:
    """Newton from sigma = 0.25 with a bisection safeguard on [1e-6, 5].

    The price is interpreted in the driftless convention used by the pricers
    (forward = spot, discount e^{-rT}); for r = 0 this is plain Black-Scholes.
    """
    k = math.log(strike / spot)
    if kind not in ("call", "put"):
        raise ValueError(f"unknown kind {kind!r}")
    spec = OptionSpec(spot, strike, T, kind)
    lo_b, hi_b = no_arbitrage_bounds(spec, r)
    if not math.isfinite(price) or price <= lo_b or price >= hi_b:
        return IVPoint(k, T, None, "out_of_bounds")
    # OTM value: time value is what carries the volatility information
    if price - lo_b < PRICE_FLOOR * spot:
        return IVPoint(k, T, None, "price_too_small")
    disc = math.exp(-r * T)
    target = price / disc

    def f(s):
        return bs_price(spot, strike, T, 0.0, s, kind) - target

    a, b = 1e-6, 5.0
    fa, fb = f(a), f(b)
    if fa > 0 or fb < 0:
        return IVPoint(k, T, None, "out_of_bounds")
    s = 0.25
    for _ in range(200):
        fs = f(s)
        if abs(fs) <= tol * spot:
            return IVPoint(k, T, s)
        if fs > 0:
            b = s
        else:
            a = s
        v = bs_vega(spot, strike, T, 0.0, s)
        nxt = s - fs / v if v > 0 else 0.5 * (a + b)
        if not a < nxt < b:
            nxt = 0.5 * (a + b)
        if b - a < 1e-15:
            return IVPoint(k, T, nxt)
        s = nxt
    return IVPoint(k, T, s)


def implied_vol_estimate(est, r: float = 0.0) -> IVPoint:
    """IV of a :class:`PriceEstimate`; flagged estimates are reported as out of bounds."""
    s = est.spec
    k = math.log(s.K / s.S0)
    if est.outside_no_arbitrage:
        return IVPoint(k, s.T, None, "out_of_bounds")
    return implied_vol(est.value, s.S0, s.K, s.T, r, s.kind)


def _otm_iv(params, S0, strikes, T, epsilon, config, r, pricer):
    specs = [OptionSpec(S0, K, T, "put" if K <= S0 else "call") for K in strikes]
    ests = pricer(params, specs, epsilon=epsilon, config=config, r=r)
    return [implied_vol_estimate(e, r) for e in ests]


def iv_curve(params: ModelParams, S0: float, strikes, T: float, epsilon: float = 1e-8,
             config: SolverConfig = SolverConfig(M=400), r: float = 0.0, pricer=price_auto):
    return _otm_iv(params, S0, np.asarray(strikes, float), T, epsilon, config, r, pricer)


def iv_surface(params: ModelParams, S0: float, strikes, maturities, epsilon: float = 1e-8,
               config: SolverConfig = SolverConfig(M=400), r: float = 0.0, pricer=price_auto):
    """IVPoint grid indexed [maturity][strike]."""
    return [iv_curve(params, S0, strikes, T, epsilon, config, r, pricer) for T in maturities]


def atm_skew(params: ModelParams, T: float, bump: float = 1e-3, epsilon: float = 1e-10,
             config: SolverConfig = SolverConfig(M=800), r: float = 0.0, pricer=price_auto) -> float:
    """Central difference of implied volatility in log-moneyness at the money."""
    if not bump > 0:
        raise ValueError("bump must be positive")
    pts = iv_curve(params, 1.0, [math.exp(-bump), math.exp(bump)], T, epsilon, config, r, pricer)
    if not all(p.available for p in pts):
        raise ArithmeticError(f"implied volatility unavailable: {[p.reason for p in pts]}")
    return (pts[1].sigma - pts[0].sigma) / (2.0 * bump)


def write_iv_csv(points, path, zero_for_missing: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "T", "sigma_imp", "reason"])
        for p in points:
            sigma = p.render(zero_for_missing)
            w.writerow([repr(float(p.log_moneyness)), repr(float(p.T)),
                        "" if sigma is None else repr(float(sigma)), p.reason])


def write_skew_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "atm_skew"])
        for T, s in rows:
            w.writerow([repr(float(T)), repr(float(s))])
