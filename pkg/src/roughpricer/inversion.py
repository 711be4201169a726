"""Fourier-inversion pricers for European options.

Conventions. ``x = ln(S0/K)``; the characteristic function describes the
driftless log-return, so Phi(-i) = 1 and discounting is e^{-rT}. With this
convention put-call parity reads ``call - put = e^{-rT} (S0 - K)``. For r = 0
it is the usual parity.

The basic representation is

    V = -K e^{-rT} / (2 pi) * int_{Im xi = w1} e^{i xi x} Phi(xi) / (xi (xi + i)) dxi,

which gives the call for w1 < -1, the put for 0 < w1 and ``call - e^{-rT} S0``
(the "covered-call leg") for -1 < w1 < 0. Every pricer returns the requested
instrument via parity regardless of which leg it integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .charfn import CharFnTable, SolverConfig, build_table
from .contours import AnalyticityDomain, FlatContour, SinhContour, choose_sinh_params
from .fracriccati import ModelParams

KINDS = ("call", "put", "covered_call")


@dataclass(frozen=True)
class OptionSpec:
    S0: float
    K: float
    T: float
    kind: str = "call"

    def __post_init__(self):
        if not (self.S0 > 0 and self.K > 0 and self.T > 0):
            raise ValueError("S0, K and T must be positive")
        if self.kind not in KINDS:
            raise ValueError(f"unknown option kind {self.kind!r}; expected one of {KINDS}")

    @property
    def log_moneyness(self) -> float:
        """ln(S0/K)."""
        return math.log(self.S0 / self.K)


@dataclass
class PriceEstimate:
    value: float
    method: str
    spec: OptionSpec
    contour: dict = field(default_factory=dict)
    n_evaluations: int = 0
    error_estimate: float | None = None
    blown_nodes: int = 0
    outside_no_arbitrage: bool = False
    cpu_ms: float | None = None

    @property
    def clean(self) -> bool:
        return self.blown_nodes == 0 and not self.outside_no_arbitrage and math.isfinite(self.value)

    def as_row(self) -> dict:
        row = {"K": self.spec.K, "T": self.spec.T, "S0": self.spec.S0, "kind": self.spec.kind,
               "method": self.method, "value": self.value, "err_estimate": self.error_estimate,
               "blown_nodes": self.blown_nodes, "outside_no_arbitrage": self.outside_no_arbitrage,
               "n_evaluations": self.n_evaluations, "cpu_ms": self.cpu_ms}
        row.update({f"contour.{k}": v for k, v in self.contour.items()})
        return row


# --------------------------------------------------------------------------
# parity and bounds


def leg_of_line(omega1: float) -> str:
    if omega1 < -1.0:
        return "call"
    if -1.0 < omega1 < 0.0:
        return "covered_call"
    if omega1 > 0.0:
        return "put"
    raise ValueError("the integration line must avoid the poles at Im xi = 0 and -1")


def convert(value, from_kind: str, to_kind: str, S0, K, T, r=0.0):
    """Move between call, put and covered-call leg values by parity."""
    disc = np.exp(-r * T)
    if from_kind == "call":
        call = value
    elif from_kind == "put":
        call = value + disc * (S0 - K)
    elif from_kind == "covered_call":
        call = value + disc * S0
    else:
        raise ValueError(from_kind)
    if to_kind == "call":
        return call
    if to_kind == "put":
        return call - disc * (S0 - K)
    if to_kind == "covered_call":
        return call - disc * S0
    raise ValueError(to_kind)


def no_arbitrage_bounds(spec: OptionSpec, r: float = 0.0) -> tuple[float, float]:
    disc = math.exp(-r * spec.T)
    if spec.kind == "call":
        return disc * max(spec.S0 - spec.K, 0.0), disc * spec.S0
    if spec.kind == "put":
        return disc * max(spec.K - spec.S0, 0.0), disc * spec.K
    lo, hi = disc * max(spec.S0 - spec.K, 0.0), disc * spec.S0
    return lo - disc * spec.S0, hi - disc * spec.S0


def outside_bounds(value: float, spec: OptionSpec, r: float = 0.0) -> bool:
    lo, hi = no_arbitrage_bounds(spec, r)
    return not (math.isfinite(value) and lo <= value <= hi)


def select_leg(spec: OptionSpec) -> str:
    """OTM routing: puts at or below the spot, calls above it."""
    return "put" if spec.K <= spec.S0 else "call"


# --------------------------------------------------------------------------
# shared machinery


def payoff_transform(spec: OptionSpec, xi):
    """-K e^{i xi ln(S0/K)} / (xi (xi + i))."""
    xi = np.asarray(xi, dtype=np.complex128)
    if np.any(np.abs(xi) < 1e-8) or np.any(np.abs(xi + 1j) < 1e-8):
        raise ValueError("payoff transform evaluated at a pole (xi = 0 or xi = -i)")
    out = -spec.K * np.exp(1j * xi * spec.log_moneyness) / (xi * (xi + 1j))
    return out[()] if out.ndim == 0 else out


def _as_specs(spec):
    specs = [spec] if isinstance(spec, OptionSpec) else list(spec)
    if not specs:
        raise ValueError("no options to price")
    S0, T = specs[0].S0, specs[0].T
    if any(s.S0 != S0 or s.T != T for s in specs):
        raise ValueError("a batch must share spot and maturity")
    return specs, isinstance(spec, OptionSpec)


def _phi_values(params, nodes, T, config, table):
    if table is not None:
        if table.xi_nodes.shape != nodes.shape or not np.allclose(table.xi_nodes, nodes):
            raise ValueError("table nodes do not match the contour")
        return table.column(T), int((~table.ok).sum())
    tab = build_table(params, nodes, T, config)
    return tab.column(T), int((~tab.ok).sum())


def _half_sum(nodes, weights, phi, x):
    """Re sum_j w_j e^{i xi_j x} Phi_j / (xi_j (xi_j + i)) for each x."""
    Phi = np.exp(phi)
    # blown nodes contribute nothing; they are flagged separately
    Phi = np.where(np.isfinite(Phi), Phi, 0.0)
    core = weights * Phi / (nodes * (nodes + 1j))
    x = np.atleast_1d(x)
    return (np.exp(1j * np.outer(x, nodes)) @ core).real


def _finish(values, leg, specs, r, method, contour, n_eval, blown, single):
    out = []
    for v, s in zip(values, specs):
        val = float(convert(v, leg, s.kind, s.S0, s.K, s.T, r))
        out.append(PriceEstimate(val, method, s, dict(contour), n_eval, None, blown,
                                 outside_bounds(val, s, r)))
    return out[0] if single else out


def price_on_contour(params: ModelParams, spec, nodes, dnodes, zeta: float, leg: str,
                     config: SolverConfig = SolverConfig(), r: float = 0.0, method: str = "",
                     contour: dict | None = None, table: CharFnTable | None = None):
    """Symmetrized trapezoid sum over the right half of a contour.

    ``nodes`` are xi(j*zeta), j = 0..N, and ``dnodes`` the derivative xi'(j*zeta);
    the j = 0 term gets half weight.
    """
    specs, single = _as_specs(spec)
    T, S0 = specs[0].T, specs[0].S0
    nodes = np.asarray(nodes, dtype=np.complex128)
    phi, blown = _phi_values(params, nodes, T, config, table)
    w = np.asarray(dnodes, dtype=np.complex128).copy()
    w[0] *= 0.5
    Ks = np.array([s.K for s in specs])
    x = np.log(S0 / Ks)
    sums = _half_sum(nodes, w, phi, x)
    vals = -(zeta * Ks * math.exp(-r * T) / math.pi) * sums
    return _finish(vals, leg, specs, r, method, contour or {}, nodes.size, blown, single)


# --------------------------------------------------------------------------
# pricers


def price_flat_ift(params, spec, omega1: float, zeta: float, n_terms: int,
                   config: SolverConfig = SolverConfig(), r: float = 0.0, table=None):
    c = FlatContour(omega1, zeta, n_terms)
    return price_on_contour(params, spec, c.nodes(), c.derivative(), zeta, leg_of_line(omega1),
                            config, r, "flat_ift",
                            {"omega1": omega1, "zeta": zeta, "N": n_terms, "solver": config.tag},
                            table)


def price_sinh(params, spec, contour: SinhContour, config: SolverConfig = SolverConfig(),
               r: float = 0.0, table=None):
    return price_on_contour(params, spec, contour.nodes(), contour.derivative(), contour.zeta,
                            contour.leg, config, r, "sinh",
                            {"omega1": contour.omega1, "b": contour.b, "omega": contour.omega,
                             "zeta": contour.zeta, "N": contour.n_terms, "leg": contour.leg,
                             "solver": config.tag}, table)


def bm_log_charfn(sigma: float, xi, T: float):
    """Driftless Brownian log-return: -T sigma^2 (xi^2 + i xi) / 2."""
    xi = np.asarray(xi, dtype=np.complex128)
    return -0.5 * T * sigma * sigma * (xi * xi + 1j * xi)


def _bs_driftless_call(S0, K, T, r, sigma):
    from .vol import bs_price
    return math.exp(-r * T) * bs_price(S0, K, T, 0.0, sigma, "call")


def price_flat_ift_bm(params, spec, sigma0: float, omega1: float, zeta: float, n_terms: int,
                      config: SolverConfig = SolverConfig(), r: float = 0.0, table=None):
    """Flat iFT of Phi - Phi_BM plus the Black-Scholes price of the control.

    The difference vanishes at xi = 0 and xi = -i, so any line inside the
    strip of analyticity may be used.
    """
    specs, single = _as_specs(spec)
    T, S0 = specs[0].T, specs[0].S0
    c = FlatContour(omega1, zeta, n_terms)
    nodes = c.nodes()
    phi, blown = _phi_values(params, nodes, T, config, table)
    Phi = np.exp(phi)
    Phi = np.where(np.isfinite(Phi), Phi, 0.0)
    diff = Phi - np.exp(bm_log_charfn(sigma0, nodes, T))
    w = np.ones(nodes.size)
    w[0] = 0.5
    Ks = np.array([s.K for s in specs])
    x = np.log(S0 / Ks)
    core = w * diff / (nodes * (nodes + 1j))
    corr = -(zeta * Ks * math.exp(-r * T) / math.pi) * (np.exp(1j * np.outer(x, nodes)) @ core).real
    calls = np.array([_bs_driftless_call(S0, K, T, r, sigma0) for K in Ks]) + corr
    return _finish(calls, "call", specs, r, "flat_ift_bm",
                   {"sigma0": sigma0, "omega1": omega1, "zeta": zeta, "N": n_terms,
                    "solver": config.tag}, nodes.size, blown, single)


def gauss_legendre_01(n: int):
    """Gauss-Legendre nodes and weights on (0, 1)."""
    if n < 2:
        raise ValueError("need at least two Gauss-Legendre nodes")
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def price_lewis(params, spec, n_gl: int, config: SolverConfig = SolverConfig(), r: float = 0.0):
    """Integral on Im xi = -1/2 with y = u/(1-u) and Gauss-Legendre in u."""
    specs, single = _as_specs(spec)
    T, S0 = specs[0].T, specs[0].S0
    u, wu = gauss_legendre_01(n_gl)
    y = u / (1.0 - u)
    dy = wu / (1.0 - u) ** 2
    nodes = y - 0.5j
    tab = build_table(params, nodes, T, config)
    phi = tab.column(T)
    blown = int((~tab.ok).sum())
    Phi = np.where(np.isfinite(phi), np.exp(phi), 0.0)
    Ks = np.array([s.K for s in specs])
    x = np.log(S0 / Ks)
    integ = (np.exp(1j * np.outer(x, y)) @ (dy * Phi / (y * y + 0.25))).real
    vals = -np.sqrt(S0 * Ks) * math.exp(-r * T) / math.pi * integ
    return _finish(vals, "covered_call", specs, r, "lewis",
                   {"n_gl": n_gl, "solver": config.tag}, n_gl, blown, single)


def _cos_put_coefficients(k, a, b):
    """V_k for the put payoff (1 - e^y)_+ on [a, b], a < 0 (per unit strike)."""
    u = k * math.pi / (b - a)
    top = min(0.0, b)

    def chi(c, d):
        with np.errstate(invalid="ignore", divide="ignore"):
            val = (np.cos(u * (d - a)) * math.exp(d) - np.cos(u * (c - a)) * math.exp(c)
                   + u * np.sin(u * (d - a)) * math.exp(d) - u * np.sin(u * (c - a)) * math.exp(c))
        return val / (1.0 + u * u)

    def psi(c, d):
        out = np.empty_like(u)
        nz = k != 0
        out[nz] = (np.sin(u[nz] * (d - a)) - np.sin(u[nz] * (c - a))) / u[nz]
        out[~nz] = d - c
        return out

    return 2.0 / (b - a) * (-chi(a, top) + psi(a, top))


def price_cos(params, spec, L: float = 10.0, n_terms: int = 160,
              config: SolverConfig = SolverConfig(), r: float = 0.0, center: str = "zero"):
    """Cosine expansion of the put on a truncated interval; other kinds by parity.

    The window for y = ln(S_T/K) is [-L sqrt(T), L sqrt(T)] when
    ``center == "zero"`` (the classical prescription, centred on the mean of
    the log-return) and [x - L sqrt(T), x + L sqrt(T)] when ``center == "spot"``.
    """
    specs, single = _as_specs(spec)
    T, S0 = specs[0].T, specs[0].S0
    half = L * math.sqrt(T)
    k = np.arange(n_terms)
    u = k * math.pi / (2.0 * half)
    tab = build_table(params, u.astype(np.complex128), T, config)
    phi = tab.column(T)
    blown = int((~tab.ok).sum())
    Phi = np.where(np.isfinite(phi), np.exp(phi), 0.0)
    w = np.ones(n_terms)
    w[0] = 0.5
    vals = []
    for s in specs:
        x = s.log_moneyness
        if center == "zero":
            a, b = -half, half
        elif center == "spot":
            a, b = x - half, x + half
        else:
            raise ValueError(center)
        if not a < 0.0:
            vals.append(0.0)  # the put payoff vanishes on the whole window
            continue
        Vk = _cos_put_coefficients(k.astype(float), a, b)
        terms = w * (Phi * np.exp(1j * u * (x - a))).real * Vk
        vals.append(math.exp(-r * T) * s.K * terms.sum())
    return _finish(np.array(vals), "put", specs, r, "cos",
                   {"L": L, "N": n_terms, "center": center, "solver": config.tag},
                   n_terms, blown, single)


def price_cm_fft(params, spec, omega1: float, zeta: float, M: int, interp: str = "linear",
                 config: SolverConfig = SolverConfig(), r: float = 0.0):
    """FFT over a uniform log-strike grid followed by interpolation to the strikes.

    The sum is the one-sided trapezoid rule j = 0..M-1 (half weight at j = 0) on
    Im xi = omega1. The log-strike grid k_m = ln(K_m/S0) = (m - M/2) * dk is
    centred at the money with dk = 2 pi / (M zeta).
    """
    specs, single = _as_specs(spec)
    T, S0 = specs[0].T, specs[0].S0
    if M < 4 or M % 2:
        raise ValueError("M must be an even integer >= 4")
    leg = leg_of_line(omega1)
    j = np.arange(M)
    nodes = 1j * omega1 + j * zeta
    phi, blown = _phi_values(params, nodes, T, config, None)
    Phi = np.where(np.isfinite(phi), np.exp(phi), 0.0)
    w = np.ones(M)
    w[0] = 0.5
    dk = 2.0 * math.pi / (M * zeta)
    m = np.arange(M)
    kgrid = (m - M // 2) * dk
    # x_m = ln(S0/K_m) = -k_m; e^{i xi_j x_m} = e^{-omega1 x_m} e^{-i j zeta k_m}
    f = w * Phi / (nodes * (nodes + 1j)) * np.exp(1j * np.pi * j)  # (-1)^j shift for M/2
    s = np.fft.fft(f)
    x = -kgrid
    Kgrid = S0 * np.exp(kgrid)
    leg_vals = -(zeta * Kgrid * math.exp(-r * T) / math.pi) * (np.exp(-omega1 * x) * s).real
    calls = convert(leg_vals, leg, "call", S0, Kgrid, T, r)
    Ks = np.array([q.K for q in specs])
    kq = np.log(Ks / S0)
    if interp == "linear":
        vals = np.interp(kq, kgrid, calls)
    elif interp == "cubic":
        from scipy.interpolate import CubicSpline
        vals = CubicSpline(kgrid, calls)(kq)
    else:
        raise ValueError(f"unknown interpolation {interp!r}")
    return _finish(vals, "call", specs, r, "cm_fft",
                   {"omega1": omega1, "zeta": zeta, "M": M, "interp": interp, "dk": dk,
                    "solver": config.tag}, M, blown, single)


def fft_grid_strikes(S0: float, zeta: float, M: int) -> np.ndarray:
    dk = 2.0 * math.pi / (M * zeta)
    return S0 * np.exp((np.arange(M) - M // 2) * dk)


# --------------------------------------------------------------------------
# automatic sinh pipeline


def auto_contour(params: ModelParams, spec: OptionSpec, epsilon: float = 1e-6,
                 domain: AnalyticityDomain = AnalyticityDomain(), omega: float | None = None,
                 leg: str | None = None, min_terms: int = 1) -> SinhContour:
    """Leg, deformation, step and truncation from an error tolerance."""
    from .contours import truncation_lambda
    leg = leg or select_leg(spec)
    c = choose_sinh_params(domain, leg, epsilon, omega=omega, moneyness=spec.log_moneyness)
    tb = truncation_lambda(params, spec.T, c.omega, epsilon, spec.K / spec.S0, c.b, c.zeta,
                          skew_aware=True)
    return c.with_terms(max(tb.n_terms, min_terms))


def _extend_truncation(params, specs, contour, epsilon, config, max_doublings=4):
    """Lengthen ``contour`` until the neglected terms are below epsilon/10.

    phi is evaluated on a contour twice as long as the a-priori one; the
    result keeps the shortest prefix (never shorter than the a-priori count)
    whose tail sum of term magnitudes, for every strike, is at most
    epsilon/10. If the tail of the long contour is itself too large the
    contour is doubled again. Unavailable nodes past the a-priori count are
    ignored. Returns the contour and a matching table.
    """
    T, S0 = specs[0].T, specs[0].S0
    Ks = np.array([s.K for s in specs])
    x = np.log(S0 / Ks)
    n0 = contour.n_terms
    n_long = 2 * n0
    for _ in range(max_doublings):
        long = contour.with_terms(n_long)
        nodes = long.nodes()
        table = build_table(params, nodes, T, config)
        w = long.derivative()
        core = np.abs(w * np.exp(table.column(T)) / (nodes * (nodes + 1j)))
        terms = (long.zeta * Ks[:, None] / math.pi) * core[None, :] * np.exp(-np.outer(x, nodes.imag))
        terms = np.where(np.isfinite(terms), terms, 0.0).max(axis=0)
        tail = np.cumsum(terms[::-1])[::-1]  # tail[j] = sum of terms j..end
        if tail[-1] <= epsilon / 10.0 or n_long >= 64 * n0:
            break
        n_long *= 2
    keep = np.flatnonzero(tail > epsilon / 10.0)
    n = max(n0, int(keep[-1]) if keep.size else 0)
    n = min(n, n_long)
    short = contour.with_terms(n)
    sub = CharFnTable(table.xi_nodes[:n + 1], table.t_nodes, table.phi[:n + 1],
                      table.params, table.solver_tag, table.status[:n + 1])
    return short, sub


def price_auto(params: ModelParams, spec, epsilon: float = 1e-6,
               config: SolverConfig = SolverConfig(), r: float = 0.0,
               domain: AnalyticityDomain = AnalyticityDomain(), omega: float | None = None,
               adaptive: bool = True):
    """Sinh pricing with leg split and parameters chosen per leg.

    Strikes at or below the spot share one put contour, strikes above share
    one call contour; each contour costs one Riccati sweep. The decay bound
    behind the a-priori truncation is optimistic at moderate |xi|, so with
    ``adaptive`` the truncation is also checked a posteriori on the computed
    terms (see :func:`_extend_truncation`).
    """
    specs, single = _as_specs(spec)
    out = [None] * len(specs)
    for leg in ("put", "call"):
        idx = [i for i, s in enumerate(specs) if select_leg(s) == leg]
        if not idx:
            continue
        group = [specs[i] for i in idx]
        # size the contour on the farthest strike of the group
        ref = max(group, key=lambda s: abs(s.log_moneyness))
        om = omega
        if om is not None:
            om = abs(om) if leg == "put" else -abs(om)
        c = auto_contour(params, ref, epsilon, domain, omega=om, leg=leg)
        if adaptive:
            c, table = _extend_truncation(params, group, c, epsilon, config)
            res = price_sinh(params, group, c, config, r, table=table)
        else:
            res = price_sinh(params, group, c, config, r)
        for i, est in zip(idx, res):
            out[i] = est
    return out[0] if single else out


def price_sinh_surface(params: ModelParams, S0: float, strikes, maturities, contours: dict,
                       config: SolverConfig = SolverConfig(), r: float = 0.0,
                       n_terms: dict | None = None):
    """Prices on a strike x maturity grid from one Riccati sweep per leg.

    ``contours`` maps "put" and/or "call" to a sinh contour; strikes at or
    below the spot use the put contour and the others the call contour (a
    single contour is used for every strike if only one leg is given). The
    uniform solver grid has ``config.M`` steps up to the largest maturity and
    every maturity must be one of its nodes. ``n_terms`` optionally maps a
    maturity to a shorter truncation of the shared contour. Returns a list of
    call-valued :class:`PriceEstimate` rows per maturity.
    """
    from .fracriccati import TimeGrid
    if config.grid != "uniform":
        raise ValueError("a shared table needs a uniform grid")
    strikes = [float(K) for K in strikes]
    maturities = [float(T) for T in maturities]
    if not strikes or not maturities:
        raise ValueError("empty strike or maturity list")
    Tmax = max(maturities)
    grid = TimeGrid.uniform(Tmax, config.M)
    tables = {leg: build_table(params, c.nodes(), Tmax, config, grid=grid)
              for leg, c in contours.items()}
    out = []
    for T in maturities:
        row = [None] * len(strikes)
        for leg, c in contours.items():
            if len(contours) == 1:
                idx = list(range(len(strikes)))
            else:
                idx = [i for i, K in enumerate(strikes)
                       if select_leg(OptionSpec(S0, K, T)) == leg]
            if not idx:
                continue
            n = (n_terms or {}).get(T, c.n_terms)
            if n > c.n_terms:
                raise ValueError("per-maturity truncation cannot exceed the contour's N")
            sub = c.with_terms(n)
            tab = tables[leg]
            phi = tab.column(T)[: n + 1]
            blown = int((~tab.ok[: n + 1]).sum())
            specs = [OptionSpec(S0, strikes[i], T, "call") for i in idx]
            nodes, w = sub.nodes(), sub.derivative().astype(np.complex128)
            w[0] *= 0.5
            Ks = np.array([s.K for s in specs])
            vals = -(sub.zeta * Ks * math.exp(-r * T) / math.pi) * _half_sum(
                nodes, w, phi, np.log(S0 / Ks))
            echo = {"omega1": sub.omega1, "b": sub.b, "omega": sub.omega, "zeta": sub.zeta,
                    "N": n, "leg": leg, "solver": config.tag}
            ests = _finish(vals, leg, specs, r, "sinh", echo, n + 1, blown, False)
            for i, e in zip(idx, ests):
                row[i] = e
        out.append(row)
    return out


__all__ = ["OptionSpec", "PriceEstimate", "payoff_transform", "price_flat_ift",
           "price_flat_ift_bm", "price_sinh", "price_lewis", "price_cos", "price_cm_fft",
           "price_on_contour", "select_leg", "convert", "no_arbitrage_bounds", "auto_contour",
           "price_auto", "price_sinh_surface", "gauss_legendre_01", "fft_grid_strikes", "leg_of_line"]
