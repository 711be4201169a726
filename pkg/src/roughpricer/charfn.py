"""Log-characteristic function of the rough Heston log-price.

For X_T = ln(S_T / S_0) (no drift; discounting is applied by the pricers),

    phi(xi, T) = ln E[exp(i xi X_T)] = int_0^T (gamma*theta*h(xi, s) + v0*F(xi, h(xi, s))) ds,

where h solves the fractional Riccati equation of :mod:`roughpricer.fracriccati`.
The integral is evaluated by the trapezoid rule over the cached values of the
integrand on the solver grid, so a single sweep yields phi at every node.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .fracriccati import ModelParams, TimeGrid, riccati_rhs, solve


class CharFnUnavailable(ArithmeticError):
    """The Riccati solve blew up at some of the requested spectral parameters."""

    def __init__(self, xi, statuses):
        self.xi = np.atleast_1d(xi)
        self.statuses = list(statuses)
        super().__init__(f"characteristic function unavailable at {self.xi.size} node(s): "
                         f"{self.statuses[:3]}")


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """How to evaluate h: modification, number of steps, sweeps and grid kind.

    ``grid = "two-part"`` builds a xi-dependent grid per node with
    ``M_fine = M // 2`` nodes on [0, A|xi|^(-1/alpha)] and the rest beyond.
    """

    solver: str = "mod3"
    M: int = 200
    n_iter: int = 2
    grid: str = "uniform"
    A: float = 10.0
    c: float = 0.1

    @property
    def tag(self) -> str:
        extra = f",A={self.A:g}" if self.grid == "two-part" else ""
        return f"{self.solver}(M={self.M},n={self.n_iter},{self.grid}{extra})"


@dataclass(frozen=True, eq=False)
class CharFnTable:
    """phi(xi_j, t_k) for every node xi_j and every solver-grid time t_k.

    ``phi`` has shape (n_xi, n_t); rows of unavailable nodes are NaN and
    ``status`` records why.
    """

    xi_nodes: np.ndarray
    t_nodes: np.ndarray
    phi: np.ndarray
    params: ModelParams
    solver_tag: str
    status: tuple

    @property
    def ok(self) -> np.ndarray:
        return np.array([s == "ok" for s in self.status])

    def column(self, T: float) -> np.ndarray:
        """phi(., T); T must be a grid node."""
        idx = np.flatnonzero(np.isclose(self.t_nodes, T, rtol=0, atol=1e-12 * max(1.0, T)))
        if idx.size == 0:
            raise ValueError(f"maturity {T} is not a node of the table grid")
        return self.phi[:, idx[0]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re_xi", "im_xi", "t", "re_phi", "im_phi"])
            for j, x in enumerate(self.xi_nodes):
                for k, t in enumerate(self.t_nodes):
                    p = self.phi[j, k]
                    w.writerow([repr(float(x.real)), repr(float(x.imag)), repr(float(t)),
                                repr(float(p.real)), repr(float(p.imag))])


def _phi_path(params, t, h, rhs):
    integrand = params.gamma * params.theta * h + params.v0 * rhs
    return cumulative_trapezoid(integrand, t, axis=-1, initial=0.0)


def build_table(params: ModelParams, xi_nodes, T: float, config: SolverConfig = SolverConfig(),
                grid: TimeGrid | None = None) -> CharFnTable:
    """One Riccati sweep per node; phi at every grid time via running trapezoid sums.

    For uniform grids ``grid`` may be given explicitly (it must end at T);
    otherwise ``TimeGrid.uniform(T, config.M)`` is used. Two-part grids are
    node-dependent and their time axis is reported only at t = 0 and T.
    """
    xi_nodes = np.atleast_1d(np.asarray(xi_nodes, dtype=np.complex128))
    if config.grid == "uniform":
        grid = grid if grid is not None else TimeGrid.uniform(T, config.M)
        if abs(grid.T - T) > 1e-12 * max(1.0, T):
            raise ValueError("grid must end at the requested maturity")
        batch = solve(params, xi_nodes, grid, solver=config.solver, n_iter=config.n_iter,
                      c=config.c)
        with np.errstate(invalid="ignore"):
            phi = _phi_path(params, grid.nodes, batch.values, batch.rhs_values)
        status = tuple(batch.status(i) for i in range(xi_nodes.size))
        phi[~batch.ok] = np.nan
        return CharFnTable(xi_nodes, grid.nodes, phi, params, config.tag, status)
    if config.grid != "two-part":
        raise ValueError(f"unknown grid kind {config.grid!r}")
    m_fine = max(config.M // 2, 1)
    m_coarse = max(config.M - m_fine, 1)
    phi = np.full((xi_nodes.size, 2), np.nan, dtype=np.complex128)
    phi[:, 0] = 0.0
    status = []
    for j, x in enumerate(xi_nodes):
        g = TimeGrid.two_part(x, params.alpha, T, m_fine, m_coarse, A=config.A)
        b = solve(params, [x], g, solver=config.solver, n_iter=config.n_iter, c=config.c)
        status.append(b.status(0))
        if b.ok[0]:
            phi[j, 1] = _phi_path(params, g.nodes, b.values[0], b.rhs_values[0])[-1]
    return CharFnTable(xi_nodes, np.array([0.0, T]), phi, params, config.tag, tuple(status))


def log_charfn(params: ModelParams, xi, T: float, config: SolverConfig = SolverConfig(),
               strict: bool = True):
    """phi(xi, T); NaN (or :class:`CharFnUnavailable` if ``strict``) where h blew up."""
    scalar = np.ndim(xi) == 0
    table = build_table(params, xi, T, config)
    out = table.column(T)
    if strict and not table.ok.all():
        bad = ~table.ok
        raise CharFnUnavailable(table.xi_nodes[bad], np.array(table.status)[bad])
    return complex(out[0]) if scalar else out


def charfn(params: ModelParams, xi, T: float, config: SolverConfig = SolverConfig(),
           strict: bool = True):
    return np.exp(log_charfn(params, xi, T, config, strict=strict))


# --------------------------------------------------------------------------
# classical Heston (alpha = 1) closed form, used as an oracle


def _heston_roots(params, xi):
    xi = np.asarray(xi, dtype=np.complex128)
    a2 = 0.5 * (params.gamma * params.nu) ** 2
    b1 = params.gamma * (1j * xi * params.rho * params.nu - 1.0)
    c0 = -0.5 * (xi * xi + 1j * xi)
    D = np.sqrt(b1 * b1 - 4.0 * a2 * c0)
    # the decaying solution needs Re D >= 0
    D = np.where(D.real < 0, -D, D)
    r1 = (-b1 - D) / (2.0 * a2)
    r2 = (-b1 + D) / (2.0 * a2)
    return a2, D, r1, r2


def heston_h(params: ModelParams, xi, t):
    """Closed-form h for alpha = 1: h' = F(xi, h), h(0) = 0."""
    a2, D, r1, r2 = _heston_roots(params, xi)
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(r2 == 0, 0.0, r1 / r2)
        e = np.exp(-D * t)
        return r1 * (1.0 - e) / (1.0 - g * e)


def heston_log_charfn(params: ModelParams, xi, T: float):
    """Closed-form phi for alpha = 1 (the classical Heston model, no drift)."""
    a2, D, r1, r2 = _heston_roots(params, xi)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(r2 == 0, 0.0, r1 / r2)
        e = np.exp(-D * T)
        int_h = r1 * T - np.log((1.0 - g * e) / (1.0 - g)) / a2
        h_T = r1 * (1.0 - e) / (1.0 - g * e)
    out = params.gamma * params.theta * int_h + params.v0 * h_T
    return out[()] if np.ndim(out) == 0 else out


def h_infinity(params: ModelParams, xi):
    """Large-time limit of h: the root of F(xi, .) with non-positive real part."""
    xi = np.asarray(xi, dtype=np.complex128)
    gn2 = (params.gamma * params.nu) ** 2
    b = params.gamma * (1j * params.rho * params.nu * xi - 1.0)
    s = np.sqrt((xi * xi + 1j * xi) * gn2 + b * b)
    h = (-b - s) / gn2
    alt = (-b + s) / gn2
    h = np.where(h.real > 0, alt, h)
    return h[()] if h.ndim == 0 else h


def kappa_infinity(params: ModelParams) -> float:
    return float(np.sqrt(1.0 - params.rho ** 2) / (params.gamma * params.nu))


__all__ = ["CharFnTable", "CharFnUnavailable", "SolverConfig", "build_table", "log_charfn",
           "charfn", "heston_h", "heston_log_charfn", "h_infinity", "kappa_infinity",
           "riccati_rhs"]
