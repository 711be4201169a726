"""Fractional Riccati solvers for the rough Heston characteristic function.

The function h(xi, .) solves the Volterra equation

    h(xi, t) = I^alpha F(xi, h(xi, .))(t),
    F(xi, h) = -(xi**2 + 1j*xi)/2 + gamma*(1j*xi*rho*nu - 1)*h + (gamma*nu)**2/2 * h**2.

Four discretizations are provided. ``standard`` is the classical fractional
Adams predictor-corrector with a rectangle-rule predictor. ``mod1`` seeds the
predictor with the small-time asymptote while ``|h| <= c*|xi|``. ``mod2``
evolves the remainder ``h - h_as``. ``mod3`` is ``mod2`` applied to the
rescaled unknown ``h / (1 + |xi|)``, which makes the numerical map
non-analytic in ``xi``.

Solvers are vectorized over spectral parameters on uniform grids; the hot
loop runs in the compiled extension when available.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py

try:  # pragma: no cover - exercised implicitly
    if os.environ.get("ROUGHPRICER_PURE_PYTHON"):
        raise ImportError("pure-python mode requested")
    from ._kernel import run_uniform as _run_uniform_ext
except ImportError:  # pragma: no cover
    _run_uniform_ext = None

HAVE_EXTENSION = _run_uniform_ext is not None

SOLVERS = ("standard", "mod1", "mod2", "mod3")

BLOW_UP_FACTOR = 1e8


@dataclass(frozen=True)
class ModelParams:
    """Rough Heston parameters.

    ``alpha = 1`` is accepted and reduces the model to the classical Heston
    model; it is used as an oracle for the Adams schemes.
    """

    alpha: float
    gamma: float
    rho: float
    theta: float
    nu: float
    v0: float
    r: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        for name in ("gamma", "theta", "nu", "v0"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if not self.r >= 0.0:
            raise ValueError(f"r must be non-negative, got {self.r}")

    def replace(self, **changes) -> "ModelParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return ModelParams(**values)

    def coefficients(self, xi):
        """Return (c0, c1, c2) with F(xi, h) = c0 + c1*h + c2*h**2."""
        xi = np.asarray(xi, dtype=np.complex128)
        c0 = -0.5 * (xi * xi + 1j * xi)
        c1 = self.gamma * (1j * xi * self.rho * self.nu - 1.0)
        c2 = np.full_like(xi, 0.5 * (self.gamma * self.nu) ** 2)
        return c0, c1, c2


# An equity-index-like parameter set used throughout the tests and fixtures.
REFERENCE_PARAMS = ModelParams(alpha=0.62, gamma=0.1, rho=-0.681, theta=0.3156,
                               nu=0.331, v0=0.0392)


def riccati_rhs(params: ModelParams, xi, h):
    c0, c1, c2 = params.coefficients(xi)
    h = np.asarray(h, dtype=np.complex128)
    out = c0 + c1 * h + c2 * h * h
    return out[()] if out.ndim == 0 else out


def asymptotic_h(params: ModelParams, xi, t):
    """Small-time asymptote -0.5*(xi**2 + i*xi) * t**alpha / Gamma(alpha + 1)."""
    xi = np.asarray(xi, dtype=np.complex128)
    t = np.asarray(t, dtype=np.float64)
    out = -0.5 * (xi * xi + 1j * xi) * t ** params.alpha / math.gamma(params.alpha + 1.0)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# grids and weights


@dataclass(frozen=True, eq=False)
class TimeGrid:
    nodes: np.ndarray
    kind: str = "uniform"
    split_index: int | None = None
    fine_step: float | None = None
    coarse_step: float | None = None
    xi_split_constant: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("grid must start at t = 0")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing (duplicate nodes?)")
        if self.kind == "two-part":
            if not self.fine_step <= self.coarse_step / 4:
                raise ValueError("fine step must be at most a quarter of the coarse step")

    @classmethod
    def uniform(cls, T: float, M: int) -> "TimeGrid":
        if M < 1 or not T > 0:
            raise ValueError("uniform grid needs T > 0 and M >= 1")
        return cls(np.arange(M + 1) * (T / M), kind="uniform")

    @classmethod
    def two_part(cls, xi: complex, alpha: float, T: float, m_fine: int, m_coarse: int,
                 A: float = 10.0) -> "TimeGrid":
        """Fine uniform grid on [0, A*|xi|**(-1/alpha)], coarse uniform grid up to T.

        Falls back to a uniform grid with ``m_fine + m_coarse`` steps when the
        split point is not well inside (0, T) or the step ratio is too small.
        """
        r = abs(xi)
        split = A * r ** (-1.0 / alpha) if r > 0 else np.inf
        if split < T:
            fine = split / m_fine
            coarse = (T - split) / m_coarse
            if fine <= coarse / 4:
                nodes = np.concatenate([np.arange(m_fine) * fine,
                                        split + np.arange(m_coarse + 1) * coarse])
                nodes[-1] = T
                return cls(nodes, kind="two-part", split_index=m_fine, fine_step=fine,
                           coarse_step=coarse, xi_split_constant=A)
        return cls.uniform(T, m_fine + m_coarse)

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def is_uniform(self) -> bool:
        return self.kind == "uniform"

    @property
    def step(self) -> float:
        if not self.is_uniform:
            raise ValueError("non-uniform grid has no single step")
        return self.T / self.M


# Up to this ratio of step to distance the weights are summed as binomial
# series; above it the expm1/log1p closed forms lose at most a few digits.
_SERIES_RATIO = 0.25
_SERIES_MAX_TERMS = 30


def _series_terms(ratio: float) -> int:
    """Terms needed for ratio**n to drop below 1e-17."""
    return int(min(_SERIES_MAX_TERMS, math.ceil(-39.2 / math.log(max(ratio, 1e-300))) + 2))


def _binomials(p, n):
    """C(p, 0..n) for real p."""
    out = np.empty(n + 1)
    out[0] = 1.0
    for j in range(1, n + 1):
        out[j] = out[j - 1] * (p - j + 1) / j
    return out


def _poly(coef, x):
    """sum_i coef[i] * x**(i+1) by Horner's rule."""
    acc = np.zeros_like(x)
    for c in coef[::-1]:
        acc = (acc + c) * x
    return acc


def _second_difference_pow(m, p):
    """(m+2)**p + m**p - 2*(m+1)**p, accurate to rounding for every m >= 0."""
    m = np.asarray(m, dtype=np.float64)
    x = 1.0 / (m + 1.0)
    out = (m + 1.0) ** p * (np.expm1(p * np.log1p(x)) + np.expm1(p * np.log1p(-x)))
    far = x <= _SERIES_RATIO
    if far.any():
        xf = x[far]
        C = _binomials(p, _series_terms(float(xf.max())))
        # (1+x)**p + (1-x)**p - 2 = 2 * sum over even n >= 2 of C(p, n) x**n
        even = np.where(np.arange(1, C.size) % 2 == 0, C[1:], 0.0)
        out[far] = 2.0 * (m[far] + 1.0) ** p * _poly(even, xf)
    return out


def _first_weight_pow(k, alpha):
    """k**(alpha+1) - (k - alpha)*(k+1)**alpha for k >= 1, without cancellation."""
    k = np.asarray(k, dtype=np.float64)
    out = -k ** (alpha + 1.0) * np.expm1(alpha * np.log1p(1.0 / k) + np.log1p(-alpha / k))
    far = 1.0 / k <= _SERIES_RATIO
    if far.any():
        x = 1.0 / k[far]
        C = _binomials(alpha, _series_terms(float(x.max())))
        # 1 - (1 - alpha x)(1+x)**alpha = -sum_{n>=2} (C(a,n) - a C(a,n-1)) x**n
        coef = np.concatenate([[0.0], C[2:] - alpha * C[1:-1]])
        out[far] = -k[far] ** (alpha + 1.0) * _poly(coef, x)
    return out


@dataclass(frozen=True, eq=False)
class AdamsWeights:
    """Product-trapezoid (corrector) and product-rectangle (predictor) weights.

    Uniform grids store Toeplitz generators: a_{j,k+1} = conv[k-j] for
    1 <= j <= k and b_{j,k+1} = pred[k-j]. Non-uniform grids store rows.
    """

    alpha: float
    grid: TimeGrid
    first: np.ndarray
    diag: np.ndarray
    conv: np.ndarray | None = None
    pred: np.ndarray | None = None
    rows: list = field(default_factory=list)
    pred_rows: list = field(default_factory=list)

    @property
    def predictor_scale(self) -> float:
        """b_{0,1}, the weight of the first rectangle-rule step."""
        t1 = self.grid.nodes[1]
        return t1 ** self.alpha / math.gamma(self.alpha + 1.0)

    def corrector(self, j: int, k1: int) -> float:
        """a_{j,k1} for 0 <= j <= k1."""
        k = k1 - 1
        if j == k1:
            return float(self.diag[k])
        if j == 0:
            return float(self.first[k])
        if self.conv is not None:
            return float(self.conv[k - j])
        return float(self.rows[k][j - 1])

    def corrector_matrix(self) -> np.ndarray:
        M = self.grid.M
        A = np.zeros((M, M + 1))
        for k in range(M):
            for j in range(k + 2):
                A[k, j] = self.corrector(j, k + 1)
        return A


def adams_weights(alpha: float, grid: TimeGrid, force_general: bool = False) -> AdamsWeights:
    if grid.is_uniform and not force_general:
        return _uniform_weights(alpha, grid)
    return _general_weights(alpha, grid)


@np.errstate(divide="ignore")
def _uniform_weights(alpha, grid):
    M = grid.M
    dt = grid.step
    p = alpha + 1.0
    c = dt ** alpha / math.gamma(alpha + 2.0)
    k = np.arange(M, dtype=np.float64)
    first = np.empty(M)
    first[0] = c * alpha
    first[1:] = c * _first_weight_pow(k[1:], alpha)
    conv = c * _second_difference_pow(k, p)
    cp = dt ** alpha / math.gamma(alpha + 1.0)
    # (m+1)**alpha - m**alpha
    pred = -cp * (k + 1.0) ** alpha * np.expm1(alpha * np.log1p(-1.0 / (k + 1.0)))
    diag = np.full(M, c)
    return AdamsWeights(alpha, grid, first=first, diag=diag, conv=conv, pred=pred)


def _general_row(u, lo, hi, p, C):
    """(u+lo)**p/lo + (u-hi)**p/hi - u**p*(1/lo + 1/hi) for distances u >= hi."""
    ra, rb = lo / u, hi / u
    with np.errstate(divide="ignore"):
        out = u ** (p - 1.0) * (np.expm1(p * np.log1p(ra)) / ra
                                + np.expm1(p * np.log1p(-rb)) / rb)
    far = np.maximum(ra, rb) <= _SERIES_RATIO
    if far.any():
        a, b = ra[far], rb[far]
        nt = _series_terms(float(max(a.max(), b.max())))
        # the first-order terms cancel exactly; the rest is
        # sum_{n>=2} C(p,n) (ra**(n-1) - (-rb)**(n-1)) / u
        coef = C[2:nt + 1]
        out[far] = u[far] ** (p - 1.0) * (_poly(coef, a) - _poly(coef, -b))
    return out


def _general_weights(alpha, grid):
    t = grid.nodes
    M = grid.M
    p = alpha + 1.0
    g2 = math.gamma(alpha + 2.0)
    g1 = math.gamma(alpha + 1.0)
    C = _binomials(p, _SERIES_MAX_TERMS + 1)
    first = np.empty(M)
    diag = np.empty(M)
    rows = []
    pred_rows = []
    for k in range(M):
        T = t[k + 1]
        diag[k] = (T - t[k]) ** alpha / g2
        x = t[1] / T
        if x <= _SERIES_RATIO:
            # p*T**alpha + ((T - t1)**p - T**p)/t1 = -T**alpha * sum_{n>=2} C(p,n) (-x)**(n-1)
            n = np.arange(2, _series_terms(x) + 1)
            first[k] = -T ** alpha * float(np.sum(C[n] * (-x) ** (n - 1))) / g2
        else:
            tail = math.expm1(p * math.log1p(-x)) / x if x < 1.0 else -1.0
            first[k] = T ** alpha * (p + tail) / g2
        j = np.arange(1, k + 1)
        if k:
            row = _general_row(T - t[j], t[j] - t[j - 1], t[j + 1] - t[j], p, C) / g2
        else:
            row = np.empty(0)
        rows.append(row)
        jj = np.arange(k + 1)
        pred_rows.append(((T - t[jj]) ** alpha - (T - t[jj + 1]) ** alpha) / g1)
    return AdamsWeights(alpha, grid, first=first, diag=diag, rows=rows, pred_rows=pred_rows)


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class RiccatiTrajectory:
    xi: complex
    t: np.ndarray
    values: np.ndarray
    rhs_values: np.ndarray
    status: str = "ok"
    bad_index: int | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True, eq=False)
class RiccatiBatch:
    """Trajectories for many spectral parameters sharing one grid."""

    xi: np.ndarray
    t: np.ndarray
    values: np.ndarray       # (nxi, M+1)
    rhs_values: np.ndarray   # (nxi, M+1)
    bad_index: np.ndarray    # -1 where the solve stayed finite
    bad_kind: np.ndarray     # 0 ok, 1 blow-up, 2 blow-down
    solver: str = ""

    @property
    def ok(self) -> np.ndarray:
        return self.bad_index < 0

    def status(self, i: int) -> str:
        return ("ok", "blow_up", "blow_down")[int(self.bad_kind[i])]

    def trajectory(self, i: int) -> RiccatiTrajectory:
        bad = int(self.bad_index[i])
        return RiccatiTrajectory(complex(self.xi[i]), self.t, self.values[i], self.rhs_values[i],
                                 status=self.status(i), bad_index=None if bad < 0 else bad)


def _setup(params, xi, solver):
    xi = np.atleast_1d(np.asarray(xi, dtype=np.complex128))
    c0, c1, c2 = params.coefficients(xi)
    xi_abs = np.abs(xi)
    thr = BLOW_UP_FACTOR * (1.0 + xi_abs)
    beta = -0.5 * (xi * xi + 1j * xi) / math.gamma(params.alpha + 1.0)
    if solver in ("standard", "mod1"):
        mode = _kernel_py.MODE_STANDARD if solver == "standard" else _kernel_py.MODE_SEEDED
        return xi, mode, c0, c1, c2, beta, thr, xi_abs, np.ones_like(xi_abs)
    if solver == "mod2":
        scale = np.ones_like(xi_abs)
    elif solver == "mod3":
        scale = 1.0 + xi_abs
    else:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    # remainder form: the constant term integrates exactly into h_as
    return (xi, _kernel_py.MODE_REMAINDER, np.zeros_like(c0), c1, c2 * scale,
            beta / scale, thr / scale, xi_abs, scale)


def solve(params: ModelParams, xi, grid: TimeGrid, solver: str = "mod3", n_iter: int = 2,
          c: float = 0.1, use_extension: bool | None = None) -> RiccatiBatch:
    """Solve for every xi in ``xi`` on ``grid``.

    ``n_iter`` is the number of corrector sweeps for ``standard`` and the number
    of fixed-point reassignments after the seeded step for the modifications.
    ``c`` is the Modification I guard multiplier (seed while |h| <= c*|xi|).
    """
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    xi, mode, c0, c1, c2, beta, thr, xi_abs, scale = _setup(params, xi, solver)
    w = adams_weights(params.alpha, grid)
    tpow = grid.nodes ** params.alpha
    if grid.is_uniform:
        if use_extension is None:
            use_extension = HAVE_EXTENSION
        if use_extension and not HAVE_EXTENSION:
            raise RuntimeError("compiled kernel is not available")
        run = _run_uniform_ext if use_extension else _kernel_py.run_uniform
        u, bad_index, bad_kind = run(mode, c0, c1, c2, beta, thr, xi_abs, tpow, w.first,
                                     w.conv, float(w.diag[0]), w.pred, n_iter, c)
    else:
        u = np.empty((xi.size, grid.M + 1), dtype=np.complex128)
        bad_index = np.empty(xi.size, dtype=np.int64)
        bad_kind = np.empty(xi.size, dtype=np.int64)
        for i in range(xi.size):
            u[i], bad_index[i], bad_kind[i] = _kernel_py.run_dense(
                mode, c0[i], c1[i], c2[i], beta[i], thr[i], xi_abs[i], tpow, w.first,
                w.rows, w.diag, w.pred_rows, n_iter, c)
    if mode == _kernel_py.MODE_REMAINDER:
        h = scale[:, None] * (u + beta[:, None] * tpow[None, :])
    else:
        h = u
    with np.errstate(all="ignore"):
        rhs = riccati_rhs(params, xi[:, None], h)
    return RiccatiBatch(xi, grid.nodes, h, rhs, bad_index, bad_kind, solver=solver)


def _single(params, xi, grid, solver, n_iter, c=0.1):
    return solve(params, [xi], grid, solver=solver, n_iter=n_iter, c=c).trajectory(0)


def solve_standard(params, xi, grid, n_corrector: int = 1) -> RiccatiTrajectory:
    return _single(params, xi, grid, "standard", n_corrector)


def solve_mod1(params, xi, grid, n_iter: int = 2, c: float = 0.1) -> RiccatiTrajectory:
    return _single(params, xi, grid, "mod1", n_iter, c)


def solve_mod2(params, xi, grid, n_iter: int = 2) -> RiccatiTrajectory:
    return _single(params, xi, grid, "mod2", n_iter)


def solve_mod3(params, xi, grid, n_iter: int = 2) -> RiccatiTrajectory:
    return _single(params, xi, grid, "mod3", n_iter)
