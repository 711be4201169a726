"""Error certification by agreement of independent pricing legs.

A *leg* is a contour together with a way of evaluating the characteristic
function on it. If two legs whose contours are far apart give the same
price to 10^-m, each price is trusted to 10^-(m-2): the reported
``certified_error`` is 100 times the largest pairwise disagreement.

Deforming the contour alone cannot expose errors of the characteristic
function itself when the approximation is an analytic function of xi: the
Adams scheme on a fixed uniform grid is such a function, and two contours
then agree to rounding even when both prices are biased. Principle II
therefore requires at least one leg whose approximation is *not* analytic
in xi. Here that is a leg solved on the xi-dependent two-part grid (or with
the asymptotic seed of Modification I, whose switch depends on |xi|).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .charfn import SolverConfig
from .contours import (AnalyticityDomain, FlatContour, SinhContour, choose_sinh_params,
                       truncation_lambda)
from .fracriccati import ModelParams, TimeGrid, solve
from .inversion import OptionSpec, PriceEstimate, price_flat_ift, price_sinh

INFLATION = 100.0
MIN_TERMS = 24
DIVERGENCE_FACTOR = 10.0


@dataclass(frozen=True)
class BootstrapLeg:
    contour: SinhContour | FlatContour
    config: SolverConfig = SolverConfig()

    @property
    def analytic(self) -> bool:
        """Whether the characteristic-function approximation is analytic in xi."""
        return is_analytic(self.config)


def is_analytic(config: SolverConfig) -> bool:
    return config.grid == "uniform" and config.solver != "mod1"


def _curve(contour, y):
    if isinstance(contour, SinhContour):
        return 1j * contour.omega1 + contour.b * np.sinh(1j * contour.omega + y)
    return 1j * contour.omega1 + y


def _span(contour) -> float:
    return contour.n_terms * contour.zeta


def _scale(contour) -> float:
    return contour.b if isinstance(contour, SinhContour) else 1.0


def divergence(c1, c2, samples: int = 401) -> tuple[float, float]:
    """(max node distance, threshold) for two contours.

    Nodes correspond when they share the quadrature variable y, so the
    distance is measured between the curves xi_1(y) and xi_2(y) over the
    common span [0, min(N_i zeta_i)]. The threshold is 10 * zeta_ref * b
    with zeta_ref = span / 24, the coarsest step the minimum number of terms
    allows; both quantities only depend on the curves and the span, so
    refining a contour (zeta -> zeta/s, N -> s N) does not change the verdict.
    """
    Y = min(_span(c1), _span(c2))
    y = np.linspace(0.0, Y, samples)
    dist = float(np.abs(_curve(c1, y) - _curve(c2, y)).max())
    thr = DIVERGENCE_FACTOR * (Y / MIN_TERMS) * max(_scale(c1), _scale(c2))
    return dist, thr


def _describe(contour) -> dict:
    if isinstance(contour, SinhContour):
        return {"kind": "sinh", "omega1": contour.omega1, "b": contour.b, "omega": contour.omega,
                "zeta": contour.zeta, "N": contour.n_terms, "leg": contour.leg}
    return {"kind": "flat", "omega1": contour.omega1, "zeta": contour.zeta, "N": contour.n_terms}


@dataclass(frozen=True)
class BootstrapReport:
    estimates: tuple  # (contour description, solver tag, value)
    max_pairwise_diff: float
    certified_error: float
    agreement_digits: int | None
    verdict: str
    divergent: bool
    diagnostics: tuple = field(default_factory=tuple)
    legs: tuple = field(default_factory=tuple, repr=False)

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def as_row(self) -> dict:
        return {"verdict": self.verdict, "max_pairwise_diff": self.max_pairwise_diff,
                "certified_error": self.certified_error,
                "agreement_digits": self.agreement_digits, "divergent": self.divergent,
                "diagnostics": "; ".join(self.diagnostics),
                "values": [v for _, _, v in self.estimates]}


def _price_leg(params, spec, leg: BootstrapLeg, r: float) -> PriceEstimate:
    c = leg.contour
    if isinstance(c, SinhContour):
        return price_sinh(params, spec, c, leg.config, r)
    if isinstance(c, FlatContour):
        return price_flat_ift(params, spec, c.omega1, c.zeta, c.n_terms, leg.config, r)
    raise TypeError(f"unsupported contour {type(c).__name__}")


def bootstrap_price(params: ModelParams, spec: OptionSpec, legs, threshold: float = 1e-4,
                    principle: str = "II", r: float = 0.0,
                    min_terms: int = MIN_TERMS) -> BootstrapReport:
    """Price ``spec`` on every leg and certify the result by mutual agreement.

    ``principle="I"`` only asks for divergent contours; ``"II"`` additionally
    requires one leg with a non-analytic approximation and one analytic leg.
    Diagnostics explain every rejection.
    """
    legs = [leg if isinstance(leg, BootstrapLeg) else BootstrapLeg(*leg) for leg in legs]
    if principle not in ("I", "II"):
        raise ValueError("principle must be 'I' or 'II'")
    diag = []
    if len(legs) < 2:
        diag.append("fewer than two legs")
    for i, leg in enumerate(legs):
        if leg.contour.n_terms < min_terms:
            diag.append(f"leg {i}: N={leg.contour.n_terms} < {min_terms}")
    if principle == "II" and len(legs) >= 2:
        kinds = {leg.analytic for leg in legs}
        if False not in kinds:
            diag.append("principle II needs a leg that is non-analytic in xi "
                        "(two-part grid or modification I)")
        if True not in kinds:
            diag.append("principle II needs an analytic reference leg")

    estimates, clean_values = [], []
    for i, leg in enumerate(legs):
        est = _price_leg(params, spec, leg, r)
        estimates.append((_describe(leg.contour), leg.config.tag, est.value))
        if est.blown_nodes:
            diag.append(f"leg {i}: {est.blown_nodes} blown node(s)")
        elif est.outside_no_arbitrage or not math.isfinite(est.value):
            diag.append(f"leg {i}: price outside no-arbitrage bounds")
        else:
            clean_values.append(est.value)

    divergent = True
    for (i, a), (j, b) in itertools.combinations(enumerate(legs), 2):
        dist, thr = divergence(a.contour, b.contour)
        if not dist > thr:
            divergent = False
            diag.append(f"legs {i},{j} not divergent: node distance {dist:.3g} <= {thr:.3g}")

    values = [v for _, _, v in estimates]
    diff = max((abs(x - y) for x, y in itertools.combinations(values, 2)), default=math.nan)
    if len(clean_values) < 2:
        diag.append("fewer than two clean legs")
    elif not diff < threshold:
        diag.append(f"disagreement {diff:.3g} exceeds threshold {threshold:.3g}")
    digits = None if not diff > 0 else int(math.floor(-math.log10(diff)))
    verdict = "rejected" if diag else "certified"
    return BootstrapReport(tuple(estimates), diff, INFLATION * diff, digits, verdict, divergent,
                           tuple(diag), tuple(legs))


def default_legs(params: ModelParams, spec: OptionSpec, M: int, epsilon: float = 1e-10,
                 omega: float = 0.1, refine: int = 2, n_iter: int = 2,
                 domain: AnalyticityDomain = AnalyticityDomain()) -> list[BootstrapLeg]:
    """Mirrored put/call sinh contours at tilts +omega and -omega.

    The put leg uses Modification II on the uniform M-step grid (analytic in
    xi); the call leg uses Modification III on the xi-dependent two-part grid
    with ``refine * M`` steps. For small |xi| the two-part grid falls back to
    a uniform one, so the refinement is what keeps the two legs' errors from
    coinciding there.
    """
    legs = []
    for leg, om, cfg in (("put", abs(omega), SolverConfig("mod2", M, n_iter)),
                         ("call", -abs(omega),
                          SolverConfig("mod3", refine * M, n_iter, grid="two-part"))):
        c = choose_sinh_params(domain, leg, epsilon, omega=om)
        tb = truncation_lambda(params, spec.T, c.omega, epsilon, spec.K / spec.S0, c.b, c.zeta)
        legs.append(BootstrapLeg(c.with_terms(max(tb.n_terms, MIN_TERMS)), cfg))
    return legs


# --------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class ProbeResult:
    clean: bool
    node: complex | None = None
    index: int | None = None
    status: str = "ok"
    sampled: int = 0


def _sample_indices(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """One index drawn uniformly from each of ``count`` equal strata of 0..n-1,
    always keeping the last node, which is the largest |xi|."""
    count = min(count, n)
    edges = np.linspace(0, n, count + 1).astype(int)
    idx = [int(rng.integers(lo, hi)) if hi > lo else lo for lo, hi in zip(edges[:-1], edges[1:])]
    idx[-1] = n - 1
    return np.unique(idx)


def admissibility_probe(params: ModelParams, contour, t_grid: TimeGrid, sample_count: int = 16,
                        solver: str = "mod2", n_iter: int = 2, seed: int = 0) -> ProbeResult:
    """Solve the Riccati equation at a stratified sample of contour nodes.

    Nodes at the poles xi = 0 and xi = -i are excluded. The first blown node
    (in order of increasing index) is reported.
    """
    nodes = contour.nodes()
    keep = np.flatnonzero((np.abs(nodes) > 1e-12) & (np.abs(nodes + 1j) > 1e-12))
    if keep.size == 0:
        return ProbeResult(True, sampled=0)
    rng = np.random.default_rng(seed)
    idx = keep[_sample_indices(keep.size, sample_count, rng)]
    batch = solve(params, nodes[idx], t_grid, solver=solver, n_iter=n_iter)
    for pos, j in enumerate(idx):
        if not batch.ok[pos]:
            return ProbeResult(False, complex(nodes[j]), int(j), batch.status(pos), idx.size)
    return ProbeResult(True, sampled=idx.size)


__all__ = ["BootstrapLeg", "BootstrapReport", "ProbeResult", "admissibility_probe",
           "bootstrap_price", "default_legs", "divergence", "is_analytic", "INFLATION",
           "MIN_TERMS"]
