"""Command-line front end.

Every subcommand reads one JSON document (``--config``) describing the
model and the job, and writes CSV or JSON rows. Example::

    {
      "model": "reference",
      "S0": 1000, "T": 0.5, "strikes": [800, 900, 1000, 1100, 1200], "kind": "otm",
      "method": "sinh",
      "contour": {"put":  {"omega1": 0.5,  "b": 0.77, "omega": 0, "zeta": 0.4822, "N": 7},
                  "call": {"omega1": -1.5, "b": 0.77, "omega": 0, "zeta": 0.4822, "N": 7}},
      "solver": {"name": "mod3", "M": 9, "n_iter": 2}
    }

Replacing ``"contour"`` by ``"epsilon": 1e-8`` lets the pricer choose the
contour; the chosen parameters are echoed in the output. Exit codes: 0 on
success, 2 for configuration errors, 3 when every row failed (and, for
``bench``, 1 when only some rows failed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapLeg, bootstrap_price, default_legs
from .charfn import SolverConfig, build_table
from .contours import FlatContour, SinhContour
from .fracriccati import REFERENCE_PARAMS, SOLVERS, ModelParams
from .inversion import (OptionSpec, PriceEstimate, convert, price_auto, price_cm_fft, price_cos,
                        price_flat_ift, price_flat_ift_bm, price_lewis, price_sinh,
                        price_sinh_surface, select_leg)
from .vol import atm_skew, implied_vol_estimate

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 1, 2, 3
METHODS = ("sinh", "flat_ift", "flat_ift_bm", "lewis", "cos", "cm_fft")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# --------------------------------------------------------------------------
# configuration


def _line_of(text: str, key: str) -> int | None:
    pos = text.find(f'"{key}"')
    return text.count("\n", 0, pos) + 1 if pos >= 0 else None


@dataclass
class RunConfig:
    """A parsed job: model, instruments, method and its parameters, solver, output."""

    params: ModelParams
    S0: float
    strikes: list
    maturities: list
    kind: str
    method: str
    contour: dict | None
    epsilon: float | None
    solver: SolverConfig
    r: float = 0.0
    n_terms: dict = field(default_factory=dict)
    repeat: int = 1
    raw: dict = field(default_factory=dict)
    text: str = ""

    def error(self, message: str, key: str | None = None) -> ConfigError:
        return ConfigError(message, _line_of(self.text, key) if key else None)


def _number(doc, key, text, default=None, positive=False):
    if key not in doc:
        if default is None:
            raise ConfigError(f"missing required field {key!r}")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key!r} must be a finite number, got {v!r}", _line_of(text, key))
    if positive and not v > 0:
        raise ConfigError(f"{key!r} must be positive, got {v!r}", _line_of(text, key))
    return float(v)


def parse_model(doc, text: str = "") -> ModelParams:
    m = doc.get("model", "reference")
    if m == "reference":
        return REFERENCE_PARAMS
    if not isinstance(m, dict):
        raise ConfigError("'model' must be \"reference\" or an object", _line_of(text, "model"))
    base = {k: getattr(REFERENCE_PARAMS, k) for k in ("alpha", "gamma", "rho", "theta", "nu", "v0")}
    unknown = set(m) - set(base)
    if unknown:
        raise ConfigError(f"unknown model field(s) {sorted(unknown)}", _line_of(text, sorted(unknown)[0]))
    missing = set(base) - set(m)
    if missing:
        raise ConfigError(f"model is missing {sorted(missing)}", _line_of(text, "model"))
    base.update({k: _number(m, k, text) for k in m})
    try:
        return ModelParams(**base)
    except ValueError as exc:
        raise ConfigError(str(exc), _line_of(text, "model")) from None


def parse_solver(doc, text: str = "") -> SolverConfig:
    s = doc.get("solver", {})
    if isinstance(s, str):
        s = {"name": s}
    name = s.get("name", "mod3")
    if name not in SOLVERS:
        raise ConfigError(f"unknown solver {name!r}; expected one of {list(SOLVERS)}",
                          _line_of(text, "name"))
    M = s.get("M", 200)
    if not isinstance(M, int) or M < 1:
        raise ConfigError(f"solver M must be a positive integer, got {M!r}", _line_of(text, "M"))
    n_iter = s.get("n_iter", 2)
    if not isinstance(n_iter, int) or n_iter < 1:
        raise ConfigError("solver n_iter must be a positive integer", _line_of(text, "n_iter"))
    grid = s.get("grid", "uniform")
    if grid not in ("uniform", "two-part"):
        raise ConfigError(f"unknown grid {grid!r}", _line_of(text, "grid"))
    return SolverConfig(name, M, n_iter, grid, float(s.get("A", 10.0)), float(s.get("c", 0.1)))


def load_config(text: str, overrides: dict | None = None) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    if not isinstance(doc, dict):
        raise ConfigError("the configuration must be a JSON object", 1)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "method" in overrides:
        doc["method"] = overrides["method"]
    if "solver" in overrides:
        s = doc.get("solver", {})
        s = {"name": s} if isinstance(s, str) else dict(s)
        s["name"] = overrides["solver"]
        doc["solver"] = s
    if "epsilon" in overrides:
        doc["epsilon"] = overrides["epsilon"]

    params = parse_model(doc, text)
    S0 = _number(doc, "S0", text, default=1.0, positive=True)
    r = _number(doc, "r", text, default=0.0)
    if "maturities" in doc and "T" in doc:
        raise ConfigError("give either 'T' or 'maturities', not both", _line_of(text, "maturities"))
    if "maturities" in doc:
        mats = doc["maturities"]
        if not isinstance(mats, list) or not mats:
            raise ConfigError("'maturities' must be a non-empty list", _line_of(text, "maturities"))
        mats = [_number({"T": t}, "T", text, positive=True) for t in mats]
    elif "T" in doc:
        mats = [_number(doc, "T", text, positive=True)]
    else:
        mats = []
    strikes = doc.get("strikes", [])
    if not isinstance(strikes, list):
        raise ConfigError("'strikes' must be a list", _line_of(text, "strikes"))
    for K in strikes:
        if isinstance(K, bool) or not isinstance(K, (int, float)) or not K > 0:
            raise ConfigError(f"strikes must be positive numbers, got {K!r}",
                              _line_of(text, "strikes"))
    kind = doc.get("kind", "call")
    if kind not in ("call", "put", "otm"):
        raise ConfigError(f"unknown kind {kind!r}; expected call, put or otm", _line_of(text, "kind"))
    method = doc.get("method", "sinh")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {list(METHODS)}",
                          _line_of(text, "method"))
    contour = doc.get("contour")
    epsilon = doc.get("epsilon")
    if contour is not None and epsilon is not None:
        raise ConfigError("'contour' and 'epsilon' are mutually exclusive: give explicit "
                          "parameters or a tolerance for automatic selection",
                          _line_of(text, "epsilon") or _line_of(text, "contour"))
    if epsilon is not None:
        epsilon = _number({"epsilon": epsilon}, "epsilon", text, positive=True)
        if method != "sinh":
            raise ConfigError("automatic selection ('epsilon') is only available for sinh",
                              _line_of(text, "epsilon"))
    repeat = doc.get("repeat", 1)
    if "repeat" in overrides:
        repeat = overrides["repeat"]
    if not isinstance(repeat, int) or repeat < 1:
        raise ConfigError("'repeat' must be an integer >= 1", _line_of(text, "repeat"))
    n_terms = doc.get("n_terms", {})
    try:
        n_terms = {float(k): int(v) for k, v in n_terms.items()}
    except (AttributeError, TypeError, ValueError):
        raise ConfigError("'n_terms' must map maturities to integers",
                          _line_of(text, "n_terms")) from None
    return RunConfig(params, S0, [float(K) for K in strikes], mats, kind, method, contour,
                     epsilon, parse_solver(doc, text), r, n_terms, repeat, doc, text)


def read_config(path, overrides=None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    return load_config(text, overrides)


# --------------------------------------------------------------------------
# jobs


def _require(cfg: RunConfig, strikes=True, maturities=True):
    if strikes and not cfg.strikes:
        raise cfg.error("the strike list is empty", "strikes")
    if maturities and not cfg.maturities:
        raise cfg.error("no maturity given ('T' or 'maturities')")


def _sinh_contour(d: dict, leg: str, cfg: RunConfig) -> SinhContour:
    try:
        return SinhContour(float(d["omega1"]), float(d["b"]), float(d.get("omega", 0.0)),
                           float(d["zeta"]), int(d["N"]), d.get("leg", leg))
    except KeyError as exc:
        raise cfg.error(f"sinh contour is missing {exc.args[0]!r}", "contour") from None
    except (TypeError, ValueError) as exc:
        raise cfg.error(f"invalid sinh contour: {exc}", "contour") from None


def sinh_contours(cfg: RunConfig) -> dict:
    """leg -> SinhContour from the explicit ``contour`` block."""
    c = cfg.contour
    if not isinstance(c, dict):
        raise cfg.error("sinh needs a 'contour' object or 'epsilon'", "method")
    if "put" in c or "call" in c or "covered_call" in c:
        out = {}
        for leg, d in c.items():
            if leg not in ("put", "call", "covered_call"):
                raise cfg.error(f"unknown contour leg {leg!r}", leg)
            out[leg] = _sinh_contour(d, leg, cfg)
        return out
    from .inversion import leg_of_line
    leg = c.get("leg") or leg_of_line(float(c.get("omega1", float("nan"))))
    return {leg: _sinh_contour(c, leg, cfg)}


def _kind_for(cfg: RunConfig, K: float) -> str:
    if cfg.kind == "otm":
        return "put" if K <= cfg.S0 else "call"
    return cfg.kind


def _retarget(est: PriceEstimate, kind: str, r: float) -> PriceEstimate:
    from .inversion import outside_bounds
    s = est.spec
    if s.kind == kind:
        return est
    spec = OptionSpec(s.S0, s.K, s.T, kind)
    val = float(convert(est.value, s.kind, kind, s.S0, s.K, s.T, r))
    return PriceEstimate(val, est.method, spec, est.contour, est.n_evaluations,
                         est.error_estimate, est.blown_nodes, outside_bounds(val, spec, r))


def _contour_arg(cfg: RunConfig, *names, **defaults):
    c = cfg.contour or {}
    out = {}
    for n in (*names, *defaults):
        if n in c:
            out[n] = c[n]
        elif n in defaults:
            out[n] = defaults[n]
        else:
            raise cfg.error(f"{cfg.method} needs contour parameter {n!r}", "contour")
    return out


def price_maturity(cfg: RunConfig, T: float) -> list[PriceEstimate]:
    """Price every strike at one maturity with the configured method."""
    p, S0, r, sc = cfg.params, cfg.S0, cfg.r, cfg.solver
    specs = [OptionSpec(S0, K, T, "call") for K in cfg.strikes]
    m = cfg.method
    if m == "sinh":
        if cfg.epsilon is not None:
            ests = price_auto(p, specs, cfg.epsilon, sc, r)
        else:
            contours = sinh_contours(cfg)
            ests = [None] * len(specs)
            for leg, c in contours.items():
                if len(contours) == 1:
                    idx = list(range(len(specs)))
                else:
                    idx = [i for i, s in enumerate(specs) if select_leg(s) == leg]
                if idx:
                    n = cfg.n_terms.get(T, c.n_terms)
                    res = price_sinh(p, [specs[i] for i in idx], c.with_terms(n), sc, r)
                    for i, e in zip(idx, res):
                        ests[i] = e
    elif m == "flat_ift":
        a = _contour_arg(cfg, "omega1", "zeta", "N")
        ests = price_flat_ift(p, specs, float(a["omega1"]), float(a["zeta"]), int(a["N"]), sc, r)
    elif m == "flat_ift_bm":
        a = _contour_arg(cfg, "sigma0", "zeta", "N", omega1=-0.5)
        ests = price_flat_ift_bm(p, specs, float(a["sigma0"]), float(a["omega1"]),
                                 float(a["zeta"]), int(a["N"]), sc, r)
    elif m == "lewis":
        a = _contour_arg(cfg, "n_gl")
        ests = price_lewis(p, specs, int(a["n_gl"]), sc, r)
    elif m == "cos":
        a = _contour_arg(cfg, "L", "N", center="zero")
        ests = price_cos(p, specs, float(a["L"]), int(a["N"]), sc, r, a["center"])
    else:
        a = _contour_arg(cfg, "omega1", "zeta", "M", interp="linear")
        ests = price_cm_fft(p, specs, float(a["omega1"]), float(a["zeta"]), int(a["M"]),
                            a["interp"], sc, r)
    return [_retarget(e, _kind_for(cfg, e.spec.K), r) for e in ests]


def _timed(fn, repeat: int):
    """Result and mean wall time (ms) per call; with ``repeat > 1`` one warm-up
    call precedes the timed ones and is excluded."""
    if repeat > 1:
        fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        result = fn()
    return result, 1e3 * (time.perf_counter() - t0) / repeat


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def run_price(cfg: RunConfig, threads: int = 1) -> list[dict]:
    _require(cfg)

    def one(T):
        ests, ms = _timed(lambda: price_maturity(cfg, T), cfg.repeat)
        for e in ests:
            e.cpu_ms = ms
        return ests

    rows = []
    for ests in _map(one, cfg.maturities, threads):
        rows.extend(e.as_row() for e in ests)
    return rows


def run_surface(cfg: RunConfig, threads: int = 1) -> tuple[list[dict], float]:
    """Prices and implied volatilities on the strike x maturity grid.

    With explicit sinh contours and a uniform grid, one Riccati sweep per leg
    over the longest maturity serves every maturity.
    """
    _require(cfg)
    shared = cfg.method == "sinh" and cfg.epsilon is None and cfg.solver.grid == "uniform"

    def compute():
        if shared:
            grid = price_sinh_surface(cfg.params, cfg.S0, cfg.strikes, cfg.maturities,
                                      sinh_contours(cfg), cfg.solver, cfg.r, cfg.n_terms)
        else:
            grid = _map(lambda T: price_maturity(cfg, T), cfg.maturities, threads)
        return [[_retarget(e, _kind_for(cfg, e.spec.K), cfg.r) for e in row] for row in grid]

    try:
        grid, ms = _timed(compute, cfg.repeat)
    except ValueError as exc:
        raise cfg.error(str(exc), "maturities") from None
    rows = []
    for row in grid:
        for e in row:
            iv = implied_vol_estimate(e, cfg.r)
            d = e.as_row()
            d["cpu_ms"] = None
            d["sigma_imp"] = iv.sigma
            d["iv_reason"] = iv.reason
            rows.append(d)
    return rows, ms


def run_skew(cfg: RunConfig) -> list[dict]:
    _require(cfg, strikes=False)
    bump = _number(cfg.raw, "bump", cfg.text, default=1e-3, positive=True)
    eps = cfg.epsilon if cfg.epsilon is not None else 1e-10
    rows = []
    for T in cfg.maturities:
        try:
            s = atm_skew(cfg.params, T, bump, eps, cfg.solver, cfg.r)
            rows.append({"T": T, "atm_skew": s, "reason": ""})
        except ArithmeticError as exc:
            rows.append({"T": T, "atm_skew": None, "reason": str(exc)})
    return rows


def _rel(v, ref):
    return (v - ref) / ref if ref != 0 else math.nan


def run_compare(cfg: RunConfig, threads: int = 1) -> list[dict]:
    """Signed relative errors of several methods against a benchmark column.

    The document carries a ``benchmark`` job and a list of ``methods``; each
    entry overrides ``method``, ``contour``/``epsilon`` and ``solver`` of the
    base document.
    """
    _require(cfg)
    doc = cfg.raw
    if "benchmark" not in doc or not isinstance(doc.get("methods"), list) or not doc["methods"]:
        raise cfg.error("compare needs a 'benchmark' object and a non-empty 'methods' list",
                        "methods" if "methods" in doc else None)

    def sub(over):
        d = {k: v for k, v in doc.items() if k not in ("benchmark", "methods", "contour",
                                                       "epsilon", "method", "solver", "label")}
        d.update(over)
        return load_config(json.dumps(d))

    try:
        bench = sub(doc["benchmark"])
        variants = [(m.get("label", m.get("method", "sinh")), sub(m)) for m in doc["methods"]]
    except ConfigError as exc:
        raise ConfigError(f"in compare entry: {exc}", _line_of(cfg.text, "methods")) from None
    rows = []
    for T in cfg.maturities:
        ref = price_maturity(bench, T)
        if not all(e.clean for e in ref):
            raise RuntimeError(f"benchmark failed at T={T}: unclean values")
        results = _map(lambda v: (v[0], _timed(lambda: price_maturity(v[1], T), cfg.repeat)),
                       variants, threads)
        for label, (ests, ms) in results:
            for e, b in zip(ests, ref):
                rows.append({"T": T, "K": e.spec.K, "kind": e.spec.kind, "method": label,
                             "value": e.value, "benchmark": b.value,
                             "rel_err": _rel(e.value, b.value),
                             "blown_nodes": e.blown_nodes,
                             "outside_no_arbitrage": e.outside_no_arbitrage, "cpu_ms": ms})
    return rows


def run_bootstrap(cfg: RunConfig) -> list[dict]:
    _require(cfg)
    doc = cfg.raw
    principle = doc.get("principle", "II")
    threshold = _number(doc, "threshold", cfg.text, default=1e-4, positive=True)
    rows = []
    for T in cfg.maturities:
        for K in cfg.strikes:
            spec = OptionSpec(cfg.S0, K, T, _kind_for(cfg, K))
            if "legs" in doc:
                legs = []
                for leg in doc["legs"]:
                    sc = parse_solver(leg, cfg.text)
                    c = leg.get("contour", {})
                    if c.get("kind", "sinh") == "flat":
                        contour = FlatContour(float(c["omega1"]), float(c["zeta"]), int(c["N"]))
                    else:
                        contour = _sinh_contour(c, c.get("leg", "put"), cfg)
                    legs.append(BootstrapLeg(contour, sc))
            else:
                legs = default_legs(cfg.params, spec, cfg.solver.M,
                                    cfg.epsilon if cfg.epsilon is not None else 1e-10)
            rep = bootstrap_price(cfg.params, spec, legs, threshold, principle, cfg.r)
            row = {"K": K, "T": T, "kind": spec.kind}
            row.update(rep.as_row())
            row["values"] = json.dumps(row["values"])
            rows.append(row)
    return rows


def run_dump_phi(cfg: RunConfig):
    """phi on the nodes of the configured contour (or an explicit ``xi`` list)."""
    _require(cfg, strikes=False)
    T = max(cfg.maturities)
    if "xi" in cfg.raw:
        try:
            nodes = np.array([complex(a, b) for a, b in cfg.raw["xi"]])
        except (TypeError, ValueError):
            raise cfg.error("'xi' must be a list of [re, im] pairs", "xi") from None
    elif cfg.method == "sinh":
        nodes = np.concatenate([c.nodes() for c in sinh_contours(cfg).values()])
    else:
        a = _contour_arg(cfg, "omega1", "zeta", "N")
        nodes = FlatContour(float(a["omega1"]), float(a["zeta"]), int(a["N"])).nodes()
    return build_table(cfg.params, nodes, T, cfg.solver)


# --------------------------------------------------------------------------
# fixtures


def fixture_names() -> list[str]:
    root = resources.files("roughpricer") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
    else:
        res = resources.files("roughpricer") / "data" / f"{name_or_path}.json"
        if not res.is_file():
            raise ConfigError(f"missing fixture {name_or_path!r}")
        text = res.read_text()
    try:
        fx = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid fixture JSON: {exc.msg}", exc.lineno) from None
    if "job" not in fx or "expected" not in fx:
        raise ConfigError(f"fixture {name_or_path!r} needs 'job' and 'expected'")
    fx.setdefault("name", path.stem if path.suffix == ".json" else name_or_path)
    return fx


def run_fixture(fx: dict) -> list[dict]:
    """Evaluate one fixture; every expected row becomes a pass/fail line."""
    cfg = load_config(json.dumps(fx["job"]))
    T_needed = sorted({float(e["T"]) for e in fx["expected"]})
    cfg.maturities = T_needed
    cfg.strikes = sorted({float(e["K"]) for e in fx["expected"]})
    if fx.get("shared_grid") and cfg.method == "sinh":
        rows, _ = run_surface(cfg)
    else:
        rows = run_price(cfg)
    got = {(r["T"], r["K"]): r for r in rows}
    out = []
    for e in fx["expected"]:
        r = got[(float(e["T"]), float(e["K"]))]
        v = r["value"]
        if e.get("kind", r["kind"]) != r["kind"]:
            v = float(convert(v, r["kind"], e["kind"], cfg.S0, r["K"], r["T"], cfg.r))
        exp, tol, mode = float(e["value"]), float(e["tol"]), e.get("mode", "abs")
        diff = v - exp
        err = abs(diff) if mode == "abs" else abs(diff / exp)
        out.append({"fixture": fx["name"], "T": r["T"], "K": r["K"],
                    "kind": e.get("kind", r["kind"]), "expected": exp, "value": v,
                    "diff": diff, "tol": tol, "mode": mode,
                    "provenance": e.get("provenance", fx.get("provenance", "")),
                    "pass": bool(err <= tol)})
    return out


# --------------------------------------------------------------------------
# output


def _serialize(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1, allow_nan=True) + "\n"
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def _emit(rows, args, stream):
    text = _serialize(rows, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        stream.write(text)


def _all_failed(rows) -> bool:
    def bad(r):
        v = r.get("value")
        return (r.get("blown_nodes") or r.get("outside_no_arbitrage")
                or v is None or not math.isfinite(v))
    return bool(rows) and all(bad(r) for r in rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roughpricer", description="Rough Heston option pricing.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("price", "price a strike list"),
                           ("surface", "prices and implied volatilities on a (K, T) grid"),
                           ("skew", "ATM implied-volatility skew per maturity"),
                           ("compare", "relative errors of several methods vs a benchmark"),
                           ("bootstrap", "certify prices by agreement of independent legs"),
                           ("bench", "check packaged reference fixtures"),
                           ("dump-phi", "write the log-characteristic-function table")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=name != "bench", help="JSON job description")
        s.add_argument("--out", help="output file (default: stdout)")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--repeat", type=int, help="timing repeats after one warm-up run")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--method", choices=METHODS)
        s.add_argument("--solver", choices=SOLVERS)
        s.add_argument("--epsilon", type=float)
        if name == "bench":
            s.add_argument("fixtures", nargs="*", help="fixture names or paths (default: all)")
            s.add_argument("--list", action="store_true", help="list packaged fixtures")
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    if args.repeat is not None and args.repeat < 1:
        print("error: --repeat must be >= 1", file=stderr)
        return EXIT_CONFIG
    overrides = {"method": args.method, "solver": args.solver, "epsilon": args.epsilon,
                 "repeat": args.repeat}
    try:
        if args.command == "bench":
            if args.list:
                stdout.write("\n".join(fixture_names()) + "\n")
                return EXIT_OK
            rows = []
            for name in args.fixtures or fixture_names():
                rows.extend(run_fixture(load_fixture(name)))
            _emit(rows, args, stdout)
            n_pass = sum(r["pass"] for r in rows)
            print(f"{n_pass}/{len(rows)} fixture rows passed", file=stderr)
            if n_pass == len(rows):
                return EXIT_OK
            return EXIT_ALL_FAILED if n_pass == 0 else EXIT_PARTIAL
        cfg = read_config(args.config, overrides)
        if args.command == "price":
            rows = run_price(cfg, args.threads)
        elif args.command == "surface":
            rows, ms = run_surface(cfg, args.threads)
            print(f"total time {ms:.3f} ms for {len(rows)} points", file=stderr)
        elif args.command == "skew":
            rows = run_skew(cfg)
            _emit(rows, args, stdout)
            return EXIT_OK if any(r["atm_skew"] is not None for r in rows) else EXIT_ALL_FAILED
        elif args.command == "compare":
            rows = run_compare(cfg, args.threads)
        elif args.command == "bootstrap":
            rows = run_bootstrap(cfg)
            _emit(rows, args, stdout)
            return EXIT_OK if any(r["verdict"] == "certified" for r in rows) else EXIT_ALL_FAILED
        else:
            table = run_dump_phi(cfg)
            if args.format == "csv":
                if args.out:
                    table.to_csv(args.out)
                else:
                    buf_rows = []
                    for j, x in enumerate(table.xi_nodes):
                        for k, t in enumerate(table.t_nodes):
                            ph = table.phi[j, k]
                            buf_rows.append({"re_xi": x.real, "im_xi": x.imag, "t": float(t),
                                             "re_phi": ph.real, "im_phi": ph.imag})
                    stdout.write(_serialize(buf_rows, "csv"))
            else:
                rows = [{"re_xi": x.real, "im_xi": x.imag, "t": float(table.t_nodes[-1]),
                         "re_phi": table.phi[j, -1].real, "im_phi": table.phi[j, -1].imag,
                         "status": table.status[j]}
                        for j, x in enumerate(table.xi_nodes)]
                _emit(rows, args, stdout)
            return EXIT_OK if table.ok.any() else EXIT_ALL_FAILED
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    _emit(rows, args, stdout)
    return EXIT_ALL_FAILED if _all_failed(rows) else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
