"""Rough Heston option pricing."""

from .bootstrap import BootstrapLeg, BootstrapReport, admissibility_probe, bootstrap_price
from .charfn import CharFnTable, SolverConfig, build_table, charfn, log_charfn
from .contours import (AnalyticityDomain, FlatContour, SinhContour, choose_sinh_params,
                       truncation_lambda)
from .fracriccati import HAVE_EXTENSION, REFERENCE_PARAMS, ModelParams, TimeGrid, solve
from .inversion import (OptionSpec, PriceEstimate, price_auto, price_cm_fft, price_cos,
                        price_flat_ift, price_flat_ift_bm, price_lewis, price_sinh,
                        price_sinh_surface)
from .vol import IVPoint, atm_skew, bs_price, implied_vol, iv_surface

__version__ = "0.1.0"

__all__ = [
    "AnalyticityDomain", "BootstrapLeg", "BootstrapReport", "CharFnTable", "FlatContour",
    "HAVE_EXTENSION", "IVPoint", "ModelParams", "OptionSpec", "PriceEstimate",
    "REFERENCE_PARAMS", "SinhContour", "SolverConfig", "TimeGrid", "admissibility_probe",
    "atm_skew", "bootstrap_price", "bs_price", "build_table", "charfn", "choose_sinh_params",
    "implied_vol", "iv_surface", "log_charfn", "price_auto", "price_cm_fft", "price_cos",
    "price_flat_ift", "price_flat_ift_bm", "price_lewis", "price_sinh", "price_sinh_surface",
    "solve", "truncation_lambda",
]
