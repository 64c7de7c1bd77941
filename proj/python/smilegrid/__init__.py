"""SABR grid calibration, probability lookup tables and pricing sweeps."""

from ._core import (
    CalibrationError,
    CalibResult,
    EvaluationError,
    LookupTable,
    MarketSmile,
    SabrParams,
    TableError,
    ValidationError,
    build_table,
    calibrate,
    calibrate_gd,
    calibrate_s0,
    coupon_rate,
    implied_vol,
    inverse_lookup,
    load_table,
    midpoint_errors,
    objective,
    present_value,
    sabr_cdf,
    save_table,
    synthetic_smiles,
)

__all__ = [
    "CalibrationError",
    "CalibResult",
    "EvaluationError",
    "LookupTable",
    "MarketSmile",
    "SabrParams",
    "TableError",
    "ValidationError",
    "build_table",
    "calibrate",
    "calibrate_gd",
    "calibrate_s0",
    "coupon_rate",
    "implied_vol",
    "inverse_lookup",
    "load_table",
    "midpoint_errors",
    "objective",
    "present_value",
    "sabr_cdf",
    "save_table",
    "synthetic_smiles",
]

__version__ = "0.1.0"
