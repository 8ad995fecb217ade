"""Invariants and gauge equivalence of second-order matrix differential operators.

Main entry points::

    from opequiv import SymbolTensor, regularity_report, symbols_equivalent
    from opequiv import OperatorJet, decompose, build_model, compare_models
"""
__version__ = "0.1.0"

from .connections import (BundleConnectionJet, ChristoffelJet, TotalSymbol, associated_connection,
                          covariant_square, decompose, levi_civita, pairing_sigma_alpha, quantize,
                          regularity_iso, subsymbol_shift_check)
from .errors import *  # noqa: F401,F403
from .invariants import (fingerprint, orbit_rank, r_family, regularity_report, symbol_codimension,
                         extended_codimension, symbol_pipeline)
from .jets import JetPoly
from .kernels import BACKEND
from .models import (ChartOperator, Grid, InvariantField, ModelDoc, build_model, compare_models,
                     invariant_fields, select_natural_coordinates)
from .operators import OperatorJet, apply, delta_f, gauge_transform, symbol_of
from .orbits import (reconstruct_symbol, simultaneous_conjugacy, symbols_equivalent,
                     trace_separation)
from .tensors import SymbolTensor, trace_quadric, value_on

__all__ = [
    "BACKEND",
    "BundleConnectionJet",
    "ChartOperator",
    "ChristoffelJet",
    "Grid",
    "InvariantField",
    "JetPoly",
    "ModelDoc",
    "OperatorJet",
    "SymbolTensor",
    "TotalSymbol",
    "apply",
    "associated_connection",
    "build_model",
    "compare_models",
    "covariant_square",
    "decompose",
    "delta_f",
    "extended_codimension",
    "fingerprint",
    "gauge_transform",
    "invariant_fields",
    "levi_civita",
    "orbit_rank",
    "pairing_sigma_alpha",
    "quantize",
    "r_family",
    "reconstruct_symbol",
    "regularity_iso",
    "regularity_report",
    "select_natural_coordinates",
    "simultaneous_conjugacy",
    "subsymbol_shift_check",
    "symbol_codimension",
    "symbol_of",
    "symbol_pipeline",
    "symbols_equivalent",
    "trace_quadric",
    "trace_separation",
    "value_on",
    "__version__",
]
