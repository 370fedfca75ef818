"""gnncheck: verification toolkit for quantized graph neural networks."""

from .arith import ArithmeticSpec, Value
from .compile import compile_generalized, compile_lvp
from .formula import Formula, parse, to_text
from .gnn import DeltaMode, GnnModel, LvpInstance, gnn_eval
from .graph import LabeledGraph, PointedGraph
from .semantics import Sat, Unknown, Unsat, brute_force_sat, check
from .tableau import Invalid, SolveLimits, Valid, solve, verify_lvp

__all__ = [
    "ArithmeticSpec",
    "Value",
    "Formula",
    "parse",
    "to_text",
    "LabeledGraph",
    "PointedGraph",
    "GnnModel",
    "LvpInstance",
    "DeltaMode",
    "gnn_eval",
    "compile_lvp",
    "compile_generalized",
    "Sat",
    "Unsat",
    "Unknown",
    "check",
    "brute_force_sat",
    "solve",
    "verify_lvp",
    "Valid",
    "Invalid",
    "SolveLimits",
]
