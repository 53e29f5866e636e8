"""Arbitrary-precision prolate and oblate spheroidal wave functions."""

from .core import (
    Params,
    EvalPair,
    CoefficientSet,
    RadialResult,
    DomainError,
    ConvergenceError,
    LowConfidenceError,
    PROLATE,
    OBLATE,
)

__all__ = [
    "Params",
    "EvalPair",
    "CoefficientSet",
    "RadialResult",
    "DomainError",
    "ConvergenceError",
    "LowConfidenceError",
    "PROLATE",
    "OBLATE",
]

__version__ = "0.1.0"
