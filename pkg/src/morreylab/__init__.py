"""Numerical laboratory for multilinear fractional maximal and integral
operators, their BMO commutators, and generalized weighted Morrey spaces."""

from .grid import (
    Ball,
    Domain,
    GridFunction,
    NonFiniteError,
    SamplingPlan,
    ScanResult,
    TestFunctionSpec,
    sample_function,
)
from .weights import ExponentConfig, WeightSpec, WeightVector
from .spaces import PhiSpec

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Domain",
    "ExponentConfig",
    "GridFunction",
    "NonFiniteError",
    "PhiSpec",
    "SamplingPlan",
    "ScanResult",
    "TestFunctionSpec",
    "WeightSpec",
    "WeightVector",
    "sample_function",
]
