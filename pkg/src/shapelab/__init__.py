"""Numerical laboratory for shape-preserving operator semigroups.

Grid functions, cone membership tests, semigroup evaluators, splitting and
perturbation schemes, delay equations and a registry of experiments.
"""
from .errors import (ConfigError, DimensionError, DivergenceError, GridError, PreconditionError,
                     SeriesTruncationError, ShapeLabError)
from .grid import Extension, Grid, GridFunction, sample, sup_distance
from .report import ExperimentReport, Verdict
from .shape import (CONVEX, HESSIAN_PSD, MONOTONE, NEGATIVE_CONVEX, POSITIVE, ConeKind, ConeSpec,
                    is_member)

__version__ = "0.1.0"
