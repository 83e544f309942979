"""Numerical laboratory for Hardy-Sobolev extremals with a boundary-wide singular weight."""

from .core import ParameterError, ProblemParams, family_params, make_params

__version__ = "0.1.0"

__all__ = ["ParameterError", "ProblemParams", "family_params", "make_params", "__version__"]
