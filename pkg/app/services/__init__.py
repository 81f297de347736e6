"""Numerical services: fields, zeta values, special functions, kernels and identities."""

from . import errors, evaluations, fields, identities, kernel, parsing, reports, special, zeta

__all__ = [
    "errors",
    "evaluations",
    "fields",
    "identities",
    "kernel",
    "parsing",
    "reports",
    "special",
    "zeta",
]
