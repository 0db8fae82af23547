"""Desk-scale numerical lab for the stability of free boundary minimal
submanifolds in conformally flat domains.

Subpackages follow the pipeline: ``fields``/``conformal`` evaluate the
rescaled metric and its curvature, ``submanifold`` carries sampled
immersions, ``domain`` the ambient level-set geometry, ``variation`` the
second-variation quadratic forms and the instability certificate, ``flow``
a descent solver producing approximately minimal inputs, and ``scenarios``
the named configurations, suites and reports behind the CLI.
"""

from . import conformal, domain, fields, flow, scenarios, submanifold, variation
from .errors import (
    ConfigError,
    DegenerateSampleError,
    DimensionError,
    DomainError,
    GeometryError,
    InvalidSampleError,
    PreconditionError,
    ProjectionError,
    StepFailureError,
)

__all__ = [
    "conformal",
    "domain",
    "fields",
    "flow",
    "scenarios",
    "submanifold",
    "variation",
    "ConfigError",
    "DegenerateSampleError",
    "DimensionError",
    "DomainError",
    "GeometryError",
    "InvalidSampleError",
    "PreconditionError",
    "ProjectionError",
    "StepFailureError",
]

__version__ = "0.1.0"
