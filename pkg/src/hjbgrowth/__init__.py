"""Viscosity-solution HJB solver and trajectory synthesis for 1-D optimal growth models."""

from hjbgrowth.errors import (
    CertificationError,
    ConvergenceError,
    DomainError,
    GridExtensionError,
    IntegrationError,
    NumericError,
)
from hjbgrowth.model import (
    ModelSpec,
    Production,
    Technology,
    Utility,
    eval_technology,
    eval_utility,
    verify_assumptions,
)
from hjbgrowth.hjb import GridSpec, SolverSpec, ValueFunctionGrid, solve, viscosity_certify
from hjbgrowth.trajectory import Trajectory, synthesize

__version__ = "0.1.0"
