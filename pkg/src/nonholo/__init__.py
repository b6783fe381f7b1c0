"""Nonholonomically coupled oscillators: reduction, Floquet action-angle
variables, reversible integration and long-time stability experiments."""

from . import catalogue, diagnostics, floquet, integrators, model, reduction
from .catalogue import preset
from .errors import NonholoError
from .kernels import BACKEND
from .model import FullState, Params, ReducedState, SystemSpec

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FullState",
    "NonholoError",
    "Params",
    "ReducedState",
    "SystemSpec",
    "catalogue",
    "diagnostics",
    "floquet",
    "integrators",
    "model",
    "preset",
    "reduction",
]
