"""Diffusion in domains with small compartments.

Asymptotic steady states, accumulation times, droplet coarsening and
reduced compartment dynamics, with brute-force oracles to check them.
"""
from .errors import (ConditioningError, ConvergenceError, DomainError, NumericalError, ProximityError,
                     SpdiffusionError, UnsupportedError, ValidationError)
from .geometry import (CompartmentSpec, Disk2D, ModelI, ModelII, ModelIII, ProblemSpec, Rect2D, ShapeSpec,
                       Sphere3D, load_spec, spec_from_dict, spec_to_dict, validate)

__version__ = "0.1.0"

__all__ = [
    "ConditioningError", "ConvergenceError", "DomainError", "NumericalError", "ProximityError",
    "SpdiffusionError", "UnsupportedError", "ValidationError", "CompartmentSpec", "Disk2D", "ModelI",
    "ModelII", "ModelIII", "ProblemSpec", "Rect2D", "ShapeSpec", "Sphere3D", "load_spec", "spec_from_dict",
    "spec_to_dict", "validate", "__version__",
]
