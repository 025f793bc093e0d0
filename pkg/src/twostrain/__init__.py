"""Two-strain epidemic model with asymmetric temporary immunity and partial cross-immunity."""
from .core import FullState, ModelParams, ReducedState, ReproductionSet, validate_params

__version__ = "0.1.0"

__all__ = ["FullState", "ModelParams", "ReducedState", "ReproductionSet", "validate_params"]
