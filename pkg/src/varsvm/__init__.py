"""Soft-margin linear SVMs with per-class, variance-scaled margins."""
from .classical import SolverConfig, TrainedModel, solve_classical
from .datagen import GaussianSpec, generate, isotropic_pair, mirror_pair
from .errors import (
    CompatibilityError,
    ConvergenceError,
    DataError,
    InvalidHyperplaneError,
    MissingClassError,
    SpecError,
    VarSVMError,
)
from .model import Dataset, Hyperplane, class_sigma, classify, decision_value, margin_report
from .variance import solve_variance

__all__ = [
    "CompatibilityError", "ConvergenceError", "DataError", "Dataset", "GaussianSpec",
    "Hyperplane", "InvalidHyperplaneError", "MissingClassError", "SolverConfig", "SpecError",
    "TrainedModel", "VarSVMError", "class_sigma", "classify", "decision_value", "generate",
    "isotropic_pair", "margin_report", "mirror_pair", "solve_classical", "solve_variance",
]
__version__ = "0.1.0"
