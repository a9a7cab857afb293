"""Heuristics for set multicover under block selection caps."""

from .driver import RunResult, SolverConfig, solve
from .io import (
    FormatError,
    GeneratorParams,
    generate,
    read_instance,
    write_gub,
)
from .model import (
    Instance,
    initial_weights,
    is_feasible,
    objective,
    penalized_objective,
    validate,
)

__all__ = [
    "FormatError",
    "GeneratorParams",
    "Instance",
    "RunResult",
    "SolverConfig",
    "generate",
    "initial_weights",
    "is_feasible",
    "objective",
    "penalized_objective",
    "read_instance",
    "solve",
    "validate",
    "write_gub",
]

__version__ = "0.1.0"
