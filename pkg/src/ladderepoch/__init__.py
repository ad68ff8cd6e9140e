"""Exact, asymptotic and simulated laws of the first descending ladder epoch
of a random walk with small negative drift."""

__version__ = "0.1.0"

from .increments import (IncrementModel, ModelError, biased_pm1, discretized_gaussian,  # noqa: E402
                         gaussian_unit, lattice_model, model_from_spec, pareto_tail,
                         symmetric_pm1)

__all__ = [
    "__version__", "IncrementModel", "ModelError", "biased_pm1", "discretized_gaussian",
    "gaussian_unit", "lattice_model", "model_from_spec", "pareto_tail", "symmetric_pm1",
]
