"""Skew-information quantum coherence: measures, channels, detection schemes and checks."""

from .measures import coherence_report, lower_bound, skew_information, variance
from .qmat import DensityMatrix, Observable, make_density, make_observable

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "Observable",
    "coherence_report",
    "lower_bound",
    "make_density",
    "make_observable",
    "skew_information",
    "variance",
]
