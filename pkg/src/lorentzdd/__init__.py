"""Two bosonic modes in a common Lorentzian bath under detuning-based
dynamical decoupling: closed-form piecewise propagation, reference
integrators and scenario tooling."""

__version__ = "0.1.0"

from .control import (  # noqa: E402
    JitterSpec,
    Pulse,
    Schedule,
    constant_schedule,
    filter_function,
    free_schedule,
    irregular_schedule,
    regular_schedule,
)
from .model import PhysicalParams, quartic_coeffs, second_order_coeffs  # noqa: E402
from .observables import observables, suppression  # noqa: E402
from .propagator import MatchingMode, propagate  # noqa: E402
from .quartic import solve_quartic  # noqa: E402

__all__ = [
    "JitterSpec", "MatchingMode", "PhysicalParams", "Pulse", "Schedule", "__version__",
    "constant_schedule", "filter_function", "free_schedule", "irregular_schedule",
    "observables", "propagate", "quartic_coeffs", "regular_schedule",
    "second_order_coeffs", "solve_quartic", "suppression",
]
