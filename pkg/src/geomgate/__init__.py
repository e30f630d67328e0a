"""Berry-phase geometric gates with transitionless (counterdiabatic) driving."""

from .pulses import PulseSchedule
from .hamiltonians import Frame, GateSpec, NoiseConfig, Scheme, SchemeConfig
from .evolution import EvolutionResult, IntegrationError, run_loop

__all__ = [
    "PulseSchedule",
    "Frame",
    "GateSpec",
    "NoiseConfig",
    "Scheme",
    "SchemeConfig",
    "EvolutionResult",
    "IntegrationError",
    "run_loop",
]
