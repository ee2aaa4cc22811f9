"""Front causality of intense pulses in saturable and reverse-saturable absorbers."""
from .diagnostics import (
    cw_transmission_oracle,
    delay_report,
    detect_front,
    energy_transmission,
    front_causality_check,
    peak_delay,
)
from .model import (
    DelayReport,
    FlatTopPulse,
    InvalidConfig,
    MediumModel,
    MediumSpec,
    PropagationResult,
    PulseSpec,
    SimGrid,
    input_pulse_value,
    validate_config,
)
from .propagator import (
    SchemeSpec,
    build_tau_grid,
    propagate,
    propagate_full,
    vacuum_reference,
)

__version__ = "0.1.0"
