"""Domain types and unit conventions.

All times inside the engine are retarded times tau = 2*Gamma2*(t - z/c), i.e.
measured in units of 1/(2*Gamma2).  Fields are Rabi frequencies normalized to
the saturation value.  Physical seconds only appear in reports, through
``MediumSpec.time_unit_seconds``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

SPEED_OF_LIGHT_CM_S = 2.99792458e10


class PulsefrontError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfig(PulsefrontError, ValueError):
    """Raised when a configuration violates one or more invariants.

    ``violations`` maps a field name to a human readable diagnostic.
    """

    def __init__(self, violations: dict[str, str]):
        self.violations = dict(violations)
        msg = "; ".join(f"{k}: {v}" for k, v in self.violations.items())
        super().__init__(f"invalid configuration ({msg})")


class ModelMismatch(PulsefrontError, ValueError):
    pass


class MediumModel(str, enum.Enum):
    RUBY_REDUCED = "RubyReduced"
    RUBY_FULL = "RubyFull"
    ALEXANDRITE_REDUCED = "AlexandriteReduced"
    ALEXANDRITE_FULL = "AlexandriteFull"
    VACUUM = "Vacuum"

    @property
    def is_full(self) -> bool:
        return self in (MediumModel.RUBY_FULL, MediumModel.ALEXANDRITE_FULL)

    @property
    def is_alexandrite(self) -> bool:
        return self in (MediumModel.ALEXANDRITE_REDUCED, MediumModel.ALEXANDRITE_FULL)

    @property
    def is_ruby(self) -> bool:
        return self in (MediumModel.RUBY_REDUCED, MediumModel.RUBY_FULL)

    @classmethod
    def parse(cls, value: str | MediumModel) -> MediumModel:
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        # short aliases used in config files
        aliases = {
            "ruby": cls.RUBY_REDUCED,
            "alexandrite": cls.ALEXANDRITE_REDUCED,
            "alex": cls.ALEXANDRITE_REDUCED,
        }
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown medium model {value!r}")


class PulseShape(Protocol):
    """Extension hook: anything with these members can be propagated."""

    peak_amplitude: float
    cutoff_tau: float

    def sample(self, tau: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class PulseSpec:
    """Truncated Gaussian input pulse.

    The envelope is ``peak_amplitude * exp(-((tau - center_tau)/width_sigma)**2)``
    for ``tau <= cutoff_tau`` and exactly zero afterwards.
    """

    peak_amplitude: float
    width_sigma: float
    center_tau: float
    cutoff_tau: float

    def sample(self, tau):
        return input_pulse_value(self, tau)

    def with_amplitude(self, amplitude: float) -> PulseSpec:
        return PulseSpec(amplitude, self.width_sigma, self.center_tau, self.cutoff_tau)


@dataclass(frozen=True)
class FlatTopPulse:
    """Constant amplitude on [0, cutoff_tau], zero afterwards.

    Used to drive the medium into steady state for comparisons against the
    continuous-wave transmission law.
    """

    peak_amplitude: float
    cutoff_tau: float

    def sample(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.where(tau <= self.cutoff_tau, self.peak_amplitude, 0.0)
        return out if out.ndim else float(out)


def input_pulse_value(pulse: PulseSpec, tau):
    """Evaluate the truncated Gaussian at ``tau`` (scalar or array).

    Nodes with ``tau > cutoff_tau`` get an exact 0.0.
    """
    tau = np.asarray(tau, dtype=float)
    x = (tau - pulse.center_tau) / pulse.width_sigma
    value = np.where(tau <= pulse.cutoff_tau, pulse.peak_amplitude * np.exp(-x * x), 0.0)
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class MediumSpec:
    model: MediumModel
    alpha0: float = 0.0
    alpha0_tilde: float = 0.0
    gamma1_ratio: float = math.inf
    gamma3_ratio: float = math.inf
    time_unit_seconds: float = 1.0
    length_cm: float = 9.0

    def __post_init__(self):
        object.__setattr__(self, "model", MediumModel.parse(self.model))

    @property
    def front_traversal_seconds(self) -> float:
        """Lab-frame time for a front moving at c to cross the medium."""
        return self.length_cm / SPEED_OF_LIGHT_CM_S

    @property
    def front_traversal_norm(self) -> float:
        return self.front_traversal_seconds / self.time_unit_seconds

    def as_vacuum(self) -> MediumSpec:
        return MediumSpec(
            MediumModel.VACUUM,
            time_unit_seconds=self.time_unit_seconds,
            length_cm=self.length_cm,
        )

    def as_model(self, model: MediumModel | str, **changes) -> MediumSpec:
        kw = dict(
            model=MediumModel.parse(model),
            alpha0=self.alpha0,
            alpha0_tilde=self.alpha0_tilde,
            gamma1_ratio=self.gamma1_ratio,
            gamma3_ratio=self.gamma3_ratio,
            time_unit_seconds=self.time_unit_seconds,
            length_cm=self.length_cm,
        )
        kw.update(changes)
        return MediumSpec(**kw)


@dataclass(frozen=True, eq=False)
class SimGrid:
    """Retarded-time nodes plus the z-step ladder.

    ``tau_nodes`` is refined to ``fine_dtau`` within ``refine_window`` of the
    cutoff, which is always an exact node.
    """

    tau_nodes: np.ndarray
    coarse_dtau: float
    fine_dtau: float
    refine_window: float
    cutoff_tau: float
    dz: float
    nz: int

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.tau_nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "tau_nodes", nodes)

    @property
    def tau(self) -> np.ndarray:
        return self.tau_nodes

    @property
    def length_cm(self) -> float:
        return self.nz * self.dz

    @property
    def cutoff_index(self) -> int:
        return int(np.searchsorted(self.tau_nodes, self.cutoff_tau))

    @property
    def z_nodes(self) -> np.ndarray:
        return np.arange(self.nz + 1) * self.dz

    def with_dz(self, dz: float, nz: int) -> SimGrid:
        return SimGrid(
            self.tau_nodes, self.coarse_dtau, self.fine_dtau, self.refine_window,
            self.cutoff_tau, dz, nz,
        )


@dataclass(frozen=True, eq=False)
class PropagationResult:
    grid: SimGrid
    z_slices: np.ndarray
    field: np.ndarray  # (n_slices, n_tau)
    population: np.ndarray  # rho_gg, (n_slices, n_tau)
    medium: MediumSpec
    pulse: Any
    full_state: np.ndarray | None = None  # (n_slices, n_tau, n_components), complex
    metadata: dict = field(default_factory=dict)

    def slice_index(self, z: float) -> int:
        idx = int(np.argmin(np.abs(self.z_slices - z)))
        if not math.isclose(self.z_slices[idx], z, rel_tol=1e-9, abs_tol=1e-12):
            raise KeyError(f"z={z} was not saved; saved slices are {list(self.z_slices)}")
        return idx

    @property
    def input_field(self) -> np.ndarray:
        return self.field[0]

    @property
    def output_field(self) -> np.ndarray:
        return self.field[-1]

    @property
    def output_population(self) -> np.ndarray:
        return self.population[-1]


@dataclass(frozen=True)
class DelayReport:
    front_tau_in: float
    front_tau_out: float
    front_lab_traversal_s: float
    front_lab_traversal_norm: float
    peak_tau_out: float
    peak_tau_ref: float
    peak_delay_norm: float
    peak_delay_s: float
    energy_transmission: float
    note: str = ""


def validate_config(pulse, medium: MediumSpec, grid: SimGrid | None = None):
    """Check every invariant of a (pulse, medium, grid) triple.

    Returns the inputs unchanged as a tuple when they are consistent, raises
    :class:`InvalidConfig` listing all violations otherwise.
    """
    bad: dict[str, str] = {}

    def finite(x):
        return isinstance(x, (int, float, np.floating)) and math.isfinite(x)

    if not (finite(pulse.peak_amplitude) and pulse.peak_amplitude > 0):
        bad["peak_amplitude"] = f"must be finite and > 0, got {pulse.peak_amplitude!r}"
    if isinstance(pulse, PulseSpec):
        if not (finite(pulse.width_sigma) and pulse.width_sigma > 0):
            bad["width_sigma"] = f"must be finite and > 0, got {pulse.width_sigma!r}"
        if not finite(pulse.center_tau):
            bad["center_tau"] = f"must be finite, got {pulse.center_tau!r}"
    if not (finite(pulse.cutoff_tau) and pulse.cutoff_tau > 0):
        bad["cutoff_tau"] = f"must be finite and > 0, got {pulse.cutoff_tau!r}"

    if not (finite(medium.alpha0) and medium.alpha0 >= 0):
        bad["alpha0"] = f"must be >= 0, got {medium.alpha0!r}"
    if not (finite(medium.alpha0_tilde) and medium.alpha0_tilde >= 0):
        bad["alpha0_tilde"] = f"must be >= 0, got {medium.alpha0_tilde!r}"
    if not (finite(medium.length_cm) and medium.length_cm > 0):
        bad["length_cm"] = f"must be > 0, got {medium.length_cm!r}"
    if not (finite(medium.time_unit_seconds) and medium.time_unit_seconds > 0):
        bad["time_unit_seconds"] = f"must be > 0, got {medium.time_unit_seconds!r}"
    if medium.model.is_full:
        ratios = [("gamma1_ratio", medium.gamma1_ratio)]
        if medium.model is MediumModel.ALEXANDRITE_FULL:
            ratios.append(("gamma3_ratio", medium.gamma3_ratio))
        for name, value in ratios:
            if not (finite(value) and value > 0):
                bad[name] = f"full models need a finite positive ratio, got {value!r}"
            elif value < 1e2:
                warnings.warn(
                    f"{name}={value:g} is not >> 1; the full model will deviate "
                    "from the adiabatic (reduced) one",
                    stacklevel=2,
                )

    if grid is not None:
        nodes = grid.tau_nodes
        problems = []
        if nodes.ndim != 1 or nodes.size < 3:
            problems.append("needs at least 3 tau nodes")
        else:
            if not np.all(np.diff(nodes) > 0):
                problems.append("tau nodes must be strictly increasing")
            if nodes[0] != 0.0:
                problems.append("tau nodes must start at 0")
            if not np.any(nodes == pulse.cutoff_tau):
                problems.append(f"cutoff_tau={pulse.cutoff_tau!r} is not an exact node")
            if finite(pulse.cutoff_tau) and not (nodes[0] < pulse.cutoff_tau < nodes[-1]):
                problems.append("cutoff_tau must lie strictly inside the simulation window")
        if not (grid.dz > 0 and grid.nz >= 1):
            problems.append("dz must be > 0 and nz >= 1")
        elif finite(medium.length_cm) and not math.isclose(
            grid.nz * grid.dz, medium.length_cm, rel_tol=1e-9
        ):
            problems.append(f"nz*dz={grid.nz * grid.dz!r} != length_cm={medium.length_cm!r}")
        if problems:
            bad["grid"] = "; ".join(problems)

    if bad:
        raise InvalidConfig(bad)
    return pulse, medium, grid
