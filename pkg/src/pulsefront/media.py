"""Population dynamics and field absorption laws for each medium model.

Time is the normalized retarded time (units of 1/(2*Gamma2)) and fields are
Rabi frequencies divided by Omega_sat = sqrt(4*Gamma1*Gamma2).  In those units
the relaxation rate of the metastable level is 1, the coherence damping of the
pumped transition is ``gamma1_ratio`` and the Rabi frequency of a field
``w`` is ``w * sqrt(2 * gamma1_ratio)``.

Full-model states are complex vectors with the layout

* ruby:        ``[rho_gg, rho_11, rho_22, rho_1g]``
* alexandrite: ``[rho_gg, rho_11, rho_22, rho_33, rho_1g, rho_32]``

Populations are stored as complex numbers with zero imaginary part so one
array holds the whole density matrix.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numba
import numpy as np

from .model import MediumModel, MediumSpec, ModelMismatch

RUBY_FULL_SIZE = 4
ALEX_FULL_SIZE = 6


@dataclass(frozen=True)
class ReducedState:
    rho_gg: float


@dataclass(frozen=True)
class RubyFullState:
    rho_gg: float
    rho_11: float
    rho_22: float
    rho_1g: complex = 0j

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=complex)

    @classmethod
    def from_array(cls, y) -> RubyFullState:
        return cls(y[0].real, y[1].real, y[2].real, complex(y[3]))

    @property
    def population_sum(self) -> float:
        return self.rho_gg + self.rho_11 + self.rho_22


@dataclass(frozen=True)
class AlexandriteFullState:
    rho_gg: float
    rho_11: float
    rho_22: float
    rho_33: float
    rho_1g: complex = 0j
    rho_32: complex = 0j

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=complex)

    @classmethod
    def from_array(cls, y) -> AlexandriteFullState:
        return cls(y[0].real, y[1].real, y[2].real, y[3].real, complex(y[4]), complex(y[5]))

    @property
    def population_sum(self) -> float:
        return self.rho_gg + self.rho_11 + self.rho_22 + self.rho_33


def ground_state(model: MediumModel):
    """All atoms in |g>, the state of the medium at tau = 0."""
    if model is MediumModel.RUBY_FULL:
        return RubyFullState(1.0, 0.0, 0.0)
    if model is MediumModel.ALEXANDRITE_FULL:
        return AlexandriteFullState(1.0, 0.0, 0.0, 0.0)
    return ReducedState(1.0)


def rabi_scale(gamma1_ratio: float) -> float:
    """Omega_sat / (2*Gamma2) expressed through Gamma1/(2*Gamma2)."""
    return math.sqrt(2.0 * gamma1_ratio)


# -- reduced models ---------------------------------------------------------


@numba.njit(cache=True)
def reduced_rate(rho_gg, field):
    return (1.0 - rho_gg) - field * field * rho_gg


def _rho(state) -> float:
    return state.rho_gg if isinstance(state, ReducedState) else float(state)


def ruby_reduced_rhs(state: ReducedState | float, field: float) -> float:
    """d(rho_gg)/dtau = (1 - rho_gg) - field**2 * rho_gg."""
    rho = _rho(state)
    return (1.0 - rho) - field * field * rho


def alexandrite_reduced_rhs(state: ReducedState | float, field: complex | float) -> float:
    """Same law as ruby with the modulus squared of the field."""
    rho = _rho(state)
    return (1.0 - rho) - abs(field) ** 2 * rho


def steady_state_population(field):
    """Ground-state population reached under a constant drive."""
    return 1.0 / (1.0 + np.abs(field) ** 2)


def absorption_coefficient(state: ReducedState | float | np.ndarray, medium: MediumSpec):
    """Field decay rate kappa (per cm) so that dOmega/dz = -kappa * Omega.

    Accepts a scalar state or an array of ground-state populations.
    """
    model = medium.model
    if model.is_full or model is MediumModel.VACUUM:
        raise ModelMismatch(
            f"absorption_coefficient is defined for reduced models only, got {model.value}"
        )
    rho = state.rho_gg if isinstance(state, ReducedState) else state
    if model is MediumModel.RUBY_REDUCED:
        return 0.5 * medium.alpha0 * rho
    return 0.5 * medium.alpha0 * rho + 0.5 * medium.alpha0_tilde * (1.0 - rho)


# -- full density-matrix models ---------------------------------------------


@numba.njit(cache=True)
def ruby_deriv(y, field, g1, s, out):
    drive = 0.5 * field * s
    im1g = y[3].imag
    pump = 2.0 * drive * im1g
    out[0] = y[2] - pump
    out[1] = -2.0 * g1 * y[1] + pump
    out[2] = 2.0 * g1 * y[1] - y[2]
    out[3] = -g1 * y[3] + 1j * drive * (y[0] - y[1])


@numba.njit(cache=True)
def alexandrite_deriv(y, field, g1, g3, s, out):
    drive = 0.5 * field * s
    pump1 = 2.0 * drive * y[4].imag
    pump3 = 2.0 * drive * y[5].imag
    out[0] = y[2] - pump1
    out[1] = -2.0 * g1 * y[1] + pump1
    out[2] = 2.0 * g1 * y[1] - y[2] + 2.0 * g3 * y[3] - pump3
    out[3] = -2.0 * g3 * y[3] + pump3
    out[4] = -g1 * y[4] + 1j * drive * (y[0] - y[1])
    out[5] = -g3 * y[5] + 1j * drive * (y[2] - y[3])


def _require(medium: MediumSpec, model: MediumModel):
    if medium.model is not model:
        raise ModelMismatch(f"expected a {model.value} medium, got {medium.model.value}")


def ruby_full_rhs(state: RubyFullState, field: float, medium: MediumSpec) -> RubyFullState:
    """Time derivative of the three-level ruby density matrix.

    The rho_11 equation is fixed by conservation of the trace.
    """
    _require(medium, MediumModel.RUBY_FULL)
    y = state.to_array() if not isinstance(state, np.ndarray) else state.astype(complex)
    out = np.empty_like(y)
    ruby_deriv(y, float(field), medium.gamma1_ratio, rabi_scale(medium.gamma1_ratio), out)
    return RubyFullState.from_array(out)


def alexandrite_full_rhs(
    state: AlexandriteFullState, field: float, medium: MediumSpec
) -> AlexandriteFullState:
    _require(medium, MediumModel.ALEXANDRITE_FULL)
    y = state.to_array() if not isinstance(state, np.ndarray) else state.astype(complex)
    out = np.empty_like(y)
    alexandrite_deriv(
        y, float(field), medium.gamma1_ratio, medium.gamma3_ratio,
        rabi_scale(medium.gamma1_ratio), out,
    )
    return AlexandriteFullState.from_array(out)


def coupling_constants(medium: MediumSpec) -> tuple[float, float]:
    """Coefficients c1, c3 with dOmega/dz = i*(c1*rho_1g + c3*rho_32).

    Chosen so that the stationary coherences rho_1g = i*w*s*(rho_gg - rho_11)/(2*g1)
    and rho_32 = i*w*s*(rho_22 - rho_33)/(2*g3) give back the reduced laws.
    """
    if not medium.model.is_full:
        raise ModelMismatch(f"coherence coupling needs a full model, got {medium.model.value}")
    s = rabi_scale(medium.gamma1_ratio)
    c1 = medium.alpha0 * medium.gamma1_ratio / s
    c3 = 0.0
    if medium.model is MediumModel.ALEXANDRITE_FULL:
        c3 = medium.alpha0_tilde * medium.gamma3_ratio / s
    return c1, c3


def coherence_field_coupling(state, medium: MediumSpec) -> complex:
    """dOmega/dz produced by the medium coherences of ``state``."""
    c1, c3 = coupling_constants(medium)
    if medium.model is MediumModel.RUBY_FULL:
        if not isinstance(state, RubyFullState):
            raise ModelMismatch("RubyFull medium needs a RubyFullState")
        return 1j * c1 * state.rho_1g
    if not isinstance(state, AlexandriteFullState):
        raise ModelMismatch("AlexandriteFull medium needs an AlexandriteFullState")
    return 1j * (c1 * state.rho_1g + c3 * state.rho_32)


def stationary_coherences(state, field: float, medium: MediumSpec):
    """Return ``state`` with its coherences replaced by their adiabatic values."""
    s = rabi_scale(medium.gamma1_ratio)
    rho_1g = 1j * field * s * (state.rho_gg - state.rho_11) / (2.0 * medium.gamma1_ratio)
    if isinstance(state, RubyFullState):
        return RubyFullState(state.rho_gg, state.rho_11, state.rho_22, rho_1g)
    rho_32 = 1j * field * s * (state.rho_22 - state.rho_33) / (2.0 * medium.gamma3_ratio)
    return AlexandriteFullState(
        state.rho_gg, state.rho_11, state.rho_22, state.rho_33, rho_1g, rho_32
    )
