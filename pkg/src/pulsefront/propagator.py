"""Discontinuity-resolving grids and the z-march along retarded-time lines.

The solver works in the frame (z, tau) with tau = 2*Gamma2*(t - z/c).  A front
that moves at c sits at a fixed tau, so the whole causality question becomes
whether the scheme keeps samples past the cutoff exactly zero.  It does: the
field update is multiplicative, ``w <- w * exp(-kappa*dz)``.

Per z step the population line is integrated twice with RK4 (once with the
field at z, once with a predicted field at z + dz/2) and the field is then
advanced with the midpoint absorption coefficient.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numba
import numpy as np

from . import media
from .model import (
    MediumModel,
    MediumSpec,
    PropagationResult,
    PulsefrontError,
    SimGrid,
    validate_config,
)

POPULATION_TOL = 1e-9
# RK4 truncation at the stability limit can push a tiny coherently driven level a
# few 1e-9 below zero; genuinely unstable steps overshoot by far more
FULL_POPULATION_TOL = 1e-6
DEFAULT_MAX_NODES = 50_000_000
MAX_STEP_RATIO = 1.5


class GridTooLarge(PulsefrontError):
    pass


class StateOutOfBounds(PulsefrontError):
    """A population left [-tol, 1 + tol]; signals an unstable step."""


class StepUnstable(PulsefrontError):
    pass


@dataclass(frozen=True)
class SchemeSpec:
    tau_integrator: str = "RK4"
    z_scheme: str = "ExponentialMidpoint"
    population_tolerance: float | None = None  # None: per-model default
    save_slices: tuple[float, ...] | None = None  # None means (0, L)
    stability_factor: float = 0.5
    record_full_state: bool = True

    def __post_init__(self):
        if self.tau_integrator != "RK4":
            raise ValueError(f"unsupported tau integrator {self.tau_integrator!r}")
        if self.z_scheme != "ExponentialMidpoint":
            raise ValueError(f"unsupported z scheme {self.z_scheme!r}")

    def tolerance_for(self, medium: MediumSpec) -> float:
        if self.population_tolerance is not None:
            return self.population_tolerance
        return FULL_POPULATION_TOL if medium.model.is_full else POPULATION_TOL


# -- grids --------------------------------------------------------------------


def _transition_steps(fine: float, coarse: float) -> np.ndarray:
    """Geometric steps strictly between ``fine`` and ``coarse``."""
    if coarse <= fine * (1.0 + 1e-12):
        return np.empty(0)
    n = math.ceil(math.log(coarse / fine) / math.log(MAX_STEP_RATIO))
    ratio = (coarse / fine) ** (1.0 / n)
    return fine * ratio ** np.arange(1, n)


def build_tau_grid(
    pulse,
    coarse_dtau: float,
    fine_dtau: float,
    refine_window: float,
    tau_end: float,
    *,
    length_cm: float = 9.0,
    nz: int = 900,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> SimGrid:
    """Build a retarded-time grid with the cutoff as an exact node.

    Nodes within ``refine_window`` of the cutoff are spaced ``fine_dtau`` and
    are computed as ``T + k*fine_dtau`` (no accumulated rounding).  Step sizes
    then grow geometrically, by at most a factor 1.5 per node, up to
    ``coarse_dtau``.  The switch-on at tau = 0 is resolved the same way, from
    ``fine_dtau`` upwards.  Between the refined zones steps are uniform and
    never longer than ``coarse_dtau``.
    """
    T = float(pulse.cutoff_tau)
    if not (0 < fine_dtau <= coarse_dtau):
        raise ValueError(f"need 0 < fine_dtau <= coarse_dtau, got {fine_dtau!r}, {coarse_dtau!r}")
    if not tau_end > T:
        raise ValueError(f"tau_end={tau_end!r} must exceed the cutoff {T!r}")
    if not T > 0:
        raise ValueError("cutoff must be > 0")
    if refine_window < 0:
        raise ValueError("refine_window must be >= 0")
    if nz < 1:
        raise ValueError("nz must be >= 1")

    k_fine = int(round(refine_window / fine_dtau)) if coarse_dtau > fine_dtau else 0
    trans = _transition_steps(fine_dtau, coarse_dtau)
    estimate = 2 * k_fine + 3 * trans.size + (tau_end / coarse_dtau) + 4
    if estimate > max_nodes:
        raise GridTooLarge(f"grid would hold ~{estimate:.3g} nodes (cap {max_nodes:.3g})")

    def cluster(sign: float) -> np.ndarray:
        # fine then growing steps moving away from T, T excluded
        fine_nodes = T + sign * np.arange(1, k_fine + 1) * fine_dtau
        edge = T + sign * k_fine * fine_dtau
        return np.concatenate([fine_nodes, edge + sign * np.cumsum(trans)])

    # left of T: switch-on zone, uniform fill, cutoff zone
    head = np.cumsum(np.concatenate([[fine_dtau], trans])) if coarse_dtau > fine_dtau else \
        np.empty(0)
    low = cluster(-1.0)[::-1]
    low = low[low > 0.0]
    a = head[-1] if head.size else 0.0
    b = low[0] if low.size else T
    if a < b:
        n = max(int(math.ceil((b - a) / coarse_dtau * (1.0 - 1e-12))), 1)
        fill = a + (b - a) * np.arange(1, n) / n
        left = np.concatenate([head, fill, low])
    else:
        # zones overlap on a short pulse: split them halfway to the cutoff
        left = np.concatenate([head[head < 0.5 * T], low[low > 0.5 * T]])

    # right of T: cutoff zone, then coarse steps up to tau_end
    high = cluster(1.0)
    high = high[high < tau_end]
    start = high[-1] if high.size else T
    n_coarse = int(math.ceil((tau_end - start) / coarse_dtau)) - 1
    coarse_nodes = start + coarse_dtau * np.arange(1, max(n_coarse, 0) + 1)
    right = np.concatenate([high, coarse_nodes[coarse_nodes < tau_end]])

    nodes = np.concatenate([[0.0], left, [T], right, [tau_end]])
    if not np.all(np.diff(nodes) > 0):  # pragma: no cover - construction guarantees this
        raise RuntimeError("grid construction produced non-increasing nodes")
    return SimGrid(
        tau_nodes=nodes,
        coarse_dtau=float(coarse_dtau),
        fine_dtau=float(fine_dtau),
        refine_window=float(refine_window),
        cutoff_tau=T,
        dz=length_cm / nz,
        nz=int(nz),
    )


# -- numba kernels ---------------------------------------------------------------


@numba.njit(cache=True)
def _integrate_reduced(field, tau, rho0, tol, out):
    """RK4 for d(rho)/dtau = (1 - rho) - w**2 rho; returns first bad index or -1."""
    rho = rho0
    out[0] = rho
    for j in range(tau.size - 1):
        h = tau[j + 1] - tau[j]
        f0 = field[j]
        f1 = field[j + 1]
        fm = 0.5 * (f0 + f1)
        k1 = media.reduced_rate(rho, f0)
        k2 = media.reduced_rate(rho + 0.5 * h * k1, fm)
        k3 = media.reduced_rate(rho + 0.5 * h * k2, fm)
        k4 = media.reduced_rate(rho + h * k3, f1)
        rho = rho + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        out[j + 1] = rho
        if not (-tol <= rho <= 1.0 + tol):
            return j + 1
    return -1


@numba.njit(cache=True)
def _march_reduced(field0, tau, a0, a0t, dz, nz, save, tol, fields_out, rho_out):
    n = tau.size
    f = field0.copy()
    fh = np.empty(n)
    rho = np.empty(n)
    rho_h = np.empty(n)
    slot = 0
    for k in range(nz + 1):
        bad = _integrate_reduced(f, tau, 1.0, tol, rho)
        if bad >= 0:
            return k, bad
        if save[k]:
            fields_out[slot, :] = f
            rho_out[slot, :] = rho
            slot += 1
        if k == nz:
            break
        for j in range(n):
            kap = 0.5 * (a0 * rho[j] + a0t * (1.0 - rho[j]))
            fh[j] = f[j] * math.exp(-0.5 * dz * kap)
        bad = _integrate_reduced(fh, tau, 1.0, tol, rho_h)
        if bad >= 0:
            return k, bad
        for j in range(n):
            kap = 0.5 * (a0 * rho_h[j] + a0t * (1.0 - rho_h[j]))
            f[j] = f[j] * math.exp(-dz * kap)
    return -1, -1


@numba.njit(cache=True)
def _full_deriv(y, w, alex, g1, g3, s, out):
    if alex:
        media.alexandrite_deriv(y, w, g1, g3, s, out)
    else:
        media.ruby_deriv(y, w, g1, s, out)


@numba.njit(cache=True)
def _integrate_full(field, tau, alex, g1, g3, s, c1, c3, a0, a0t, tol, states, kappa, resid,
                    rho_gg):
    """RK4 over one tau line of the full density matrix.

    The field slope produced by the coherences is split as
    ``-kappa * w + resid``: ``kappa`` is the absorption coefficient the
    populations would give with stationary coherences, ``resid`` the lagging
    remainder.  Returns (first bad index or -1, largest per-step trace change).
    """
    m = states.shape[1]
    npop = 4 if alex else 3
    y = np.zeros(m, dtype=np.complex128)
    y[0] = 1.0
    k1 = np.empty(m, dtype=np.complex128)
    k2 = np.empty(m, dtype=np.complex128)
    k3 = np.empty(m, dtype=np.complex128)
    k4 = np.empty(m, dtype=np.complex128)
    tmp = np.empty(m, dtype=np.complex128)
    drift = 0.0
    trace_prev = 1.0
    for j in range(tau.size):
        if j > 0:
            h = tau[j] - tau[j - 1]
            f0 = field[j - 1]
            f1 = field[j]
            fm = 0.5 * (f0 + f1)
            _full_deriv(y, f0, alex, g1, g3, s, k1)
            for i in range(m):
                tmp[i] = y[i] + 0.5 * h * k1[i]
            _full_deriv(tmp, fm, alex, g1, g3, s, k2)
            for i in range(m):
                tmp[i] = y[i] + 0.5 * h * k2[i]
            _full_deriv(tmp, fm, alex, g1, g3, s, k3)
            for i in range(m):
                tmp[i] = y[i] + h * k3[i]
            _full_deriv(tmp, f1, alex, g1, g3, s, k4)
            for i in range(m):
                y[i] = y[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
        trace = 0.0
        for i in range(npop):
            p = y[i].real
            trace += p
            if not (-tol <= p <= 1.0 + tol):
                return j, drift
        d = abs(trace - trace_prev)
        if d > drift:
            drift = d
        trace_prev = trace
        states[j, :] = y
        rho_gg[j] = y[0].real
        # real part of i*(c1*rho_1g + c3*rho_32)
        if alex:
            slope = -(c1 * y[4].imag + c3 * y[5].imag)
            kap = 0.5 * a0 * (y[0].real - y[1].real) + 0.5 * a0t * (y[2].real - y[3].real)
        else:
            slope = -c1 * y[3].imag
            kap = 0.5 * a0 * (y[0].real - y[1].real)
        kappa[j] = kap
        resid[j] = slope + kap * field[j]
    return -1, drift


@numba.njit(cache=True)
def _etd_step(w, kap, resid, h):
    # exact for dw/dz = -kap*w + resid with frozen kap, resid
    x = -kap * h
    phi = 1.0 if x == 0.0 else math.expm1(x) / x
    return w * math.exp(x) + h * phi * resid


@numba.njit(cache=True)
def _march_full(field0, tau, alex, m, g1, g3, s, c1, c3, a0, a0t, dz, nz, save, tol,
                fields_out, rho_out, states_out, keep_states):
    n = tau.size
    f = field0.copy()
    fh = np.empty(n)
    states = np.empty((n, m), dtype=np.complex128)
    kappa = np.empty(n)
    resid = np.empty(n)
    rho = np.empty(n)
    slot = 0
    drift = 0.0
    for k in range(nz + 1):
        bad, d = _integrate_full(f, tau, alex, g1, g3, s, c1, c3, a0, a0t, tol, states, kappa,
                                 resid, rho)
        drift = max(drift, d)
        if bad >= 0:
            return k, bad, drift
        if save[k]:
            fields_out[slot, :] = f
            rho_out[slot, :] = rho
            if keep_states:
                states_out[slot, :, :] = states
            slot += 1
        if k == nz:
            break
        for j in range(n):
            fh[j] = _etd_step(f[j], kappa[j], resid[j], 0.5 * dz)
        bad, d = _integrate_full(fh, tau, alex, g1, g3, s, c1, c3, a0, a0t, tol, states, kappa,
                                 resid, rho)
        drift = max(drift, d)
        if bad >= 0:
            return k, bad, drift
        for j in range(n):
            f[j] = _etd_step(f[j], kappa[j], resid[j], dz)
    return -1, -1, drift


# -- python surface ------------------------------------------------------------


def _save_mask(grid: SimGrid, scheme: SchemeSpec):
    L = grid.length_cm
    wanted = (0.0, L) if scheme.save_slices is None else tuple(scheme.save_slices)
    steps = set()
    for z in wanted:
        if not (-1e-12 <= z <= L * (1 + 1e-12)):
            raise ValueError(f"save slice z={z} lies outside [0, {L}]")
        k = int(round(z / grid.dz))
        if not math.isclose(k * grid.dz, z, rel_tol=1e-9, abs_tol=1e-9 * grid.dz):
            raise ValueError(f"save slice z={z} is not a multiple of dz={grid.dz}")
        steps.add(k)
    steps |= {0, grid.nz}
    mask = np.zeros(grid.nz + 1, dtype=np.bool_)
    mask[sorted(steps)] = True
    z_slices = np.array(sorted(steps), dtype=float) * grid.dz
    z_slices[-1] = L
    return mask, z_slices


def integrate_population_line(medium: MediumSpec, field_line, grid: SimGrid, initial_state=None,
                              tol: float | None = None) -> np.ndarray:
    """Integrate the ground-state population over the tau line for a given field.

    The field is taken linear between nodes.  For full models the returned
    array holds the full state at every node, shape (n_tau, n_components).
    """
    tau = grid.tau_nodes
    field_line = np.ascontiguousarray(field_line, dtype=float)
    if field_line.shape != tau.shape:
        raise ValueError("field line and grid differ in length")
    if medium.model is MediumModel.VACUUM:
        return np.ones_like(tau)
    tol = SchemeSpec(population_tolerance=tol).tolerance_for(medium)
    if medium.model.is_full:
        if initial_state is not None:
            raise NotImplementedError("full-model lines always start in the ground state")
        alex = medium.model is MediumModel.ALEXANDRITE_FULL
        m = media.ALEX_FULL_SIZE if alex else media.RUBY_FULL_SIZE
        g3 = medium.gamma3_ratio if alex else 1.0
        states = np.empty((tau.size, m), dtype=complex)
        kappa = np.empty(tau.size)
        resid = np.empty(tau.size)
        rho = np.empty(tau.size)
        c1, c3 = media.coupling_constants(medium)
        bad, _ = _integrate_full(field_line, tau, alex, medium.gamma1_ratio, g3,
                                 media.rabi_scale(medium.gamma1_ratio), c1, c3,
                                 medium.alpha0, medium.alpha0_tilde if alex else 0.0, tol,
                                 states, kappa, resid, rho)
        if bad >= 0:
            raise StateOutOfBounds(f"population left [0, 1] at tau={tau[bad]!r}")
        return states
    rho0 = 1.0 if initial_state is None else float(getattr(initial_state, "rho_gg", initial_state))
    out = np.empty_like(tau)
    bad = _integrate_reduced(field_line, tau, rho0, tol, out)
    if bad >= 0:
        raise StateOutOfBounds(f"population {out[bad]!r} left [0, 1] at tau={tau[bad]!r}")
    return out


def advance_field(field_line, rho_line, rho_mid_line, medium: MediumSpec, dz: float) -> np.ndarray:
    """Exponential integrating-factor step of the field over ``dz``.

    ``rho_mid_line`` is the population at z + dz/2 (from the predictor pass).
    If it is None, the population at z is used for the whole step.
    """
    field_line = np.asarray(field_line, dtype=float)
    if medium.model is MediumModel.VACUUM:
        return field_line.copy()
    rho = rho_line if rho_mid_line is None else rho_mid_line
    kappa = media.absorption_coefficient(np.asarray(rho, dtype=float), medium)
    return field_line * np.exp(-kappa * dz)


def _check_grid(grid: SimGrid, medium: MediumSpec):
    if not math.isclose(grid.length_cm, medium.length_cm, rel_tol=1e-9):
        raise ValueError(
            f"grid covers {grid.length_cm} cm but the medium is {medium.length_cm} cm long"
        )


def propagate(pulse, medium: MediumSpec, grid: SimGrid, scheme: SchemeSpec | None = None
              ) -> PropagationResult:
    """March the input pulse from z = 0 to z = L.

    Full density-matrix models are dispatched to :func:`propagate_full`.
    """
    scheme = scheme or SchemeSpec()
    validate_config(pulse, medium, grid)
    if medium.model.is_full:
        return propagate_full(pulse, medium, grid, scheme)
    _check_grid(grid, medium)
    mask, z_slices = _save_mask(grid, scheme)
    tau = grid.tau_nodes
    field0 = np.ascontiguousarray(pulse.sample(tau), dtype=float)
    n_save = z_slices.size
    t0 = time.perf_counter()
    if medium.model is MediumModel.VACUUM:
        fields = np.repeat(field0[None, :], n_save, axis=0)
        rho = np.ones((n_save, tau.size))
        line_integrations = 0
    else:
        fields = np.empty((n_save, tau.size))
        rho = np.empty((n_save, tau.size))
        a0t = medium.alpha0_tilde if medium.model.is_alexandrite else 0.0
        k_bad, j_bad = _march_reduced(field0, tau, medium.alpha0, a0t, grid.dz, grid.nz, mask,
                                      scheme.tolerance_for(medium), fields, rho)
        if k_bad >= 0:
            raise StateOutOfBounds(
                f"population left [0, 1] at z step {k_bad}, tau={tau[j_bad]!r}"
            )
        line_integrations = 2 * grid.nz + 1
    return PropagationResult(
        grid=grid,
        z_slices=z_slices,
        field=fields,
        population=rho,
        medium=medium,
        pulse=pulse,
        metadata={
            "model": medium.model.value,
            "tau_integrator": scheme.tau_integrator,
            "z_scheme": scheme.z_scheme,
            "n_tau": int(tau.size),
            "nz": grid.nz,
            "line_integrations": line_integrations,
            "wall_clock_s": time.perf_counter() - t0,
        },
    )


def propagate_full(pulse, medium: MediumSpec, grid: SimGrid, scheme: SchemeSpec | None = None
                   ) -> PropagationResult:
    """Same z-march as :func:`propagate` with the complete density matrix.

    The coherences lag the field, so the field slope is not proportional to the
    local field (near a jump the field rings and may change sign).  The slope is
    split into the adiabatic absorption ``-kappa*w`` plus a lagging remainder,
    and the field is advanced with an exponential-time-differencing step using
    the same predictor-corrector midpoint.  In the adiabatic limit this reduces
    to the integrating-factor step of :func:`propagate`.

    Behind the cutoff the decaying polarization keeps radiating (the optical
    flash), so samples past the cutoff are not zero here; what travels along
    the characteristic unchanged is the size of the jump at the cutoff.
    """
    scheme = scheme or SchemeSpec()
    validate_config(pulse, medium, grid)
    if not medium.model.is_full:
        raise media.ModelMismatch(f"propagate_full needs a full model, got {medium.model.value}")
    _check_grid(grid, medium)
    alex = medium.model is MediumModel.ALEXANDRITE_FULL
    g1 = medium.gamma1_ratio
    g3 = medium.gamma3_ratio if alex else 1.0
    fastest = max(g1, g3) if alex else g1
    tau = grid.tau_nodes
    max_step = float(np.max(np.diff(tau)))
    limit = scheme.stability_factor / fastest
    if max_step > limit * (1.0 + 1e-9):
        raise StepUnstable(
            f"largest tau step {max_step:.3g} exceeds the stability limit {limit:.3g} "
            f"(stability_factor / max decay ratio)"
        )
    mask, z_slices = _save_mask(grid, scheme)
    field0 = np.ascontiguousarray(pulse.sample(tau), dtype=float)
    m = media.ALEX_FULL_SIZE if alex else media.RUBY_FULL_SIZE
    n_save = z_slices.size
    fields = np.empty((n_save, tau.size))
    rho = np.empty((n_save, tau.size))
    keep = scheme.record_full_state
    states = np.empty((n_save if keep else 1, tau.size if keep else 1, m), dtype=complex)
    c1, c3 = media.coupling_constants(medium)
    t0 = time.perf_counter()
    k_bad, j_bad, drift = _march_full(
        field0, tau, alex, m, g1, g3, media.rabi_scale(g1), c1, c3,
        medium.alpha0, medium.alpha0_tilde if alex else 0.0, grid.dz, grid.nz, mask,
        scheme.tolerance_for(medium), fields, rho, states, keep,
    )
    if k_bad >= 0:
        raise StateOutOfBounds(f"population left [0, 1] at z step {k_bad}, tau={tau[j_bad]!r}")
    return PropagationResult(
        grid=grid,
        z_slices=z_slices,
        field=fields,
        population=rho,
        medium=medium,
        pulse=pulse,
        full_state=states if keep else None,
        metadata={
            "model": medium.model.value,
            "tau_integrator": scheme.tau_integrator,
            "z_scheme": scheme.z_scheme,
            "n_tau": int(tau.size),
            "nz": grid.nz,
            "line_integrations": 2 * grid.nz + 1,
            "max_trace_step_drift": float(drift),
            "wall_clock_s": time.perf_counter() - t0,
        },
    )


def vacuum_reference(pulse, grid: SimGrid, time_unit_seconds: float = 1.0) -> PropagationResult:
    """Free propagation at c over the grid's length: output equals input."""
    medium = MediumSpec(MediumModel.VACUUM, time_unit_seconds=time_unit_seconds,
                        length_cm=grid.length_cm)
    return propagate(pulse, medium, grid)
