import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from pulsefront import (
    FlatTopPulse,
    MediumModel,
    MediumSpec,
    PulseSpec,
    build_tau_grid,
    propagate,
    vacuum_reference,
)
from pulsefront.diagnostics import (
    NoFront,
    PeakAtBoundary,
    ZeroInput,
    convergence_report,
    cw_transmission_oracle,
    delay_report,
    detect_front,
    energy_transmission,
    front_causality_check,
    observed_order,
    parabolic_peak,
    peak_delay,
)
from pulsefront.model import PropagationResult

from .conftest import uniform_grid

BEER = math.exp(-1.17 * 9 / 2)


def test_front_of_table1_input(table1_pulse, small_grid):
    assert detect_front(table1_pulse.sample(small_grid.tau_nodes), small_grid) == 6.5


def test_front_of_zero_line(small_grid):
    with pytest.raises(NoFront):
        detect_front(np.zeros(small_grid.tau_nodes.size), small_grid)


def test_front_threshold():
    tau = np.linspace(0, 1, 11)
    line = np.array([0, 1, 2, 3, 4, 5, 4, 3, 2, 1e-13, 0], dtype=float)
    assert detect_front(line, tau) == tau[9]
    assert detect_front(line, tau, threshold=1e-12) == tau[8]


@given(st.integers(0, 9), st.floats(1e-300, 1.0))
def test_front_is_exact_support_boundary(extra, value):
    tau = np.linspace(0.0, 2.0, 21)
    line = np.where(tau <= 1.0, 1.0, 0.0)
    assert detect_front(line, tau) == 1.0
    smeared = line.copy()
    smeared[11 + extra] = value
    assert detect_front(smeared, tau) == tau[11 + extra]


def test_table2_vacuum_front_lab_time():
    pulse = PulseSpec(1.0, 2.0, 4.2, 4.2)
    medium = MediumSpec("alexandrite", alpha0=1.17, alpha0_tilde=4.68, time_unit_seconds=2.5e-4)
    grid = build_tau_grid(pulse, 1e-2, 1e-8, 2e-6, 5.2, nz=90)
    ref = vacuum_reference(pulse, grid, medium.time_unit_seconds)
    front = detect_front(ref.output_field, grid)
    # retarded frame: the front stays on the cutoff; at the exit face it arrives L/c later
    assert front == 4.2
    assert front + medium.front_traversal_norm == pytest.approx(4.2000012, abs=1e-9)


def test_causality_vacuum_passes(ruby, table1_pulse, small_grid):
    report = front_causality_check(vacuum_reference(table1_pulse, small_grid))
    assert report.passed
    assert report.mode == "support"


def test_causality_reports_traversal(ruby, table1_pulse, small_grid):
    report = front_causality_check(propagate(table1_pulse, ruby, small_grid))
    assert report.passed
    assert report.front_lab_traversal_s == pytest.approx(3.0e-10, rel=1e-3)
    assert report.front_lab_traversal_norm == pytest.approx(6.7e-8, abs=3.25e-8)


def _smear(result, value=1e-12):
    field = result.field.copy()
    field[-1, result.grid.cutoff_index + 1] = value
    return PropagationResult(result.grid, result.z_slices, field, result.population,
                             result.medium, result.pulse, metadata=result.metadata)


def test_causality_negative_control(ruby, table1_pulse, small_grid):
    bad = _smear(propagate(table1_pulse, ruby, small_grid))
    report = front_causality_check(bad)
    assert not report.passed
    assert report.leaks[9.0] == 1


def test_peak_of_symmetric_samples():
    tau = np.linspace(0.0, 1.0, 11)
    line = np.zeros(11)
    line[4:7] = (0.9, 1.0, 0.9)
    line[3] = line[7] = 0.5
    t, v = parabolic_peak(line, tau)
    assert t == tau[5]
    assert v == 1.0


def test_peak_on_nonuniform_nodes():
    tau = np.array([0.0, 0.3, 0.5, 1.2, 2.0])
    line = -((tau - 0.7) ** 2) + 2.0
    t, v = parabolic_peak(line, tau)
    assert t == pytest.approx(0.7, rel=1e-12)
    assert v == pytest.approx(2.0, rel=1e-12)


def test_peak_at_boundary():
    tau = np.linspace(0.0, 1.0, 5)
    with pytest.raises(PeakAtBoundary):
        parabolic_peak(np.array([5.0, 4, 3, 2, 1]), tau)
    with pytest.raises(PeakAtBoundary):
        parabolic_peak(np.array([1.0, 2, 3, 4, 5]), tau)


def test_identical_lines_have_zero_delay(table1_pulse, small_grid):
    line = table1_pulse.sample(small_grid.tau_nodes)
    line = np.where(small_grid.tau_nodes < 6.0, line, 0.0)
    assert peak_delay(line, line, small_grid) == (0.0, 0.0)


@given(st.floats(0.3, 0.7), st.floats(0.3, 0.7), st.floats(0.05, 0.2))
def test_peak_delay_antisymmetric(c1, c2, width):
    tau = np.sort(np.concatenate([np.linspace(0, 1, 97), [0.123, 0.456, 0.789]]))
    a = np.exp(-(((tau - c1) / width) ** 2))
    b = np.exp(-(((tau - c2) / width) ** 2))
    d_ab, s_ab = peak_delay(a, b, tau, 2.0)
    d_ba, _ = peak_delay(b, a, tau, 2.0)
    assert d_ab == pytest.approx(-d_ba, abs=1e-15)
    assert s_ab == 2.0 * d_ab


def test_energy_transmission_vacuum_and_zero(small_grid):
    tau = small_grid.tau_nodes
    line = np.exp(-tau)
    assert energy_transmission(line, line, small_grid) == 1.0
    with pytest.raises(ZeroInput):
        energy_transmission(line, np.zeros_like(line), small_grid)


def test_energy_transmission_beer_and_saturation(ruby, table1_pulse, small_grid):
    weak = propagate(table1_pulse.with_amplitude(1e-4), ruby, small_grid)
    t_weak = energy_transmission(weak.output_field, weak.input_field, small_grid)
    assert t_weak == pytest.approx(BEER**2, rel=1e-6)
    strong = propagate(table1_pulse, ruby, small_grid)
    t_strong = energy_transmission(strong.output_field, strong.input_field, small_grid)
    assert t_strong > BEER**2


def test_delay_report_signs(ruby, alex, table1_pulse, small_grid):
    ref = vacuum_reference(table1_pulse, small_grid, ruby.time_unit_seconds)
    r = delay_report(propagate(table1_pulse, ruby, small_grid), ref)
    assert r.peak_delay_s > 0
    assert r.front_tau_in == r.front_tau_out == 6.5
    a = delay_report(propagate(table1_pulse, alex, small_grid), ref)
    assert a.peak_delay_s < 0


def test_delay_report_notes_boundary_peak(alex):
    # the Gaussian is still rising at the cutoff, so the maximum sits next to the front
    pulse = PulseSpec(1.0, 2.0, 5.0, 4.2)
    grid = build_tau_grid(pulse, 1e-2, 1e-8, 1e-6, 5.2, nz=90)
    r = delay_report(propagate(pulse, alex, grid), vacuum_reference(pulse, grid))
    assert math.isnan(r.peak_delay_s)
    assert "undefined" in r.note


# -- continuous-wave oracle ---------------------------------------------------------


def test_cw_lossless_medium():
    assert cw_transmission_oracle(0.7, MediumSpec("ruby", alpha0=0.0)) == 0.7


def test_cw_ruby_strong_field(ruby):
    out = cw_transmission_oracle(1.0, ruby)
    assert out == pytest.approx(8.53e-3, rel=1e-3)
    assert math.log(out) + out**2 / 2 == pytest.approx(0.5 - 1.17 * 9 / 2, abs=1e-12)


def test_cw_linear_limit(ruby):
    assert cw_transmission_oracle(1e-4, ruby) == pytest.approx(BEER * 1e-4, rel=1e-8)


def test_cw_alexandrite_relation(alex):
    a0, at = alex.alpha0, alex.alpha0_tilde

    def G(u):
        return math.log(u) / a0 + (1 - at / a0) / at * math.log(a0 + at * u)

    for w in (0.1, 1.0, 3.0):
        out = cw_transmission_oracle(w, alex)
        assert G(out**2) == pytest.approx(G(w**2) - 9.0, rel=1e-12, abs=1e-12)
        assert math.exp(-at * 9 / 2) * w <= out <= math.exp(-a0 * 9 / 2) * w


@given(st.floats(1e-3, 20.0), st.floats(1e-3, 20.0), st.sampled_from(["ruby", "alexandrite"]))
def test_cw_monotone(w1, w2, kind):
    assume(abs(w1 - w2) > 1e-9 * max(w1, w2))
    medium = MediumSpec(kind, alpha0=1.17, alpha0_tilde=4.68 if kind == "alexandrite" else 0.0)
    o1 = cw_transmission_oracle(w1, medium)
    o2 = cw_transmission_oracle(w2, medium)
    assert (o1 < o2) == (w1 < w2)
    assert o1 < w1 and o2 < w2


def test_cw_rejects_bad_input(ruby):
    with pytest.raises(ValueError):
        cw_transmission_oracle(0.0, ruby)
    with pytest.raises(ValueError):
        cw_transmission_oracle(1.0, ruby.as_model(MediumModel.RUBY_FULL, gamma1_ratio=1e3))


@pytest.mark.parametrize("kind", ["ruby", "alex"])
def test_flat_top_plateau_matches_oracle(kind, ruby, alex):
    medium = ruby if kind == "ruby" else alex
    pulse = FlatTopPulse(1.0, 20.0)
    grid = build_tau_grid(pulse, 1e-2, 1e-8, 1e-6, 20.5, nz=900)
    res = propagate(pulse, medium, grid)
    plateau = res.output_field[grid.cutoff_index]
    assert plateau == pytest.approx(cw_transmission_oracle(1.0, medium), rel=1e-5)


# -- convergence ----------------------------------------------------------------------


def test_observed_order_of_known_sequence():
    assert observed_order(1 + 0.04, 1 + 0.01, 1 + 0.0025) == pytest.approx(2.0)
    assert observed_order(1.0, 1.0, 1.0) == math.inf


def test_convergence_vacuum_is_exact(ruby, table1_pulse):
    report = convergence_report(table1_pulse, ruby.as_vacuum(), coarse_dtau=1e-2, fine_dtau=1e-8,
                                refine_window=1e-6, tau_end=8.0, nz=9)
    assert report.exact
    assert "exact" in report.summary()


def test_convergence_ruby_coarse(ruby, table1_pulse):
    report = convergence_report(table1_pulse, ruby, coarse_dtau=1e-2, fine_dtau=1e-8,
                                refine_window=1e-6, tau_end=8.0, nz=90)
    assert not report.exact
    assert report.order_peak_value > 1.8
    assert report.order_peak_position > 1.8


def test_uniform_grid_helper_has_cutoff_node():
    grid = uniform_grid(n=11, end=1.0)
    assert grid.tau_nodes[grid.cutoff_index] == grid.cutoff_tau
