import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pulsefront import (
    FlatTopPulse,
    InvalidConfig,
    MediumModel,
    MediumSpec,
    PulseSpec,
    SimGrid,
    input_pulse_value,
    validate_config,
)
from pulsefront.model import SPEED_OF_LIGHT_CM_S

from .conftest import uniform_grid


def test_table1_config_is_valid(ruby, small_grid):
    pulse = PulseSpec(1.0, 4.494, 5.75, 6.5)
    validate_config(pulse, ruby)
    validate_config(PulseSpec(1.0, 4.494, 5.750170439436484, 6.5), ruby, small_grid)


def test_zero_amplitude_is_rejected(ruby):
    with pytest.raises(InvalidConfig) as exc:
        validate_config(PulseSpec(0.0, 4.494, 5.75, 6.5), ruby)
    assert "peak_amplitude" in exc.value.violations


def test_all_violations_reported_together():
    medium = MediumSpec(MediumModel.RUBY_REDUCED, alpha0=-1.0, length_cm=0.0)
    with pytest.raises(InvalidConfig) as exc:
        validate_config(PulseSpec(-1.0, 0.0, math.nan, 6.5), medium)
    assert {"peak_amplitude", "width_sigma", "center_tau", "alpha0",
            "length_cm"} <= set(exc.value.violations)


def test_grid_missing_cutoff_is_rejected(ruby):
    pulse = PulseSpec(1.0, 4.494, 5.75, 6.5)
    grid = uniform_grid(n=801, end=8.0 * 1.0001, cutoff=6.5)
    assert not np.any(grid.tau_nodes == 6.5)
    with pytest.raises(InvalidConfig) as exc:
        validate_config(pulse, ruby, grid)
    assert "grid" in exc.value.violations


def test_grid_length_mismatch_is_rejected(ruby, table1_pulse, small_grid):
    with pytest.raises(InvalidConfig, match="length_cm"):
        validate_config(table1_pulse, ruby, small_grid.with_dz(0.1, 10))


def test_full_model_needs_finite_ratios(ruby, table1_pulse):
    with pytest.raises(InvalidConfig, match="gamma1_ratio"):
        validate_config(table1_pulse, ruby.as_model(MediumModel.RUBY_FULL))
    with pytest.warns(UserWarning, match="not >> 1"):
        validate_config(table1_pulse, ruby.as_model(MediumModel.RUBY_FULL, gamma1_ratio=10.0))


def test_pulse_peak_at_center():
    for sigma in (0.1, 2.0, 4.494):
        assert input_pulse_value(PulseSpec(0.7, sigma, 3.0, 6.5), 3.0) == 0.7


def test_pulse_exactly_zero_past_cutoff():
    pulse = PulseSpec(1.0, 4.494, 5.75, 6.5)
    assert input_pulse_value(pulse, np.nextafter(6.5, 7.0)) == 0.0
    assert input_pulse_value(pulse, 6.5 + 1e-10) == 0.0
    assert input_pulse_value(pulse, 6.5) > 0.9


def test_table2_vacuum_value_at_cutoff():
    assert input_pulse_value(PulseSpec(1.0, 2.0, 4.2, 4.2), 4.2) == 1.0


def test_pulse_array_evaluation():
    pulse = PulseSpec(1.0, 2.0, 1.0, 2.0)
    tau = np.array([0.0, 1.0, 2.0, 3.0])
    out = input_pulse_value(pulse, tau)
    assert out.shape == (4,)
    np.testing.assert_allclose(out, [math.exp(-0.25), 1.0, math.exp(-0.25), 0.0])


@given(
    amp=st.floats(1e-3, 10.0),
    sigma=st.floats(1e-2, 20.0),
    center=st.floats(-5.0, 20.0),
    cutoff=st.floats(0.1, 20.0),
)
def test_jump_at_cutoff_equals_left_limit(amp, sigma, center, cutoff):
    pulse = PulseSpec(amp, sigma, center, cutoff)
    left = input_pulse_value(pulse, cutoff)
    expected = amp * math.exp(-(((cutoff - center) / sigma) ** 2))
    assert left == pytest.approx(expected, rel=1e-12, abs=1e-300)
    assert input_pulse_value(pulse, np.nextafter(cutoff, math.inf)) == 0.0
    # the one-sided limits differ whenever the Gaussian has not underflowed
    if expected > 0:
        assert left - 0.0 > 0


@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_validate_config_deterministic(a0, amp):
    medium = MediumSpec(MediumModel.RUBY_REDUCED, alpha0=a0)
    pulse = PulseSpec(amp, 1.0, 1.0, 2.0)

    def verdict():
        try:
            validate_config(pulse, medium)
            return None
        except InvalidConfig as exc:
            return exc.violations

    assert verdict() == verdict()


def test_flat_top_pulse():
    p = FlatTopPulse(2.0, 5.0)
    np.testing.assert_array_equal(p.sample(np.array([0.0, 5.0, 5.1])), [2.0, 2.0, 0.0])


def test_front_traversal_units():
    ruby = MediumSpec("ruby", alpha0=1.17, time_unit_seconds=4.45e-3, length_cm=9.0)
    assert ruby.front_traversal_seconds == 9.0 / SPEED_OF_LIGHT_CM_S
    assert ruby.front_traversal_seconds == pytest.approx(3.0e-10, rel=1e-3)
    alex = MediumSpec("alexandrite", time_unit_seconds=2.5e-4, length_cm=9.0)
    assert alex.front_traversal_norm == pytest.approx(1.2e-6, rel=1e-3)


def test_model_parsing():
    assert MediumModel.parse("ruby") is MediumModel.RUBY_REDUCED
    assert MediumModel.parse("AlexandriteFull") is MediumModel.ALEXANDRITE_FULL
    assert MediumModel.ALEXANDRITE_FULL.is_full and MediumModel.ALEXANDRITE_FULL.is_alexandrite
    with pytest.raises(ValueError):
        MediumModel.parse("sapphire")


def test_grid_is_read_only(small_grid):
    assert isinstance(small_grid, SimGrid)
    with pytest.raises(ValueError):
        small_grid.tau_nodes[0] = 1.0
    assert small_grid.tau_nodes[small_grid.cutoff_index] == 6.5
