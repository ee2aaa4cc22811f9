import numpy as np
import pytest
from hypothesis import settings

from pulsefront import MediumModel, MediumSpec, PulseSpec, build_tau_grid

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

RUBY_A0 = 1.17
LENGTH = 9.0


@pytest.fixture
def ruby():
    return MediumSpec(MediumModel.RUBY_REDUCED, alpha0=RUBY_A0, time_unit_seconds=4.45e-3,
                      length_cm=LENGTH)


@pytest.fixture
def alex():
    return MediumSpec(MediumModel.ALEXANDRITE_REDUCED, alpha0=RUBY_A0, alpha0_tilde=4 * RUBY_A0,
                      time_unit_seconds=2.5e-4, length_cm=LENGTH)


@pytest.fixture
def table1_pulse():
    return PulseSpec(1.0, 4.494, 5.750170439436484, 6.5)


@pytest.fixture
def small_grid(table1_pulse):
    """Cheap grid for tests that only need the structure, not accuracy."""
    return build_tau_grid(table1_pulse, 1e-2, 1e-8, 1e-6, 8.0, length_cm=LENGTH, nz=90)


def uniform_grid(n=101, end=1.0, cutoff=None, length_cm=LENGTH, nz=10):
    from pulsefront import SimGrid

    tau = np.linspace(0.0, end, n)
    cutoff = tau[n // 2] if cutoff is None else cutoff
    return SimGrid(tau_nodes=tau, coarse_dtau=end / (n - 1), fine_dtau=end / (n - 1),
                   refine_window=0.0, cutoff_tau=float(cutoff), dz=length_cm / nz, nz=nz)


ACCEPTANCE_LINES: list[str] = []


def record(number: int, passed: bool, detail: str) -> bool:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
