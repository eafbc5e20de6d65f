import numpy as np
import pytest

from twoion.modes import AMU, BE9_MASS_U, BeamGeometry, TrapFrequencies, build_mode_table

TWO_PI = 2 * np.pi
RABI_OMEGA = TWO_PI * 250e3
BE9_MASS = BE9_MASS_U * AMU

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def preset_trap():
    return TrapFrequencies.from_hz(8.6e6, 17.6e6, 9.3e6)


@pytest.fixture(scope="session")
def perpendicular():
    return BeamGeometry.from_wavelength(313e-9)


@pytest.fixture(scope="session")
def preset_table(preset_trap, perpendicular):
    return build_mode_table(preset_trap, perpendicular, BE9_MASS)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {name}: {detail}")
