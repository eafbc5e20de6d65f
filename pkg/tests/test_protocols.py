import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twoion.dynamics import DriveParams, lower_sideband_frequency
from twoion.hilbert import fock_dist, ground_fraction, mean_occupation, thermal_dist
from twoion.modes import Mode
from twoion.protocols import (
    CoolingCycleConfig,
    HeatingModel,
    cooling_trajectory,
    doppler_init,
    heat,
    heating_rate_ratio,
    operations_budget,
    optimize_pulse_durations,
    predicted_rate,
    raman_cool_cycle,
    recoil_eta_squared,
)

from conftest import BE9_MASS, RABI_OMEGA, TWO_PI

GAMMA = TWO_PI * 19.4e6
X_COM = Mode("xCOM", TWO_PI * 8.6e6, 0.163, "COM")
X_STR = Mode("xSTR", TWO_PI * 14.9e6, 0.124, "differential")
DRIVE = DriveParams(RABI_OMEGA, 0.163, -1)


def cfg(pulses=5, recoil=0.0, **kw):
    return CoolingCycleConfig("xCOM", DRIVE, pulses, repump_recoil=recoil, **kw)


def test_doppler_values():
    assert doppler_init(X_COM, GAMMA).nbar == pytest.approx(19.4 / 17.2, rel=1e-6)
    assert doppler_init(X_STR, GAMMA).nbar == pytest.approx(0.651, abs=5e-4)
    fast = Mode("xCOM", 1e15, 0.1, "COM")
    assert doppler_init(fast, GAMMA).nbar < 1e-7


def test_recoil_value():
    # (hbar k)^2 / 2m = h * 226 kHz for 9Be+ at 313 nm
    eps = recoil_eta_squared(X_COM.omega, BE9_MASS, 313e-9)
    assert eps == pytest.approx(0.226 / 8.6, rel=5e-3)


def test_ground_state_is_fixed_point():
    out = raman_cool_cycle(thermal_dist(0.0), cfg(recoil=0.03), 4e-6)
    assert mean_occupation(out) == 0.0


def test_full_transfer_pure_n1():
    t = (math.pi / 2) / lower_sideband_frequency(1, RABI_OMEGA, 0.163)
    out = raman_cool_cycle(fock_dist(1), cfg(), t)
    assert ground_fraction(out) == pytest.approx(1.0, abs=1e-14)


def test_recoil_moves_population_up():
    t = (math.pi / 2) / lower_sideband_frequency(1, RABI_OMEGA, 0.163)
    out = raman_cool_cycle(fock_dist(1), cfg(recoil=0.05), t)
    assert ground_fraction(out) == pytest.approx(0.95)
    assert out.p[1] == pytest.approx(0.05)


def test_config_validation():
    with pytest.raises(ValueError):
        CoolingCycleConfig("xCOM", DRIVE.with_(sideband=1))
    with pytest.raises(ValueError):
        cfg(pulses=2, pulse_durations=(1e-6,))
    with pytest.raises(ValueError):
        cfg(pulses=-1)


def test_optimize_pure_n1():
    (t,) = optimize_pulse_durations(fock_dist(1), cfg(pulses=1))
    G = lower_sideband_frequency(1, RABI_OMEGA, 0.163)
    assert G * t == pytest.approx(math.pi / 2, rel=1e-4)


def test_optimize_zero_pulses():
    d = thermal_dist(1.1)
    assert optimize_pulse_durations(d, cfg(pulses=0)) == []
    final, records = cooling_trajectory(d, cfg(pulses=0))
    assert len(records) == 1 and final is d


def test_optimize_nominal_durations():
    durations = optimize_pulse_durations(thermal_dist(1.1), cfg())
    assert len(durations) == 5
    assert all(2.5e-6 <= t <= 10e-6 for t in durations)


def test_cooling_monotone_and_bounded():
    eps = recoil_eta_squared(X_COM.omega, BE9_MASS, 313e-9)
    final, records = cooling_trajectory(doppler_init(X_COM, GAMMA), cfg(recoil=eps))
    nbars = [r["nbar"] for r in records]
    assert all(b < a for a, b in zip(nbars, nbars[1:]))
    assert final.nbar <= 0.15


def test_fixed_durations_used():
    ts = (4e-6, 4.5e-6)
    _, records = cooling_trajectory(thermal_dist(1.0), cfg(pulses=2, pulse_durations=ts))
    assert [r["duration_s"] for r in records[1:]] == list(ts)


@settings(max_examples=25, deadline=None)
@given(nbar=st.floats(0.0, 3.0), t=st.floats(1e-8, 2e-5), recoil=st.floats(0, 0.05))
def test_cycle_preserves_probability(nbar, t, recoil):
    out = raman_cool_cycle(thermal_dist(nbar), cfg(recoil=recoil), t)
    assert out.p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(out.p >= 0)


def test_heat():
    assert heat(thermal_dist(0.11), 19.0, 0.05).nbar == pytest.approx(1.06, abs=1e-6)
    assert heat(thermal_dist(0.3), 0.0, 5.0).nbar == pytest.approx(0.3, abs=1e-6)
    assert heat(thermal_dist(0.01), 0.18, 1.0).nbar < 0.19
    with pytest.raises(ValueError):
        heat(thermal_dist(0.1), -1.0, 1.0)


def test_heating_ratio():
    assert heating_rate_ratio(HeatingModel(19.0, 200e-6, 2e-6)) == pytest.approx(1e-4)
    assert heating_rate_ratio(HeatingModel(19.0, 2e-6, 2e-6)) == 1.0
    assert heating_rate_ratio(HeatingModel(19.0, 200e-6, 1e-6)) == pytest.approx(0.25e-4)
    with pytest.raises(ValueError):
        HeatingModel(19.0, 1e-6, 2e-6)


def test_predicted_rate():
    model = HeatingModel(19.0, 200e-6, 2e-6)
    assert predicted_rate(model, X_COM) == 19.0
    assert predicted_rate(model, X_STR) == pytest.approx(19e-4)


def test_operations_budget():
    assert operations_budget(0.0, 1.0) is None
    assert 3 <= operations_budget(0.163, 1.0, 0.5) <= 30
    assert operations_budget(0.163, 1.0, 1.0) in (0, 1)
    assert operations_budget(0.163, 2.0) < operations_budget(0.163, 1.0)
    with pytest.raises(ValueError):
        operations_budget(0.1, 1.0, 0.0)
