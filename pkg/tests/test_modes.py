import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import constants

from twoion.errors import RockingUnstable
from twoion.modes import (
    BeamGeometry,
    TrapFrequencies,
    build_mode_table,
    lamb_dicke_single,
    mode_lamb_dicke,
)

from conftest import BE9_MASS, TWO_PI


def normal_modes_by_hessian(trap, mass):
    """Brute-force oracle: equilibrium of two ions plus finite-difference Hessian."""
    ke2 = constants.e**2 / (4 * np.pi * constants.epsilon_0)
    w = np.array([trap.omega_x, trap.omega_y, trap.omega_z])
    sep = (2 * ke2 / (mass * trap.omega_x**2)) ** (1 / 3)  # force balance along x

    def energy(q):
        r1, r2 = q[:3], q[3:]
        harm = 0.5 * mass * np.sum(w**2 * (r1**2 + r2**2))
        return harm + ke2 / np.linalg.norm(r1 - r2)

    q0 = np.array([-sep / 2, 0, 0, sep / 2, 0, 0])
    h = sep * 1e-4
    hess = np.zeros((6, 6))
    for i in range(6):
        for j in range(6):
            qs = []
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                q = q0.copy()
                q[i] += si * h
                q[j] += sj * h
                qs.append(energy(q))
            hess[i, j] = (qs[0] - qs[1] - qs[2] + qs[3]) / (4 * h * h)
    evals, evecs = np.linalg.eigh(hess / mass)
    return np.sqrt(evals), evecs


def test_preset_table_frequencies(preset_table):
    got = {m.mode_id: round(m.freq_hz / 1e6, 1) for m in preset_table}
    assert got["xCOM"] == 8.6
    assert got["xSTR"] == 14.9
    assert got["yCOM"] == 17.6
    assert got["zCOM"] == 9.3
    assert got["xyROCK"] == 15.4
    # the published table rounds this to 3.6; sqrt(9.3^2 - 8.6^2) = 3.54 from rounded inputs
    assert got["xzROCK"] == 3.5


def test_symmetric_case(perpendicular):
    table = build_mode_table(TrapFrequencies.from_hz(1, 2, 2), perpendicular, BE9_MASS)
    assert table["xSTR"].freq_hz == pytest.approx(np.sqrt(3), rel=1e-14)
    assert table["xyROCK"].freq_hz == pytest.approx(np.sqrt(3), rel=1e-14)
    assert table["xzROCK"].freq_hz == pytest.approx(np.sqrt(3), rel=1e-14)


@pytest.mark.parametrize("hz", [(2, 1, 3), (2, 3, 1), (2, 2, 3)])
def test_rocking_unstable(hz, perpendicular):
    with pytest.raises(RockingUnstable):
        build_mode_table(TrapFrequencies.from_hz(*hz), perpendicular, BE9_MASS)


def test_trap_frequencies_positive():
    with pytest.raises(ValueError):
        TrapFrequencies(0.0, 1.0, 1.0)


def test_frequencies_match_hessian_oracle(preset_trap, preset_table):
    omegas, _ = normal_modes_by_hessian(preset_trap, BE9_MASS)
    ours = np.sort([m.omega for m in preset_table])
    assert np.allclose(np.sort(omegas), ours, rtol=1e-5)


def test_eta_rescaling_matches_eigenvectors(preset_trap, preset_table):
    # mode eta = dk . b_mode * sqrt(hbar / 2 m omega_mode), b = eigenvector component on ion 1
    beams = BeamGeometry.from_wavelength(313e-9, "counterpropagating")
    table = build_mode_table(preset_trap, beams, BE9_MASS)
    omegas, vecs = normal_modes_by_hessian(preset_trap, BE9_MASS)
    dk = beams.delta_k * np.array(beams.projection)
    for k in range(6):
        mode = min(table, key=lambda m: abs(m.omega - omegas[k]))
        x0 = np.sqrt(constants.hbar / (2 * BE9_MASS * omegas[k]))
        eta_oracle = abs(dk @ vecs[:3, k]) * x0
        assert mode.eta == pytest.approx(eta_oracle, rel=1e-4), mode.mode_id


def test_eta_nominal_value(preset_trap, perpendicular):
    eta = lamb_dicke_single(preset_trap.omega_x, BE9_MASS, perpendicular)
    assert abs(eta - 0.23) <= 0.005


def test_eta_orthogonal_beams_zero(preset_trap, perpendicular):
    assert lamb_dicke_single(preset_trap.omega_y, BE9_MASS, perpendicular, "y") == 0.0


def test_eta_scaling(preset_trap, perpendicular):
    eta = lamb_dicke_single(preset_trap.omega_x, BE9_MASS, perpendicular)
    assert lamb_dicke_single(4 * preset_trap.omega_x, BE9_MASS, perpendicular) == pytest.approx(eta / 2)
    assert lamb_dicke_single(preset_trap.omega_x, 2 * BE9_MASS, perpendicular) == pytest.approx(
        eta / np.sqrt(2))


def test_mode_lamb_dicke_values():
    assert mode_lamb_dicke(0.23, "xCOM") == pytest.approx(0.16263, abs=5e-6)
    assert mode_lamb_dicke(0.23, "xSTR") == pytest.approx(0.12358, abs=5e-6)
    assert mode_lamb_dicke(0.0, "xyROCK", 1.2) == 0.0
    with pytest.raises(ValueError):
        mode_lamb_dicke(0.1, "xyROCK")


def test_beam_geometry_magnitudes():
    k = TWO_PI / 313e-9
    perp = BeamGeometry.from_wavelength(313e-9)
    counter = BeamGeometry.from_wavelength(313e-9, "counterpropagating")
    assert perp.delta_k == pytest.approx(np.sqrt(2) * k)
    assert counter.delta_k == pytest.approx(2 * k)
    assert np.linalg.norm(counter.projection) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BeamGeometry(k, "perpendicular", (1.5, 0, 0))


def test_geometry_classes(preset_table):
    com = {m.mode_id for m in preset_table if m.geometry_class == "COM"}
    assert com == {"xCOM", "yCOM", "zCOM"}


freq = st.floats(min_value=1e5, max_value=5e7)


@given(fx=freq, ry=st.floats(1.01, 5), rz=st.floats(1.01, 5), eta=st.floats(1e-3, 1))
def test_table_invariants(fx, ry, rz, eta):
    beams = BeamGeometry.from_wavelength(313e-9, "counterpropagating")
    trap = TrapFrequencies.from_hz(fx, fx * ry, fx * rz)
    t = build_mode_table(trap, beams, BE9_MASS)
    assert t["xSTR"].omega / t["xCOM"].omega == pytest.approx(np.sqrt(3), rel=1e-15)
    assert t["xyROCK"].omega ** 2 + trap.omega_x**2 == pytest.approx(trap.omega_y**2, rel=1e-12)
    assert t["xzROCK"].omega ** 2 + trap.omega_x**2 == pytest.approx(trap.omega_z**2, rel=1e-12)
    ratio = mode_lamb_dicke(eta, "xCOM") / mode_lamb_dicke(eta, "xSTR")
    assert ratio == pytest.approx(3**0.25, rel=1e-14)
