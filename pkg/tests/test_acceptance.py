"""End-to-end acceptance criteria, one test each, at the stated tolerances.

Every test records a one-line verdict that the terminal summary prints.
"""
import hashlib
import json
import math
import time

import numpy as np
import pytest

from twoion.cli import main
from twoion.dynamics import DriveParams, evolve_closed_form, evolve_fock_numeric, \
    lower_sideband_frequency
from twoion.hilbert import ground_fraction, norm, thermal_dist
from twoion.modes import ModeTable, lamb_dicke_single
from twoion.protocols import (
    CoolingCycleConfig,
    HeatingModel,
    cooling_trajectory,
    doppler_init,
    heating_rate_ratio,
    operations_budget,
    predicted_rate,
    recoil_eta_squared,
)
from twoion.spectroscopy import (
    Noise,
    ProbeConfig,
    ScanConfig,
    default_probe_time,
    fitted_rate,
    heating_scan,
    measure_nbar,
    nbar_from_windows,
    optimal_probe_time,
    renoise,
    scan,
    sideband_windows,
)

from conftest import ACCEPTANCE_RESULTS, BE9_MASS, RABI_OMEGA, TWO_PI

GAMMA = TWO_PI * 19.4e6


def record(number, name, passed, detail):
    ACCEPTANCE_RESULTS.append((number, name, bool(passed), detail))
    assert passed, detail


def test_01_mode_table(preset_table):
    reference = {"xSTR": 14.9, "xyROCK": 15.4, "xzROCK": 3.6}
    errs = {k: abs(preset_table[k].freq_hz / 1e6 - v) for k, v in reference.items()}
    detail = ", ".join(f"{k} {preset_table[k].freq_hz / 1e6:.4f} (|err| {e:.3f})"
                       for k, e in errs.items())
    record(1, "mode table within 0.05 MHz", all(e <= 0.05 for e in errs.values()), detail)


def test_02_lamb_dicke(preset_trap, perpendicular):
    eta = lamb_dicke_single(preset_trap.omega_x, BE9_MASS, perpendicular)
    record(2, "eta_x = 0.23 +- 0.005", abs(eta - 0.23) <= 0.005, f"eta_x = {eta:.5f}")


def test_03_closed_form_vs_numeric():
    rng = np.random.default_rng(2024)
    worst_amp = worst_norm = 0.0
    start = time.perf_counter()
    for n in range(1, 16):
        for sign in (1, -1):
            G = lower_sideband_frequency(n, RABI_OMEGA, 0.163)
            for t in np.linspace(0, 2 * math.pi / G, 50):
                theta, phi = rng.uniform(0, 2 * np.pi, 2)
                drive = DriveParams(RABI_OMEGA, 0.163, -1, 0.0, theta, phi, sign)
                num = evolve_fock_numeric(n, drive, t)
                cf = evolve_closed_form(n, drive, t, truncation=num.truncation)
                worst_amp = max(worst_amp, float(np.max(np.abs(num.amplitudes - cf.amplitudes))))
                worst_norm = max(worst_norm, abs(norm(num) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst_amp < 1e-8 and worst_norm < 1e-10 and elapsed < 30
    record(3, "closed form vs numeric", ok,
           f"max |amp diff| {worst_amp:.2e}, max norm drift {worst_norm:.2e}, {elapsed:.1f} s")


def test_04_ground_fractions():
    p011 = ground_fraction(thermal_dist(0.11))
    p001 = ground_fraction(thermal_dist(0.01))
    ok = abs(p011 - 0.9009) <= 1e-4 and abs(p001 - 0.9901) <= 1e-4
    record(4, "ground fractions", ok, f"p0(0.11) = {p011:.5f}, p0(0.01) = {p001:.5f}")


def _cool(mode, pulses):
    recoil = recoil_eta_squared(mode.omega, BE9_MASS, 313e-9)
    drive = DriveParams(RABI_OMEGA, mode.eta, -1, mode_sign=mode.sign)
    cfg = CoolingCycleConfig(mode.mode_id, drive, pulses, repump_recoil=recoil)
    return cooling_trajectory(doppler_init(mode, GAMMA), cfg)


def test_05_cooling(preset_table):
    mode = preset_table["xCOM"]
    start = time.perf_counter()
    final, records = _cool(mode.__class__(mode.mode_id, mode.omega, 0.163, mode.geometry_class), 5)
    elapsed = time.perf_counter() - start
    durations = [r["duration_s"] for r in records[1:]]
    ok = (final.nbar <= 0.15 and all(2.5e-6 <= t <= 10e-6 for t in durations)
          and elapsed < 5 and len(durations) == 5)
    record(5, "five-pulse cooling", ok,
           f"nbar {records[0]['nbar']:.3f} -> {final.nbar:.4f}, durations "
           + "/".join(f"{t * 1e6:.2f}" for t in durations) + f" us, {elapsed:.2f} s")


def test_06_ground_state_signature(preset_table):
    modes = ModeTable((preset_table["xCOM"], preset_table["xSTR"]))
    dists = {m.mode_id: _cool(m, 20)[0] for m in modes}
    times = {"carrier": math.pi / (2 * RABI_OMEGA)}
    for m in modes:
        t_max = 3 * math.pi / (math.sqrt(6) * RABI_OMEGA * m.eta)
        for sb, tag in ((-1, "-"), (1, "+")):
            drive = DriveParams.for_mode(m, RABI_OMEGA, sb)
            times[m.mode_id + tag] = optimal_probe_time(dists[m.mode_id], drive, t_max)
    cfg = ScanConfig(TWO_PI * -20e6, TWO_PI * 19.9e6, TWO_PI * 100e3, times, RABI_OMEGA,
                     modes, dists)
    start = time.perf_counter()
    spec = scan(cfg)
    elapsed = time.perf_counter() - start
    ratios = {}
    for m in modes:
        depth = {}
        for sign in (-1, 1):
            near = np.abs(spec.delta - sign * m.omega) < TWO_PI * 0.5e6
            depth[sign] = 2.0 - float(np.min(spec.signal[near]))
        ratios[m.mode_id] = depth[-1] / depth[1]
    nbars = {k: d.nbar for k, d in dists.items()}
    ok = (all(v < 0.01 for v in nbars.values()) and all(r < 1e-3 for r in ratios.values())
          and spec.delta.size == 400 and elapsed < 60)
    record(6, "vanishing lower sidebands", ok,
           ", ".join(f"{k}: nbar {nbars[k]:.2e} lower/upper {ratios[k]:.2e}" for k in ratios)
           + f", {spec.delta.size}-point scan {elapsed:.1f} s")


def test_07_thermometry(preset_table):
    mode = preset_table["xCOM"]
    start = time.perf_counter()
    quiet = ProbeConfig(RABI_OMEGA)
    noiseless = {}
    for nbar in (0.01, 0.11, 0.5, 2.0):
        dist = thermal_dist(nbar)
        t_pr = default_probe_time(mode, dist, RABI_OMEGA)
        noiseless[nbar] = measure_nbar(mode, dist, quiet, t_pr)
    ok_quiet = all(abs(v - k) <= max(0.01, 0.05 * k) for k, v in noiseless.items())

    noisy = ProbeConfig(RABI_OMEGA, noise=Noise("counting", photons_per_ion=10))
    dist = thermal_dist(0.11)
    t_pr = default_probe_time(mode, dist, RABI_OMEGA)
    pair = sideband_windows(mode, dist, quiet, t_pr)
    estimates = [nbar_from_windows(mode, *renoise(pair, noisy, seed), noisy, t_pr)
                 for seed in range(50)]
    median = float(np.median(estimates))
    elapsed = time.perf_counter() - start
    ok = ok_quiet and abs(median - 0.11) <= 0.05 and elapsed < 300
    record(7, "thermometry round trip", ok,
           ", ".join(f"{k:g}->{v:.4f}" for k, v in noiseless.items())
           + f"; noisy median {median:.4f} (50 seeds), {elapsed:.0f} s")


def test_08_heating_round_trip(preset_table):
    start = time.perf_counter()
    com = preset_table["xCOM"]
    probe = ProbeConfig(RABI_OMEGA)
    pts = heating_scan(com, thermal_dist(0.11), (0.0, 0.01, 0.02, 0.03), 19.0, probe)
    fast = fitted_rate(pts)
    stretch = preset_table["xSTR"]
    pts = heating_scan(stretch, thermal_dist(0.01), (0.0, 0.5, 1.0), 0.18, probe)
    slow = fitted_rate(pts)
    elapsed = time.perf_counter() - start
    ok = abs(fast / 19.0 - 1) <= 0.05 and abs(slow - 0.18) <= 0.05 and elapsed < 120
    record(8, "heating-rate round trip", ok,
           f"19/ms -> {fast:.3f}/ms, 0.18/ms -> {slow:.4f}/ms, {elapsed:.0f} s")


def test_09_scaling(preset_table):
    model = HeatingModel(19.0, 200e-6, 2e-6)
    ratio = heating_rate_ratio(model)
    stretch = predicted_rate(model, preset_table["xSTR"])
    ok = abs(ratio - 1e-4) <= 1e-12 and stretch < 0.18
    record(9, "heating scaling", ok, f"ratio {ratio:.3e}, predicted stretch {stretch:.2e}/ms")


def test_10_operations_budget():
    k = operations_budget(0.163, 1.0)
    record(10, "operations budget", k is not None and 3 <= k <= 30, f"k = {k}")


def _digest(path):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(path.iterdir()) if p.is_file()}


def test_11_cli_determinism(tmp_path):
    cfg = {"preset": "nist-two-ion-1998", "seed": 11,
           "noise": {"kind": "counting", "photons_per_ion": 10},
           "spectrum": {"step_hz": 100e3},
           "heat_scan": {"step_hz": 5e3}}
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    mismatched, files = [], 0
    for sub in ("modes", "spectrum", "fit", "cool", "heat-scan", "budget"):
        digests = []
        for _ in range(2):
            assert main([sub, "--config", str(cfg_path), "--out", str(out)]) == 0, sub
            digests.append(_digest(out))
        if digests[0] != digests[1]:
            mismatched.append(sub)
        files = len(digests[1])
    record(11, "CLI determinism", not mismatched,
           f"all 6 subcommands, {files} files hash-identical across reruns" if not mismatched
           else f"differ: {mismatched}")
