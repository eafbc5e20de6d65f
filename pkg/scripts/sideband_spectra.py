"""Synthesize x-axis sideband spectra before and after Raman cooling.

Writes two CSV files (Doppler-cooled and sideband-cooled) and prints the
lower/upper depth ratio of each x mode. Usage:

    python3 scripts/sideband_spectra.py [out_dir]
"""
import math
import sys
from pathlib import Path

import numpy as np

from twoion.config import PRESETS
from twoion.dynamics import DriveParams
from twoion.modes import AMU, TWO_PI, ModeTable
from twoion.protocols import CoolingCycleConfig, cooling_trajectory, doppler_init, recoil_eta_squared
from twoion.spectroscopy import ScanConfig, optimal_probe_time, scan

physics = PRESETS["nist-two-ion-1998"]
table = physics.mode_table()
x_modes = ModeTable((table["xCOM"], table["xSTR"]))
Omega = TWO_PI * physics.rabi_hz
gamma = TWO_PI * physics.gamma_hz
mass = physics.mass_u * AMU


def cooled(mode, pulses=5):
    recoil = recoil_eta_squared(mode.omega, mass, physics.wavelength_m)
    cfg = CoolingCycleConfig(mode.mode_id, DriveParams.for_mode(mode, Omega, -1), pulses,
                             repump_recoil=recoil)
    return cooling_trajectory(doppler_init(mode, gamma), cfg)[0]


def probe_times(dists):
    times = {"carrier": math.pi / (2 * Omega)}
    for m in x_modes:
        t_max = 3 * math.pi / (math.sqrt(6) * Omega * m.eta)
        for sb, tag in ((-1, "-"), (1, "+")):
            drive = DriveParams.for_mode(m, Omega, sb)
            times[m.mode_id + tag] = optimal_probe_time(dists[m.mode_id], drive, t_max)
    return times


def run(label, dists, out):
    cfg = ScanConfig(TWO_PI * -20e6, TWO_PI * 20e6, TWO_PI * 20e3, probe_times(dists), Omega,
                     x_modes, dists)
    spec = scan(cfg)
    (out / f"spectrum_{label}.csv").write_text(spec.to_csv())
    for m in x_modes:
        depth = {}
        for s in (-1, 1):
            near = np.abs(spec.delta - s * m.omega) < TWO_PI * 0.5e6
            depth[s] = 2 - spec.signal[near].min()
        print(f"{label:>8} {m.mode_id}: nbar {dists[m.mode_id].nbar:.3f}  "
              f"lower {depth[-1]:.3f}  upper {depth[1]:.3f}  ratio {depth[-1] / depth[1]:.3f}")


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
    out.mkdir(parents=True, exist_ok=True)
    run("doppler", {m.mode_id: doppler_init(m, gamma) for m in x_modes}, out)
    run("cooled", {m.mode_id: cooled(m) for m in x_modes}, out)
