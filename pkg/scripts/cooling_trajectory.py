"""Greedy Raman cooling of the x modes from the Doppler limit.

Prints nbar and ground-state fraction after each pulse, for the nominal
recoil and for recoil switched off.
"""
from twoion.config import PRESETS
from twoion.dynamics import DriveParams
from twoion.modes import AMU, TWO_PI
from twoion.protocols import CoolingCycleConfig, cooling_trajectory, doppler_init, recoil_eta_squared

physics = PRESETS["nist-two-ion-1998"]
table = physics.mode_table()
Omega = TWO_PI * physics.rabi_hz

for mode_id in ("xCOM", "xSTR"):
    mode = table[mode_id]
    recoil = recoil_eta_squared(mode.omega, physics.mass_u * AMU, physics.wavelength_m)
    for eps in (recoil, 0.0):
        cfg = CoolingCycleConfig(mode_id, DriveParams.for_mode(mode, Omega, -1), pulses=8,
                                 repump_recoil=eps)
        _, records = cooling_trajectory(doppler_init(mode, TWO_PI * physics.gamma_hz), cfg)
        print(f"{mode_id} eta={mode.eta:.4f} recoil={eps:.4f}")
        for r in records:
            print(f"  {r['cycle']:2d}  t={r['duration_s'] * 1e6:5.2f} us  "
                  f"nbar={r['nbar']:.4f}  p0={r['ground_fraction']:.4f}")
