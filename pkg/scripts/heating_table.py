"""Heating-rate round trips through simulated sideband thermometry.

For the x COM rate (19 quanta/ms) and the stretch-mode bound (0.18/ms),
simulate delay scans and print the recovered slopes, plus the rate the
field-gradient scaling predicts for the stretch mode.
"""
from twoion.config import PRESETS
from twoion.hilbert import thermal_dist
from twoion.modes import TWO_PI
from twoion.protocols import HeatingModel, predicted_rate
from twoion.spectroscopy import ProbeConfig, fitted_rate, heating_scan

physics = PRESETS["nist-two-ion-1998"]
table = physics.mode_table()
probe = ProbeConfig(TWO_PI * physics.rabi_hz)

cases = [
    ("xCOM", 0.11, (0.0, 0.01, 0.02, 0.03), 19.0),
    ("xSTR", 0.01, (0.0, 0.25, 0.5, 0.75, 1.0), 0.18),
]
for mode_id, n0, delays, rate in cases:
    points = heating_scan(table[mode_id], thermal_dist(n0), delays, rate, probe)
    print(f"{mode_id}: injected {rate:g}/ms  recovered {fitted_rate(points):.4g}/ms")
    for d, n in points:
        print(f"    {d * 1e3:7.1f} us  nbar {n:.4f}")

model = HeatingModel(com_rate=19.0, d=200e-6, delta_x=2e-6)
print(f"predicted xSTR rate from gradient scaling: {predicted_rate(model, table['xSTR']):.2e}/ms")
