"""Experimental sequences acting on a mode's occupation distribution.

Doppler initialization, the Raman cooling cycle (lower-sideband pulse then
repump with photon recoil), greedy pulse-length optimization, heating
delays, and the field-gradient scaling of differential-mode heating.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants
from scipy.optimize import minimize_scalar

from .dynamics import DriveParams, branch_probabilities, lower_sideband_frequency
from .hilbert import OccupationDist, ground_fraction, mean_occupation, thermal_dist

# levels above this weight are kept when trimming grown distributions
_TRIM = 1e-18


def recoil_eta_squared(omega_m: float, mass: float, wavelength: float) -> float:
    """Recoil energy (hbar k)^2 / 2m in units of hbar omega_m."""
    k = 2.0 * np.pi / wavelength
    return constants.hbar * k * k / (2.0 * mass * omega_m)


def doppler_init(mode, gamma: float, nbar: float | None = None) -> OccupationDist:
    """Thermal state at the Doppler limit nbar = gamma / (2 omega_m), unless overridden."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if nbar is None:
        nbar = gamma / (2.0 * mode.omega)
    return thermal_dist(max(nbar, 0.0))


@dataclass(frozen=True)
class CoolingCycleConfig:
    target_mode: str
    drive: DriveParams
    pulses: int = 5
    pulse_durations: tuple[float, ...] | str = "auto"
    repump_recoil: float = 0.0
    photons_per_ion: float = 1.0
    t_max: float | None = None

    def __post_init__(self):
        if self.pulses < 0:
            raise ValueError("pulses must be >= 0")
        if self.drive.sideband != -1:
            raise ValueError("cooling pulses drive the lower sideband")
        if self.repump_recoil < 0 or self.photons_per_ion < 0:
            raise ValueError("recoil and photon number must be non-negative")
        if self.pulse_durations != "auto":
            durs = tuple(float(t) for t in self.pulse_durations)
            if len(durs) != self.pulses or any(t <= 0 for t in durs):
                raise ValueError("need one positive duration per pulse")
            object.__setattr__(self, "pulse_durations", durs)

    @property
    def recoil_per_cycle_ion(self) -> float:
        return self.repump_recoil * self.photons_per_ion

    def default_t_max(self) -> float:
        """Twice the full-transfer time of n = 1."""
        if self.t_max is not None:
            return self.t_max
        return math.pi / lower_sideband_frequency(1, self.drive.Omega, self.drive.eta)


def _trim(p: np.ndarray) -> np.ndarray:
    last = len(p)
    while last > 1 and p[last - 1] < _TRIM:
        last -= 1
    p = p[:last]
    return p / p.sum()


def raman_cool_cycle(dist: OccupationDist, cfg: CoolingCycleConfig, t: float) -> OccupationDist:
    """One lower-sideband pulse of length t followed by a perfect repump with recoil."""
    p = dist.p
    n = np.arange(p.size)
    pa, pb, pc = branch_probabilities(n, cfg.drive, t)
    after = p * pa
    after[:-1] += (p * pb)[1:]
    after[:-2] += (p * pc)[2:]
    repumped = float(np.sum(p * (pb + 2.0 * pc)))
    eps = cfg.recoil_per_cycle_ion * repumped
    if eps > 1.0:
        raise ValueError(f"recoil transfer {eps:.3g} exceeds unity; Lamb-Dicke picture broken")
    out = np.zeros(p.size + 1)
    out[:-1] = (1.0 - eps) * after
    out[1:] += eps * after
    return OccupationDist(_trim(out))


def _nbar_after(dist, cfg, t):
    return mean_occupation(raman_cool_cycle(dist, cfg, t))


def best_pulse_duration(dist: OccupationDist, cfg: CoolingCycleConfig, t_max: float,
                        grid: int = 200) -> float:
    """Duration in (0, t_max] that minimizes nbar after one cycle: grid, then bounded refinement."""
    ts = np.linspace(t_max / grid, t_max, grid)
    vals = np.array([_nbar_after(dist, cfg, t) for t in ts])
    i = int(np.argmin(vals))
    lo = ts[max(i - 1, 0)] if i > 0 else t_max / grid / 10
    hi = ts[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda t: _nbar_after(dist, cfg, t), bounds=(lo, hi), method="bounded",
                          options={"xatol": t_max * 1e-7})
    return float(res.x) if res.fun <= vals[i] else float(ts[i])


def optimize_pulse_durations(dist: OccupationDist, cfg: CoolingCycleConfig, k: int | None = None,
                             t_max: float | None = None) -> list[float]:
    """Greedy per-pulse durations, each minimizing nbar after its own cycle."""
    k = cfg.pulses if k is None else k
    t_max = cfg.default_t_max() if t_max is None else t_max
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    durations = []
    for _ in range(k):
        t = best_pulse_duration(dist, cfg, t_max)
        durations.append(t)
        dist = raman_cool_cycle(dist, cfg, t)
    return durations


def cooling_trajectory(dist: OccupationDist, cfg: CoolingCycleConfig):
    """Run the configured cycles. Returns (final dist, per-cycle records)."""
    if cfg.pulse_durations == "auto":
        durations = optimize_pulse_durations(dist, cfg)
    else:
        durations = list(cfg.pulse_durations)
    records = [{"cycle": 0, "duration_s": 0.0, "nbar": dist.nbar,
                "ground_fraction": ground_fraction(dist)}]
    for i, t in enumerate(durations, start=1):
        dist = raman_cool_cycle(dist, cfg, t)
        records.append({"cycle": i, "duration_s": t, "nbar": dist.nbar,
                        "ground_fraction": ground_fraction(dist)})
    return dist, records


def heat(dist: OccupationDist, rate: float, dt: float) -> OccupationDist:
    """Thermal state with nbar raised by rate * dt (rate in quanta/ms, dt in ms)."""
    if rate < 0 or dt < 0:
        raise ValueError("rate and dt must be non-negative")
    return thermal_dist(mean_occupation(dist) + rate * dt)


@dataclass(frozen=True)
class HeatingModel:
    com_rate: float  # quanta/ms
    d: float  # m, characteristic trap dimension
    delta_x: float  # m, ion-ion separation
    field_rms: float | None = None  # V/m, informational

    def __post_init__(self):
        if self.com_rate < 0:
            raise ValueError("com_rate must be non-negative")
        if not (self.d >= self.delta_x > 0):
            raise ValueError("need d >= delta_x > 0")


def heating_rate_ratio(model: HeatingModel) -> float:
    """Differential-to-COM heating ratio for a field whose gradient is ~E/d."""
    return (model.delta_x / model.d) ** 2


def predicted_rate(model: HeatingModel, mode) -> float:
    if mode.geometry_class == "COM":
        return model.com_rate
    return model.com_rate * heating_rate_ratio(model)


def operations_budget(eta2: float, n2_spread: float, fidelity_floor: float = 0.5) -> int | None:
    """Sideband pi pulses possible before spectator-induced area error spoils fidelity.

    Each pulse carries fractional Rabi error n2_spread * eta2^2. In the worst
    case these errors add coherently, so after k pulses the transfer fidelity
    is cos^2(k pi eps / 2). Returns the largest k keeping it >= fidelity_floor,
    or None when there is no spectator coupling.
    """
    if eta2 < 0 or n2_spread < 0:
        raise ValueError("eta2 and n2_spread must be non-negative")
    if not 0 < fidelity_floor <= 1:
        raise ValueError("fidelity_floor must be in (0, 1]")
    eps = n2_spread * eta2 * eta2
    if eps == 0:
        return None
    limit = 2.0 * math.acos(math.sqrt(fidelity_floor)) / (math.pi * eps)
    return int(math.floor(limit + 1e-12))
