"""Normal modes of a two-ion crystal and their Lamb-Dicke parameters.

Frequencies are angular (rad/s) throughout this module. Use the ``*_hz``
helpers at the edges where values come from, or go to, humans.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import RockingUnstable

TWO_PI = 2.0 * np.pi
AMU = constants.atomic_mass
HBAR = constants.hbar

BE9_MASS_U = 9.012
BE9_WAVELENGTH = 313e-9

MODE_IDS = ("xCOM", "xSTR", "yCOM", "zCOM", "xyROCK", "xzROCK")
COM_MODES = frozenset({"xCOM", "yCOM", "zCOM"})

# axis whose component of delta-k couples to each mode
MODE_AXIS = {
    "xCOM": "x",
    "xSTR": "x",
    "yCOM": "y",
    "zCOM": "z",
    "xyROCK": "y",
    "xzROCK": "z",
}
_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}

# direction of beam R2; counterpropagating beams put delta-k along it
R2_DIRECTION = (-1.0 / np.sqrt(2.0), -0.5, 0.5)


@dataclass(frozen=True)
class TrapFrequencies:
    """Single-ion pseudopotential frequencies along the principal axes (rad/s)."""

    omega_x: float
    omega_y: float
    omega_z: float

    def __post_init__(self):
        for name in ("omega_x", "omega_y", "omega_z"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_hz(cls, fx: float, fy: float, fz: float) -> "TrapFrequencies":
        return cls(TWO_PI * fx, TWO_PI * fy, TWO_PI * fz)

    def axis(self, name: str) -> float:
        return {"x": self.omega_x, "y": self.omega_y, "z": self.omega_z}[name]


@dataclass(frozen=True)
class BeamGeometry:
    """Raman beam wavevector difference.

    ``projection`` holds the components of the unit vector along delta-k on
    the trap axes; the magnitude is sqrt(2)*k for perpendicular beams and
    2*k for counterpropagating ones.
    """

    wavevector_magnitude: float
    geometry: str = "perpendicular"
    projection: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.geometry not in ("perpendicular", "counterpropagating"):
            raise ValueError(f"unknown beam geometry {self.geometry!r}")
        if self.wavevector_magnitude < 0:
            raise ValueError("wavevector magnitude must be non-negative")
        if len(self.projection) != 3:
            raise ValueError("projection needs three components")
        if any(abs(p) > 1.0 for p in self.projection):
            raise ValueError("projection components must lie in [-1, 1]")

    @classmethod
    def from_wavelength(cls, wavelength: float, geometry: str = "perpendicular",
                        projection=None) -> "BeamGeometry":
        if projection is None:
            projection = (1.0, 0.0, 0.0) if geometry == "perpendicular" else R2_DIRECTION
        return cls(TWO_PI / wavelength, geometry, tuple(float(p) for p in projection))

    @property
    def delta_k(self) -> float:
        factor = np.sqrt(2.0) if self.geometry == "perpendicular" else 2.0
        return factor * self.wavevector_magnitude

    def along(self, axis: str) -> float:
        """|delta-k . axis| in rad/m."""
        return abs(self.delta_k * self.projection[_AXIS_INDEX[axis]])


@dataclass(frozen=True)
class Mode:
    mode_id: str
    omega: float
    eta: float
    geometry_class: str  # "COM" or "differential"

    @property
    def freq_hz(self) -> float:
        return self.omega / TWO_PI

    @property
    def sign(self) -> int:
        """Relative participation of the two ions: +1 in phase, -1 out of phase."""
        return 1 if self.geometry_class == "COM" else -1


@dataclass(frozen=True)
class ModeTable:
    modes: tuple[Mode, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {m.mode_id: m for m in self.modes})

    def __getitem__(self, mode_id: str) -> Mode:
        try:
            return self._index[mode_id]
        except KeyError:
            raise KeyError(f"unknown mode {mode_id!r}; expected one of {MODE_IDS}") from None

    def __iter__(self):
        return iter(self.modes)

    def __len__(self):
        return len(self.modes)

    def __contains__(self, mode_id):
        return mode_id in self._index

    def to_records(self) -> list[dict]:
        return [
            {
                "mode_id": m.mode_id,
                "freq_hz": m.freq_hz,
                "eta": m.eta,
                "geometry_class": m.geometry_class,
            }
            for m in self.modes
        ]


def lamb_dicke_single(omega_m: float, mass: float, beams: BeamGeometry, axis: str = "x") -> float:
    """Single-ion Lamb-Dicke parameter x0 |dk . axis| with x0 = sqrt(hbar / 2 m omega)."""
    if not omega_m > 0:
        raise ValueError("omega_m must be positive")
    if not mass > 0:
        raise ValueError("mass must be positive")
    x0 = np.sqrt(HBAR / (2.0 * mass * omega_m))
    return float(x0 * beams.along(axis))


def mode_lamb_dicke(eta_single: float, mode_id: str, freq_ratio: float | None = None) -> float:
    """Rescale a single-ion Lamb-Dicke parameter to a two-ion mode.

    Each ion carries half the mode's kinetic energy, and the wavepacket
    shrinks with the mode frequency, giving eta_single / sqrt(2 * ratio)
    where ratio = omega_mode / omega_axis. COM modes have ratio 1 and the
    axial stretch sqrt(3). Rocking modes need ``freq_ratio`` explicitly.
    """
    if eta_single < 0:
        raise ValueError("eta_single must be non-negative")
    if mode_id not in MODE_AXIS:
        raise KeyError(f"unknown mode {mode_id!r}")
    if freq_ratio is None:
        if mode_id in COM_MODES:
            freq_ratio = 1.0
        elif mode_id == "xSTR":
            freq_ratio = np.sqrt(3.0)
        else:
            raise ValueError(f"{mode_id} needs freq_ratio = omega_mode / omega_axis")
    return float(eta_single / np.sqrt(2.0 * freq_ratio))


def build_mode_table(trap: TrapFrequencies, beams: BeamGeometry, mass: float) -> ModeTable:
    wx, wy, wz = trap.omega_x, trap.omega_y, trap.omega_z
    if wy <= wx or wz <= wx:
        raise RockingUnstable(
            f"rocking modes need omega_y, omega_z > omega_x; got "
            f"({wx / TWO_PI:.6g}, {wy / TWO_PI:.6g}, {wz / TWO_PI:.6g}) Hz"
        )
    omegas = {
        "xCOM": wx,
        "xSTR": np.sqrt(3.0) * wx,
        "yCOM": wy,
        "zCOM": wz,
        "xyROCK": np.sqrt(wy**2 - wx**2),
        "xzROCK": np.sqrt(wz**2 - wx**2),
    }
    modes = []
    for mode_id in MODE_IDS:
        axis = MODE_AXIS[mode_id]
        w_axis = trap.axis(axis)
        eta1 = lamb_dicke_single(w_axis, mass, beams, axis)
        eta = mode_lamb_dicke(eta1, mode_id, omegas[mode_id] / w_axis)
        cls = "COM" if mode_id in COM_MODES else "differential"
        modes.append(Mode(mode_id, float(omegas[mode_id]), eta, cls))
    return ModeTable(tuple(modes))
