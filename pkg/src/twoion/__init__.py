"""Two trapped ions: normal modes, sideband dynamics, Raman cooling and sideband thermometry."""
from .dynamics import DriveParams
from .hilbert import OccupationDist, SpinMotionState, thermal_dist
from .modes import BeamGeometry, ModeTable, TrapFrequencies, build_mode_table

__all__ = [
    "BeamGeometry",
    "DriveParams",
    "ModeTable",
    "OccupationDist",
    "SpinMotionState",
    "TrapFrequencies",
    "build_mode_table",
    "thermal_dist",
]
