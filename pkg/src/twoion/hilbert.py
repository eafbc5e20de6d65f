"""Joint spin-motion states for two ions and one motional mode, and
classical occupation distributions over Fock levels.

Spin pairs are ordered (dd, du, ud, uu), first letter ion 1. A state's
amplitudes live in a (4, N + 1) complex array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPIN_PAIRS = ("dd", "du", "ud", "uu")
SPIN_INDEX = {name: i for i, name in enumerate(SPIN_PAIRS)}

DEFAULT_TAIL_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OccupationDist:
    """Probabilities p_n over n = 0..N for one motional mode."""

    p: np.ndarray
    kind: str = "general"
    thermal_nbar: float | None = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p must be a non-empty 1-D sequence")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "p", _frozen(p))

    @property
    def truncation(self) -> int:
        return self.p.size - 1

    @property
    def nbar(self) -> float:
        return mean_occupation(self)

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "nbar": self.nbar, "kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "OccupationDist":
        p = np.asarray(d["p"], dtype=float)
        return cls(p / p.sum(), kind=d.get("kind", "general"))

    @classmethod
    def from_weights(cls, weights) -> "OccupationDist":
        """Normalize arbitrary non-negative weights into a general distribution."""
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())


def thermal_dist(nbar: float, tail_tol: float = DEFAULT_TAIL_TOL) -> OccupationDist:
    """Bose-Einstein occupations, truncated at the smallest N whose tail is below ``tail_tol``."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0:
        return OccupationDist(np.array([1.0]), kind="thermal", thermal_nbar=0.0)
    ratio = nbar / (1.0 + nbar)
    # tail beyond N is ratio**(N + 1)
    n_max = max(int(np.ceil(np.log(tail_tol) / np.log(ratio))) - 1, 0)
    while ratio ** (n_max + 1) >= tail_tol:
        n_max += 1
    n = np.arange(n_max + 1)
    p = ratio**n / (1.0 + nbar)
    return OccupationDist(p / p.sum(), kind="thermal", thermal_nbar=float(nbar))


def fock_dist(n: int) -> OccupationDist:
    p = np.zeros(n + 1)
    p[n] = 1.0
    return OccupationDist(p)


def ground_fraction(dist: OccupationDist) -> float:
    return float(dist.p[0])


def mean_occupation(dist: OccupationDist) -> float:
    return float(np.dot(np.arange(dist.p.size), dist.p))


@dataclass(frozen=True, eq=False)
class SpinMotionState:
    amplitudes: np.ndarray  # shape (4, N + 1)

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 2 or a.shape[0] != 4 or a.shape[1] < 2:
            raise ValueError(f"amplitudes must have shape (4, N + 1) with N >= 1, got {a.shape}")
        object.__setattr__(self, "amplitudes", _frozen(a))

    @property
    def truncation(self) -> int:
        return self.amplitudes.shape[1] - 1

    @property
    def vector(self) -> np.ndarray:
        """Flat amplitudes, index = spin * (N + 1) + n."""
        return self.amplitudes.reshape(-1)

    @classmethod
    def from_vector(cls, vec: np.ndarray, truncation: int) -> "SpinMotionState":
        return cls(np.asarray(vec).reshape(4, truncation + 1))

    def amplitude(self, spin_pair: str, n: int) -> complex:
        if n < 0 or n > self.truncation:
            return 0j
        return complex(self.amplitudes[SPIN_INDEX[spin_pair], n])

    def padded(self, truncation: int) -> "SpinMotionState":
        """Same state embedded in a larger Fock basis."""
        if truncation < self.truncation:
            raise ValueError("cannot shrink a state with padded()")
        a = np.zeros((4, truncation + 1), dtype=complex)
        a[:, : self.truncation + 1] = self.amplitudes
        return SpinMotionState(a)

    def motional_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)

    def to_dict(self) -> dict:
        return {
            "truncation": self.truncation,
            "amplitudes_re": self.amplitudes.real.tolist(),
            "amplitudes_im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpinMotionState":
        a = np.asarray(d["amplitudes_re"], dtype=float) + 1j * np.asarray(d["amplitudes_im"], dtype=float)
        state = cls(a)
        if state.truncation != d["truncation"]:
            raise ValueError("truncation does not match amplitude shape")
        return state


def product_state(spin_pair: str, motion, truncation: int | None = None) -> SpinMotionState:
    """|spin_pair> (x) motion, where motion is a Fock number or an OccupationDist.

    A distribution becomes the pure superposition sum_n sqrt(p_n)|n>.
    """
    if isinstance(motion, OccupationDist):
        motional = np.sqrt(motion.p)
    else:
        n = int(motion)
        if n < 0:
            raise ValueError("Fock number must be non-negative")
        motional = np.zeros(n + 1)
        motional[n] = 1.0
    n_top = max(motional.size - 1, 1)
    if truncation is None:
        truncation = n_top
    if truncation < motional.size - 1:
        raise ValueError("truncation smaller than the motional support")
    a = np.zeros((4, max(truncation, 1) + 1), dtype=complex)
    a[SPIN_INDEX[spin_pair], : motional.size] = motional
    return SpinMotionState(a)


def norm(state: SpinMotionState) -> float:
    return float(np.sqrt(np.sum(np.abs(state.amplitudes) ** 2)))


def populations_by_spin(state: SpinMotionState) -> np.ndarray:
    """Probabilities of (dd, du, ud, uu), summed over motion."""
    return np.sum(np.abs(state.amplitudes) ** 2, axis=1)


def overlap(bra: SpinMotionState, ket: SpinMotionState) -> complex:
    if bra.amplitudes.shape != ket.amplitudes.shape:
        raise ValueError(
            f"dimension mismatch: {bra.amplitudes.shape} vs {ket.amplitudes.shape}"
        )
    return complex(np.vdot(bra.vector, ket.vector))
