"""Carrier and sideband dynamics of two ions sharing one motional mode.

Rabi frequencies follow the convention where a resonant carrier drive
gives P(up) = sin^2(Omega t), so a single-ion pi pulse has Omega t = pi/2
and the first lower sideband couples |d, n> <-> |u, n-1> at eta sqrt(n) Omega.

In the frame rotating with the drive and within the rotating-wave
approximation the coupling is

    H = sum_j s_j g (e^{i phi_j} sigma_j^+ M + h.c.) - delta sum_j |u><u|_j

with g = eta Omega and M = a (lower), a^dag (upper), or g = Omega and
M = 1 (carrier). s_1 is the mode sign (+1 COM, -1 stretch), s_2 = +1 and
the ion phases are phi_1 = (theta + phi)/2, phi_2 = (theta - phi)/2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidSideband, NormDrift, TruncationOverflow
from .hilbert import DEFAULT_TAIL_TOL, SPIN_INDEX, SpinMotionState, norm, product_state

NORM_DRIFT_LIMIT = 1e-8
TAYLOR_ORDER = 12


@dataclass(frozen=True)
class DriveParams:
    Omega: float
    eta: float = 0.0
    sideband: int = 0
    detuning: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    mode_sign: int = 1

    def __post_init__(self):
        if self.Omega < 0:
            raise ValueError("Omega must be non-negative")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.sideband not in (-1, 0, 1):
            raise InvalidSideband(f"sideband must be -1, 0 or +1, got {self.sideband}")
        if self.mode_sign not in (-1, 1):
            raise ValueError("mode_sign must be +1 (COM) or -1 (differential)")

    @classmethod
    def from_raman(cls, g1: float, g2: float, Delta: float, **kw) -> "DriveParams":
        """Two-photon Rabi frequency Omega = g1 g2 / Delta from single-beam couplings."""
        return cls(Omega=abs(g1 * g2 / Delta), **kw)

    @classmethod
    def for_mode(cls, mode, Omega: float, sideband: int, **kw) -> "DriveParams":
        return cls(Omega=Omega, eta=mode.eta, sideband=sideband, mode_sign=mode.sign, **kw)

    def with_(self, **kw) -> "DriveParams":
        return replace(self, **kw)

    @property
    def coupling(self) -> float:
        """Per-ion coupling g in rad/s."""
        return self.Omega if self.sideband == 0 else self.eta * self.Omega

    @property
    def ion_phases(self) -> tuple[float, float]:
        return (0.5 * (self.theta + self.phi), 0.5 * (self.theta - self.phi))


def single_ion_sideband_rabi(n: int, direction: str, eta: float, Omega: float) -> float:
    if n < 0:
        raise ValueError("n must be non-negative")
    if direction == "lower":
        return eta * math.sqrt(n) * Omega
    if direction == "upper":
        return eta * math.sqrt(n + 1) * Omega
    raise ValueError(f"direction must be 'lower' or 'upper', got {direction!r}")


def spectator_corrected_rabi(n1: int, n1p: int, eta1: float, eta2: float, n2: int,
                             Omega: float) -> float:
    """First-sideband Rabi frequency on mode 1 with mode 2 in |n2>.

    Lowest-order expansion in the Lamb-Dicke parameters. The linear factor
    (1 - n2 eta2^2) goes negative for n2 eta2^2 > 1; it is not clipped.
    """
    if abs(n1 - n1p) != 1:
        raise ValueError("first sideband requires |n1 - n1p| = 1")
    if eta1 < 0 or eta2 < 0 or n2 < 0:
        raise ValueError("eta and n2 must be non-negative")
    n_big = max(n1, n1p)
    return (Omega * eta1 * math.sqrt(n_big)
            * math.exp(-(eta1**2 + eta2**2) / 2.0) * (1.0 - n2 * eta2**2))


def lower_sideband_frequency(n: int, Omega: float, eta: float) -> float:
    """G = sqrt(2(2n - 1)) Omega eta, the two-ion lower-sideband oscillation frequency."""
    if n < 1:
        return 0.0
    return math.sqrt(2.0 * (2 * n - 1)) * Omega * eta


# -- closed forms ---------------------------------------------------------

def _bell(phi: float, sign: int) -> dict:
    """Components of (|du> + sign e^{i phi}|ud>)/sqrt(2)."""
    return {"du": 1.0 / math.sqrt(2.0), "ud": sign * np.exp(1j * phi) / math.sqrt(2.0)}


def lower_sideband_amplitudes(n: int, Gt: float, mode_sign: int = 1, theta: float = 0.0,
                              phi: float = 0.0) -> tuple[complex, complex, complex]:
    """Amplitudes on |dd, n>, (|du> + s e^{i phi}|ud>)/sqrt(2) x |n-1>, and |uu, n-2>.

    Closed-form resonant evolution of |dd, n>; ``Gt`` is the phase G t.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1.0 + 0j, 0j, 0j
    r = n / (2 * n - 1)
    one_minus_cos = 1.0 - math.cos(Gt)
    a = 1.0 - r * one_minus_cos
    b = -1j * np.exp(0.5j * (theta - phi)) * math.sqrt(r) * math.sin(Gt)
    c = -mode_sign * np.exp(1j * theta) * math.sqrt(n * n - n) / (2 * n - 1) * one_minus_cos
    return complex(a), complex(b), complex(c)


def _chain(c1: float, c2: float, t: float) -> tuple[float, complex, float]:
    """Three-level chain A -c1- B -c2- C from A: returns (a, b, c)."""
    lam2 = c1 * c1 + c2 * c2
    if lam2 == 0.0:
        return 1.0, 0j, 0.0
    lam = math.sqrt(lam2)
    cos = math.cos(lam * t)
    a = (c2 * c2 + c1 * c1 * cos) / lam2
    b = -1j * c1 / lam * math.sin(lam * t)
    c = c1 * c2 * (cos - 1.0) / lam2
    return a, b, c


def resonant_amplitudes(n: int, drive: DriveParams, t: float) -> tuple[complex, complex, complex]:
    """Resonant (a, b, c) for |dd, n> on any first-order feature.

    b is the amplitude on the bright Bell state times |n + s>, c the amplitude
    on |uu, n + 2s> where s is the sideband order. The lower sideband reduces
    to :func:`lower_sideband_amplitudes`; the upper sideband is its
    reflection n -> n + 1 up the ladder.
    """
    if drive.detuning != 0.0:
        raise InvalidSideband("closed form requires zero detuning")
    g = drive.coupling
    s = drive.sideband
    sign = drive.mode_sign if s != 0 else 1
    if s == -1:
        if n == 0:
            return 1.0 + 0j, 0j, 0j
        return lower_sideband_amplitudes(n, lower_sideband_frequency(n, drive.Omega, drive.eta) * t,
                                         sign, drive.theta, drive.phi)
    if s == 1:
        c1, c2 = math.sqrt(2 * (n + 1)) * g, math.sqrt(2 * (n + 2)) * g
    else:
        c1 = c2 = math.sqrt(2.0) * g
    a, b, c = _chain(c1, c2, t)
    b = b * np.exp(0.5j * (drive.theta - drive.phi))
    c = sign * np.exp(1j * drive.theta) * c
    return complex(a), complex(b), complex(c)


def _closed_form_state(n: int, drive: DriveParams, t: float, truncation: int | None) -> SpinMotionState:
    a, b, c = resonant_amplitudes(n, drive, t)
    s = drive.sideband
    sign = drive.mode_sign if s != 0 else 1
    top = max(n + 2 * max(s, 0), 1)
    if truncation is None:
        truncation = top
    if truncation < top:
        raise ValueError(f"truncation {truncation} cannot hold levels up to {top}")
    amps = np.zeros((4, truncation + 1), dtype=complex)
    amps[SPIN_INDEX["dd"], n] = a
    if n + s >= 0:
        for pair, coef in _bell(drive.phi, sign).items():
            amps[SPIN_INDEX[pair], n + s] = b * coef
    if n + 2 * s >= 0:
        amps[SPIN_INDEX["uu"], n + 2 * s] = c
    return SpinMotionState(amps)


def two_ion_lower_sideband_evolve(n: int, drive: DriveParams, t: float,
                                  truncation: int | None = None) -> SpinMotionState:
    """Closed-form state after driving |dd, n> on a resonant lower sideband for time t."""
    if drive.sideband != -1 or drive.detuning != 0.0:
        raise InvalidSideband("closed form covers the resonant lower sideband only")
    return _closed_form_state(n, drive, t, truncation)


def evolve_closed_form(n: int, drive: DriveParams, t: float,
                       truncation: int | None = None) -> SpinMotionState:
    """Closed-form resonant evolution of |dd, n> on carrier, lower or upper sideband."""
    return _closed_form_state(n, drive, t, truncation)


# -- numerical propagation ------------------------------------------------

def _ops(truncation: int):
    dim = truncation + 1
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)
    sp = np.array([[0.0, 0.0], [1.0, 0.0]])  # |u><d| in (d, u) basis
    eye2 = np.eye(2)
    sp1 = np.kron(sp, eye2)
    sp2 = np.kron(eye2, sp)
    return a, sp1, sp2


def hamiltonian(drive: DriveParams, truncation: int) -> np.ndarray:
    """Rotating-frame RWA Hamiltonian (rad/s) on the (4 x (N+1))-dim space."""
    a, sp1, sp2 = _ops(truncation)
    dim = truncation + 1
    if drive.sideband == -1:
        motion = a
    elif drive.sideband == 1:
        motion = a.T
    else:
        motion = np.eye(dim)
    phi1, phi2 = drive.ion_phases
    s1 = drive.mode_sign if drive.sideband != 0 else 1
    g = drive.coupling
    raise_ = (s1 * np.exp(1j * phi1) * np.kron(sp1, motion)
              + np.exp(1j * phi2) * np.kron(sp2, motion))
    H = g * (raise_ + raise_.conj().T)
    if drive.detuning != 0.0:
        n_up = np.kron(sp1 @ sp1.T + sp2 @ sp2.T, np.eye(dim))
        H = H - drive.detuning * n_up
    return H


def step_propagator(H: np.ndarray, t: float, step_factor: float = 50.0,
                    drive: DriveParams | None = None) -> np.ndarray:
    """exp(-iHt) by fixed-size Taylor steps.

    The step is h <= 1 / (step_factor * rate) where rate bounds both the
    coupling and the detuning. The single-step operator is an order-12
    Taylor polynomial; applying it ``steps`` times is done by repeated
    squaring, which is the same product in fewer multiplications.
    """
    dim = H.shape[0]
    if t == 0.0:
        return np.eye(dim, dtype=complex)
    rate = float(np.max(np.sum(np.abs(H), axis=1)))
    if drive is not None:
        rate = max(rate, abs(drive.detuning))
    if rate == 0.0:
        return np.eye(dim, dtype=complex)
    h_max = 1.0 / (step_factor * rate)
    steps = max(1, math.ceil(abs(t) / h_max))
    h = t / steps
    A = -1j * h * H
    term = np.eye(dim, dtype=complex)
    step = term.copy()
    for k in range(1, TAYLOR_ORDER + 1):
        term = term @ A / k
        step = step + term
    return np.linalg.matrix_power(step, steps)


def _top_population(state: SpinMotionState, levels: int = 2) -> float:
    return float(state.motional_populations()[-levels:].sum())


def propagate_numeric(state: SpinMotionState, drive: DriveParams, t: float,
                      omega_m: float | None = None, step_factor: float = 50.0,
                      tail_tol: float = DEFAULT_TAIL_TOL,
                      max_truncation: int = 400) -> SpinMotionState:
    """Integrate the RWA coupling numerically on a truncated Fock space.

    The basis grows (and the run restarts) whenever population in the top
    two Fock levels exceeds ``tail_tol``. ``omega_m``, if given, is only used
    to warn when the coupling is not small against the mode frequency.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if omega_m is not None:
        g_eff = drive.coupling * math.sqrt(2.0 * (state.truncation + 2))
        if g_eff > 0.1 * omega_m:
            warnings.warn("coupling is not small against the mode frequency; RWA is poor",
                          stacklevel=2)
    n0 = norm(state)
    work = state
    while _top_population(work) > tail_tol:
        work = _grow(work, max_truncation)
    while True:
        H = hamiltonian(drive, work.truncation)
        U = step_propagator(H, t, step_factor, drive)
        out = SpinMotionState.from_vector(U @ work.vector, work.truncation)
        drift = abs(norm(out) - n0)
        if drift > NORM_DRIFT_LIMIT:
            raise NormDrift(f"norm drifted by {drift:.3g} during propagation")
        if _top_population(out) <= tail_tol:
            return out
        work = _grow(work, max_truncation)


def _grow(state: SpinMotionState, max_truncation: int) -> SpinMotionState:
    new = max(state.truncation + 4, int(state.truncation * 1.5))
    if state.truncation >= max_truncation:
        raise TruncationOverflow(
            f"population reached Fock level {state.truncation} (cap {max_truncation})"
        )
    return state.padded(min(new, max_truncation))


def evolve_fock_numeric(n: int, drive: DriveParams, t: float, **kw) -> SpinMotionState:
    """Numerically propagate |dd, n>."""
    return propagate_numeric(product_state("dd", n), drive, t, **kw)


def branch_probabilities(n, drive: DriveParams, t: float):
    """Resonant populations (|a|^2, |b|^2, |c|^2) for initial |dd, n>, vectorized over n.

    Same three-level chain as :func:`resonant_amplitudes`, in populations only.
    """
    n = np.asarray(n, dtype=float)
    g = drive.coupling
    s = drive.sideband
    if s == -1:
        c1, c2 = np.sqrt(2.0 * n) * g, np.sqrt(2.0 * np.clip(n - 1.0, 0.0, None)) * g
    elif s == 1:
        c1, c2 = np.sqrt(2.0 * (n + 1.0)) * g, np.sqrt(2.0 * (n + 2.0)) * g
    else:
        c1 = c2 = np.full_like(n, math.sqrt(2.0) * g)
    lam2 = c1 * c1 + c2 * c2
    safe = np.where(lam2 > 0, lam2, 1.0)
    lam = np.sqrt(safe)
    cos = np.cos(lam * t)
    a = np.where(lam2 > 0, (c2 * c2 + c1 * c1 * cos) / safe, 1.0)
    b2 = np.where(lam2 > 0, c1 * c1 / safe * np.sin(lam * t) ** 2, 0.0)
    c = np.where(lam2 > 0, c1 * c2 * (cos - 1.0) / safe, 0.0)
    return a * a, b2, c * c
