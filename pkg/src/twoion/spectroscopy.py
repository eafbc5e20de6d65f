"""Raman sideband spectra, Gaussian peak fits, and sideband thermometry.

The probe signal is the expected number of ions left in |d> (0..2). On
resonance it is evaluated from the closed-form sideband solutions; off
resonance the RWA coupling with a detuning term is integrated numerically.
Gaussians only appear when fitting, never when synthesizing.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, curve_fit

from .dynamics import DriveParams, branch_probabilities, hamiltonian, step_propagator
from .errors import FitDiverged, NoRoot
from .hilbert import SPIN_INDEX, OccupationDist, thermal_dist
from .modes import TWO_PI, ModeTable
from .protocols import heat

# ions in |d> for each spin pair (dd, du, ud, uu)
_BRIGHT = np.array([2.0, 1.0, 1.0, 0.0])


def signal(dist: OccupationDist, drive: DriveParams, t_pr: float) -> float:
    """Mean number of ions in |d> after a probe of length t_pr on |dd> x dist."""
    if t_pr < 0:
        raise ValueError("t_pr must be non-negative")
    if t_pr == 0:
        return 2.0
    n = np.arange(dist.p.size)
    if drive.detuning == 0.0:
        pa, pb, _ = branch_probabilities(n, drive, t_pr)
        s = float(np.dot(dist.p, 2.0 * pa + pb))
    else:
        s = _signal_numeric(dist, drive, t_pr)
    return min(max(s, 0.0), 2.0)


def _signal_numeric(dist: OccupationDist, drive: DriveParams, t_pr: float) -> float:
    n_dist = dist.truncation
    truncation = max(n_dist + (2 if drive.sideband == 1 else 0), 1)
    dim = truncation + 1
    U = step_propagator(hamiltonian(drive, truncation), t_pr, drive=drive)
    cols = SPIN_INDEX["dd"] * dim + np.arange(n_dist + 1)
    pops = np.abs(U[:, cols]) ** 2  # (4 * dim, n_dist + 1)
    bright = np.repeat(_BRIGHT, dim) @ pops
    return float(np.dot(dist.p, bright))


def sideband_depth(dist: OccupationDist, drive: DriveParams, t_pr: float) -> float:
    return 2.0 - signal(dist, drive, t_pr)


def optimal_probe_time(dist: OccupationDist, drive: DriveParams, t_max: float,
                       grid: int = 400) -> float:
    """Probe length in (0, t_max] that maximizes the resonant feature depth."""
    drive = drive.with_(detuning=0.0)
    n = np.arange(dist.p.size)
    ts = np.linspace(t_max / grid, t_max, grid)
    depths = []
    for t in ts:
        pa, pb, _ = branch_probabilities(n, drive, t)
        depths.append(2.0 - float(np.dot(dist.p, 2.0 * pa + pb)))
    return float(ts[int(np.argmax(depths))])


# -- scans ------------------------------------------------------------------

@dataclass(frozen=True)
class Noise:
    kind: str = "none"  # none | gaussian | counting
    sigma: float = 0.0
    photons_per_ion: float = 10.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "counting"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.kind == "counting" and self.photons_per_ion <= 0:
            raise ValueError("photons_per_ion must be positive")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "gaussian":
            d["sigma"] = self.sigma
        if self.kind == "counting":
            d["photons_per_ion"] = self.photons_per_ion
        return d


@dataclass(frozen=True)
class Feature:
    label: str
    center: float  # rad/s
    sideband: int
    mode_id: str | None = None


@dataclass(frozen=True)
class ScanConfig:
    """Probe sweep settings; all angular quantities in rad/s.

    ``t_pr`` is one probe length or a mapping from feature label (``carrier``,
    ``xCOM-``, ``xCOM+``, ...) to per-feature probe lengths, with an optional
    ``default`` entry.
    """

    delta_min: float
    delta_max: float
    step: float
    t_pr: float | dict
    Omega: float
    mode_table: ModeTable
    dists: dict
    theta: float = 0.0
    phi: float = 0.0
    background: float = 0.0
    noise: Noise = field(default_factory=Noise)
    seed: int | None = None
    include_carrier: bool = True

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.delta_max >= self.delta_min:
            raise ValueError("delta range must be ordered")
        if isinstance(self.t_pr, dict):
            if any(t <= 0 for t in self.t_pr.values()):
                raise ValueError("probe times must be positive")
        elif not self.t_pr > 0:
            raise ValueError("t_pr must be positive")
        if self.noise.kind != "none" and self.seed is None:
            raise ValueError("a seed is required when noise is enabled")
        for m in self.mode_table:
            if m.eta > 0 and m.mode_id not in self.dists:
                raise ValueError(f"no occupation distribution for coupled mode {m.mode_id}")

    def grid(self) -> np.ndarray:
        count = int(math.floor((self.delta_max - self.delta_min) / self.step + 1e-9)) + 1
        return self.delta_min + self.step * np.arange(count)

    def features(self) -> list[Feature]:
        feats = [Feature("carrier", 0.0, 0)] if self.include_carrier else []
        for m in self.mode_table:
            if m.eta > 0:
                feats.append(Feature(f"{m.mode_id}-", -m.omega, -1, m.mode_id))
                feats.append(Feature(f"{m.mode_id}+", m.omega, 1, m.mode_id))
        return sorted(feats, key=lambda f: f.center)

    def probe_time(self, label: str) -> float:
        if not isinstance(self.t_pr, dict):
            return float(self.t_pr)
        if label in self.t_pr:
            return float(self.t_pr[label])
        if "default" in self.t_pr:
            return float(self.t_pr["default"])
        raise KeyError(f"no probe time for feature {label!r}")

    def to_dict(self) -> dict:
        t_pr = dict(sorted(self.t_pr.items())) if isinstance(self.t_pr, dict) else self.t_pr
        return {
            "delta_min_hz": self.delta_min / TWO_PI,
            "delta_max_hz": self.delta_max / TWO_PI,
            "step_hz": self.step / TWO_PI,
            "t_pr_s": t_pr,
            "rabi_hz": self.Omega / TWO_PI,
            "theta": self.theta,
            "phi": self.phi,
            "background": self.background,
            "noise": self.noise.to_dict(),
            "seed": self.seed,
            "include_carrier": self.include_carrier,
            "modes": self.mode_table.to_records(),
            "dists": {k: {"nbar": v.nbar, "kind": v.kind} for k, v in sorted(self.dists.items())},
        }


@dataclass(frozen=True, eq=False)
class Spectrum:
    delta: np.ndarray  # rad/s
    signal: np.ndarray  # measured: model + background + noise
    model: np.ndarray | None = None  # noiseless, background-free
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        buf.write("delta_hz,signal\n")
        for d, s in zip(self.delta / TWO_PI, self.signal):
            buf.write(f"{d:.9g},{s:.9g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, metadata: dict | None = None) -> "Spectrum":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "delta_hz,signal":
            raise ValueError("spectrum CSV must start with header 'delta_hz,signal'")
        rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]], dtype=float)
        rows = rows.reshape(-1, 2)
        order = np.argsort(rows[:, 0], kind="stable")
        rows = rows[order]
        return cls(rows[:, 0] * TWO_PI, rows[:, 1], None, metadata or {})

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, indent=2, sort_keys=True) + "\n"

    @property
    def step(self) -> float:
        return float(np.median(np.diff(self.delta))) if self.delta.size > 1 else 0.0


def point_signal(cfg: ScanConfig, delta: float, features: list[Feature] | None = None) -> float:
    """Noiseless signal at probe detuning ``delta``, driven by the nearest feature only."""
    features = cfg.features() if features is None else features
    if not features:
        return 2.0
    feat = min(features, key=lambda f: (abs(delta - f.center), f.center))
    t_pr = cfg.probe_time(feat.label)
    if feat.mode_id is None:
        drive = DriveParams(cfg.Omega, 0.0, 0, delta - feat.center, cfg.theta, cfg.phi, 1)
        dist = OccupationDist(np.array([1.0]))
    else:
        mode = cfg.mode_table[feat.mode_id]
        drive = DriveParams(cfg.Omega, mode.eta, feat.sideband, delta - feat.center,
                            cfg.theta, cfg.phi, mode.sign)
        dist = cfg.dists[feat.mode_id]
    return signal(dist, drive, t_pr)


def apply_noise(model: np.ndarray, background: float, noise: Noise, seed: int | None) -> np.ndarray:
    y = model + background
    if noise.kind == "none":
        return y
    rng = np.random.default_rng(seed)
    if noise.kind == "gaussian":
        return y + rng.normal(0.0, noise.sigma, size=y.shape)
    lam = noise.photons_per_ion
    return rng.poisson(lam * np.clip(y, 0.0, None)) / lam


def scan(cfg: ScanConfig, workers: int = 1) -> Spectrum:
    """Sweep the probe detuning; grid points are independent and may run in threads."""
    deltas = cfg.grid()
    features = cfg.features()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            model = np.array(list(pool.map(lambda d: point_signal(cfg, d, features), deltas)))
    else:
        model = np.array([point_signal(cfg, d, features) for d in deltas])
    measured = apply_noise(model, cfg.background, cfg.noise, cfg.seed)
    meta = cfg.to_dict()
    meta["features"] = [{"label": f.label, "center_hz": f.center / TWO_PI} for f in features]
    return Spectrum(deltas, measured, model, meta)


# -- fitting ------------------------------------------------------------------

@dataclass(frozen=True)
class PeakFit:
    center: float  # rad/s
    depth: float
    width: float  # rad/s, Gaussian sigma
    residual: float  # rms
    background: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")

    def to_record(self) -> dict:
        return {
            "center_hz": self.center / TWO_PI,
            "depth": self.depth,
            "width_hz": self.width / TWO_PI,
            "residual": self.residual,
        }


def _dip(x, offset, depth, center, width):
    return offset - depth * np.exp(-0.5 * ((x - center) / width) ** 2)


def fit_peaks(spec: Spectrum, guesses, half_window: float | None = None,
              min_depth: float = 1e-6, max_residual: float | None = None) -> list[PeakFit]:
    """Least-squares Gaussian dip plus constant background around each guessed center.

    Points within ``half_window`` of a guess are used; the default is half
    the smallest spacing between guesses (the full scan span for one guess).
    """
    guesses = [float(g) for g in guesses]
    x, y = spec.delta, spec.signal
    if half_window is None:
        if len(guesses) > 1:
            half_window = 0.5 * float(np.min(np.diff(np.sort(guesses))))
        else:
            half_window = float(x.max() - x.min()) if x.size else 0.0
    return [_fit_one(x, y, g, half_window, spec.step, min_depth, max_residual) for g in guesses]


def _fit_one(x, y, guess, half_window, step, min_depth, max_residual) -> PeakFit:
    sel = np.abs(x - guess) <= half_window
    xs, ys = x[sel], y[sel]
    if xs.size < 5:
        raise FitDiverged(f"only {xs.size} points within the window at {guess / TWO_PI:.6g} Hz")
    offset0 = float(np.median(np.concatenate([ys[:2], ys[-2:]])))
    i_min = int(np.argmin(ys))
    depth0 = max(offset0 - float(ys[i_min]), 0.0)
    if depth0 <= min_depth:
        raise FitDiverged(f"no dip above {min_depth:g} near {guess / TWO_PI:.6g} Hz")
    below = xs[ys < offset0 - depth0 / 2]
    width0 = max((below.max() - below.min()) / 2.355 if below.size > 1 else step, step / 2)
    lo = [-np.inf, 0.0, guess - half_window, step / 20]
    hi = [np.inf, np.inf, guess + half_window, 2 * half_window]
    p0 = [offset0, depth0, float(xs[i_min]), min(width0, hi[3] * 0.99)]
    try:
        popt, _ = curve_fit(_dip, xs, ys, p0=p0, bounds=(lo, hi), max_nfev=5000)
    except (RuntimeError, ValueError) as exc:
        raise FitDiverged(f"fit near {guess / TWO_PI:.6g} Hz failed: {exc}") from exc
    offset, depth, center, width = (float(v) for v in popt)
    residual = float(np.sqrt(np.mean((ys - _dip(xs, *popt)) ** 2)))
    if abs(center - guess) >= 0.95 * half_window:
        raise FitDiverged(f"center escaped the window around {guess / TWO_PI:.6g} Hz")
    if depth <= min_depth:
        raise FitDiverged(f"fitted depth {depth:.3g} below {min_depth:g}")
    if max_residual is not None and residual > max_residual:
        raise FitDiverged(f"residual {residual:.3g} exceeds {max_residual:.3g}")
    return PeakFit(center, depth, width, residual, offset)


def fit_depth(spec: Spectrum, center: float, width: float, half_window: float) -> float:
    """Depth of a dip with fixed center and width: linear least squares, may be negative."""
    sel = np.abs(spec.delta - center) <= half_window
    shape = np.exp(-0.5 * ((spec.delta[sel] - center) / width) ** 2)
    A = np.column_stack([np.ones_like(shape), -shape])
    (_, depth), *_ = np.linalg.lstsq(A, spec.signal[sel], rcond=None)
    return float(depth)


# -- thermometry -------------------------------------------------------------

def predicted_ratio(nbar: float, drive: DriveParams, t_pr: float) -> float:
    """Lower/upper resonant depth ratio for a thermal state."""
    dist = thermal_dist(nbar)
    lower = sideband_depth(dist, drive.with_(sideband=-1, detuning=0.0), t_pr)
    upper = sideband_depth(dist, drive.with_(sideband=1, detuning=0.0), t_pr)
    return lower / upper


def nbar_from_ratio(ratio: float, drive: DriveParams, t_pr: float, tol: float = 1e-3,
                    nbar_max: float = 1e3) -> float:
    if ratio <= 0:
        return 0.0
    if ratio > 1.0 + tol:
        raise NoRoot(f"depth ratio {ratio:.4g} exceeds 1: no thermal state fits")
    f = lambda nb: predicted_ratio(nb, drive, t_pr) - ratio
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > nbar_max:
            raise NoRoot(f"depth ratio {ratio:.4g} needs nbar above {nbar_max:g}")
    return float(brentq(f, 0.0, hi, xtol=1e-10, rtol=1e-10))


def estimate_nbar(lower: PeakFit | float, upper: PeakFit, drive: DriveParams, t_pr: float,
                  noise_floor: float = 0.0) -> float:
    """Thermal nbar whose lower/upper depth ratio matches the fitted one.

    ``lower`` may be a bare depth, e.g. from :func:`fit_depth`.
    """
    lower_depth = lower.depth if isinstance(lower, PeakFit) else float(lower)
    if lower_depth <= noise_floor:
        return 0.0
    if upper.depth <= 0:
        raise NoRoot("upper sideband has no depth")
    return nbar_from_ratio(lower_depth / upper.depth, drive, t_pr)


@dataclass(frozen=True)
class ProbeConfig:
    """Settings for a two-window sideband thermometry measurement of one mode."""

    Omega: float
    t_pr: float | None = None  # None: maximize the upper-sideband depth of the initial state
    half_span: float = TWO_PI * 400e3
    step: float = TWO_PI * 2e3
    background: float = 0.0
    noise: Noise = field(default_factory=Noise)


def sideband_windows(mode, dist: OccupationDist, probe: ProbeConfig, t_pr: float,
                     seed: int | None = None) -> tuple[Spectrum, Spectrum]:
    """Spectra around the lower and upper sideband of one mode."""
    table = ModeTable((mode,))
    out = []
    for sign in (-1, 1):
        c = sign * mode.omega
        cfg = ScanConfig(c - probe.half_span, c + probe.half_span, probe.step, t_pr, probe.Omega,
                         table, {mode.mode_id: dist}, background=probe.background,
                         noise=probe.noise, seed=_window_seed(seed, sign),
                         include_carrier=False)
        out.append(scan(cfg))
    return out[0], out[1]


def _window_seed(seed, sign):
    return None if seed is None else 2 * seed + (sign > 0)


def renoise(pair: tuple[Spectrum, Spectrum], probe: ProbeConfig, seed: int) -> tuple[Spectrum, Spectrum]:
    """Fresh noise realization on top of already synthesized sideband windows."""
    out = []
    for sign, spec in zip((-1, 1), pair):
        y = apply_noise(spec.model, probe.background, probe.noise, _window_seed(seed, sign))
        meta = dict(spec.metadata, seed=_window_seed(seed, sign))
        out.append(Spectrum(spec.delta, y, spec.model, meta))
    return out[0], out[1]


def _lower_width(mode, probe: ProbeConfig, t_pr: float, nbar_ref: float) -> float:
    """Gaussian width a noiseless lower sideband would show at nbar_ref."""
    quiet = ProbeConfig(probe.Omega, t_pr, probe.half_span, probe.step)
    lower, _ = sideband_windows(mode, thermal_dist(nbar_ref), quiet, t_pr)
    (fit,) = fit_peaks(lower, [-mode.omega], half_window=probe.half_span)
    return fit.width


def nbar_from_windows(mode, lower_spec: Spectrum, upper_spec: Spectrum, probe: ProbeConfig,
                      t_pr: float) -> float:
    """Fit both sideband windows and invert the depth ratio to a thermal nbar.

    The upper sideband is always fitted freely. Without noise the lower one is
    too; a missing dip reads as n = 0. With noise the lower dip is measured at
    the mirrored center with a fixed width taken from a noiseless forward-model
    fit near the current estimate, so weak dips give unbiased (possibly
    negative) depths; non-positive depths read as n = 0.
    """
    hw = probe.half_span
    (upper,) = fit_peaks(upper_spec, [mode.omega], half_window=hw)
    drive = DriveParams(probe.Omega, mode.eta, -1, 0.0, 0.0, 0.0, mode.sign)
    if probe.noise.kind == "none":
        try:
            (lower,) = fit_peaks(lower_spec, [-mode.omega], half_window=hw)
        except FitDiverged:
            return 0.0
        return estimate_nbar(lower, upper, drive, t_pr)
    center = upper.center - 2 * mode.omega
    nbar = 0.1
    for _ in range(2):
        width = _lower_width(mode, probe, t_pr, min(max(nbar, 0.02), 5.0))
        depth = fit_depth(lower_spec, center, width, hw)
        nbar = estimate_nbar(depth, upper, drive, t_pr)
    return nbar


def measure_nbar(mode, dist: OccupationDist, probe: ProbeConfig, t_pr: float,
                 seed: int | None = None) -> float:
    """Synthesize both sidebands of ``mode`` for ``dist`` and return the thermometry estimate."""
    lower_spec, upper_spec = sideband_windows(mode, dist, probe, t_pr, seed)
    return nbar_from_windows(mode, lower_spec, upper_spec, probe, t_pr)


def heating_scan(mode, dist: OccupationDist, delays, rate: float, probe: ProbeConfig,
                 seed: int | None = None) -> list[tuple[float, float]]:
    """(delay ms, estimated nbar) after heating for each delay at ``rate`` quanta/ms."""
    t_pr = probe.t_pr
    if t_pr is None:
        t_pr = default_probe_time(mode, dist, probe.Omega)
    out = []
    for i, delay in enumerate(delays):
        heated = heat(dist, rate, delay)
        s = None if seed is None else seed + 7919 * i
        out.append((float(delay), measure_nbar(mode, heated, probe, t_pr, s)))
    return out


def fitted_rate(points) -> float:
    """Least-squares slope of nbar against delay."""
    d = np.array([p[0] for p in points])
    n = np.array([p[1] for p in points])
    return float(np.polyfit(d, n, 1)[0])


def default_probe_time(mode, dist: OccupationDist, Omega: float) -> float:
    """Upper-sideband depth-maximizing probe length, searched up to 3 n=0 transfer times."""
    drive = DriveParams(Omega, mode.eta, 1, 0.0, 0.0, 0.0, mode.sign)
    g_up = math.sqrt(6.0) * Omega * mode.eta
    return optimal_probe_time(dist, drive, 3.0 * math.pi / g_up)
