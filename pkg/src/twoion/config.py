"""Run configuration: strict JSON schema, preset expansion, and round-trip emission.

All frequencies in config files are in Hz (cycles per second). Unknown keys
are rejected so that a typo never silently falls back to a default.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ParseError, RockingUnstable, ValidationError
from .modes import AMU, MODE_IDS, BeamGeometry, ModeTable, TrapFrequencies, build_mode_table


@dataclass(frozen=True)
class Physics:
    trap_hz: tuple[float, float, float]
    mass_u: float
    wavelength_m: float
    beam_geometry: str
    rabi_hz: float
    gamma_hz: float
    projection: tuple[float, float, float] | None = None

    def beams(self) -> BeamGeometry:
        return BeamGeometry.from_wavelength(self.wavelength_m, self.beam_geometry, self.projection)

    def mode_table(self) -> ModeTable:
        return build_mode_table(TrapFrequencies.from_hz(*self.trap_hz), self.beams(),
                                self.mass_u * AMU)


PRESETS = {
    # x-axis spectroscopy: R1 perpendicular to R2, delta-k along x
    "nist-two-ion-1998": Physics((8.6e6, 17.6e6, 9.3e6), 9.012, 313e-9, "perpendicular",
                                 250e3, 19.4e6, (1.0, 0.0, 0.0)),
    # counterpropagating Raman beams, sensitive to all three axes
    "nist-two-ion-1998-3d": Physics((8.6e6, 17.6e6, 9.3e6), 9.012, 313e-9, "counterpropagating",
                                    250e3, 19.4e6, None),
}


@dataclass(frozen=True)
class NoiseBlock:
    kind: str = "none"
    sigma: float = 0.0
    photons_per_ion: float = 10.0


@dataclass(frozen=True)
class SpectrumBlock:
    range_hz: tuple[float, float] = (-20e6, 20e6)
    step_hz: float = 20e3
    t_pr_s: float | dict | None = None  # None: per-mode depth-maximizing
    background: float = 0.0
    occupations: dict = field(default_factory=dict)  # mode -> "doppler" | {"nbar": x}
    include_carrier: bool = True


@dataclass(frozen=True)
class CoolBlock:
    mode: str = "xCOM"
    pulses: int = 5
    durations_s: str | tuple[float, ...] = "auto"
    t_max_s: float | None = None
    recoil: str | float = "default"
    photons_per_ion: float = 1.0
    initial: str | dict = "doppler"


@dataclass(frozen=True)
class HeatScanBlock:
    mode: str = "xCOM"
    initial: str | dict = field(default_factory=lambda: {"nbar": 0.11})
    delays_ms: tuple[float, ...] = (0.0, 0.01, 0.02, 0.03)
    rate_per_ms: float = 19.0
    t_pr_s: float | None = None
    half_span_hz: float = 400e3
    step_hz: float = 2e3
    background: float = 0.0


@dataclass(frozen=True)
class FitBlock:
    input: str | None = None  # default: <out>/spectrum.csv
    guesses_hz: tuple[float, ...] | None = None  # default: +-f of coupled modes in range
    half_window_hz: float | None = None


@dataclass(frozen=True)
class BudgetBlock:
    spectator_mode: str | None = "xCOM"
    eta2: float | None = None
    n2_spread: float = 1.0
    fidelity_floor: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    preset: str | None = None
    physics: Physics | None = None
    seed: int | None = None
    noise: NoiseBlock = field(default_factory=NoiseBlock)
    out: str = "out"
    spectrum: SpectrumBlock = field(default_factory=SpectrumBlock)
    cool: CoolBlock = field(default_factory=CoolBlock)
    heat_scan: HeatScanBlock = field(default_factory=HeatScanBlock)
    fit: FitBlock = field(default_factory=FitBlock)
    budget: BudgetBlock = field(default_factory=BudgetBlock)

    def resolved_physics(self) -> Physics:
        if self.physics is not None:
            return self.physics
        return PRESETS[self.preset]

    def mode_table(self) -> ModeTable:
        return self.resolved_physics().mode_table()

    def to_dict(self) -> dict:
        return _plain(asdict(self))


_BLOCKS = {
    "physics": Physics,
    "noise": NoiseBlock,
    "spectrum": SpectrumBlock,
    "cool": CoolBlock,
    "heat_scan": HeatScanBlock,
    "fit": FitBlock,
    "budget": BudgetBlock,
}
_TUPLE_KEYS = {"trap_hz", "projection", "range_hz", "durations_s", "delays_ms", "guesses_hz"}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def emit_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ParseError(f"{path}: unknown key(s) {', '.join(unknown)}")
    kw = {}
    for key, value in data.items():
        if key in _TUPLE_KEYS and isinstance(value, list):
            value = tuple(value)
        kw[key] = value
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ValidationError("config root must be an object")
    unknown = sorted(set(data) - {f.name for f in fields(RunConfig)})
    if unknown:
        raise ParseError(f"unknown top-level key(s) {', '.join(unknown)}")
    kw = {}
    for key, value in data.items():
        if key in _BLOCKS and value is not None:
            kw[key] = _build(_BLOCKS[key], value, key)
        else:
            kw[key] = value
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(data)


def _number(value, path, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}: expected a number, got {value!r}")
    if positive and not value > 0:
        raise ValidationError(f"{path}: must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ValidationError(f"{path}: must be non-negative, got {value!r}")


def _mode(name, table: ModeTable, path):
    if name not in MODE_IDS:
        raise ValidationError(f"{path}: unknown mode {name!r}; expected one of {list(MODE_IDS)}")
    if name not in table:
        raise ValidationError(f"{path}: mode {name!r} not in the mode table")


def _occupation(value, path):
    if value == "doppler":
        return
    if isinstance(value, dict) and set(value) == {"nbar"}:
        _number(value["nbar"], f"{path}.nbar", nonneg=True)
        return
    raise ValidationError(f'{path}: expected "doppler" or {{"nbar": x}}, got {value!r}')


def validate(cfg: RunConfig) -> None:
    """Check every cross-field invariant; raises ValidationError naming the violation."""
    if (cfg.preset is None) == (cfg.physics is None):
        raise ValidationError("exactly one of 'preset' and 'physics' must be given")
    if cfg.preset is not None and cfg.preset not in PRESETS:
        raise ValidationError(f"preset: unknown preset {cfg.preset!r}; known: {sorted(PRESETS)}")
    if cfg.physics is not None:
        ph = cfg.physics
        if len(ph.trap_hz) != 3:
            raise ValidationError("physics.trap_hz: need three frequencies")
        for i, f in enumerate(ph.trap_hz):
            _number(f, f"physics.trap_hz[{i}]", positive=True)
        for key in ("mass_u", "wavelength_m", "rabi_hz", "gamma_hz"):
            _number(getattr(ph, key), f"physics.{key}", positive=True)
    if cfg.seed is not None and (isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int)
                                 or cfg.seed < 0):
        raise ValidationError("seed: must be a non-negative integer")
    if cfg.noise.kind not in ("none", "gaussian", "counting"):
        raise ValidationError(f"noise.kind: unknown kind {cfg.noise.kind!r}")
    if cfg.noise.kind != "none" and cfg.seed is None:
        raise ValidationError("seed: required when noise.kind is not 'none'")
    _number(cfg.noise.sigma, "noise.sigma", nonneg=True)
    _number(cfg.noise.photons_per_ion, "noise.photons_per_ion", positive=True)
    if not isinstance(cfg.out, str) or not cfg.out:
        raise ValidationError("out: must be a non-empty path")

    try:
        table = cfg.mode_table()
    except (RockingUnstable, ValueError) as exc:
        raise ValidationError(f"physics: {exc}") from exc

    sp = cfg.spectrum
    if len(sp.range_hz) != 2 or not sp.range_hz[1] >= sp.range_hz[0]:
        raise ValidationError("spectrum.range_hz: need an ordered [min, max] pair")
    _number(sp.step_hz, "spectrum.step_hz", positive=True)
    _number(sp.background, "spectrum.background")
    if isinstance(sp.t_pr_s, dict):
        for k, v in sp.t_pr_s.items():
            _number(v, f"spectrum.t_pr_s.{k}", positive=True)
    elif sp.t_pr_s is not None:
        _number(sp.t_pr_s, "spectrum.t_pr_s", positive=True)
    for name, occ in sp.occupations.items():
        _mode(name, table, f"spectrum.occupations.{name}")
        _occupation(occ, f"spectrum.occupations.{name}")

    co = cfg.cool
    _mode(co.mode, table, "cool.mode")
    if isinstance(co.pulses, bool) or not isinstance(co.pulses, int) or co.pulses < 0:
        raise ValidationError("cool.pulses: must be a non-negative integer")
    if co.durations_s != "auto":
        if not isinstance(co.durations_s, tuple) or len(co.durations_s) != co.pulses:
            raise ValidationError('cool.durations_s: "auto" or one duration per pulse')
        for i, t in enumerate(co.durations_s):
            _number(t, f"cool.durations_s[{i}]", positive=True)
    if co.t_max_s is not None:
        _number(co.t_max_s, "cool.t_max_s", positive=True)
    if co.recoil != "default":
        _number(co.recoil, "cool.recoil", nonneg=True)
    _number(co.photons_per_ion, "cool.photons_per_ion", nonneg=True)
    _occupation(co.initial, "cool.initial")
    if table[co.mode].eta == 0:
        raise ValidationError(f"cool.mode: {co.mode} has no coupling in this beam geometry")

    hs = cfg.heat_scan
    _mode(hs.mode, table, "heat_scan.mode")
    _occupation(hs.initial, "heat_scan.initial")
    if not hs.delays_ms:
        raise ValidationError("heat_scan.delays_ms: need at least one delay")
    for i, d in enumerate(hs.delays_ms):
        _number(d, f"heat_scan.delays_ms[{i}]", nonneg=True)
    _number(hs.rate_per_ms, "heat_scan.rate_per_ms", nonneg=True)
    if hs.t_pr_s is not None:
        _number(hs.t_pr_s, "heat_scan.t_pr_s", positive=True)
    _number(hs.half_span_hz, "heat_scan.half_span_hz", positive=True)
    _number(hs.step_hz, "heat_scan.step_hz", positive=True)
    if table[hs.mode].eta == 0:
        raise ValidationError(f"heat_scan.mode: {hs.mode} has no coupling in this beam geometry")

    fb = cfg.fit
    if fb.guesses_hz is not None:
        for i, g in enumerate(fb.guesses_hz):
            _number(g, f"fit.guesses_hz[{i}]")
    if fb.half_window_hz is not None:
        _number(fb.half_window_hz, "fit.half_window_hz", positive=True)

    bu = cfg.budget
    if (bu.spectator_mode is None) == (bu.eta2 is None):
        raise ValidationError("budget: give exactly one of spectator_mode and eta2")
    if bu.spectator_mode is not None:
        _mode(bu.spectator_mode, table, "budget.spectator_mode")
    else:
        _number(bu.eta2, "budget.eta2", nonneg=True)
    _number(bu.n2_spread, "budget.n2_spread", nonneg=True)
    _number(bu.fidelity_floor, "budget.fidelity_floor", positive=True)
    if bu.fidelity_floor > 1:
        raise ValidationError("budget.fidelity_floor: must be <= 1")
