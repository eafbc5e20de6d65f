"""Command-line front end.

    twoion modes     [--config FILE | --preset NAME] [--out DIR]
    twoion spectrum  ...            writes spectrum.csv + spectrum.json
    twoion cool      ...            writes cooling.csv + cooling.json
    twoion heat-scan ...            writes heat_scan.csv + heat_scan.json
    twoion fit       ...            reads a spectrum CSV, writes fits.json
    twoion budget    ...            writes budget.json

On failure a JSON error record goes to stderr and the exit status is
nonzero (2 for configuration errors, 1 otherwise).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from .config import PRESETS, RunConfig, config_from_dict, emit_config, parse_config
from .dynamics import DriveParams
from .errors import ParseError, TwoIonError, ValidationError
from .hilbert import thermal_dist
from .modes import AMU, TWO_PI
from .protocols import (
    CoolingCycleConfig,
    cooling_trajectory,
    doppler_init,
    operations_budget,
    recoil_eta_squared,
)
from .spectroscopy import (
    Noise,
    ProbeConfig,
    ScanConfig,
    Spectrum,
    default_probe_time,
    fit_peaks,
    fitted_rate,
    heating_scan,
    optimal_probe_time,
    scan,
)

SUBCOMMANDS = ("modes", "spectrum", "cool", "heat-scan", "fit", "budget")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.9g}" if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _initial_dist(spec, mode, gamma):
    if spec == "doppler":
        return doppler_init(mode, gamma)
    return thermal_dist(spec["nbar"])


def _noise(cfg: RunConfig) -> Noise:
    return Noise(cfg.noise.kind, cfg.noise.sigma, cfg.noise.photons_per_ion)


def _meta(cfg: RunConfig, command: str, **extra) -> dict:
    physics = cfg.resolved_physics()
    meta = {"command": command, "config": cfg.to_dict(),
            "physics": json.loads(json.dumps(asdict(physics)))}
    meta.update(extra)
    return meta


# -- subcommands --------------------------------------------------------------

def run_modes(cfg: RunConfig, out: Path) -> None:
    table = cfg.mode_table()
    records = table.to_records()
    print(f"{'mode':<8}{'freq (MHz)':>12}{'eta':>10}  class")
    for r in records:
        print(f"{r['mode_id']:<8}{r['freq_hz'] / 1e6:>12.4f}{r['eta']:>10.4f}  {r['geometry_class']}")
    _write(out / "modes.json", _dumps(_meta(cfg, "modes", modes=records)))


def _feature_probe_times(cfg: RunConfig, table, dists, Omega) -> dict:
    times = {"carrier": math.pi / (2.0 * Omega)}
    for mode in table:
        if mode.eta > 0:
            dist = dists[mode.mode_id]
            lower = DriveParams(Omega, mode.eta, -1, 0.0, 0.0, 0.0, mode.sign)
            upper = lower.with_(sideband=1)
            g = math.sqrt(6.0) * Omega * mode.eta
            times[f"{mode.mode_id}-"] = optimal_probe_time(dist, lower, 3.0 * math.pi / g)
            times[f"{mode.mode_id}+"] = optimal_probe_time(dist, upper, 3.0 * math.pi / g)
    return times


def build_scan(cfg: RunConfig) -> ScanConfig:
    physics = cfg.resolved_physics()
    table = cfg.mode_table()
    Omega = TWO_PI * physics.rabi_hz
    gamma = TWO_PI * physics.gamma_hz
    sp = cfg.spectrum
    dists = {}
    for mode in table:
        if mode.eta > 0 or mode.mode_id in sp.occupations:
            dists[mode.mode_id] = _initial_dist(sp.occupations.get(mode.mode_id, "doppler"), mode, gamma)
    t_pr = sp.t_pr_s if sp.t_pr_s is not None else _feature_probe_times(cfg, table, dists, Omega)
    return ScanConfig(TWO_PI * sp.range_hz[0], TWO_PI * sp.range_hz[1], TWO_PI * sp.step_hz, t_pr,
                      Omega, table, dists, background=sp.background, noise=_noise(cfg),
                      seed=cfg.seed, include_carrier=sp.include_carrier)


def run_spectrum(cfg: RunConfig, out: Path) -> None:
    spec = scan(build_scan(cfg))
    meta = _meta(cfg, "spectrum", scan=spec.metadata)
    _write(out / "spectrum.csv", spec.to_csv())
    _write(out / "spectrum.json", _dumps(meta))
    print(f"wrote {len(spec.delta)} points to {out / 'spectrum.csv'}")


def run_cool(cfg: RunConfig, out: Path) -> None:
    physics = cfg.resolved_physics()
    co = cfg.cool
    mode = cfg.mode_table()[co.mode]
    recoil = (recoil_eta_squared(mode.omega, physics.mass_u * AMU, physics.wavelength_m)
              if co.recoil == "default" else float(co.recoil))
    drive = DriveParams(TWO_PI * physics.rabi_hz, mode.eta, -1, 0.0, 0.0, 0.0, mode.sign)
    ccfg = CoolingCycleConfig(co.mode, drive, co.pulses, co.durations_s, recoil,
                              co.photons_per_ion, co.t_max_s)
    dist0 = _initial_dist(co.initial, mode, TWO_PI * physics.gamma_hz)
    _, records = cooling_trajectory(dist0, ccfg)
    rows = [(r["cycle"], r["duration_s"], r["nbar"], r["ground_fraction"]) for r in records]
    _write(out / "cooling.csv", _csv(["cycle", "duration_s", "nbar", "ground_fraction"], rows))
    meta = _meta(cfg, "cool", repump_recoil=recoil, t_max_s=ccfg.default_t_max(),
                 trajectory=records)
    _write(out / "cooling.json", _dumps(meta))
    last = records[-1]
    print(f"{co.mode}: nbar {records[0]['nbar']:.4f} -> {last['nbar']:.4f} "
          f"after {len(records) - 1} pulses (ground fraction {last['ground_fraction']:.4f})")


def run_heat_scan(cfg: RunConfig, out: Path) -> None:
    physics = cfg.resolved_physics()
    hs = cfg.heat_scan
    mode = cfg.mode_table()[hs.mode]
    Omega = TWO_PI * physics.rabi_hz
    dist0 = _initial_dist(hs.initial, mode, TWO_PI * physics.gamma_hz)
    t_pr = hs.t_pr_s if hs.t_pr_s is not None else default_probe_time(mode, dist0, Omega)
    probe = ProbeConfig(Omega, t_pr, TWO_PI * hs.half_span_hz, TWO_PI * hs.step_hz,
                        hs.background, _noise(cfg))
    points = heating_scan(mode, dist0, hs.delays_ms, hs.rate_per_ms, probe, cfg.seed)
    slope = fitted_rate(points) if len(points) > 1 else float("nan")
    _write(out / "heat_scan.csv", _csv(["delay_ms", "nbar"], points))
    meta = _meta(cfg, "heat-scan", t_pr_s=t_pr, fitted_rate_per_ms=slope,
                 points=[{"delay_ms": d, "nbar": n} for d, n in points])
    _write(out / "heat_scan.json", _dumps(meta))
    print(f"{hs.mode}: injected {hs.rate_per_ms:g}/ms, recovered {slope:.4g}/ms")


def run_fit(cfg: RunConfig, out: Path) -> None:
    fb = cfg.fit
    path = Path(fb.input) if fb.input else out / "spectrum.csv"
    spec = Spectrum.from_csv(path.read_text())
    if fb.guesses_hz is not None:
        guesses = [TWO_PI * g for g in fb.guesses_hz]
    else:
        lo, hi = spec.delta.min(), spec.delta.max()
        guesses = sorted(s * m.omega for m in cfg.mode_table() if m.eta > 0 for s in (-1, 1)
                         if lo <= s * m.omega <= hi)
    hw = TWO_PI * fb.half_window_hz if fb.half_window_hz else None
    fits = fit_peaks(spec, guesses, half_window=hw)
    records = [f.to_record() for f in fits]
    _write(out / "fits.json", _dumps(records))
    for r in records:
        print(f"center {r['center_hz'] / 1e6:+.4f} MHz  depth {r['depth']:.4f}  "
              f"width {r['width_hz'] / 1e3:.1f} kHz")


def run_budget(cfg: RunConfig, out: Path) -> None:
    bu = cfg.budget
    eta2 = cfg.mode_table()[bu.spectator_mode].eta if bu.spectator_mode else bu.eta2
    k = operations_budget(eta2, bu.n2_spread, bu.fidelity_floor)
    record = _meta(cfg, "budget", eta2=eta2, operations=("no limit" if k is None else k))
    _write(out / "budget.json", _dumps(record))
    print(f"eta2 = {eta2:.4f}: " + ("no limit" if k is None else f"{k} operations"))


RUNNERS = {
    "modes": run_modes,
    "spectrum": run_spectrum,
    "cool": run_cool,
    "heat-scan": run_heat_scan,
    "fit": run_fit,
    "budget": run_budget,
}


def load_config(args) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read config: {exc}") from exc
        data = json.loads(emit_config(parse_config(text)))
    else:
        data = {}
    if args.preset:
        if "physics" in data and data["physics"] is not None:
            raise ValidationError("--preset given but the config has an explicit physics block")
        data["preset"] = args.preset
    elif "preset" not in data and data.get("physics") is None:
        data["preset"] = "nist-two-ion-1998"
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out:
        data["out"] = args.out
    return config_from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twoion", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides config 'out')")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config 'seed')")
    p.add_argument("--preset", choices=sorted(PRESETS), help="physics preset")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        RUNNERS[args.subcommand](cfg, Path(cfg.out))
    except (ParseError, ValidationError) as exc:
        _error(exc)
        return 2
    except (TwoIonError, OSError, ValueError, KeyError) as exc:
        _error(exc)
        return 1
    return 0


def _error(exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
