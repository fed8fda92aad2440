"""Command-line entry point.

Each subcommand writes its tables plus ``summary.json`` and ``manifest.json``
into the output directory (``--out``, else ``$DARKKEPLER_OUT``, else
``./darkkepler-out``). Exit codes: 0 success, 2 configuration error,
3 numerical-domain error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .binary import PRESETS, DmpSpec, atomic_scales, chaos_border, epsilon, preset
from .capture import capture_report
from .checkpoint import CheckpointError, load_ensemble, load_quantum, save_ensemble, save_quantum
from .classical import EnsembleRun, EstimationError as ClassicalEstimationError, diffusive_time, measure_diffusion
from .config import COMMANDS, FORMATS, ConfigError, RunConfig, apply_overrides, from_mapping
from .output import OutputError, build_manifest, emit_json, emit_table, write_manifest
from .quantum import (
    ContinuumInRotationError,
    LatticeConfig,
    LatticeTooSmallError,
    QuantumRun,
    chaotic_frequency,
    default_window,
    init_state,
    run as quantum_run,
)
from .regimes import (
    FIGURE1_COLUMNS,
    FIGURE2_COLUMNS,
    figure1_table,
    figure2_table,
    figure_borders,
    ionization_time,
    log_grid,
    universe_age_window,
)

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4
OUT_ENV = "DARKKEPLER_OUT"
DEFAULT_OUT = "darkkepler-out"
MAX_LATTICE = 1 << 22


class Job:
    """Collects output files and summary values for one command."""

    def __init__(self, cfg: RunConfig, out_dir: Path):
        self.cfg = cfg
        self.out_dir = out_dir
        self.outputs: dict[str, str] = {}
        self.summary: dict = {}

    def table(self, stem: str, rows, columns) -> None:
        name = f"{stem}.{self.cfg.format}"
        self.outputs[name] = emit_table(rows, self.cfg.format, self.out_dir / name, columns)

    def json(self, name: str, obj) -> None:
        self.outputs[name] = emit_json(obj, self.out_dir / name)


def _grid(cfg: RunConfig):
    return log_grid(cfg.grid.mu_min, cfg.grid.mu_max, cfg.grid.count)


def cmd_regimes(job: Job) -> None:
    cfg, system = job.cfg, job.cfg.binary_system()
    job.table("figure1", figure1_table(system, _grid(cfg), cfg.initial_w), FIGURE1_COLUMNS)
    job.summary["borders"] = figure_borders(system, cfg.initial_w)


def cmd_lifetime(job: Job) -> None:
    cfg, system = job.cfg, job.cfg.binary_system()
    job.table("figure2", figure2_table(system, _grid(cfg), cfg.t_h, cfg.initial_w), FIGURE2_COLUMNS)
    window = universe_age_window(system, cfg.t_universe, cfg.t_h, cfg.initial_w)
    job.summary["borders"] = figure_borders(system, cfg.initial_w)
    job.summary["universe_age_window"] = {
        "mu_low": window.mu_low,
        "mu_high": window.mu_high,
        "long_lived_intervals": [list(iv) for iv in window.long_lived],
        "crossings": [
            {"mu": c.mass_ratio, "rising": c.rising, "continuous": c.continuous, "mechanism": c.mechanism}
            for c in window.crossings
        ],
    }
    if cfg.mass_ratio is not None:
        life = ionization_time(system, DmpSpec(cfg.mass_ratio, cfg.initial_w), cfg.t_h)
        job.summary["lifetime"] = {"mu": cfg.mass_ratio, "t_I_years": life.years,
                                   "mechanism": life.mechanism, "extrapolated": life.extrapolated}


def _ensemble_job(cfg: RunConfig, system) -> EnsembleRun:
    fresh = EnsembleRun(system.kick_terms(), cfg.initial_w, cfg.n_traj, cfg.max_kicks, cfg.seed,
                        record_kicks=cfg.record_kicks, w_min=cfg.w_min, chunk_size=cfg.chunk_size)
    if cfg.resume and cfg.checkpoint and Path(cfg.checkpoint).exists():
        saved = load_ensemble(cfg.checkpoint)
        if saved.config() != fresh.config():
            raise ConfigError("checkpoint", "saved ensemble was produced by a different configuration")
        return saved
    return fresh


def cmd_classical(job: Job) -> None:
    cfg, system = job.cfg, job.cfg.binary_system()
    if cfg.initial_w >= 0:
        raise ConfigError("initial_w", "classical-sim needs a bound start (initial_w < 0)")
    ens = _ensemble_job(cfg, system)
    step = cfg.checkpoint_every if cfg.checkpoint else None
    while not ens.done:
        ens.advance(step, threads=cfg.threads)
        if cfg.checkpoint:
            save_ensemble(ens, cfg.checkpoint)
    res = ens.result()
    job.table("survival", res.survival_curve(), ("kicks", "periods", "surviving_fraction"))
    job.table("escape_times",
              [(i, int(k), float(p)) for i, (k, p, e) in
               enumerate(zip(res.escape_kicks, res.escape_periods, res.escaped)) if e],
              ("traj_id", "kicks", "periods"))
    job.table("diffusion",
              [(int(k), float(v), int(s)) for k, v, s in
               zip(res.diffusion_kicks, res.diffusion_mean_dw2, res.diffusion_survivors)],
              ("kicks", "mean_dw2", "survivors"))
    window = cfg.diffusion_window or [0, min(100, ens.record_kicks)]
    try:
        d_w = measure_diffusion(res, (int(window[0]), int(window[1])))
    except ClassicalEstimationError:
        d_w = None
    median = res.median_escape_periods()
    job.summary.update({
        "backend": res.backend,
        "epsilon": epsilon(system),
        "chaos_border": chaos_border(system),
        "escaped": int(res.escaped.sum()),
        "sunk": res.n_sunk,
        "diffusion_rate": d_w,
        "diffusion_rate_over_random_phase": None if d_w is None else d_w / (epsilon(system) ** 2 / 2.0),
        "median_escape_periods": median,
        "median_escape_years": median * system.period,
        "diffusive_time_years": diffusive_time(system),
    })


def _quantum_params(cfg: RunConfig) -> tuple[float, float, float, str]:
    if cfg.k is not None or cfg.n_ionization is not None:
        if cfg.k is None or cfg.n_ionization is None:
            raise ConfigError("k" if cfg.k is None else "n_ionization",
                              "raw quantum runs need both k and n_ionization")
        omega = cfg.omega if cfg.omega is not None else chaotic_frequency(cfg.k, cfg.n_ionization,
                                                                          cfg.chaos_parameter)
        return cfg.k, omega, cfg.n_ionization, "raw"
    if cfg.mass_ratio is None:
        raise ConfigError("k", "quantum-sim needs raw (k, n_ionization) or a mass_ratio")
    scales = atomic_scales(cfg.binary_system(), DmpSpec(cfg.mass_ratio, cfg.initial_w))
    return scales.kick_strength, scales.dimensionless_frequency, scales.ionization_photons, "physical"


def cmd_quantum(job: Job) -> None:
    cfg = job.cfg
    k, omega, n_i, source = _quantum_params(cfg)
    lattice = LatticeConfig(pad=cfg.lattice_pad)
    span = n_i + cfg.lattice_pad * max(k * k, k, 10.0)
    if not math.isfinite(span) or span > MAX_LATTICE:
        raise ValueError(f"lattice of ~{span:.3g} sites exceeds the {MAX_LATTICE} limit; "
                         "use desk-scale raw parameters (k, n_ionization)")
    init_state(k, n_i, lattice)  # validates N_I and k before any work
    window = tuple(int(x) for x in cfg.window) if cfg.window else default_window(k)
    n_periods = cfg.n_periods if cfg.n_periods is not None else window[1]
    fit_range = tuple(cfg.fit_range) if cfg.fit_range else None
    if n_periods < window[1]:
        raise ConfigError("n_periods", "must reach the end of the averaging window")
    if cfg.realizations > 1:
        if cfg.checkpoint:
            raise ConfigError("checkpoint", "checkpointing supports a single realization")
        res = quantum_run(k, omega, n_i, n_periods, window, lattice, fit_range, cfg.realizations)
    else:
        run = None
        if cfg.resume and cfg.checkpoint and Path(cfg.checkpoint).exists():
            run = load_quantum(cfg.checkpoint)
            if (run.k, run.omega, run.n_ionization, run.window) != (k, omega, n_i, window):
                raise ConfigError("checkpoint", "saved run was produced by different parameters")
        if run is None:
            run = QuantumRun(k, omega, n_i, window, lattice)
        step = cfg.checkpoint_every if cfg.checkpoint and cfg.checkpoint_every else n_periods
        while run.psi.time < n_periods:
            run.advance(min(step, n_periods - run.psi.time))
            if cfg.checkpoint:
                save_quantum(run, cfg.checkpoint)
        res = run.result(fit_range)
    job.table("ionization", res.ionization_curve, ("iteration", "p_ion"))
    job.table("distribution", list(zip(res.photon_offsets.tolist(), res.mean_distribution.tolist())),
              ("N_phi", "W"))
    state = res.final_state
    job.summary.update({
        "parameters": {"k": k, "omega": omega, "n_ionization": n_i, "source": source},
        "window": list(res.window),
        "fit_range": list(res.fit_range),
        "fitted_length": res.fitted_length,
        "theoretical_length": res.theoretical_length,
        "before_quantum_time": res.before_quantum_time,
        "absorbed_probability": res.ionization_curve[-1][1],
        "final_norm2": None if state is None else state.norm2(),
    })


def cmd_capture(job: Job) -> None:
    cfg = job.cfg
    if cfg.mass_ratio is None:
        raise ConfigError("mass_ratio", "capture needs the particle mass ratio m_d/m_e")
    report = capture_report(cfg.binary_system(), DmpSpec(cfg.mass_ratio, cfg.initial_w), cfg.t_h)
    data = report.to_dict()
    rows = []
    for key, value in data.items():
        if isinstance(value, dict) and "value" in value:
            rows.append((key, value["value"], value["unit"]))
        elif isinstance(value, dict):
            rows.extend((f"{key}.{sub}", v["value"], v["unit"]) for sub, v in value.items()
                        if isinstance(v, dict))
        else:
            rows.append((key, value, ""))
    job.table("capture", rows, ("quantity", "value", "unit"))
    job.summary["capture"] = data


def cmd_presets(job: Job) -> None:
    rows = []
    for name in sorted(PRESETS):
        s = preset(name)
        rows.append((name, s.central_mass, s.planet_mass, s.orbit_radius, s.orbit_velocity, s.period,
                     s.kick_amplitude, epsilon(s), chaos_border(s), s.empirical_chaos_border))
    job.table("presets", rows, ("name", "central_mass_kg", "planet_mass_kg", "orbit_radius_m",
                                "orbit_velocity_m_s", "period_yr", "kick_amplitude", "epsilon",
                                "chaos_border", "empirical_chaos_border"))


HANDLERS = {
    "regimes": cmd_regimes,
    "lifetime": cmd_lifetime,
    "classical-sim": cmd_classical,
    "quantum-sim": cmd_quantum,
    "capture": cmd_capture,
    "presets": cmd_presets,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable; dotted keys reach nested objects)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--threads", type=int, help="worker threads (never changes results)")
    parser = argparse.ArgumentParser(prog="darkkepler", description="Kepler-map dark matter toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "regimes": "photon number and localization length over a mass grid",
        "lifetime": "ionization lifetime over a mass grid and the universe-age window",
        "classical-sim": "classical Kepler-map ensemble: survival, escape times, diffusion",
        "quantum-sim": "quantum map on the photon lattice: ionization and steady state",
        "capture": "capture cross-section, energy border, halo size and captured mass",
        "presets": "list the built-in binary systems",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise OutputError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"{args.config} is not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
    data = apply_overrides(data, args.overrides)
    data["command"] = args.command
    for key in ("out", "format", "seed", "threads"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return from_mapping(data)


def run_config(cfg: RunConfig, out_dir: Optional[Path] = None) -> Job:
    out_dir = Path(out_dir or cfg.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    job = Job(cfg, out_dir)
    start = time.perf_counter()
    HANDLERS[cfg.command](job)
    if job.summary:
        job.json("summary.json", job.summary)
    manifest = build_manifest(__version__, cfg.to_dict(), cfg.binary_system().constants.as_dict(),
                              time.perf_counter() - start, job.outputs)
    write_manifest(out_dir, manifest)
    return job


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        job = run_config(cfg)
    except ConfigError as exc:
        print(f"darkkepler: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CheckpointError) as exc:
        print(f"darkkepler: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, LatticeTooSmallError, ContinuumInRotationError) as exc:
        print(f"darkkepler: numerical error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    for name, digest in job.outputs.items():
        print(f"{job.out_dir / name}  sha256:{digest}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
