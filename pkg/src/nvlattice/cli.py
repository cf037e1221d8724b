"""Command-line frontend.

Subcommands: phase-diagram, lobes, dissipative-diagram, observables,
spectrum.  Outputs are CSV (and/or JSON) tables plus a meta.json with the
fully resolved config, version and timings; feeding that meta.json back as
--config reproduces the run byte-identically.

Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 numeric
degradation (more than 1% of grid cells failed).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import equilibrium, sweep
from .config import ConfigError, FORMAT_VERSION, float_list, int_list, load_config, model_params
from .dissipative import DegenerateSteadyStateError
from .equilibrium import LatticePoint
from .qspace import ModelParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

LOBE_AXES = ("delta1", "delta2", "omega", "g")

# fraction of failed cells that downgrades the exit code
NUMERIC_FAIL_FRACTION = 0.01

PEAK_PROMINENCE = 0.05


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):   # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def tool_version() -> str:
    try:
        return f"nvlattice-{metadata.version('nvlattice')}"
    except metadata.PackageNotFoundError:
        return "nvlattice-unversioned"


# ------------------------------------------------------------------ formatting

def _fmt(value) -> str:
    """Shortest round-trip representation; '.' decimal separator."""
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_json_table(path: Path, header: list[str], rows: list[list]) -> None:
    records = [{h: (None if v is None else v) for h, v in zip(header, row)}
               for row in rows]
    path.write_text(json.dumps(records, indent=1, default=_fmt) + "\n")


def _emit_table(outdir: Path, stem: str, fmt: str, header: list[str],
                rows: list[list]) -> None:
    if fmt in ("csv", "both"):
        write_csv(outdir / f"{stem}.csv", header, rows)
    if fmt in ("json", "both"):
        write_json_table(outdir / f"{stem}.json", header, rows)


def write_meta(outdir: Path, cfg: dict, *, timings: dict, truncation: dict,
               wall_s: float, extra: dict | None = None) -> None:
    meta = {
        "format_version": FORMAT_VERSION,
        "tool_version": tool_version(),
        "config": cfg,
        "timings": timings,
        "truncation": truncation,
        "wall_time_s": wall_s,
    }
    if extra:
        meta.update(extra)
    (outdir / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def _numeric_exit(rows) -> int:
    failed = [r for r in rows if r.error is not None]
    if rows and len(failed) / len(rows) > NUMERIC_FAIL_FRACTION:
        print(f"numeric degradation: {len(failed)}/{len(rows)} cells failed; "
              f"first error: {failed[0].error}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# ------------------------------------------------------------------ commands

def _grid(cfg: dict, mode: str, n_max: int) -> sweep.GridSpec:
    return sweep.GridSpec(
        mu_range=(cfg["grid.mu_lo"], cfg["grid.mu_hi"], cfg["grid.mu_count"]),
        k_range=(cfg["grid.k_lo"], cfg["grid.k_hi"], cfg["grid.k_count"]),
        params=model_params(cfg), n_max=n_max, mode=mode,
        seed=cfg["numerics.seed"])


def _sweep_row_values(r: sweep.SweepRow, dissipative: bool) -> list:
    if dissipative:
        return [r.mu, r.k, r.psi_abs, r.psi_re, r.psi_im, r.phase, r.mean_n,
                r.var_n, r.g2, r.mean_N, r.label, r.n_attractors, r.trunc_flag]
    kc = r.kc if r.kc is not None else float("nan")
    return [r.mu, r.k, r.psi_abs, r.phase, r.mean_n, r.var_n, r.g2, r.mean_N,
            kc, r.trunc_flag]


def cmd_phase_diagram(cfg: dict, outdir: Path, fmt: str, workers: int | None) -> int:
    t0 = time.perf_counter()
    grid = _grid(cfg, "equilibrium", cfg["numerics.n_max"])
    table = sweep.run_equilibrium_sweep(grid, workers=workers)
    header = ["mu", "k", "psi", "phase", "mean_n", "var_n", "g2", "mean_N",
              "kc_overlay", "trunc_flag"]
    _emit_table(outdir, "phase_diagram", fmt, header,
                [_sweep_row_values(r, dissipative=False) for r in table.rows])
    write_meta(outdir, cfg, timings=table.timing, truncation=table.truncation,
               wall_s=time.perf_counter() - t0)
    return _numeric_exit(table.rows)


def cmd_lobes(cfg: dict, outdir: Path, fmt: str, workers: int | None) -> int:
    t0 = time.perf_counter()
    axis = cfg["lobes.axis"]
    if axis not in LOBE_AXES:
        raise UsageError(f"lobes.axis must be one of {LOBE_AXES}, got {axis!r}")
    n_list = int_list(cfg, "lobes.n_list")
    params = model_params(cfg)
    values = np.linspace(cfg["lobes.lo"], cfg["lobes.hi"], cfg["lobes.count"]) \
        if cfg["lobes.count"] > 1 else np.array([cfg["lobes.lo"]])
    rows = []
    for value in values:
        p = _with_axis(params, axis, float(value))
        for b in equilibrium.lobe_boundaries(p, n_list):
            rows.append([float(value), b.charge_low, b.mu_boundary])
    _emit_table(outdir, "lobes", fmt, ["axis_value", "N", "mu_boundary"], rows)
    write_meta(outdir, cfg, timings={}, truncation={},
               wall_s=time.perf_counter() - t0, extra={"lobes_axis": axis})
    return EXIT_OK


def _with_axis(params: ModelParams, axis: str, value: float) -> ModelParams:
    kwargs = dict(g=params.g, omega=params.omega, delta1=params.delta1,
                  delta2=params.delta2, kappa=params.kappa,
                  gamma1=params.gamma1, gamma2=params.gamma2, z=params.z)
    kwargs[axis] = value
    if axis == "g" and value <= 0:
        # the g=0 collapse endpoint: sector blocks stay finite, only the
        # unit convention degenerates; evaluate at an epsilon instead
        kwargs["g"] = 1e-12
    return ModelParams(**kwargs)


def cmd_dissipative_diagram(cfg: dict, outdir: Path, fmt: str,
                            workers: int | None) -> int:
    t0 = time.perf_counter()
    params = model_params(cfg)
    if params.kappa == 0 and params.gamma1 == 0 and params.gamma2 == 0:
        raise UsageError("all decay rates are zero: the Liouvillian is degenerate; "
                         "use the phase-diagram command for the dissipationless case")
    grid = _grid(cfg, "dissipative", cfg["numerics.n_max_dissipative"])
    table = sweep.run_dissipative_sweep(grid, workers=workers)
    header = ["mu", "k", "psi", "psi_re", "psi_im", "phase", "mean_n", "var_n",
              "g2", "mean_N", "label", "n_attractors", "trunc_flag"]
    _emit_table(outdir, "dissipative_diagram", fmt, header,
                [_sweep_row_values(r, dissipative=True) for r in table.rows])
    multi = [[r.mu, r.k, r.n_attractors] for r in table.rows if r.n_attractors > 1]
    _emit_table(outdir, "multistability", fmt, ["mu", "k", "n_attractors"], multi)
    write_meta(outdir, cfg, timings=table.timing, truncation=table.truncation,
               wall_s=time.perf_counter() - t0,
               extra={"psi_convention": "max-|psi| attractor per cell"})
    return _numeric_exit(table.rows)


def cmd_observables(cfg: dict, outdir: Path, fmt: str, workers: int | None) -> int:
    t0 = time.perf_counter()
    dissipative_mode = bool(cfg["observables.dissipative"])
    mu_list = float_list(cfg, "observables.mu_list")
    n_max = cfg["numerics.n_max_dissipative"] if dissipative_mode else cfg["numerics.n_max"]
    table = sweep.run_observable_cuts(
        model_params(cfg), mu_list,
        (cfg["observables.k_lo"], cfg["observables.k_hi"], cfg["observables.k_count"]),
        dissipative_mode, n_max=n_max, seed=cfg["numerics.seed"], workers=workers)
    rows = [[r.mu, r.k, r.mean_n, r.var_n, r.g2,
             r.phase if r.error is None else "error"] for r in table.rows]
    _emit_table(outdir, "observables", fmt,
                ["mu", "k", "mean_n", "var_n", "g2", "flag"], rows)
    write_meta(outdir, cfg, timings=table.timing, truncation={},
               wall_s=time.perf_counter() - t0,
               extra={"mode": "dissipative" if dissipative_mode else "equilibrium"})
    return _numeric_exit(table.rows)


def cmd_spectrum(cfg: dict, outdir: Path, fmt: str, workers: int | None) -> int:
    t0 = time.perf_counter()
    mu_list = float_list(cfg, "spectrum.mu_list")
    channels = tuple(tok.strip() for tok in str(cfg["spectrum.channels"]).split(","))
    omega = np.arange(cfg["spectrum.omega_lo"],
                      cfg["spectrum.omega_hi"] + 0.5 * cfg["spectrum.omega_step"],
                      cfg["spectrum.omega_step"])
    points = [LatticePoint(mu=mu, k=cfg["spectrum.k"]) for mu in mu_list]
    results = sweep.run_spectra(model_params(cfg), points, channels, omega,
                                n_max=cfg["numerics.n_max_dissipative"],
                                seed=cfg["numerics.seed"],
                                max_steps=cfg["spectrum.max_steps"],
                                workers=workers)
    from . import probes
    summary, peak_rows = [], []
    for res in results:
        for spec in res.spectra:
            stem = f"spectrum_{_fmt(res.point.mu)}_{spec.channel}"
            if spec.flag == "normal":
                _emit_table(outdir, stem, fmt, ["omega", "S"],
                            [[w, s] for w, s in zip(spec.omega_grid, spec.values)])
                for w, h in probes.find_peaks(spec, PEAK_PROMINENCE):
                    peak_rows.append([res.point.mu, spec.channel, w, h])
            else:
                _emit_table(outdir, stem, fmt, ["omega", "S"], [])
            summary.append([res.point.mu, res.point.k, spec.channel,
                            abs(res.psi), res.label, spec.n_ss, spec.flag,
                            spec.truncated])
    _emit_table(outdir, "spectra_summary", fmt,
                ["mu", "k", "channel", "psi", "label", "n_ss", "flag", "truncated"],
                summary)
    _emit_table(outdir, "peaks", fmt, ["mu", "channel", "omega", "height"], peak_rows)
    write_meta(outdir, cfg, timings={}, truncation={},
               wall_s=time.perf_counter() - t0)
    return EXIT_OK


COMMANDS = {
    "phase-diagram": cmd_phase_diagram,
    "lobes": cmd_lobes,
    "dissipative-diagram": cmd_dissipative_diagram,
    "observables": cmd_observables,
    "spectrum": cmd_spectrum,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="nvlattice",
                     description="Mean-field Mott/superfluid simulator for "
                                 "Lambda emitters in a cavity lattice")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="key=value config file or a previous meta.json")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json", "both"), default=None)
        p.add_argument("--seed", type=int, default=None)
        if name == "lobes":
            p.add_argument("--axis", choices=LOBE_AXES, default=None)
    return parser


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["numerics.seed"] = args.seed
        if args.out is not None:
            cfg["output.dir"] = args.out
        if args.format is not None:
            cfg["output.format"] = args.format
        if getattr(args, "axis", None) is not None:
            cfg["lobes.axis"] = args.axis
        _validate(cfg)
        outdir = Path(cfg["output.dir"])
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            probe = outdir / ".write_probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            print(f"cannot write to output directory {outdir}: {exc}", file=sys.stderr)
            return EXIT_IO
        try:
            return COMMANDS[args.command](cfg, outdir, cfg["output.format"], args.workers)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
    except (UsageError, ConfigError, DegenerateSteadyStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _validate(cfg: dict) -> None:
    try:
        model_params(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg["grid.mu_count"] < 2 or cfg["grid.k_count"] < 2:
        raise UsageError("grid counts must be >= 2")
    if cfg["output.format"] not in ("csv", "json", "both"):
        raise UsageError(f"unknown output format {cfg['output.format']!r}")
    if cfg["numerics.n_max"] < 1 or cfg["numerics.n_max_dissipative"] < 1:
        raise UsageError("photon cutoffs must be >= 1")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
