"""Parameter-grid engine behind every diagram and cut.

Cells of the (mu, k) grid are independent tasks; execution is parallel
over mu rows (a dissipative row is warm-started left to right, so the row
is the natural task unit) and results are emitted in row-major order
(mu outer, k inner) regardless of worker count, which keeps output tables
byte-identical for any scheduling.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import dissipative, equilibrium, probes
from .dissipative import DegenerateSteadyStateError, MeanFieldGenerator
from .equilibrium import LatticePoint
from .qspace import ModelParams, build_space

WORKERS_ENV = "NVLATTICE_WORKERS"

# how many extremal cells get the higher-cutoff truncation re-check
N_RECHECK_CELLS = 5
TRUNC_TOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    mu_range: tuple[float, float, int]   # (lo, hi, count)
    k_range: tuple[float, float, int]
    params: ModelParams
    n_max: int
    mode: str                            # "equilibrium" | "dissipative"
    seed: int = 0

    def __post_init__(self):
        for lo, hi, count in (self.mu_range, self.k_range):
            if count < 2:
                raise ValueError("grid counts must be >= 2")
            if not lo < hi:
                raise ValueError(f"grid range must have lo < hi, got ({lo}, {hi})")
        if self.mode not in ("equilibrium", "dissipative"):
            raise ValueError(f"unknown grid mode {self.mode!r}")

    @property
    def mu_values(self) -> np.ndarray:
        lo, hi, count = self.mu_range
        return np.linspace(lo, hi, count)

    @property
    def k_values(self) -> np.ndarray:
        lo, hi, count = self.k_range
        return np.linspace(lo, hi, count)


@dataclass
class SweepRow:
    mu: float
    k: float
    psi_abs: float = np.nan
    psi_re: float = np.nan
    psi_im: float = np.nan
    phase: str = ""
    mean_n: float = np.nan
    var_n: float = np.nan
    g2: float | None = None
    mean_N: float = np.nan
    label: str = ""                 # dissipative only
    n_attractors: int = 0           # dissipative only
    kc: float | None = None         # equilibrium boundary overlay
    trunc_flag: bool = False
    error: str | None = None


@dataclass
class SweepTable:
    rows: list[SweepRow]
    timing: dict = field(default_factory=dict)
    truncation: dict = field(default_factory=dict)


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_tasks(fn, args_list, workers: int):
    """Ordered map over tasks, in-process when workers == 1."""
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list))


# ---------------------------------------------------------------- equilibrium

def _equilibrium_cell(space, params, mu: float, k: float) -> tuple[SweepRow, float]:
    t0 = time.perf_counter()
    row = SweepRow(mu=mu, k=k)
    try:
        gs = equilibrium.order_parameter(space, params, LatticePoint(mu=mu, k=k))
        obs = probes.observables(space, gs.ground_vector)
        row.psi_abs = gs.psi
        row.psi_re, row.psi_im = gs.psi, 0.0
        row.phase = gs.phase
        row.mean_n, row.var_n, row.g2 = obs.mean_n, obs.var_n, obs.g2
        row.mean_N = gs.mean_excitation
    except Exception as exc:   # per-cell failures are recorded, not fatal
        row.error = f"{type(exc).__name__}: {exc}"
    return row, time.perf_counter() - t0


def _equilibrium_row(grid: GridSpec, mu: float) -> tuple[list[SweepRow], list[float]]:
    space = build_space(grid.n_max)
    try:
        kc = equilibrium.perturbative_critical_hopping(space, grid.params, mu)
    except equilibrium.DegenerateGroundStateError:
        kc = None   # lobe edge: the boundary curve has a cusp here
    rows, times = [], []
    for k in grid.k_values:
        row, dt = _equilibrium_cell(space, grid.params, float(mu), float(k))
        row.kc = kc
        rows.append(row)
        times.append(dt)
    return rows, times


def run_equilibrium_sweep(grid: GridSpec, workers: int | None = None) -> SweepTable:
    """order_parameter + photon statistics per cell, k_c overlay per mu row."""
    if grid.mode != "equilibrium":
        raise ValueError("grid.mode must be 'equilibrium'")
    workers = resolve_workers(workers)
    results = _run_tasks(partial(_equilibrium_row, grid), list(grid.mu_values), workers)
    rows = [r for row_list, _ in results for r in row_list]
    times = [t for _, ts in results for t in ts]
    table = SweepTable(rows=rows, timing=_percentiles(times))
    _equilibrium_truncation_check(grid, table)
    return table


def _equilibrium_truncation_check(grid: GridSpec, table: SweepTable) -> None:
    """Re-run the extremal cells at n_max + 4; report the worst shift."""
    ok = [r for r in table.rows if r.error is None]
    if not ok:
        return
    extremal = sorted(ok, key=lambda r: r.mean_N, reverse=True)[:N_RECHECK_CELLS]
    extremal.append(max(ok, key=lambda r: r.psi_abs))
    space_hi = build_space(grid.n_max + 4)
    worst = 0.0
    for row in {id(r): r for r in extremal}.values():
        gs = equilibrium.order_parameter(space_hi, grid.params,
                                         LatticePoint(mu=row.mu, k=row.k))
        shift = max(abs(gs.psi - row.psi_abs), abs(gs.mean_excitation - row.mean_N))
        worst = max(worst, shift)
        if shift > TRUNC_TOL:
            row.trunc_flag = True
    table.truncation = {"n_max": grid.n_max, "n_max_recheck": grid.n_max + 4,
                        "max_shift": worst, "cells_rechecked": len(extremal)}


# ---------------------------------------------------------------- dissipative

def _dissipative_row(grid: GridSpec, mu: float) -> tuple[list[SweepRow], list[float]]:
    space = build_space(grid.n_max)
    rows, times = [], []
    warm = None
    for k in grid.k_values:
        t0 = time.perf_counter()
        row = SweepRow(mu=mu, k=float(k))
        try:
            res = dissipative.self_consistent_steady_state(
                space, grid.params, LatticePoint(mu=float(mu), k=float(k)),
                seed=grid.seed, warm_start=warm)
            obs = probes.observables(space, res.rho)
            row.psi_abs = abs(res.psi)
            row.psi_re, row.psi_im = res.psi.real, res.psi.imag
            row.phase = "SF" if abs(res.psi) > equilibrium.PSI_TOL else "MI"
            row.mean_n, row.var_n, row.g2 = obs.mean_n, obs.var_n, obs.g2
            row.mean_N = obs.mean_N
            row.label = res.label
            row.n_attractors = max(1, len(res.fixed_points))
            warm = res.psi
        except Exception as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            warm = None
        rows.append(row)
        times.append(time.perf_counter() - t0)
    return rows, times


def run_dissipative_sweep(grid: GridSpec, workers: int | None = None) -> SweepTable:
    """Self-consistent Lindblad steady state per cell, warm-started along k."""
    if grid.mode != "dissipative":
        raise ValueError("grid.mode must be 'dissipative'")
    workers = resolve_workers(workers)
    results = _run_tasks(partial(_dissipative_row, grid), list(grid.mu_values), workers)
    rows = [r for row_list, _ in results for r in row_list]
    times = [t for _, ts in results for t in ts]
    table = SweepTable(rows=rows, timing=_percentiles(times))
    _dissipative_truncation_check(grid, table)
    return table


def _dissipative_truncation_check(grid: GridSpec, table: SweepTable) -> None:
    ok = [r for r in table.rows if r.error is None]
    if not ok:
        return
    cells = sorted(ok, key=lambda r: r.mean_n, reverse=True)[:N_RECHECK_CELLS]
    n_max_hi = max(grid.n_max + 2, 8)
    space_hi = build_space(n_max_hi)
    worst = 0.0
    for row in cells:
        try:
            res = dissipative.self_consistent_steady_state(
                space_hi, grid.params, LatticePoint(mu=row.mu, k=row.k),
                seed=grid.seed)
            obs = probes.observables(space_hi, res.rho)
            shift = max(abs(abs(res.psi) - row.psi_abs), abs(obs.mean_n - row.mean_n))
        except DegenerateSteadyStateError:
            continue
        worst = max(worst, shift)
        if shift > TRUNC_TOL:
            row.trunc_flag = True
    table.truncation = {"n_max": grid.n_max, "n_max_recheck": n_max_hi,
                        "max_shift": worst, "cells_rechecked": len(cells)}


# ------------------------------------------------------------------- cuts

def run_observable_cuts(params: ModelParams, mu_list: list[float],
                        k_range: tuple[float, float, int], dissipative_mode: bool,
                        n_max: int = 8, seed: int = 0,
                        workers: int | None = None) -> SweepTable:
    """k-resolved <n_a>, variance and g2(0) for each mu (Fig.-5-style cuts),
    from the mean-field ground state or the dissipative steady state."""
    if not mu_list:
        raise ValueError("mu_list must be nonempty")
    lo, hi, count = k_range
    grid = GridSpec(mu_range=(min(mu_list), max(mu_list) + 1.0, 2),
                    k_range=(lo, hi, count), params=params, n_max=n_max,
                    mode="dissipative" if dissipative_mode else "equilibrium",
                    seed=seed)
    worker = _dissipative_row if dissipative_mode else _equilibrium_row
    workers = resolve_workers(workers)
    results = _run_tasks(partial(worker, grid), [float(m) for m in mu_list], workers)
    rows = [r for row_list, _ in results for r in row_list]
    times = [t for _, ts in results for t in ts]
    return SweepTable(rows=rows, timing=_percentiles(times))


# ------------------------------------------------------------------ spectra

@dataclass
class SpectrumPoint:
    point: LatticePoint
    psi: complex
    label: str
    spectra: list[probes.SpectrumResult]


def _spectrum_point(params: ModelParams, n_max: int, channels: tuple[str, ...],
                    omega_grid: np.ndarray, seed: int, max_steps: int,
                    point: LatticePoint) -> SpectrumPoint:
    space = build_space(n_max)
    res = dissipative.self_consistent_steady_state(space, params, point, seed=seed)
    gen = MeanFieldGenerator(space, params, point)
    liouv = gen.liouvillian(res.drive)
    dt = probes.correlation_timestep(params.omega, params.delta1)
    out = []
    for channel in channels:
        if channel == "a":
            alpha = gen.a_op
        else:
            from .qspace import atomic
            alpha = atomic(space, channel)
        n_ss = float(np.real(np.trace(alpha.conj().T @ alpha @ res.rho)))
        if n_ss < probes.N_FLOOR:
            out.append(probes.SpectrumResult(channel=channel, omega_grid=omega_grid,
                                             values=np.array([]), n_ss=n_ss,
                                             flag="no_emission"))
            continue
        tau, g1, truncated = probes.adaptive_first_order_correlation(
            liouv, res.rho, alpha, dt, max_steps=max_steps)
        out.append(probes.emission_spectrum(g1, tau, omega_grid, n_ss,
                                            channel=channel, truncated=truncated))
    return SpectrumPoint(point=point, psi=res.psi, label=res.label, spectra=out)


def run_spectra(params: ModelParams, point_list: list[LatticePoint],
                channels: tuple[str, ...], omega_grid: np.ndarray,
                n_max: int = 6, seed: int = 0, max_steps: int = 40_000,
                workers: int | None = None) -> list[SpectrumPoint]:
    """Emission spectra per (point, channel); MI points flag no_emission."""
    workers = resolve_workers(workers)
    fn = partial(_spectrum_point, params, n_max, tuple(channels),
                 np.asarray(omega_grid, dtype=float), seed, max_steps)
    return _run_tasks(fn, list(point_list), workers)


def _percentiles(times: list[float]) -> dict:
    if not times:
        return {}
    arr = np.array(times)
    return {"cells": len(times),
            "total_s": float(arr.sum()),
            "p50_ms": float(np.percentile(arr, 50) * 1e3),
            "p90_ms": float(np.percentile(arr, 90) * 1e3),
            "p99_ms": float(np.percentile(arr, 99) * 1e3)}
