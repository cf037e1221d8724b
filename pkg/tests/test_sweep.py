"""Grid engine: ordering, determinism across worker counts, truncation."""

import numpy as np
import pytest

from nvlattice.equilibrium import LatticePoint
from nvlattice.qspace import ModelParams
from nvlattice.sweep import (WORKERS_ENV, GridSpec, resolve_workers,
                             run_dissipative_sweep, run_equilibrium_sweep,
                             run_observable_cuts, run_spectra)

RATES = ModelParams(kappa=0.05, gamma1=0.05, gamma2=0.05)


def small_grid(mode, params=RATES, n_max=4):
    return GridSpec(mu_range=(-0.8, -0.2, 3), k_range=(0.0, 0.24, 3),
                    params=params, n_max=n_max, mode=mode, seed=0)


def row_key(table):
    return [(r.mu, r.k, r.psi_abs, r.psi_re, r.psi_im, r.phase, r.mean_n,
             r.var_n, r.g2, r.mean_N, r.label, r.n_attractors, r.kc,
             r.trunc_flag, r.error) for r in table.rows]


def test_gridspec_validation():
    with pytest.raises(ValueError):
        small_grid("nonsense")
    with pytest.raises(ValueError):
        GridSpec(mu_range=(-1.0, 0.0, 1), k_range=(0.0, 0.3, 3),
                 params=RATES, n_max=4, mode="equilibrium")
    with pytest.raises(ValueError):
        GridSpec(mu_range=(0.0, -1.0, 3), k_range=(0.0, 0.3, 3),
                 params=RATES, n_max=4, mode="equilibrium")
    with pytest.raises(ValueError):
        run_equilibrium_sweep(small_grid("dissipative"))
    with pytest.raises(ValueError):
        run_dissipative_sweep(small_grid("equilibrium"))


def test_resolve_workers(monkeypatch):
    assert resolve_workers(3) == 3
    assert resolve_workers(0) == 1
    monkeypatch.setenv(WORKERS_ENV, "5")
    assert resolve_workers(None) == 5
    monkeypatch.delenv(WORKERS_ENV)
    assert resolve_workers(None) >= 1


def test_equilibrium_sweep_row_major_and_content():
    grid = small_grid("equilibrium", params=ModelParams(), n_max=6)
    table = run_equilibrium_sweep(grid, workers=1)
    assert len(table.rows) == 9
    # row-major: mu outer, k inner
    expect = [(mu, k) for mu in grid.mu_values for k in grid.k_values]
    assert [(r.mu, r.k) for r in table.rows] == [(float(m), float(k))
                                                 for m, k in expect]
    for r in table.rows:
        assert r.error is None
        assert r.phase in ("MI", "SF")
        assert (r.phase == "SF") == (r.psi_abs > 1e-4)
        if r.phase == "MI":
            # residual photon admixture of the polariton, constant along k
            assert r.var_n < 0.01
            assert r.g2 is None or r.g2 < 1.0
    # kc overlay constant along each row
    for i in range(0, 9, 3):
        assert len({table.rows[i + j].kc for j in range(3)}) == 1
    assert table.timing["cells"] == 9
    assert table.truncation["cells_rechecked"] >= 1


def test_equilibrium_sweep_deterministic_across_workers():
    grid = small_grid("equilibrium", params=ModelParams(), n_max=5)
    t1 = run_equilibrium_sweep(grid, workers=1)
    t2 = run_equilibrium_sweep(grid, workers=2)
    t1b = run_equilibrium_sweep(grid, workers=1)
    assert row_key(t1) == row_key(t2) == row_key(t1b)


def test_dissipative_sweep_content_and_determinism():
    grid = small_grid("dissipative")
    t1 = run_dissipative_sweep(grid, workers=1)
    t2 = run_dissipative_sweep(grid, workers=2)
    assert row_key(t1) == row_key(t2)
    assert len(t1.rows) == 9
    labels = {r.label for r in t1.rows if r.error is None}
    assert labels <= {"converged", "multistable", "oscillatory", "indeterminate"}
    # the k = 0 column decouples the lattice: dark state, no photons
    for r in t1.rows:
        if r.k == 0.0 and r.error is None:
            assert r.psi_abs < 1e-9 and r.mean_n < 1e-9
    assert "n_max" in t1.truncation


def test_observable_cuts():
    table = run_observable_cuts(ModelParams(), mu_list=[-0.5, -0.3],
                                k_range=(0.0, 0.3, 4), dissipative_mode=False,
                                n_max=6, workers=1)
    assert len(table.rows) == 8
    assert sorted({r.mu for r in table.rows}) == [-0.5, -0.3]
    with pytest.raises(ValueError):
        run_observable_cuts(ModelParams(), mu_list=[], k_range=(0.0, 0.3, 4),
                            dissipative_mode=False)


def test_run_spectra_flags_and_shapes():
    grid_w = np.arange(-20.0, 20.0 + 1e-9, 0.1)
    points = [LatticePoint(mu=-0.9, k=0.02),    # deep Mott: dark, no emission
              LatticePoint(mu=-0.5, k=0.22)]    # superfluid: emits
    out = run_spectra(RATES, points, channels=("a",), omega_grid=grid_w,
                      n_max=4, max_steps=4000, workers=1)
    assert len(out) == 2
    mi, sf = out
    assert abs(mi.psi) < 1e-6
    assert mi.spectra[0].flag == "no_emission"
    assert abs(sf.psi) > 0.1
    spec = sf.spectra[0]
    assert spec.flag == "normal"
    assert spec.values.shape == grid_w.shape
    assert np.all(spec.values >= 0.0)
