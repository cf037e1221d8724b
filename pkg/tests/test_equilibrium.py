"""Mean-field ground states, lobe boundaries and the critical hopping."""

import numpy as np
import pytest

from nvlattice.equilibrium import (PSI_TOL, DegenerateGroundStateError,
                                   LatticePoint, lobe_boundaries,
                                   mean_field_hamiltonian, order_parameter,
                                   perturbative_critical_hopping,
                                   sector_ground_energy)
from nvlattice.qspace import ModelParams, build_space

# laser off + vanishing cavity coupling: free-photon limit with an exact
# critical hopping k_c = -mu / z
FREE_PHOTON = ModelParams(g=1e-12, omega=0.0)


def bisect_onset(space, params, mu, k_lo, k_hi, tol=1e-4):
    """Smallest k with a superfluid minimiser, by bisection."""
    def is_sf(k):
        return order_parameter(space, params, LatticePoint(mu=mu, k=k)).psi > PSI_TOL
    assert not is_sf(k_lo) and is_sf(k_hi)
    while k_hi - k_lo > tol:
        mid = 0.5 * (k_lo + k_hi)
        if is_sf(mid):
            k_hi = mid
        else:
            k_lo = mid
    return 0.5 * (k_lo + k_hi)


def test_point_validation():
    with pytest.raises(ValueError):
        LatticePoint(mu=-0.5, k=-0.01)
    with pytest.raises(ValueError):
        LatticePoint(mu=float("nan"), k=0.1)


def test_zero_hopping_is_mott():
    space = build_space(8)
    gs = order_parameter(space, ModelParams(), LatticePoint(mu=-0.5, k=0.0))
    assert gs.psi == 0.0
    assert gs.phase == "MI"
    assert gs.mean_excitation == pytest.approx(1.0, abs=1e-10)


def test_free_photon_critical_hopping_exact():
    """k_c = -mu/4 for z=4 in the free-photon limit (analytic oracle)."""
    space = build_space(8)
    for mu in (-0.2, -0.4, -0.6):
        kc = perturbative_critical_hopping(space, FREE_PHOTON, mu)
        assert kc == pytest.approx(-mu / 4.0, abs=1e-10)


def test_free_photon_onset_matches_perturbative():
    space = build_space(8)
    for mu in (-0.2, -0.4, -0.6):
        onset = bisect_onset(space, FREE_PHOTON, mu, 0.5 * (-mu / 4), -mu)
        assert onset == pytest.approx(-mu / 4.0, abs=1e-3)


def test_onset_cross_validation_mid_lobe():
    """Perturbative k_c and the direct-minimisation onset agree within 5%."""
    space = build_space(8)
    params = ModelParams()
    for mu in (-0.5, -0.3):
        kc = perturbative_critical_hopping(space, params, mu)
        onset = bisect_onset(space, params, mu, 0.25 * kc, 4.0 * kc, tol=1e-5)
        assert abs(onset - kc) / kc < 0.05


def test_degenerate_lobe_edge_raises():
    """At the 0-1 sector-crossing chemical potential the unperturbed ground
    state is two-fold degenerate and the Landau expansion is invalid."""
    params = ModelParams()
    mu_edge = sector_ground_energy(1, params) - sector_ground_energy(0, params)
    space = build_space(8)
    with pytest.raises(DegenerateGroundStateError):
        perturbative_critical_hopping(space, params, mu_edge)


def test_lobe_boundaries_and_integer_steps():
    """With ascending boundaries (delta1 = 1, convex sector energies), the
    zero-hopping ground state steps through the integer lobes one by one."""
    params = ModelParams(delta1=1.0)
    bounds = lobe_boundaries(params, [0, 1, 2, 3])
    mus = [b.mu_boundary for b in bounds]
    assert all(np.isfinite(mus))
    assert mus == sorted(mus)
    # mean excitation is integer between boundaries and steps by exactly 1
    space = build_space(10)
    probes = [0.5 * (a + b) for a, b in zip(mus, mus[1:])]
    probes = [mus[0] - 0.2] + probes + [mus[-1] + 1e-5]
    values = []
    for mu in probes:
        gs = order_parameter(space, params, LatticePoint(mu=mu, k=0.0))
        assert gs.psi == 0.0
        values.append(gs.mean_excitation)
    for i, v in enumerate(values):
        assert v == pytest.approx(i, abs=1e-9)


def test_workhorse_lobes_are_inverted():
    """At the workhorse detuning (delta1 = 4) the sector energies are
    concave in N, so the N >= 2 boundaries come out *descending*: those
    lobes have zero width (an effective on-site attraction).  The function
    reports them rather than raising, and the zero-hopping ground state
    jumps from N = 1 straight past the collapsed bundle."""
    bounds = lobe_boundaries(ModelParams(), [1, 2, 3])
    mus = [b.mu_boundary for b in bounds]
    assert mus[0] > mus[1] > mus[2]
    assert mus[0] - mus[2] < 1e-3        # tightly collapsed bundle
    space = build_space(8)
    below = order_parameter(space, ModelParams(),
                            LatticePoint(mu=mus[0] - 0.05, k=0.0))
    above = order_parameter(space, ModelParams(),
                            LatticePoint(mu=mus[0] + 1e-3, k=0.0))
    assert below.mean_excitation == pytest.approx(1.0, abs=1e-9)
    assert above.mean_excitation > 2.5   # skips N = 2 entirely


def test_lobe_collapse_at_zero_omega_and_zero_g():
    """With the on-site repulsion switched off, all boundaries above the
    first coincide (zero-width lobes)."""
    for params in (ModelParams(omega=0.0), ModelParams(g=1e-12)):
        bounds = lobe_boundaries(params, [1, 2, 3, 4])
        mus = [b.mu_boundary for b in bounds]
        assert max(mus) - min(mus) < 1e-8


def test_lobe_boundaries_validation():
    with pytest.raises(ValueError):
        lobe_boundaries(ModelParams(), [])
    with pytest.raises(ValueError):
        lobe_boundaries(ModelParams(), [2, 1])
    with pytest.raises(ValueError):
        sector_ground_energy(-1, ModelParams())


def test_mean_field_hamiltonian_hermitian_and_reduces():
    space = build_space(4)
    params = ModelParams()
    point = LatticePoint(mu=-0.5, k=0.1)
    h = mean_field_hamiltonian(space, params, point, 0.3 + 0.1j)
    assert np.max(np.abs(h - h.conj().T)) < 1e-12
    h0 = mean_field_hamiltonian(space, params, LatticePoint(mu=0.0, k=0.0), 0.0)
    from nvlattice.qspace import single_site_hamiltonian
    assert np.allclose(h0, single_site_hamiltonian(space, params))


def test_order_parameter_deterministic_and_bounded():
    space = build_space(6)
    params = ModelParams()
    point = LatticePoint(mu=-0.4, k=0.2)
    a = order_parameter(space, params, point)
    b = order_parameter(space, params, point)
    assert a.psi == b.psi and a.energy == b.energy
    assert 0.0 <= a.psi <= np.sqrt(space.n_max)
    # the minimum it reports is no worse than the psi = 0 candidate
    from nvlattice.equilibrium import ground_energy
    e0, _ = ground_energy(space, params, point, 0.0)
    assert a.energy <= e0 + 1e-10
