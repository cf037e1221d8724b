"""Lindblad generator, steady states and the self-consistency loop."""

import numpy as np
import pytest

from nvlattice.dissipative import (DegenerateSteadyStateError, Liouvillian,
                                   MeanFieldGenerator, SteadyStateResult,
                                   Trajectory, build_liouvillian,
                                   classify_dynamics, evolve_meanfield,
                                   residual_norm, self_consistent_steady_state,
                                   standard_jumps, steady_state, unvec, vec)
from nvlattice.equilibrium import LatticePoint, order_parameter
from nvlattice.qspace import ModelParams, annihilation, atomic, build_space

RATES_001 = ModelParams(kappa=0.01, gamma1=0.01, gamma2=0.01)


def dark_state(space):
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    i = space.index(1, 0)     # |g2, 0>
    rho[i, i] = 1.0
    return rho


# ------------------------------------------------------------ generator algebra

def test_generator_preserves_trace_and_hermiticity():
    space = build_space(3)
    params = ModelParams(kappa=0.3, gamma1=0.2, gamma2=0.1)
    from nvlattice.qspace import single_site_hamiltonian
    liouv = build_liouvillian(space, single_site_hamiltonian(space, params),
                              standard_jumps(space, params))
    dim = space.dim
    # trace functional annihilates the generator: tr(L rho) = 0 for all rho
    tr_row = np.zeros(dim * dim, dtype=complex)
    tr_row[::dim + 1] = 1.0
    assert np.max(np.abs(tr_row @ liouv.matrix)) < 1e-12
    # Hermiticity is preserved: L(rho)† = L(rho) for Hermitian rho
    rng = np.random.default_rng(3)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    drho = unvec(liouv.matrix @ vec(rho), dim)
    assert np.max(np.abs(drho - drho.conj().T)) < 1e-12


def test_build_liouvillian_validation():
    space = build_space(2)
    h = np.zeros((space.dim, space.dim))
    h[0, 1] = 1.0   # not Hermitian
    with pytest.raises(ValueError):
        build_liouvillian(space, h, [])
    with pytest.raises(ValueError):
        build_liouvillian(space, np.zeros((space.dim, space.dim)),
                          [(annihilation(space), -0.1)])


# ------------------------------------------------------------------- oracles

def test_damped_cavity_decay():
    """<n>(t) = e^{-kappa t} for a bare decaying cavity (closed form)."""
    space = build_space(4)
    kappa = 0.7
    params = ModelParams(omega=0.0, delta1=0.0, delta2=0.0, g=1e-12, kappa=kappa)
    rho0 = np.zeros((space.dim, space.dim), dtype=complex)
    rho0[space.index(0, 1), space.index(0, 1)] = 1.0      # |g1, 1>
    traj = evolve_meanfield(space, params, LatticePoint(mu=0.0, k=0.0),
                            rho0, t_max=3.0, dt=0.01)
    for t, _, mean_n in traj:
        assert abs(mean_n - np.exp(-kappa * t)) < 1e-6


def test_driven_two_level_bloch_steady_state():
    """Optical-Bloch closed form rho_ee = Omega^2/(Delta^2 + Gamma^2/4 + 2 Omega^2).

    The cavity is detached (g -> 0) and |g2> is drained by a weak extra
    jump so the dark state does not degenerate the null space; with
    gamma2 = 0 nothing repopulates |g2>, leaving exactly the two-level
    steady state."""
    space = build_space(1)
    from nvlattice.qspace import single_site_hamiltonian
    for delta1, omega, gamma1 in [(0.0, 1.3, 0.8), (1.0, 0.7, 0.5)]:
        params = ModelParams(omega=omega, delta1=delta1, delta2=0.0, g=1e-12)
        h = single_site_hamiltonian(space, params)
        jumps = [(atomic(space, "sigma1-"), gamma1),
                 (atomic(space, "sigma3-"), 0.3),
                 (annihilation(space), 0.5)]
        rho = steady_state(build_liouvillian(space, h, jumps))
        pe = float(np.real(np.trace(atomic(space, "Pe") @ rho)))
        expect = omega ** 2 / (delta1 ** 2 + gamma1 ** 2 / 4 + 2 * omega ** 2)
        assert abs(pe - expect) < 1e-8
        # photons stay in vacuum and |g2> empties
        nbar = float(np.real(np.trace(annihilation(space).conj().T
                                      @ annihilation(space) @ rho)))
        pg2 = float(np.real(np.trace(atomic(space, "Pg2") @ rho)))
        assert nbar < 1e-10 and pg2 < 1e-10


def test_steady_state_random_instances():
    """Residual, trace, Hermiticity and positivity on 20 random instances."""
    rng = np.random.default_rng(11)
    space = build_space(2)
    from nvlattice.equilibrium import mean_field_hamiltonian
    for _ in range(20):
        params = ModelParams(
            g=rng.uniform(0.5, 2), omega=rng.uniform(0.5, 5),
            delta1=rng.uniform(-3, 3), delta2=rng.uniform(-3, 3),
            kappa=rng.uniform(0.05, 1), gamma1=rng.uniform(0.05, 1),
            gamma2=rng.uniform(0.05, 1))
        point = LatticePoint(mu=rng.uniform(-1, 0), k=rng.uniform(0, 0.3))
        psi = complex(rng.normal(), rng.normal()) * 0.3
        h = mean_field_hamiltonian(space, params, point, psi)
        liouv = build_liouvillian(space, h, standard_jumps(space, params))
        rho = steady_state(liouv)
        assert residual_norm(liouv, rho) < 1e-9
        assert abs(np.trace(rho) - 1.0) < 1e-12
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_degenerate_null_space_raises():
    """Omega = 0 disconnects |g2,0> from the |g1>/|e> sector: two dark
    states, null dimension > 1, must raise (a residual check alone cannot
    see this)."""
    space = build_space(2)
    params = ModelParams(omega=0.0, kappa=0.1, gamma1=0.1, gamma2=0.0)
    from nvlattice.qspace import single_site_hamiltonian
    liouv = build_liouvillian(space, single_site_hamiltonian(space, params),
                              standard_jumps(space, params))
    with pytest.raises(DegenerateSteadyStateError) as exc:
        steady_state(liouv)
    assert exc.value.null_dim >= 2


# ------------------------------------------------------- self-consistency loop

def test_mott_cell_converges_to_dark_state():
    space = build_space(6)
    res = self_consistent_steady_state(space, RATES_001,
                                       LatticePoint(mu=-0.9, k=0.02))
    assert res.label == "converged"
    assert abs(res.psi) < 1e-9
    assert res.residual < 1e-9
    assert np.max(np.abs(res.rho - dark_state(space))) < 1e-6


def test_superfluid_cell_fixed_point():
    """Nonzero fixed point at a deep superfluid cell; the dissipative
    amplitude sits below the dissipationless order parameter."""
    space = build_space(6)
    point = LatticePoint(mu=-0.4, k=0.2)
    res = self_consistent_steady_state(space, RATES_001, point)
    assert res.label == "converged"
    assert abs(res.psi) > 1.0
    # exact self-consistency contracts: psi is trace(a rho) of the state,
    # and the in-phase gap of the real-gauge drive closes
    a = annihilation(space)
    assert abs(np.trace(a @ res.rho) - res.psi) < 1e-12
    assert abs(res.psi.real - res.drive) < 1e-12
    assert res.residual < 1e-9
    eq = order_parameter(build_space(8), RATES_001, point)
    assert abs(res.psi) < eq.psi


def test_self_consistency_deterministic():
    space = build_space(5)
    point = LatticePoint(mu=-0.35, k=0.18)
    a = self_consistent_steady_state(space, RATES_001, point, seed=0)
    b = self_consistent_steady_state(space, RATES_001, point, seed=0)
    assert a.psi == b.psi
    assert np.array_equal(a.rho, b.rho)
    assert a.label == b.label


def test_multistable_cell():
    """Coexistence of the (stable) dark state and a superfluid branch."""
    space = build_space(6)
    res = self_consistent_steady_state(space, RATES_001,
                                       LatticePoint(mu=-0.2, k=0.2))
    assert res.label == "multistable"
    assert len(res.fixed_points) >= 2
    amps = sorted(abs(psi) for psi, _ in res.fixed_points)
    assert amps[0] < 1e-6 and amps[-1] > 0.3
    # reported fixed point is the largest-amplitude attractor
    assert abs(res.psi) == pytest.approx(amps[-1])


def test_oscillatory_cell():
    """A cell inside the superfluid region where the damped iteration
    two-cycles (located by scanning the workhorse diagram)."""
    space = build_space(6)
    res = self_consistent_steady_state(space, RATES_001,
                                       LatticePoint(mu=-0.4, k=0.3))
    assert res.label == "oscillatory"
    assert abs(res.psi) > 0.3     # underlying fixed point still reported


def test_all_starts_degenerate_raises():
    space = build_space(2)
    params = ModelParams(omega=0.0, kappa=0.1, gamma1=0.1, gamma2=0.0, g=1e-12)
    with pytest.raises(DegenerateSteadyStateError):
        self_consistent_steady_state(space, params, LatticePoint(mu=-0.5, k=0.0))


# ----------------------------------------------------------------- dynamics

def test_evolve_validation():
    space = build_space(2)
    params = ModelParams(kappa=0.1)
    point = LatticePoint(mu=0.0, k=0.0)
    good = dark_state(space)
    with pytest.raises(ValueError):
        evolve_meanfield(space, params, point, good, t_max=1.0, dt=0.0)
    with pytest.raises(ValueError):
        evolve_meanfield(space, params, point, 2.0 * good, t_max=1.0, dt=0.1)


def test_evolve_fixed_point_is_stationary():
    """The dark state is an exact fixed point of the mean-field flow."""
    space = build_space(3)
    traj = evolve_meanfield(space, RATES_001, LatticePoint(mu=-0.5, k=0.1),
                            dark_state(space), t_max=5.0, dt=0.05)
    for t, psi, mean_n in traj:
        assert abs(psi) < 1e-12 and abs(mean_n) < 1e-12
    assert isinstance(traj, Trajectory)
    assert traj.rho_final.shape == (space.dim, space.dim)


def test_classify_dynamics_trivial_cases():
    ts = np.linspace(0, 100, 2001)
    const = Trajectory((t, 0.5 + 0j, 0.3) for t in ts)
    assert classify_dynamics(const) == "converged"
    sine = Trajectory((t, 0.5 + 0.2 * np.sin(t) + 0j, 0.3) for t in ts)
    assert classify_dynamics(sine) == "oscillatory"


def test_mean_field_generator_matches_build_liouvillian():
    space = build_space(3)
    point = LatticePoint(mu=-0.4, k=0.15)
    gen = MeanFieldGenerator(space, RATES_001, point)
    psi = 0.4 - 0.2j
    from nvlattice.equilibrium import mean_field_hamiltonian
    h = mean_field_hamiltonian(space, RATES_001, point, psi)
    ref = build_liouvillian(space, h, standard_jumps(space, RATES_001))
    assert np.max(np.abs(gen.matrix(psi) - ref.matrix)) < 1e-12
    # fast apply path agrees with the assembled matrix
    rng = np.random.default_rng(0)
    v = rng.normal(size=space.dim ** 2) + 1j * rng.normal(size=space.dim ** 2)
    assert np.max(np.abs(gen.apply(psi, v) - gen.matrix(psi) @ v)) < 1e-10
