"""Mean-field ground-state theory of the lattice.

The photon hopping between nearest-neighbour cavities is decoupled with a
(real, by gauge choice) order parameter psi = <a>, giving the single-site
mean-field Hamiltonian

    Hm(psi) = H0 - z*k*(a*conj(psi) + a†*psi) + z*k*|psi|^2 - mu*N.

Minimising the ground energy of Hm over psi classifies each (mu, k) point
as Mott insulator (psi = 0) or superfluid (psi > 0).  Mott-lobe boundaries
at k ~ 0 follow from charge-sector ground-energy crossings, and the
perturbative critical hopping follows from the quadratic Landau coefficient
of the ground energy in psi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qspace import (HilbertSpace, ModelParams, annihilation, atomic,
                     excitation_number, single_site_hamiltonian)

# superfluid threshold on the minimised order parameter
PSI_TOL = 1e-4

# golden-section refinement width
_PSI_XTOL = 1e-7

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class DegenerateGroundStateError(RuntimeError):
    """Ground state of H0 - mu*N is degenerate (lobe edge)."""


@dataclass(frozen=True)
class LatticePoint:
    """One point of the (mu, k) plane; k >= 0."""

    mu: float
    k: float

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"hopping k must be >= 0, got {self.k}")
        if not (np.isfinite(self.mu) and np.isfinite(self.k)):
            raise ValueError("mu and k must be finite")


@dataclass
class GroundStateResult:
    psi: float                 # minimising order parameter, >= 0
    energy: float              # E_g(psi)
    mean_excitation: float     # <N> in the ground vector
    phase: str                 # "MI" | "SF"
    ground_vector: np.ndarray


@dataclass(frozen=True)
class LobeBoundary:
    charge_low: int
    mu_boundary: float


def mean_field_hamiltonian(space: HilbertSpace, params: ModelParams,
                           point: LatticePoint, psi: complex) -> np.ndarray:
    """Hm = H0 - z*k*(a*conj(psi) + a†*psi) + z*k*|psi|^2 - mu*N."""
    a = annihilation(space)
    zk = params.z * point.k
    h = single_site_hamiltonian(space, params)
    h = h - zk * (a * np.conj(psi) + a.conj().T * psi)
    h = h + zk * abs(psi) ** 2 * np.eye(space.dim)
    h = h - point.mu * excitation_number(space)
    return h


def ground_energy(space: HilbertSpace, params: ModelParams,
                  point: LatticePoint, psi: complex) -> tuple[float, np.ndarray]:
    """Lowest eigenvalue and normalized eigenvector of Hm(psi)."""
    h = mean_field_hamiltonian(space, params, point, psi)
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigensolver failed at mu={point.mu}, k={point.k}, psi={psi}") from exc
    return float(vals[0]), vecs[:, 0]


def _golden_section(f, lo: float, hi: float, xtol: float) -> float:
    """Deterministic golden-section minimum of f on [lo, hi]."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > xtol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def order_parameter(space: HilbertSpace, params: ModelParams,
                    point: LatticePoint, coarse_points: int = 64) -> GroundStateResult:
    """Minimise E_g over psi in [0, psi_max], psi_max = sqrt(n_max).

    The mean-field energy is coercive on the truncated space (the zk*psi^2
    offset dominates once psi exceeds <a> <= sqrt(n_max)), so the minimum is
    interior and automatically self-consistent (dE/dpsi = 0 gives
    psi = <a>); the bound only fences the search.  64-point coarse scan
    (guards against the double-well shapes near first-order-like regions)
    followed by golden-section refinement; ties break toward smaller psi,
    so flat landscapes (k = 0) give psi = 0.
    """
    psi_max = np.sqrt(space.n_max)

    # hot loop of the sweep engine: build the static pieces once per point
    a = annihilation(space)
    x = a + a.conj().T
    h_static = (single_site_hamiltonian(space, params)
                - point.mu * excitation_number(space))
    zk = params.z * point.k
    eye = np.eye(space.dim)

    def hm(psi):
        return h_static - zk * psi * x + zk * psi ** 2 * eye

    def f(psi):
        return float(np.linalg.eigvalsh(hm(psi))[0])

    grid = np.linspace(0.0, psi_max, coarse_points)
    energies = [f(p) for p in grid]
    i = int(np.argmin(energies))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, coarse_points - 1)]
    psi = _golden_section(f, lo, hi, _PSI_XTOL)

    def solve(psi):
        vals, vecs = np.linalg.eigh(hm(psi))
        return float(vals[0]), vecs[:, 0]

    e_psi, vec_psi = solve(psi)
    e0, vec0 = solve(0.0)
    scale = max(1.0, abs(e0))
    if e0 <= e_psi + 1e-12 * scale:     # tie-break toward the MI solution
        psi, e_psi, vec_psi = 0.0, e0, vec0

    phase = "SF" if psi > PSI_TOL else "MI"
    return GroundStateResult(
        psi=float(psi), energy=e_psi,
        mean_excitation=mean_excitation(space, vec_psi),
        phase=phase, ground_vector=vec_psi)


def sector_ground_energy(n: int, params: ModelParams) -> float:
    """Ground energy of the on-site Hamiltonian in the charge-n sector.

    For n >= 1 the sector block in the basis {|g1,n-1>, |e,n-1>, |g2,n>}
    is [[0, Omega, 0], [Omega, Delta1, g*sqrt(n)], [0, g*sqrt(n), Delta3]];
    charge 0 holds the lone state |g2, 0> at energy Delta3.
    """
    if n < 0:
        raise ValueError(f"charge must be >= 0, got {n}")
    if n == 0:
        return float(params.delta3)
    gn = params.g * np.sqrt(n)
    block = np.array([[0.0, params.omega, 0.0],
                      [params.omega, params.delta1, gn],
                      [0.0, gn, params.delta3]])
    return float(np.linalg.eigvalsh(block)[0])


def lobe_boundaries(params: ModelParams, n_list: list[int]) -> list[LobeBoundary]:
    """mu at which the k=0 grand-canonical ground state hops from charge N
    to N+1: mu_boundary(N) = E(N+1) - E(N).

    Non-monotonic boundaries signal lobes of zero width (e.g. Omega = 0 or
    g = 0 collapse); they are reported as-is, not raised.
    """
    if not n_list:
        raise ValueError("n_list must be nonempty")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly ascending")
    return [LobeBoundary(charge_low=n,
                         mu_boundary=sector_ground_energy(n + 1, params)
                         - sector_ground_energy(n, params))
            for n in n_list]


def perturbative_critical_hopping(space: HilbertSpace, params: ModelParams,
                                  mu: float) -> float:
    """Critical hopping from second-order perturbation theory.

    The quadratic Landau coefficient of the ground energy in psi is
    zk + r with r = (zk)^2 * S, where

        S = sum_{n != gs} |<n|(a + a†)|gs>|^2 / (E_gs - E_n)  < 0

    over the eigenpairs of H0 - mu*N.  The transition sits at zk + r = 0,
    i.e. k_c = -1 / (z*S).  The denominator sign is fixed by requiring a
    positive k_c for a true (gap-below-everything) ground state.
    """
    h = single_site_hamiltonian(space, params) - mu * excitation_number(space)
    vals, vecs = np.linalg.eigh(h)
    if vals[1] - vals[0] < 1e-9:
        raise DegenerateGroundStateError(
            f"ground state of H0 - mu*N degenerate at mu={mu} "
            f"(gap {vals[1] - vals[0]:.3e}); lobe edge")
    x = annihilation(space)
    x = x + x.conj().T
    amps = vecs[:, 1:].conj().T @ (x @ vecs[:, 0])
    s = float(np.sum(np.abs(amps) ** 2 / (vals[0] - vals[1:])))
    return -1.0 / (params.z * s)


def mean_excitation(space: HilbertSpace, ground_vector: np.ndarray) -> float:
    """<N> in a normalized state."""
    n_op = excitation_number(space)
    return float(np.real(np.vdot(ground_vector, n_op @ ground_vector)))
