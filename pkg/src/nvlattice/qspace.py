"""Truncated single-site Hilbert space and operators.

One site is a Lambda-type three-level emitter (two ground states |g1>, |g2>
and one excited state |e>) coupled to a single bosonic cavity mode truncated
at n_max photons.  The basis index convention is fixed and bit-exact:

    state(level, n)  ->  index 3*n + level

with level 0 = |g1>, 1 = |g2>, 2 = |e| and n = 0..n_max, so the photon
ladder is a stride-3 band.  All operators are dense complex matrices of
size dim x dim with dim = 3*(n_max + 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEVEL_G1 = 0
LEVEL_G2 = 1
LEVEL_E = 2

# names accepted by atomic()
ATOMIC_OPS = ("sigma1-", "sigma2-", "sigma3-", "Pg1", "Pg2", "Pe")


@dataclass(frozen=True)
class ModelParams:
    """Physical knobs of one site and the lattice.

    Energies and rates are in units of the cavity-emitter coupling g
    (g = 1 by default).  delta3 = delta1 - delta2 is derived, never stored.
    Defaults are the workhorse parameter set used throughout the examples
    and tests (Omega=5, Delta1=4, Delta2=-2.5, g=1, z=4).
    """

    g: float = 1.0
    omega: float = 5.0
    delta1: float = 4.0
    delta2: float = -2.5
    kappa: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    z: int = 4

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be > 0 (it sets the energy unit), got {self.g}")
        for name in ("omega", "delta1", "delta2", "kappa", "gamma1", "gamma2"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.kappa < 0 or self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("decay rates kappa, gamma1, gamma2 must be >= 0")
        if self.z < 1:
            raise ValueError(f"coordination number z must be >= 1, got {self.z}")

    @property
    def delta3(self) -> float:
        return self.delta1 - self.delta2


@dataclass(frozen=True)
class HilbertSpace:
    """Emitter (x) Fock space truncated at n_max photons."""

    n_max: int

    @property
    def dim(self) -> int:
        return 3 * (self.n_max + 1)

    def index(self, level: int, n: int) -> int:
        """Basis index of |level, n>."""
        if not (0 <= level <= 2 and 0 <= n <= self.n_max):
            raise ValueError(f"no basis state (level={level}, n={n})")
        return 3 * n + level

    def basis_state(self, level: int, n: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(level, n)] = 1.0
        return v


@dataclass(frozen=True)
class Sector:
    """Invariant subspace of the conserved excitation number.

    For charge >= 1 away from the cutoff the sector is spanned by
    {|g1, n-1>, |e, n-1>, |g2, n>} (in that order); charge 0 holds only
    |g2, 0>.  The top sector is missing |g2, n_max+1> and is flagged.
    """

    charge: int
    indices: tuple[int, ...]
    truncated: bool = False


def build_space(n_max: int) -> HilbertSpace:
    """Truncated space with dim = 3*(n_max+1); requires n_max >= 1."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return HilbertSpace(n_max=int(n_max))


def _photon_identity(space: HilbertSpace) -> np.ndarray:
    return np.eye(space.n_max + 1)


def annihilation(space: HilbertSpace) -> np.ndarray:
    """Photon annihilation operator a (identity on the emitter factor)."""
    n = space.n_max + 1
    ladder = np.diag(np.sqrt(np.arange(1, n)), k=1)
    # photon index is the slow one: index = 3*n + level
    return np.kron(ladder, np.eye(3)).astype(complex)


def atomic(space: HilbertSpace, which: str) -> np.ndarray:
    """Emitter lowering operator or level projector, tensored with the
    photon identity.  Raising operators are the conjugate transposes."""
    m = np.zeros((3, 3))
    if which == "sigma1-":          # |g1><e|
        m[LEVEL_G1, LEVEL_E] = 1.0
    elif which == "sigma2-":        # |g2><e|
        m[LEVEL_G2, LEVEL_E] = 1.0
    elif which == "sigma3-":        # |g1><g2|
        m[LEVEL_G1, LEVEL_G2] = 1.0
    elif which == "Pg1":
        m[LEVEL_G1, LEVEL_G1] = 1.0
    elif which == "Pg2":
        m[LEVEL_G2, LEVEL_G2] = 1.0
    elif which == "Pe":
        m[LEVEL_E, LEVEL_E] = 1.0
    else:
        raise ValueError(f"unknown atomic operator {which!r}; one of {ATOMIC_OPS}")
    return np.kron(_photon_identity(space), m).astype(complex)


def single_site_hamiltonian(space: HilbertSpace, params: ModelParams) -> np.ndarray:
    """On-site Hamiltonian in the rotating frame:

        H0 = Delta1*Pe + Delta3*Pg2 + Omega*(s1+ + s1-) + g*(a s2+ + a+ s2-)
    """
    a = annihilation(space)
    s1m = atomic(space, "sigma1-")
    s2m = atomic(space, "sigma2-")
    h = (params.delta1 * atomic(space, "Pe")
         + params.delta3 * atomic(space, "Pg2")
         + params.omega * (s1m + s1m.conj().T)
         + params.g * (a @ s2m.conj().T + a.conj().T @ s2m))
    return h


def excitation_number(space: HilbertSpace) -> np.ndarray:
    """Conserved excitation (polariton) number N = a+a + Pe + Pg1.

    This is the combination that commutes with the on-site Hamiltonian for
    every parameter choice: the laser term Omega*s1+ moves |g1> to |e|
    (both carry one unit), the cavity term g*a*s2+ trades a photon for an
    |e| against |g2>.  Counting |g2> instead of |g1> would be raised by
    the laser term and is not conserved.
    """
    a = annihilation(space)
    return a.conj().T @ a + atomic(space, "Pe") + atomic(space, "Pg1")


def sectors(space: HilbertSpace) -> list[Sector]:
    """Charge sectors of the conserved N, ordered by increasing charge.

    Charge 0 is {|g2,0>}; charge n >= 1 is {|g1,n-1>, |e,n-1>, |g2,n>};
    the top sector (charge n_max+1) is truncated, missing |g2, n_max+1>.
    """
    out = [Sector(charge=0, indices=(space.index(LEVEL_G2, 0),))]
    for n in range(1, space.n_max + 1):
        out.append(Sector(
            charge=n,
            indices=(space.index(LEVEL_G1, n - 1),
                     space.index(LEVEL_E, n - 1),
                     space.index(LEVEL_G2, n)),
        ))
    out.append(Sector(
        charge=space.n_max + 1,
        indices=(space.index(LEVEL_G1, space.n_max),
                 space.index(LEVEL_E, space.n_max)),
        truncated=True,
    ))
    return out


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry magnitude of the commutator [A, B]."""
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"incompatible operator shapes {a.shape} and {b.shape}")
    return float(np.max(np.abs(a @ b - b @ a)))
