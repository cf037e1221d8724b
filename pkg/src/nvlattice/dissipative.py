"""Lindblad master equation for the mean-field site.

The generator implements

    rho' = -i[Hm, rho] + (kappa/2) D[a] rho + sum_i (Gamma_i/2) D[s_i-] rho

with D[A]rho = 2 A rho A† - A†A rho - rho A†A, so kappa is the full decay
rate of <a†a> (unit-tested against the damped-cavity closed form).  The
dissipators are the cavity loss (a, kappa) and the spontaneous decays
|e> -> |g1> (sigma1-, Gamma1) and |e> -> |g2> (sigma2-, Gamma2).

Density matrices are vectorized column-major (Fortran order), so
vec(A rho B) = (B^T kron A) vec(rho).

Self-consistency.  The order parameter psi = <a> feeds back into Hm and is
complex here (dissipation fixes the phase dynamically; the equilibrium
real-psi gauge is unavailable).  The map psi -> F(psi) = trace(a rho_ss(psi))
is exactly U(1)-covariant, F(e^{i phi} psi) = e^{i phi} F(psi): the global
phase of psi is a gauge degree of freedom, and only the amplitude and the
relative phase between psi and F(psi) carry physics.  The iteration is run
in the real gauge (psi = s real, sign allowed, continuing the equilibrium
convention):

    s <- (1 - beta) s + beta Re F(s) ,

followed by a secant polish of Re F(s) = s.  The in-phase component Re F
carries the stability content (an antiphase response, Re F < 0, damps the
seed even when |F| > |s|); the residual quadrature Im F(s*) = O(Gamma s) is
the frequency pulling of the metastable condensate phase and is reported
through psi = trace(a rho) of the returned steady state, so psi and rho are
exactly consistent with each other.  The trivial amplitude s = 0 (dark
state) is always a fixed point; it is kept as an attractor only where the
damped map contracts toward it, so a superfluid cell with an unstable dark
state is labelled converged, not multistable.  A stable 2-cycle of the map
is labelled oscillatory; other non-settling starts trigger the dynamical
classifier on an integrated mean-field trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .equilibrium import LatticePoint
from .qspace import (HilbertSpace, ModelParams, annihilation, atomic,
                     excitation_number, single_site_hamiltonian)

# attractors closer than this (in |psi|) are the same fixed point
PSI_DISTINCT = 1e-4

# standard multistart magnitudes and phases for the fixed-point loop;
# phases are gauge copies under the exact U(1) covariance, so only one
# representative per distinct modulus is actually iterated
MULTISTART_MAGNITUDES = (0.0, 0.3, 0.8, 1.5)
MULTISTART_PHASES = (1.0, 1.0j)
N_RANDOM_STARTS = 2


class DegenerateSteadyStateError(RuntimeError):
    """Liouvillian null space has dimension > 1."""

    def __init__(self, null_dim: int, msg: str = ""):
        self.null_dim = null_dim
        super().__init__(msg or f"steady state degenerate: null-space dimension {null_dim}")


@dataclass(frozen=True)
class Liouvillian:
    space: HilbertSpace
    matrix: np.ndarray   # dim^2 x dim^2, acts on column-major vec(rho)


@dataclass
class SteadyStateResult:
    rho: np.ndarray
    psi: complex                       # trace(a rho) at the reported fixed point
    residual: float                    # max |L(drive) vec(rho)|
    iterations: int
    label: str                         # converged | oscillatory | multistable | indeterminate
    fixed_points: list[tuple[complex, np.ndarray]] = field(default_factory=list)
    drive: float = 0.0                 # real-gauge amplitude; rho is the
                                       # steady state of L(drive), Re psi == drive


def vec(rho: np.ndarray) -> np.ndarray:
    return rho.ravel(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return v.reshape((dim, dim), order="F")


def _commutator_superop(op: np.ndarray) -> np.ndarray:
    """Superoperator of [op, .] in the column-major convention."""
    eye = np.eye(op.shape[0])
    return np.kron(eye, op) - np.kron(op.T, eye)


def build_liouvillian(space: HilbertSpace, h: np.ndarray,
                      jumps: list[tuple[np.ndarray, float]]) -> Liouvillian:
    """Vectorized generator -i[H, .] + sum (rate/2)(2 A . A† - {A†A, .})."""
    if np.max(np.abs(h - h.conj().T)) > 1e-10 * max(1.0, float(np.max(np.abs(h)))):
        raise ValueError("Hamiltonian passed to build_liouvillian is not Hermitian")
    eye = np.eye(space.dim)
    mat = -1j * _commutator_superop(h)
    for op, rate in jumps:
        if rate < 0:
            raise ValueError(f"jump rate must be >= 0, got {rate}")
        ada = op.conj().T @ op
        mat = mat + (rate / 2.0) * (2.0 * np.kron(op.conj(), op)
                                    - np.kron(eye, ada) - np.kron(ada.T, eye))
    return Liouvillian(space=space, matrix=mat)


def standard_jumps(space: HilbertSpace, params: ModelParams) -> list[tuple[np.ndarray, float]]:
    """The model's jump set {(a, kappa), (sigma1-, Gamma1), (sigma2-, Gamma2)}."""
    return [(annihilation(space), params.kappa),
            (atomic(space, "sigma1-"), params.gamma1),
            (atomic(space, "sigma2-"), params.gamma2)]


def residual_norm(liouv: Liouvillian, rho: np.ndarray) -> float:
    return float(np.max(np.abs(liouv.matrix @ vec(rho))))


def _trace_row(dim: int) -> np.ndarray:
    row = np.zeros(dim * dim, dtype=complex)
    row[::dim + 1] = 1.0     # diagonal entries of vec(rho) in F-order
    return row


def _null_solve(mat: np.ndarray, dim: int, row: int) -> np.ndarray | None:
    m = mat.copy()
    m[row, :] = _trace_row(dim)
    b = np.zeros(dim * dim, dtype=complex)
    b[row] = 1.0
    try:
        v = np.linalg.solve(m, b)
    except np.linalg.LinAlgError:
        return None
    if np.max(np.abs(mat @ v)) > 1e-8 * max(1.0, float(np.max(np.abs(v)))):
        return None
    return v


def steady_state(liouv: Liouvillian) -> np.ndarray:
    """Unique null vector of the generator, Hermitized and trace-normalized.

    Solves L rho = 0 with one redundant row replaced by the trace
    constraint.  Uniqueness is checked by repeating the solve with the
    constraint in a different row: with a multi-dimensional null space
    (e.g. disconnected dark states at Omega = 0) the two solves land on
    different mixtures, which triggers an SVD count of the null space and
    a DegenerateSteadyStateError.
    """
    dim = liouv.space.dim
    v1 = _null_solve(liouv.matrix, dim, 0)
    v2 = _null_solve(liouv.matrix, dim, dim * dim - 1)
    if v1 is not None and v2 is not None and np.max(np.abs(v1 - v2)) < 1e-6:
        rho = unvec(v1, dim)
        rho = 0.5 * (rho + rho.conj().T)
        return rho / np.trace(rho).real
    sv = np.linalg.svd(liouv.matrix, compute_uv=False)
    null_dim = int(np.sum(sv < 1e-10 * max(float(sv[0]), 1.0)))
    if null_dim > 1:
        raise DegenerateSteadyStateError(null_dim)
    if v1 is not None:
        rho = unvec(v1, dim)
        rho = 0.5 * (rho + rho.conj().T)
        return rho / np.trace(rho).real
    raise RuntimeError("steady-state solve failed with a unique null space; "
                       "generator likely ill-conditioned")


class MeanFieldGenerator:
    """L(psi) and its co-rotating variant for fixed (params, mu, k).

    L(psi, w) = L0 + i*z*k*(conj(psi)*K[a] + psi*K[a†]) - i*w*K[N] with
    K[X] = [X, .]; only the psi-linear drive term of Hm changes between
    iterations (the z*k*|psi|^2 identity shift commutes away).  Solves are
    sparse LU: the generator of this local model is ~2% dense.
    """

    def __init__(self, space: HilbertSpace, params: ModelParams, point: LatticePoint):
        self.space = space
        self.params = params
        self.point = point
        h_static = (single_site_hamiltonian(space, params)
                    - point.mu * excitation_number(space))
        self._l0 = build_liouvillian(space, h_static, standard_jumps(space, params)).matrix
        a = annihilation(space)
        self._k_a = _commutator_superop(a)
        self._k_adag = _commutator_superop(a.conj().T)
        self._k_n = _commutator_superop(excitation_number(space))
        self._zk = params.z * point.k
        self.a_op = a
        dim = space.dim
        n2 = dim * dim
        # solver components with row 0 pre-replaced by the trace constraint
        def _zeroed(mat):
            m = np.array(mat, copy=True)
            m[0, :] = 0.0
            return sps.csr_matrix(m)
        trace_block = np.zeros((n2, n2), dtype=complex)
        trace_block[0, :] = _trace_row(dim)
        self._s_l0 = _zeroed(self._l0) + sps.csr_matrix(trace_block)
        self._s_ka = _zeroed(1j * self._zk * self._k_a)
        self._s_kadag = _zeroed(1j * self._zk * self._k_adag)
        self._s_kn = _zeroed(-1j * self._k_n)
        self._rhs = np.zeros(n2, dtype=complex)
        self._rhs[0] = 1.0
        # LU factorizations reused across nearby drives (iterative
        # refinement); a short list covers both clusters of a 2-cycle orbit
        self._lu_cache: list[tuple[complex, object]] = []
        self._diag_idx = np.arange(0, n2, dim + 1)
        # sparse copies for fast mean-field time stepping
        self._sp_l0 = sps.csr_matrix(self._l0)
        self._sp_drive_a = sps.csr_matrix(1j * self._zk * self._k_a)
        self._sp_drive_adag = sps.csr_matrix(1j * self._zk * self._k_adag)
        self._sp_kn = sps.csr_matrix(-1j * self._k_n)

    def matrix(self, psi: complex, omega: float = 0.0) -> np.ndarray:
        m = self._l0 + 1j * self._zk * (np.conj(psi) * self._k_a + psi * self._k_adag)
        if omega != 0.0:
            m = m - 1j * omega * self._k_n
        return m

    def liouvillian(self, psi: complex, omega: float = 0.0) -> Liouvillian:
        return Liouvillian(space=self.space, matrix=self.matrix(psi, omega))

    def apply(self, psi: complex, v: np.ndarray) -> np.ndarray:
        """L(psi) v without assembling the dense matrix."""
        return (self._sp_l0 @ v + np.conj(psi) * (self._sp_drive_a @ v)
                + psi * (self._sp_drive_adag @ v))

    def solve_steady(self, psi: complex, omega: float = 0.0,
                     check_unique: bool = False) -> np.ndarray:
        """Steady state of L(psi, omega) via sparse LU with a trace row."""
        if check_unique:
            rho = steady_state(self.liouvillian(psi, omega))
            return rho
        v = None
        if omega == 0.0 and self._lu_cache:
            psi_c, lu = min(self._lu_cache, key=lambda e: abs(psi - e[0]))
            if abs(psi - psi_c) < 0.02:
                # a factorization at a nearby drive preconditions iterative
                # refinement; one refinement step costs ~1/20 of a refactor
                x = lu.solve(self._rhs)
                for _ in range(12):
                    lx = self.apply(psi, x)
                    lx[0] = x[self._diag_idx].sum()   # trace-constraint row
                    r = self._rhs - lx
                    if float(np.max(np.abs(r))) < 1e-12:
                        v = x
                        break
                    x = x + lu.solve(r)
        if v is None:
            mat = self._s_l0 + np.conj(psi) * self._s_ka + psi * self._s_kadag
            if omega != 0.0:
                mat = mat + omega * self._s_kn
            try:
                lu = spla.splu(mat.tocsc())
            except RuntimeError as exc:   # singular factorization
                raise DegenerateSteadyStateError(2, f"sparse solve failed: {exc}") from exc
            v = lu.solve(self._rhs)
            if omega == 0.0:
                self._lu_cache.append((psi, lu))
                del self._lu_cache[:-3]
        lres = float(np.max(np.abs(self.apply(psi, v) + omega * (self._sp_kn @ v))))
        if not np.isfinite(v).all() or lres > 1e-7 * max(1.0, float(np.max(np.abs(v)))):
            # fall back to the robust dense path (also detects degeneracy)
            return steady_state(self.liouvillian(psi, omega))
        rho = unvec(v, self.space.dim)
        rho = 0.5 * (rho + rho.conj().T)
        return rho / np.trace(rho).real

    def mean_a(self, rho: np.ndarray) -> complex:
        return complex(np.trace(self.a_op @ rho))


@dataclass
class _Attractor:
    s: float            # gauge-invariant amplitude |fixed point|
    drive: float        # signed real-gauge drive rho is the steady state of
    rho: np.ndarray
    psi: complex        # trace(a rho), Re psi == drive at the fixed point


def _amplitude_gap(gen: MeanFieldGenerator, s: float):
    """In-phase self-consistency defect Re F(s) - s in the real gauge."""
    rho = gen.solve_steady(s)
    f = gen.mean_a(rho)
    return f.real - s, rho, f


def _refine_amplitude(gen: MeanFieldGenerator, s0: float):
    """Secant polish of Re F(s) = s from s0; returns an _Attractor or None."""
    try:
        g0, rho, f = _amplitude_gap(gen, s0)
    except DegenerateSteadyStateError:
        return None
    s, g = s0, g0
    s_prev, g_prev = s0 * (1.0 + 1e-6) + 1e-9, None
    for _ in range(30):
        if abs(g) < 1e-11:
            return _Attractor(s=abs(s), drive=s, rho=rho, psi=f)
        if g_prev is None:
            try:
                g_prev, _, _ = _amplitude_gap(gen, s_prev)
            except DegenerateSteadyStateError:
                return None
            s, s_prev, g, g_prev = s_prev, s, g_prev, g
            continue
        if g == g_prev:
            return None
        s_next = s - g * (s - s_prev) / (g - g_prev)
        if not np.isfinite(s_next) or abs(s_next) > 100.0:
            return None
        try:
            g_next, rho, f = _amplitude_gap(gen, s_next)
        except DegenerateSteadyStateError:
            return None
        s_prev, g_prev, s, g = s, g, s_next, g_next
    return None


def _damped_slope(gen: MeanFieldGenerator, s_star: float, beta: float,
                  h: float = 1e-6):
    """Slope of the damped map (1-beta)s + beta*Re F(s) at s_star, or None."""
    try:
        gap_p, _, _ = _amplitude_gap(gen, s_star + h)
        gap_m, _, _ = _amplitude_gap(gen, s_star - h)
    except DegenerateSteadyStateError:
        return None
    f_prime = (gap_p - gap_m) / (2.0 * h) + 1.0
    return (1.0 - beta) + beta * f_prime


def _cycle_probe(gen: MeanFieldGenerator, beta: float, s_star: float,
                 x0: float, x1: float):
    """Resolve the fate of an orbit around a map-unstable fixed point s_star.

    Solves G(G(x)) = x (G is the damped map) by a secant on the deflated
    defect (G^2(x) - x)/(x - s_star), which removes the trivial root at
    s_star itself.  Returns "cycle" if a stable 2-cycle encloses s_star,
    an _Attractor if the orbit is actually escaping to another stable fixed
    point of G (e.g. the dark state), and None when undecided.
    """
    def g_of(s):
        gap, _, _ = _amplitude_gap(gen, s)
        return s + beta * gap, gap

    def defect(x):
        y, _ = g_of(x)
        z, _ = g_of(y)
        return z - x, y

    try:
        if abs(x1 - x0) < 1e-9:
            x1 = x0 + max(1e-4, 0.01 * abs(x0 - s_star))
        d0, _ = defect(x0)
        d1, y1 = defect(x1)
        h0 = d0 / (x0 - s_star) if abs(x0 - s_star) > 1e-12 else None
        h1 = d1 / (x1 - s_star) if abs(x1 - s_star) > 1e-12 else None
        for _ in range(12):
            if abs(d1) < 1e-9:
                _, gap_x = g_of(x1)
                if abs(gap_x) < 1e-8:
                    # landed on a fixed point of G itself: the orbit is
                    # escaping there, not cycling
                    att = _refine_amplitude(gen, x1)
                    if att is not None:
                        slope = _damped_slope(gen, att.drive, beta)
                        if slope is not None and abs(slope) <= 1.0 - 1e-9:
                            return att
                    return None
                # stability of the 2-cycle {x1, y1}: |G'(x1) G'(y1)| < 1
                fd = 1e-6
                sx = (g_of(x1 + fd)[0] - g_of(x1 - fd)[0]) / (2 * fd)
                sy = (g_of(y1 + fd)[0] - g_of(y1 - fd)[0]) / (2 * fd)
                return "cycle" if abs(sx * sy) < 1.0 else None
            if h0 is None or h1 is None or h1 == h0:
                return None
            x_next = x1 - h1 * (x1 - x0) / (h1 - h0)
            if not np.isfinite(x_next) or abs(x_next) > 100.0 \
                    or abs(x_next - s_star) < 1e-12:
                return None
            d_next, y_next = defect(x_next)
            x0, h0 = x1, h1
            x1, d1, y1 = x_next, d_next, y_next
            h1 = d1 / (x1 - s_star)
    except DegenerateSteadyStateError:
        return None
    return None


# Iterations after which a non-settled start is polished directly; without
# this, cells whose damped orbit cycles without a clean period-2 signature
# burn the whole iteration budget (tens of seconds) before the end-of-loop
# rescue fires.
_POLISH_CHECKPOINTS = (40, 160)


def _run_start(gen: MeanFieldGenerator, s0: float, beta: float, max_iter: int,
               known: list[_Attractor]):
    """Damped amplitude iteration from one start.

    Returns (attractor | None, iterations, failure) with failure in
    {None, 'degenerate', 'oscillatory', 'nonconverged'}.  An attractor equal
    (within PSI_DISTINCT) to a known one is returned by identity so callers
    can dedupe cheaply.
    """
    s = float(s0)
    history: list[float] = []
    watch_root, watch_until, watch_window = None, 0, 0.0
    for it in range(1, max_iter + 1):
        try:
            gap, rho, f = _amplitude_gap(gen, s)
        except DegenerateSteadyStateError:
            return None, it, "degenerate"
        new = (1.0 - beta) * s + beta * (s + gap)
        if abs(new - s) < 1e-9:
            if abs(gap) < 1e-11:
                return _Attractor(s=abs(s), drive=s, rho=rho, psi=f), it, None
            att = _refine_amplitude(gen, new)
            return (att, it, None) if att is not None else (None, it, "nonconverged")
        for att in known:   # adopt an already-found attractor's basin
            if abs(abs(new) - att.s) < PSI_DISTINCT and \
                    abs(abs(new) - att.s) < abs(abs(s) - att.s):
                return att, it, None
        history.append(new)
        if len(history) >= 9:
            even, odd = history[-8::2], history[-7::2]
            if (max(even) - min(even) < 1e-8 and max(odd) - min(odd) < 1e-8
                    and abs(even[-1] - odd[-1]) > 1e-6):
                # stable 2-cycle of the damped map; the (map-unstable) fixed
                # point it brackets is recovered from the cycle midpoint
                att = _refine_amplitude(gen, 0.5 * (even[-1] + odd[-1]))
                return att, it, "oscillatory"
        if it in _POLISH_CHECKPOINTS and len(history) >= 2:
            # not settled after the burn-in: polish from the orbit midpoint
            # and classify by the damped-map slope at the fixed point
            att = _refine_amplitude(gen, 0.5 * (history[-1] + history[-2]))
            if att is not None:
                slope = _damped_slope(gen, att.drive, beta)
                if slope is not None:
                    if abs(slope) <= 1.0 - 1e-9:
                        return att, it, None
                    if slope <= -1.0:
                        # map-unstable fixed point: the orbit either settles
                        # into a stable 2-cycle around it (oscillatory) or
                        # escapes to another attractor; probe which
                        fate = _cycle_probe(gen, beta, att.drive,
                                            history[-1], history[-2])
                        if fate == "cycle":
                            return att, it, "oscillatory"
                        if isinstance(fate, _Attractor):
                            return fate, it, None
                        # undecided (e.g. period-doubled orbit): watch the
                        # next stretch of iterates; a bounded orbit that
                        # never leaves the root's neighbourhood is cycling
                        watch_root = att
                        watch_until = it + 60
                        watch_window = max(0.4 * att.s, 0.1)
                # slope > 1: a basin-boundary repeller; keep iterating away
        if watch_root is not None:
            if abs(new - watch_root.drive) > watch_window:
                watch_root = None          # escaped: not a bounded orbit
            elif it >= watch_until:
                return watch_root, it, "oscillatory"
        s = new
    att = _refine_amplitude(gen, s)   # slow linear convergence: polish directly
    if att is not None:
        return att, max_iter, None
    return None, max_iter, "nonconverged"


def self_consistent_steady_state(space: HilbertSpace, params: ModelParams,
                                 point: LatticePoint, *, beta: float = 0.5,
                                 max_iter: int = 500, seed: int = 0,
                                 warm_start: complex | None = None) -> SteadyStateResult:
    """Run the multistart fixed-point loop and classify the outcome.

    Starts: the magnitudes {0, 0.3, 0.8, 1.5} crossed with phases {1, i},
    two pseudo-random complex seeds (fixed RNG seed for determinism), and
    an optional warm start tried first.  The map is exactly U(1)-covariant,
    so starts of equal modulus are gauge copies and share one amplitude
    iteration.  Distinct attractors (amplitude separation > 1e-4) are kept
    in fixed_points; the trivial dark-state attractor s=0 is discarded when
    the map is locally expanding there and a nontrivial attractor exists.
    The reported fixed point is the attractor of largest amplitude; psi is
    trace(a rho) of its steady state.  Label: converged (one attractor),
    multistable (several), oscillatory (an amplitude 2-cycle, or a
    non-settling start whose mean-field trajectory oscillates).
    """
    gen = MeanFieldGenerator(space, params, point)
    rng = np.random.default_rng(seed)
    raw_starts: list[complex] = []
    if warm_start is not None:
        raw_starts.append(complex(warm_start))
    raw_starts += [m * p for m in MULTISTART_MAGNITUDES for p in MULTISTART_PHASES]
    raw_starts += [complex(rng.uniform(0, 1.5), rng.uniform(-1.5, 1.5))
                   for _ in range(N_RANDOM_STARTS)]
    # one representative per gauge orbit (same modulus)
    starts: list[float] = []
    for psi0 in raw_starts:
        if all(abs(abs(psi0) - prev) > 1e-12 for prev in starts):
            starts.append(abs(psi0))

    # structural degeneracy (disconnected dark sectors) does not depend on
    # the start; check once per cell with the robust dual-row dense solve
    try:
        gen.solve_steady(starts[0], check_unique=True)
    except DegenerateSteadyStateError:
        gen.solve_steady(max(starts[0], 0.3) + 0.1, check_unique=True)

    total_iters = 0
    any_nonconverged = False
    any_cycle = False
    degenerate = 0
    attractors: list[_Attractor] = []
    for s0 in starts:
        att, iters, failure = _run_start(gen, s0, beta, max_iter, attractors)
        total_iters += iters
        if failure == "degenerate":
            degenerate += 1
            continue
        if failure == "oscillatory":
            any_cycle = True
            if att is not None and \
                    all(abs(att.s - known.s) > PSI_DISTINCT for known in attractors):
                attractors.append(att)
            continue
        if failure == "nonconverged":
            any_nonconverged = True
            continue
        if all(abs(att.s - known.s) > PSI_DISTINCT for known in attractors):
            attractors.append(att)

    # drop an unstable dark state: s=0 is always a fixed point, but it is
    # an attractor only where the damped map contracts toward it
    # (slope of the damped map at 0 is (1-beta) + beta * Re F'(0))
    if len(attractors) > 1 and any(att.s < PSI_DISTINCT for att in attractors):
        probe = 1e-3
        gap, _, _ = _amplitude_gap(gen, probe)
        slope = (1.0 - beta) + beta * (gap + probe) / probe
        if abs(slope) > 1.0:
            attractors = [att for att in attractors if att.s >= PSI_DISTINCT]

    if not attractors:
        if degenerate == len(starts):
            raise DegenerateSteadyStateError(
                2, "every multistart hit a degenerate Liouvillian null space")
        label, psi_end, rho_end = _dynamics_fallback(gen, space)
        if any_cycle and label == "indeterminate":
            label = "oscillatory"
        return SteadyStateResult(rho=rho_end, psi=psi_end,
                                 residual=residual_norm(gen.liouvillian(psi_end), rho_end),
                                 iterations=total_iters, label=label, fixed_points=[],
                                 drive=float(psi_end.real))

    label = "multistable" if len(attractors) > 1 else "converged"
    if any_cycle:
        label = "oscillatory"
    elif any_nonconverged:
        dyn_label, _, _ = _dynamics_fallback(gen, space)
        if dyn_label == "oscillatory":
            label = "oscillatory"

    best = max(attractors, key=lambda att: att.s)
    ordered = sorted(attractors, key=lambda att: att.s)
    return SteadyStateResult(
        rho=best.rho, psi=best.psi,
        residual=residual_norm(gen.liouvillian(best.drive), best.rho),
        iterations=total_iters, label=label,
        fixed_points=[(att.psi, att.rho) for att in ordered],
        drive=best.drive)


def _dynamics_fallback(gen: MeanFieldGenerator, space: HilbertSpace):
    """Classify a non-converging point by integrating the mean-field MME."""
    params, point = gen.params, gen.point
    rates = [r for r in (params.kappa, params.gamma1, params.gamma2) if r > 0]
    t_char = 1.0 / min(rates) if rates else 10.0
    rho0 = np.zeros((space.dim, space.dim), dtype=complex)
    rho0[space.index(1, 1), space.index(1, 1)] = 1.0   # |g2, 1>, generic seed
    traj = evolve_meanfield(space, params, point, rho0,
                            t_max=12.0 * t_char, dt=min(0.05, t_char / 200.0),
                            _gen=gen)
    label = classify_dynamics(traj)
    _, psi_end, _ = traj[-1]
    return label, psi_end, traj.rho_final


class Trajectory(list):
    """List of (t, psi, mean_n) samples; final density matrix attached."""

    rho_final: np.ndarray = None


def evolve_meanfield(space: HilbertSpace, params: ModelParams, point: LatticePoint,
                     rho0: np.ndarray, t_max: float, dt: float,
                     _gen: MeanFieldGenerator | None = None) -> Trajectory:
    """Integrate rho' = L(psi(t)) rho with psi = trace(a rho) re-evaluated
    at every RK4 stage; classic 4th order with step-halving error control.
    The trace is preserved exactly by the generator; drift is checked to
    1e-8."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if abs(np.trace(rho0) - 1.0) > 1e-8 or np.max(np.abs(rho0 - rho0.conj().T)) > 1e-8:
        raise ValueError("rho0 must be a Hermitian, unit-trace density matrix")

    gen = _gen if _gen is not None else MeanFieldGenerator(space, params, point)
    dim = space.dim
    a_vec_row = vec(gen.a_op.T)          # trace(a rho) = a_row . vec(rho)
    nop = gen.a_op.conj().T @ gen.a_op
    n_vec_row = vec(nop.T)

    def deriv(v):
        psi = np.dot(a_vec_row, v)
        return gen.apply(psi, v)

    def rk4(v, h):
        k1 = deriv(v)
        k2 = deriv(v + 0.5 * h * k1)
        k3 = deriv(v + 0.5 * h * k2)
        k4 = deriv(v + h * k3)
        return v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    v = vec(rho0.astype(complex))
    t = 0.0
    out = Trajectory()

    def sample(t, v):
        out.append((t, complex(np.dot(a_vec_row, v)), float(np.real(np.dot(n_vec_row, v)))))

    sample(t, v)
    h = dt
    min_h = dt * 2.0 ** -20
    while t < t_max - 1e-12:
        h = min(h, t_max - t)
        while True:
            full = rk4(v, h)
            half = rk4(rk4(v, 0.5 * h), 0.5 * h)
            err = np.max(np.abs(full - half))
            if err < 1e-8 or h <= min_h:
                break
            h *= 0.5
            if h < min_h:
                raise RuntimeError(f"step size underflow at t={t}")
        v = half
        t += h
        sample(t, v)
        if err < 1e-10 and h < dt:
            h = min(2 * h, dt)
        tr = np.real(np.sum(v[::dim + 1]))
        if abs(tr - 1.0) > 1e-8:
            raise RuntimeError(f"trace drift {tr - 1.0:.2e} at t={t}")
    out.rho_final = unvec(v, dim)
    return out


def classify_dynamics(trajectory) -> str:
    """converged | oscillatory | indeterminate from the psi(t) tail.

    Converged: |psi(t) - psi(t_end)| < 1e-6 over the last 20% of the run.
    Oscillatory: the |psi| tail swings by more than 1e-3 relative
    peak-to-peak with at least 3 interior extrema.  A rigidly rotating
    phase with constant |psi| is neither (it is a gauge-converged state)
    and comes back indeterminate here; the fixed-point solver handles it.
    """
    ts = np.array([s[0] for s in trajectory])
    psis = np.array([s[1] for s in trajectory])
    tail = ts >= ts[0] + 0.8 * (ts[-1] - ts[0])
    p = psis[tail]
    if np.max(np.abs(p - p[-1])) < 1e-6:
        return "converged"
    mag = np.abs(p)
    ptp = np.max(mag) - np.min(mag)
    scale = max(float(np.max(mag)), 1e-12)
    interior = (mag[1:-1] > np.maximum(mag[:-2], mag[2:])) | \
               (mag[1:-1] < np.minimum(mag[:-2], mag[2:]))
    if ptp / scale > 1e-3 and int(np.sum(interior)) >= 3:
        return "oscillatory"
    return "indeterminate"
