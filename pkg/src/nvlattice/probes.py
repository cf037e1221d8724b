r"""Detection observables: photon statistics and emission spectra.

Mean intracavity photon number <n_a>, its variance, the equal-time
intensity correlation g2(0) = <a†a†aa>/<a†a>^2 and the normalized emitted
spectrum

    S(w) = (1 / (pi * n_ss)) * Re \int_0^inf G1(tau) e^{i w tau} dtau

with G1(tau) = <alpha†(0) alpha(tau)> - |<alpha>|^2 computed via the
quantum regression theorem: propagate rho_ss @ alpha† under the frozen-psi
Liouvillian.  Subtracting |<alpha>|^2 removes the elastic delta peak, so
only the incoherent part is transformed.  Frequencies are in the rotating
frame of the on-site Hamiltonian (symmetric about zero for a Mollow
triplet).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dissipative import Liouvillian, residual_norm, unvec, vec
from .qspace import HilbertSpace, annihilation, excitation_number

log = logging.getLogger(__name__)

# below this steady photon number the 1/n_ss normalization is undefined
N_FLOOR = 1e-8


@dataclass
class ObservableSet:
    mean_n: float            # <a†a>
    var_n: float             # <(a†a)^2> - <a†a>^2
    g2: float | None         # None when mean_n < N_FLOOR
    mean_N: float            # conserved excitation number
    psi: complex             # <a>


@dataclass
class SpectrumResult:
    channel: str                  # "a" | "sigma1-" | "sigma2-"
    omega_grid: np.ndarray
    values: np.ndarray            # S(omega) >= 0; empty when no_emission
    n_ss: float
    flag: str                     # "normal" | "no_emission"
    truncated: bool = False       # G1 did not decay to 1e-6 of G1(0)


def _as_rho(space: HilbertSpace, state_or_rho: np.ndarray) -> np.ndarray:
    if state_or_rho.ndim == 1:
        v = state_or_rho
        if abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise ValueError("pure state must be normalized")
        return np.outer(v, v.conj())
    rho = state_or_rho
    if rho.shape != (space.dim, space.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dim {space.dim}")
    return rho


def observables(space: HilbertSpace, state_or_rho: np.ndarray) -> ObservableSet:
    """Photon statistics of a pure state or density matrix."""
    rho = _as_rho(space, state_or_rho)
    a = annihilation(space)
    n_op = a.conj().T @ a

    def ev(op):
        return float(np.real(np.trace(op @ rho)))

    mean_n = ev(n_op)
    var_n = ev(n_op @ n_op) - mean_n ** 2
    # <a† a† a a> = <n^2> - <n>
    g2 = None
    if mean_n >= N_FLOOR:
        g2 = (ev(n_op @ n_op) - mean_n) / mean_n ** 2
    return ObservableSet(
        mean_n=mean_n, var_n=var_n, g2=g2,
        mean_N=float(np.real(np.trace(excitation_number(space) @ rho))),
        psi=complex(np.trace(a @ rho)))


def _rk4_step_matrix(lmat: np.ndarray, h: float, substeps: int) -> np.ndarray:
    """One-step transfer matrix of classic RK4 for the static generator,
    i.e. (I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24)^substeps with h the
    substep size.  Applying it per grid point is exactly RK4 stepping."""
    hl = (h / substeps) * lmat
    eye = np.eye(lmat.shape[0])
    m = eye + hl @ (eye + hl @ (eye / 2 + hl @ (eye / 6 + hl / 24)))
    out = np.eye(lmat.shape[0], dtype=complex)
    p = m
    k = substeps
    while k:            # binary exponentiation
        if k & 1:
            out = out @ p
        k >>= 1
        if k:
            p = p @ p
    return out


def _substeps_for(lmat: np.ndarray, h: float) -> int:
    scale = float(np.max(np.abs(lmat)))
    return max(1, int(np.ceil(h * scale / 0.1)))


def first_order_correlation(liouv: Liouvillian, rho_ss: np.ndarray,
                            alpha: np.ndarray, tau_grid: np.ndarray) -> np.ndarray:
    """G1(tau) = trace[alpha exp(L tau)(rho_ss alpha†)] - |trace(alpha rho_ss)|^2.

    rho_ss must be stationary under liouv (residual <= 1e-8); tau_grid is
    ascending from 0.  The deformed matrix rho_ss alpha† is propagated
    with the same 4th-order stepping as the mean-field integrator, psi
    frozen in the generator.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid[0] != 0.0 or np.any(np.diff(tau_grid) <= 0):
        raise ValueError("tau_grid must ascend from 0")
    if residual_norm(liouv, rho_ss) > 1e-8:
        raise ValueError("rho_ss is not stationary under the given Liouvillian")

    dim = liouv.space.dim
    coherent = abs(np.trace(alpha @ rho_ss)) ** 2
    x = vec(rho_ss @ alpha.conj().T)
    g1 = np.empty(len(tau_grid), dtype=complex)
    g1[0] = np.trace(alpha @ unvec(x, dim)) - coherent

    steps = np.diff(tau_grid)
    uniform = np.allclose(steps, steps[0], rtol=1e-12, atol=0.0)
    prop = None
    for i, h in enumerate(steps, start=1):
        if prop is None or not uniform:
            prop = _rk4_step_matrix(liouv.matrix, h, _substeps_for(liouv.matrix, h))
        x = prop @ x
        g1[i] = np.trace(alpha @ unvec(x, dim)) - coherent
    return g1


def adaptive_first_order_correlation(liouv: Liouvillian, rho_ss: np.ndarray,
                                     alpha: np.ndarray, dt: float,
                                     decay: float = 1e-6,
                                     max_steps: int = 10_000):
    """Extend the tau grid until |G1| decays to `decay` of |G1(0)| or the
    step cap is hit.  Returns (tau_grid, G1, truncated)."""
    if residual_norm(liouv, rho_ss) > 1e-8:
        raise ValueError("rho_ss is not stationary under the given Liouvillian")
    dim = liouv.space.dim
    coherent = abs(np.trace(alpha @ rho_ss)) ** 2
    prop = _rk4_step_matrix(liouv.matrix, dt, _substeps_for(liouv.matrix, dt))
    x = vec(rho_ss @ alpha.conj().T)
    g1 = [np.trace(alpha @ unvec(x, dim)) - coherent]
    g0 = abs(g1[0])
    # look-back window: require sustained decay, not a zero crossing
    window = max(10, int(1.0 / max(dt, 1e-6)))
    for _ in range(max_steps):
        x = prop @ x
        g1.append(np.trace(alpha @ unvec(x, dim)) - coherent)
        if len(g1) > window and g0 > 0:
            recent = np.abs(g1[-window:])
            if np.max(recent) <= decay * g0:
                break
    g1 = np.array(g1)
    tau = dt * np.arange(len(g1))
    truncated = bool(g0 > 0 and abs(g1[-1]) > decay * g0)
    return tau, g1, truncated


def correlation_timestep(omega: float, delta1: float) -> float:
    """Default tau step: resolves Mollow sidebands at
    |w| <= 2*sqrt(4*Omega^2 + Delta1^2), capped at 0.05."""
    scale = 2.0 * np.sqrt(4.0 * omega ** 2 + delta1 ** 2)
    if scale <= 0:
        return 0.05
    return min(0.05, 0.1 / scale)


def emission_spectrum(g1: np.ndarray, tau_grid: np.ndarray,
                      omega_grid: np.ndarray, n_ss: float,
                      channel: str = "a", truncated: bool = False) -> SpectrumResult:
    """Normalized one-sided Fourier transform of G1 on the omega grid."""
    if n_ss < 0:
        raise ValueError(f"n_ss must be >= 0, got {n_ss}")
    omega_grid = np.asarray(omega_grid, dtype=float)
    if n_ss < N_FLOOR:
        return SpectrumResult(channel=channel, omega_grid=omega_grid,
                              values=np.array([]), n_ss=n_ss, flag="no_emission")
    tau_grid = np.asarray(tau_grid, dtype=float)
    phases = np.exp(1j * np.outer(omega_grid, tau_grid))
    transform = np.trapezoid(phases * g1[None, :], tau_grid, axis=1)
    values = np.real(transform) / (np.pi * n_ss)
    neg = values < -1e-8
    if np.any(neg):
        log.warning("clamping %d negative spectrum values (min %.3e), "
                    "finite-window truncation artifact", int(neg.sum()), values.min())
    values = np.maximum(values, 0.0)
    return SpectrumResult(channel=channel, omega_grid=omega_grid, values=values,
                          n_ss=n_ss, flag="normal", truncated=truncated)


def find_peaks(spectrum: SpectrumResult, prominence: float) -> list[tuple[float, float]]:
    """Local maxima exceeding prominence * max(values), sorted by omega."""
    if spectrum.flag != "normal":
        raise ValueError("find_peaks requires a normal spectrum")
    v = spectrum.values
    if len(v) < 3:
        return []
    floor = prominence * float(np.max(v))
    peaks = []
    for i in range(1, len(v) - 1):
        if v[i] >= v[i - 1] and v[i] > v[i + 1] and v[i] >= floor:
            peaks.append((float(spectrum.omega_grid[i]), float(v[i])))
    return peaks
