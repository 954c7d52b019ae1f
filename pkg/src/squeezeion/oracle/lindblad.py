"""Small-N dissipative Ising dynamics by exact Liouvillian exponentiation.

The master equation carries elastic dephasing ``sqrt(gamma_el / 4) sz``,
spin flips ``sqrt(gamma_ud) s-`` and ``sqrt(gamma_du) s+`` on every spin, and
the uniform Ising Hamiltonian ``(J / N) sum_{i<j} sz_i sz_j``.  Residual
spin-motion entanglement is applied afterwards as an explicit channel: a
spin-dependent displacement of a truncated thermal oscillator followed by a
partial trace.
"""

from __future__ import annotations

import math
from functools import reduce

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from ..errors import DomainError
from .hilbert import (
    MAX_SPINS,
    SM,
    SP,
    SX,
    SY,
    SZ,
    annihilation,
    check_leakage,
    collective,
    HilbertConfig,
    spin_op,
    thermal_density,
)


def ising_hamiltonian(J: float, N: int) -> np.ndarray:
    H = np.zeros((2**N, 2**N), dtype=complex)
    for i in range(N):
        for j in range(i + 1, N):
            H += J / N * spin_op(SZ, i, N) @ spin_op(SZ, j, N)
    return H


def liouvillian(J, rates, N: int) -> np.ndarray:
    """Row-major vectorised generator: d vec(rho)/dt = L vec(rho)."""
    d = 2**N
    eye = np.eye(d)
    H = ising_hamiltonian(J, N)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    jumps = []
    for i in range(N):
        jumps += [
            math.sqrt(rates.gamma_el / 4) * spin_op(SZ, i, N),
            math.sqrt(rates.gamma_ud) * spin_op(SM, i, N),
            math.sqrt(rates.gamma_du) * spin_op(SP, i, N),
        ]
    for c in jumps:
        cdc = c.conj().T @ c
        L += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)
    return L


def x_polarized(N: int) -> np.ndarray:
    plus = np.ones(2, dtype=complex) / math.sqrt(2)
    psi = reduce(np.kron, [plus] * N)
    return np.outer(psi, psi.conj())


def lindblad_evolve(rho: np.ndarray, J: float, rates, t: float, N: int | None = None) -> np.ndarray:
    """Propagate ``rho`` for time ``t`` with the exact exponential of the Liouvillian."""
    N = int(round(math.log2(rho.shape[0]))) if N is None else N
    if N > MAX_SPINS:
        raise DomainError(f"Lindblad oracle supports at most {MAX_SPINS} spins")
    if t < 0:
        raise DomainError("t must be >= 0")
    d = 2**N
    out = (expm(liouvillian(J, rates, N) * t) @ rho.reshape(-1)).reshape(d, d)
    return out


def motional_channel(rho: np.ndarray, alpha: complex, nbar: float, N: int, fock_dim: int = 96) -> np.ndarray:
    """Couple the spins to a thermal oscillator through exp[(alpha a^dag - h.c.) S_z]
    and trace the oscillator out.

    Each pair of collective-Sz eigenvalues picks up the overlap
    tr[D(s alpha) rho_th D(s' alpha)^dag], evaluated in Fock space.
    """
    s_vals = np.real(np.diag(collective(SZ, N)))
    levels = np.unique(s_vals)
    a = annihilation(fock_dim)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    rho_th = thermal_density(nbar, fock_dim)
    disp = {s: expm(s * gen) for s in levels}
    cfg = HilbertConfig(n_spins=0, fock_dim=fock_dim)
    for s in levels:
        check_leakage(disp[s] @ rho_th @ disp[s].conj().T, cfg, "rho")
    overlap = {(s, sp): np.trace(disp[s] @ rho_th @ disp[sp].conj().T) for s in levels for sp in levels}
    factor = np.array([[overlap[(s, sp)] for sp in s_vals] for s in s_vals])
    return rho * factor


def collective_ops(N: int):
    return [0.5 * collective(op, N) for op in (SX, SY, SZ)]


def oracle_moments(rho: np.ndarray, N: int):
    """Mean spin and the (Sy, Sz) covariance block from explicit operators."""
    Sx, Sy, Sz = collective_ops(N)
    ex = lambda op: np.real(np.trace(rho @ op))
    mean = np.array([ex(Sx), ex(Sy), ex(Sz)])
    vy = ex(Sy @ Sy) - mean[1] ** 2
    vz = ex(Sz @ Sz) - mean[2] ** 2
    cov = 0.5 * ex(Sy @ Sz + Sz @ Sy) - mean[1] * mean[2]
    return mean, vy, vz, cov


def oracle_xi2(rho: np.ndarray, N: int):
    """Ramsey squeezing by explicit minimisation over the quadrature angle.

    Returns ``(xi2, psi_opt)`` with psi in [0, pi).
    """
    Sx, Sy, Sz = collective_ops(N)
    mean = np.array([np.real(np.trace(rho @ op)) for op in (Sx, Sy, Sz)])

    def var(psi):
        S = math.cos(psi) * Sz - math.sin(psi) * Sy
        m = np.real(np.trace(rho @ S))
        return np.real(np.trace(rho @ S @ S)) - m**2

    grid = np.linspace(0, math.pi, 721)
    vals = np.array([var(p) for p in grid])
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(var, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    best_psi, best = (res.x, res.fun) if res.fun <= vals[k] else (grid[k], vals[k])
    return float(N * best / np.dot(mean, mean)), float(best_psi % math.pi)


def oracle_correlators(rho: np.ndarray, N: int):
    """<s+_0>, <s+_0 s+_1>, <s+_0 s-_1>, <s+_0 sz_1>, <sz_0>."""
    op = lambda o, i: spin_op(o, i, N)
    ex = lambda o: complex(np.trace(rho @ o))
    return (
        ex(op(SP, 0)),
        ex(op(SP, 0) @ op(SP, 1)),
        ex(op(SP, 0) @ op(SM, 1)),
        ex(op(SP, 0) @ op(SZ, 1)),
        ex(op(SZ, 0)).real,
    )


def ising_with_motion(N, J, alpha, t, rates, nbar, fock_dim=96):
    """Full oracle state: Lindblad evolution from the x-polarised state, then
    the spin-motion channel."""
    rho = lindblad_evolve(x_polarized(N), J, rates, t, N)
    if alpha != 0:
        rho = motional_channel(rho, alpha, nbar, N, fock_dim)
    return rho
