"""Brute-force squeeze / Ramsey / spin-dependent-displacement sequence."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.linalg import block_diag

from ..errors import TruncationLeakageError
from .hilbert import (
    MAX_FOCK_DIM,
    HilbertConfig,
    UP,
    apply_gate,
    check_leakage,
    displacement,
    ensemble_rotation,
    full,
    spin_dependent_displacement,
    squeeze,
    thermal_weights,
    top_population,
)

DIMS = (64, 128, 256, 384, 512)


@lru_cache(maxsize=16)
def _squeezed_columns(r: float, dim: int, n: int) -> np.ndarray:
    """|up> (x) S(r)|k> for k < n, stacked as columns (read-only)."""
    cfg = HilbertConfig(n_spins=1, fock_dim=dim)
    psi = np.kron(UP[:, None], np.eye(dim, n, dtype=complex))
    out = full(None, squeeze(r, dim), cfg) @ psi
    out.flags.writeable = False
    return out


@lru_cache(maxsize=16)
def _real_displacement(amp: float, dim: int) -> np.ndarray:
    out = displacement(amp, dim)
    out.flags.writeable = False
    return out


def _displacement(alpha: complex, dim: int) -> np.ndarray:
    """D(alpha) = e^{i phi n} D(|alpha|) e^{-i phi n}, one dense exponential per |alpha|."""
    phase = np.exp(1j * np.angle(alpha) * np.arange(dim))
    return phase[:, None] * _real_displacement(float(abs(alpha)), dim) * phase.conj()[None, :]


def _run(dim, r, delta_phi, ftau, N, weights):
    cfg = HilbertConfig(n_spins=1, fock_dim=dim)
    n = weights.size
    if n > dim:
        raise TruncationLeakageError(f"thermal cutoff needs {n} levels > fock_dim={dim}")
    # squeeze phase fixed at 0; the relative phase is carried by the ODF phase
    phi_odf = -(delta_phi + math.pi) / 2
    alpha = -1j * ftau * np.exp(1j * phi_odf) / (2 * math.sqrt(N))
    psi = _squeezed_columns(float(r), dim, n)
    check_leakage(psi, cfg, weights)
    R = full(ensemble_rotation(math.pi / 2, 0.0, 1), None, cfg)
    # spin-dependent displacement is block diagonal: D(alpha) on up, D(-alpha) on down
    D = _displacement(alpha, dim)
    Dsd = block_diag(D, D.conj().T)
    psi = apply_gate(psi, R, cfg, weights)
    psi = apply_gate(psi, Dsd, cfg, weights)
    psi = apply_gate(psi, R, cfg, weights)
    pops = np.abs(psi.reshape(2, dim, -1)) ** 2
    exp_sz = pops[0].sum(axis=0) - pops[1].sum(axis=0)
    return exp_sz, top_population(psi, cfg, weights)


def strobo_oracle(r, delta_phi, ftau, nbar, N=1, Gamma_tau=0.0, fock_dim=None):
    """Bright fraction from explicit state evolution.

    Each Fock level with thermal weight above 1e-10 is propagated through
    squeeze, pi/2, spin-dependent displacement and pi/2, and the results are
    Boltzmann averaged.  The truncation is the smallest entry of ``DIMS``
    whose weighted top-level population stays below 1e-8, unless
    ``fock_dim`` is given.

    Returns ``(bright_fraction, fock_dim, leakage)``.
    """
    weights = thermal_weights(nbar)
    dims = (fock_dim,) if fock_dim else DIMS
    last = None
    for dim in dims:
        if dim > MAX_FOCK_DIM:
            break
        try:
            exp_sz, leak = _run(dim, r, delta_phi, ftau, N, weights)
        except TruncationLeakageError as err:
            last = err
            continue
        p_up = 0.5 + 0.5 * math.exp(-Gamma_tau) * exp_sz
        return float(np.dot(weights, p_up) / weights.sum()), dim, leak
    raise last or TruncationLeakageError("no admissible Fock truncation")


def amplification_identity(beta: complex, r: float, theta: float = 0.0, dim: int = 256, n_spins: int = 1):
    """Largest matrix-element deviation between S^dag D_sd(beta) S and
    D_sd(beta') among the lowest eight Fock states, with beta' the
    transformed amplitude.

    Along the amplified axis (arg beta = theta / 2) beta' = e^r beta.
    """
    cfg = HilbertConfig(n_spins=n_spins, fock_dim=dim)
    S = full(None, squeeze(r * np.exp(1j * theta), dim), cfg)
    lhs = S.conj().T @ spin_dependent_displacement(beta, cfg) @ S
    beta_p = beta * math.cosh(r) + np.conj(beta) * np.exp(1j * theta) * math.sinh(r)
    rhs = spin_dependent_displacement(beta_p, cfg)
    keep = np.zeros(dim, dtype=bool)
    keep[:8] = True
    mask = np.tile(keep, cfg.spin_dim)
    return float(np.max(np.abs((lhs - rhs)[np.ix_(mask, mask)]))), complex(beta_p)

