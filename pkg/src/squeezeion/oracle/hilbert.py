"""Dense spin x truncated-oscillator Hilbert space and gate library.

Basis ordering is spins first (spin 0 most significant, index 0 = up) and
the Fock index last.  Pauli conventions: ``sz = diag(1, -1)`` and
``s+ = |up><down|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import expm

from ..errors import DomainError, TruncationLeakageError

#: Top-Fock-level population above which a run is not certified.
LEAKAGE_TOL = 1e-8
MAX_FOCK_DIM = 512
MAX_SPINS = 3

SZ = np.diag([1.0, -1.0]).astype(complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SP = np.array([[0, 1], [0, 0]], dtype=complex)
SM = SP.T.copy()
UP = np.array([1.0, 0.0], dtype=complex)


@dataclass(frozen=True)
class HilbertConfig:
    n_spins: int = 1
    fock_dim: int = 64
    dt: float = 0.0

    def __post_init__(self):
        if not 0 <= self.n_spins <= MAX_SPINS:
            raise DomainError(f"oracle supports at most {MAX_SPINS} spins")
        if not 2 <= self.fock_dim <= MAX_FOCK_DIM:
            raise DomainError(f"fock_dim must lie in [2, {MAX_FOCK_DIM}]")
        if self.dt < 0:
            raise DomainError("dt must be >= 0")

    @property
    def spin_dim(self) -> int:
        return 2**self.n_spins

    @property
    def dim(self) -> int:
        return self.spin_dim * self.fock_dim


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def spin_op(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """``op`` acting on one spin of ``n_spins``."""
    eye = np.eye(2, dtype=complex)
    return reduce(np.kron, [op if k == site else eye for k in range(n_spins)], np.eye(1, dtype=complex))


def collective(op: np.ndarray, n_spins: int) -> np.ndarray:
    return sum(spin_op(op, k, n_spins) for k in range(n_spins))


def rotation(theta_r: float, phi_r: float) -> np.ndarray:
    """Single-qubit rotation as the exponential of its generator."""
    gen = -0.5j * theta_r * (-np.sin(phi_r) * SX + np.cos(phi_r) * SY)
    return expm(gen)


def displacement(alpha: complex, dim: int) -> np.ndarray:
    a = annihilation(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def squeeze(xi: complex, dim: int) -> np.ndarray:
    """S(xi) = exp[(xi* a^2 - xi a^dag^2) / 2]."""
    a = annihilation(dim)
    ad = a.conj().T
    return expm(0.5 * (np.conj(xi) * a @ a - xi * ad @ ad))


def spin_dependent_displacement(alpha: complex, cfg: HilbertConfig) -> np.ndarray:
    """exp[(alpha a^dag - alpha* a) sum_i sz_i]."""
    a = annihilation(cfg.fock_dim)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return expm(np.kron(collective(SZ, cfg.n_spins), gen))


# ---------------------------------------------------------------------------
# State handling
# ---------------------------------------------------------------------------


def top_population(state: np.ndarray, cfg: HilbertConfig, weights=None, levels: int = 1) -> float:
    """Population in the highest ``levels`` Fock states.

    ``state`` is a vector, a matrix whose columns are states (combined with
    ``weights``), or a density matrix when ``weights == "rho"``.
    """
    D = cfg.fock_dim
    if isinstance(weights, str) and weights == "rho":
        diag = np.real(np.diagonal(state)).reshape(cfg.spin_dim, D)
        return float(diag[:, D - levels :].sum())
    psi = state.reshape(cfg.spin_dim, D, -1)
    pops = np.sum(np.abs(psi[:, D - levels :, :]) ** 2, axis=(0, 1))
    if weights is None:
        return float(pops.max())
    return float(np.dot(weights, pops))


def check_leakage(state, cfg: HilbertConfig, weights=None, tol: float = LEAKAGE_TOL) -> float:
    leak = top_population(state, cfg, weights)
    if leak > tol:
        raise TruncationLeakageError(
            f"top Fock level holds {leak:.3g} > {tol:g} at fock_dim={cfg.fock_dim}"
        )
    return leak


def apply_gate(state: np.ndarray, gate: np.ndarray, cfg: HilbertConfig, weights=None, tol=LEAKAGE_TOL):
    """Apply a dense gate to a state vector, a stack of column states, or a
    density matrix (``weights="rho"``), then verify truncation leakage."""
    if isinstance(weights, str) and weights == "rho":
        out = gate @ state @ gate.conj().T
    else:
        out = gate @ state
    check_leakage(out, cfg, weights, tol)
    return out


def full(gate_spin=None, gate_fock=None, cfg: HilbertConfig | None = None) -> np.ndarray:
    """Lift a spin gate and/or an oscillator gate to the product space."""
    s = gate_spin if gate_spin is not None else np.eye(cfg.spin_dim, dtype=complex)
    m = gate_fock if gate_fock is not None else np.eye(cfg.fock_dim, dtype=complex)
    return np.kron(s, m)


def ensemble_rotation(theta_r, phi_r, n_spins):
    R = rotation(theta_r, phi_r)
    return reduce(np.kron, [R] * n_spins, np.eye(1, dtype=complex))


def total_hamiltonian(cfg: HilbertConfig, f, phi_odf, delta, g, theta, N=None) -> np.ndarray:
    """ODF plus parametric drive in the frame rotating with the ODF beat note.

    ``N`` normalises the force (defaults to ``cfg.n_spins``).
    """
    N = cfg.n_spins if N is None else N
    a = annihilation(cfg.fock_dim)
    ad = a.conj().T
    Sz = collective(SZ, cfg.n_spins)
    force = f / (2 * np.sqrt(N)) * (a * np.exp(-1j * phi_odf) + ad * np.exp(1j * phi_odf))
    motion = -delta * ad @ a + 0.5j * g * (a @ a * np.exp(-1j * theta) - ad @ ad * np.exp(1j * theta))
    return np.kron(Sz, force) + np.kron(np.eye(cfg.spin_dim), motion)


def evolve_hamiltonian(state: np.ndarray, H: np.ndarray, t: float, cfg: HilbertConfig, rho: bool = False, tol=LEAKAGE_TOL):
    """Exact propagation by dense exponentiation of a time-independent H."""
    U = expm(-1j * H * t)
    return apply_gate(state, U, cfg, "rho" if rho else None, tol)


def thermal_weights(nbar: float, cutoff: float = 1e-10) -> np.ndarray:
    if nbar == 0:
        return np.array([1.0])
    x = nbar / (1 + nbar)
    n_max = int(np.ceil(np.log(cutoff * (1 + nbar)) / np.log(x)))
    return x ** np.arange(n_max + 1) / (1 + nbar)


def thermal_density(nbar: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    p = np.ones(1) if nbar == 0 else (nbar / (1 + nbar)) ** n / (1 + nbar)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[np.arange(p.size), np.arange(p.size)] = p[:dim]
    return rho
