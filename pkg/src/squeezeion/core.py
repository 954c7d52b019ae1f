"""Shared domain types, unit handling and small numerical helpers.

Unit convention
---------------
Frequencies that cross the public boundary (config files, ``TrapParams``,
``NoiseModel.sigma``) are ordinary frequencies in Hz.  Everything that goes
into a formula is angular (rad/s).  :func:`hz_to_rad` is the single place
where the factor of 2*pi enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import constants

from .errors import (
    DomainError,
    InvalidTrapError,
    SampleRejectionError,
    UnstableRegimeError,
)

TWO_PI = 2.0 * math.pi

#: Mass of a singly ionised 9Be atom (kg).
BE9_MASS = 9.0121831 * constants.atomic_mass - constants.electron_mass
#: Elementary charge (C).
ELEMENTARY_CHARGE = constants.elementary_charge

#: Callers of :func:`gaussian_average` fail above this rejected fraction.
MAX_REJECTED_FRACTION = 1e-3


def hz_to_rad(freq_hz):
    """Ordinary frequency (Hz) to angular frequency (rad/s)."""
    return TWO_PI * np.asarray(freq_hz, dtype=float) if np.ndim(freq_hz) else TWO_PI * float(freq_hz)


def rad_to_hz(omega):
    """Angular frequency (rad/s) to ordinary frequency (Hz)."""
    return np.asarray(omega, dtype=float) / TWO_PI if np.ndim(omega) else float(omega) / TWO_PI


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrapParams:
    """Static Penning-trap and crystal constants.

    Frequencies are ordinary frequencies in Hz.
    """

    omega_z: float
    Omega_c: float
    omega_r: float
    N: int = 1
    M: float = BE9_MASS
    q: float = ELEMENTARY_CHARGE

    def __post_init__(self):
        if not self.omega_z > 0:
            raise InvalidTrapError(f"axial frequency must be positive, got {self.omega_z}")
        if not 0 < self.omega_r < self.Omega_c:
            raise InvalidTrapError(
                f"need 0 < omega_r < Omega_c, got omega_r={self.omega_r}, Omega_c={self.Omega_c}"
            )
        if int(self.N) != self.N or self.N < 1:
            raise InvalidTrapError(f"ion count must be a positive integer, got {self.N}")
        if not self.M > 0:
            raise InvalidTrapError(f"ion mass must be positive, got {self.M}")

    @property
    def omega_z_rad(self) -> float:
        return hz_to_rad(self.omega_z)


@dataclass(frozen=True, kw_only=True)
class DriveParams:
    """ODF and parametric-drive settings, angular units throughout."""

    f: float = 0.0
    phi_odf: float = 0.0
    delta: float = 0.0
    Gamma: float = 0.0
    tau: float = 1e-3
    t_pi: float = 50e-6
    g: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if self.f < 0:
            raise DomainError(f"ODF strength must be >= 0, got {self.f}")
        if self.Gamma < 0:
            raise DomainError(f"decoherence rate must be >= 0, got {self.Gamma}")
        if not self.tau > 0:
            raise DomainError(f"ODF arm duration must be > 0, got {self.tau}")
        if self.t_pi < 0:
            raise DomainError(f"pi-pulse duration must be >= 0, got {self.t_pi}")
        if self.g < 0:
            raise DomainError(f"parametric coupling must be >= 0, got {self.g}")


@dataclass(frozen=True)
class MotionalState:
    """Thermal-coherent centre-of-mass state plus an optional squeezing record."""

    nbar: float = 0.0
    beta: complex = 0j
    r: float = 0.0

    def __post_init__(self):
        if self.nbar < 0:
            raise DomainError(f"nbar must be >= 0, got {self.nbar}")
        if self.r < 0:
            raise DomainError(f"squeezing parameter must be >= 0, got {self.r}")

    def fock_weights(self, cutoff: float = 1e-10) -> np.ndarray:
        """Thermal occupation probabilities p_n down to ``cutoff``."""
        if self.nbar == 0:
            return np.array([1.0])
        x = self.nbar / (1.0 + self.nbar)
        n_max = int(math.ceil(math.log(cutoff * (1.0 + self.nbar)) / math.log(x)))
        n = np.arange(n_max + 1)
        return x**n / (1.0 + self.nbar)


@dataclass(frozen=True)
class NoiseModel:
    """Shot-to-shot Gaussian fluctuation of the c.m. frequency.

    ``sigma`` is the standard deviation in Hz.  Draws come from numpy's
    PCG64 generator seeded with ``seed``, so a seed fixes every output.
    """

    sigma: float = 0.0
    n_samples: int = 4000
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError(f"n_samples must be a positive integer, got {self.n_samples}")

    def offsets(self) -> np.ndarray:
        """Angular-frequency offsets eps ~ Normal(0, (2 pi sigma)^2)."""
        if self.sigma == 0:
            return np.zeros(1)
        rng = np.random.default_rng(self.seed)
        return hz_to_rad(self.sigma) * rng.standard_normal(int(self.n_samples))


@dataclass(frozen=True)
class BogoliubovFrame:
    """Effective parameters of the continuously driven mode.

    Fields may be numpy arrays when the frame is built from an array of
    detunings.
    """

    r: float
    delta_prime: float
    f_prime: complex
    delta_phi_c: float = 0.0


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def radial_confinement(trap: TrapParams) -> float:
    """Relative radial confinement beta_r of the rotating crystal.

    The expression is a ratio of squared frequencies, so Hz and rad/s give the
    same number.
    """
    wz, wc, wr = trap.omega_z, trap.Omega_c, trap.omega_r
    beta_r = wr * (wc - wr) / wz**2 - 0.5
    if not beta_r > 0:
        raise InvalidTrapError(f"no radial confinement: beta_r = {beta_r:.6g} <= 0")
    return beta_r


def trap_potential_energy(trap: TrapParams, z, rho):
    """Potential energy (J) of one ion at axial offset ``z`` and radius ``rho`` (m)."""
    beta_r = radial_confinement(trap)
    wz = trap.omega_z_rad
    z = np.asarray(z, dtype=float)
    rho = np.asarray(rho, dtype=float)
    energy = 0.5 * trap.M * wz**2 * (z**2 + beta_r * rho**2)
    return float(energy) if energy.ndim == 0 else energy


def bogoliubov_frame(delta, g, f, delta_phi_c=0.0) -> BogoliubovFrame:
    """Squeezing parameter, effective detuning and force of the driven mode.

    Parameters
    ----------
    delta, g, f : float or array_like
        Detuning, parametric strength and ODF strength (rad/s).
    delta_phi_c : float
        Relative phase of parametric drive and ODF in the continuous protocol.

    Raises
    ------
    UnstableRegimeError
        If ``g >= delta`` anywhere.
    """
    delta = np.asarray(delta, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise DomainError("parametric coupling must be >= 0")
    if np.any(g >= delta):
        raise UnstableRegimeError("g >= delta: parametric drive in the unstable regime")
    r = 0.25 * np.log((delta + g) / (delta - g))
    delta_prime = np.sqrt((delta - g) * (delta + g))
    f_prime = f * (np.cosh(r) + np.exp(1j * delta_phi_c) * np.sinh(r))
    if r.ndim == 0:
        return BogoliubovFrame(float(r), float(delta_prime), complex(f_prime), float(delta_phi_c))
    return BogoliubovFrame(r, delta_prime, f_prime, delta_phi_c)


def squeezing_db(r: float) -> tuple[float, float]:
    """Squeezing in dB: (amplitude, variance)."""
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")
    amplitude = 10.0 * r / math.log(10.0)
    return amplitude, 2.0 * amplitude


class GaussianAverage(NamedTuple):
    mean: np.ndarray | float
    rejected_fraction: np.ndarray | float
    n_samples: int


def gaussian_average(
    fn: Callable[[np.ndarray], np.ndarray],
    noise: NoiseModel,
    max_rejected: float | None = None,
) -> GaussianAverage:
    """Average ``fn`` over Gaussian frequency offsets.

    ``fn`` is called once with the full 1-D array of offsets (rad/s) and must
    return an array whose leading axis runs over samples.  Entries it cannot
    evaluate are returned as NaN; they are dropped from the mean and counted
    in ``rejected_fraction`` (per trailing element).

    With ``noise.sigma == 0`` the function is evaluated at a single zero
    offset and returned unchanged.

    If ``max_rejected`` is given, a :class:`SampleRejectionError` is raised
    when any element's rejected fraction exceeds it.
    """
    eps = noise.offsets()
    values = np.asarray(fn(eps))
    if values.shape[:1] != eps.shape:
        raise ValueError("fn must return an array whose first axis matches the offsets")
    bad = np.isnan(values)
    n_bad = bad.sum(axis=0)
    rejected = n_bad / eps.size
    with np.errstate(invalid="ignore", divide="ignore"):
        if noise.sigma == 0:
            mean = values[0]
        else:
            # shifting by one valid sample keeps constant integrands exact
            first = np.argmax(~bad, axis=0)
            ref = np.take_along_axis(values, first[None, ...], axis=0)[0]
            total = np.where(bad, 0.0, values - ref).sum(axis=0)
            mean = ref + total / (eps.size - n_bad)
    if max_rejected is not None and np.any(rejected > max_rejected):
        worst = float(np.max(rejected))
        raise SampleRejectionError(
            f"rejected fraction {worst:.3g} exceeds ceiling {max_rejected:g}", worst
        )
    if np.ndim(mean) == 0:
        mean = mean.item()
        rejected = float(rejected)
    return GaussianAverage(mean, rejected, int(eps.size))


# ---------------------------------------------------------------------------
# Tabulated results
# ---------------------------------------------------------------------------


@dataclass
class ScanResult:
    """Columnar table with free-form metadata."""

    columns: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.atleast_1d(np.asarray(v)) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: { {k: len(v) for k, v in self.columns.items()} }")

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name):
        return self.columns[name]
