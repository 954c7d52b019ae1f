"""Ising spin squeezing with spin decoherence and residual spin-motion coupling.

Exact single- and two-spin correlators of the uniform Ising model under
elastic dephasing and spontaneous spin flips, their assembly into collective
spin moments, and the Ramsey squeezing parameter.  The Ising coupling and the
residual motional displacement follow from one ODF + parametric drive loop in
the Bogoliubov frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    MAX_REJECTED_FRACTION,
    TWO_PI,
    BogoliubovFrame,
    NoiseModel,
    ScanResult,
    bogoliubov_frame,
)
from .errors import DegenerateError, DomainError, SampleRejectionError

#: Ways of normalising the effective coupling and displacement.
COUPLINGS = ("hamiltonian", "printed")


@dataclass(frozen=True)
class DecoherenceRates:
    """Spin-flip (up->down, down->up) and elastic dephasing rates in 1/s."""

    gamma_ud: float = 0.0
    gamma_du: float = 0.0
    gamma_el: float = 0.0

    def __post_init__(self):
        if min(self.gamma_ud, self.gamma_du, self.gamma_el) < 0:
            raise DomainError("decoherence rates must be >= 0")

    @property
    def gamma_r(self) -> float:
        return self.gamma_ud + self.gamma_du

    @property
    def Gamma(self) -> float:
        """Total single-spin coherence decay rate."""
        return 0.5 * (self.gamma_r + self.gamma_el)

    @property
    def gamma(self) -> float:
        return 0.25 * (self.gamma_ud - self.gamma_du)

    @classmethod
    def from_total(cls, Gamma: float, elastic_fraction: float = 0.5, asymmetry: float = 0.0):
        """Split a total decay rate ``Gamma`` into the three channels.

        ``elastic_fraction`` is the share of ``Gamma`` carried by dephasing;
        ``asymmetry`` in [-1, 1] tilts the flips toward up->down.
        """
        if not 0 <= elastic_fraction <= 1 or not -1 <= asymmetry <= 1:
            raise DomainError("elastic_fraction must lie in [0, 1] and asymmetry in [-1, 1]")
        gamma_el = 2 * Gamma * elastic_fraction
        gamma_r = 2 * Gamma * (1 - elastic_fraction)
        return cls(0.5 * gamma_r * (1 + asymmetry), 0.5 * gamma_r * (1 - asymmetry), gamma_el)


def _sinc(x):
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1 - x**2 / 6, np.sin(safe) / safe)


def phi_psi(J, t, rates: DecoherenceRates, N: int):
    """The two auxiliary functions of the dissipative Ising correlators.

    Broadcasts over ``J`` and ``t``.  The complex square root takes the
    principal branch; both functions are even in it, so the branch is
    immaterial.
    """
    J = np.asarray(J, dtype=float)
    t = np.asarray(t, dtype=float)
    gud, gdu, gam = rates.gamma_ud, rates.gamma_du, rates.gamma
    s = 2j * gam + 2 * J / N
    root = np.sqrt(s**2 - gud * gdu + 0j)
    decay = np.exp(-(gud + gdu) * t / 2)
    sinc = _sinc(t * root)
    Phi = decay * (np.cos(t * root) + t * (gud + gdu) / 2 * sinc)
    Psi = decay * t * (1j * s - 2 * gam) * sinc
    return Phi, Psi


def effective_J_alpha(frame: BogoliubovFrame, t, N: int, coupling: str = "hamiltonian"):
    """Ising coupling and residual displacement after driving for ``t``.

    ``coupling="hamiltonian"`` uses the normalisation that follows from the
    ODF Hamiltonian with force ``f/(2 sqrt N)`` per collective spin; it is
    half of the ``"printed"`` normalisation in both J and alpha.
    """
    if coupling not in COUPLINGS:
        raise DomainError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be >= 0")
    fp, dp, r = frame.f_prime, frame.delta_prime, frame.r
    x = dp * t
    sinc = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
    J = np.real(fp**2) / dp * (1 - sinc)
    alpha = (fp / dp) / math.sqrt(N) * ((np.cos(x) - 1) * np.exp(r) - 1j * np.sin(x) * np.exp(-r))
    if coupling == "hamiltonian":
        J, alpha = 0.5 * J, 0.5 * alpha
    return J, alpha


@dataclass(frozen=True)
class Correlators:
    """Single-spin and pair expectation values (any pair i != j)."""

    sp: np.ndarray  # <s+>
    spp: np.ndarray  # <s+ s+>
    spm: np.ndarray  # <s+ s->
    spz: np.ndarray  # <s+ sz>
    m: np.ndarray  # <sz>

    @property
    def smm(self):
        return np.conj(self.spp)

    @property
    def smz(self):
        return np.conj(self.spz)


def spin_correlators(N: int, J, alpha, t, rates: DecoherenceRates, nbar: float = 0.0) -> Correlators:
    """Exact uniform-coupling correlators of the dissipative Ising model.

    The spin-motion factor describes residual entanglement with a thermal c.m.
    mode through the displacement ``alpha``.  The single-spin polarisation
    follows the spin-flip rate equation from ``<sz>(0) = 0``.
    """
    t = np.asarray(t, dtype=float)
    J = np.asarray(J, dtype=float)
    a2 = np.abs(alpha) ** 2 * (2 * nbar + 1)
    G = rates.Gamma
    P1, Ps1 = phi_psi(J, t, rates, N)
    P2, _ = phi_psi(2 * J, t, rates, N)
    P0, _ = phi_psi(0 * J, t, rates, N)
    e1 = np.exp(-G * t)
    sp = 0.5 * e1 * P1 ** (N - 1) * np.exp(-2 * a2)
    spp = 0.25 * e1**2 * P2 ** (N - 2) * np.exp(-8 * a2)
    spm = 0.25 * e1**2 * P0 ** (N - 2) + 0 * a2
    spz = 0.5 * e1 * Ps1 * P1 ** (N - 2) * np.exp(-2 * a2)
    gr = rates.gamma_r
    if gr > 0:
        m = (rates.gamma_du - rates.gamma_ud) / gr * (1 - np.exp(-gr * t))
    else:
        m = np.zeros_like(t)
    m = np.broadcast_to(m, np.shape(sp)).astype(float)
    return Correlators(sp, spp, spm, spz, m)


@dataclass(frozen=True)
class SpinMoments:
    mean_S: np.ndarray  # (..., 3)
    var_Sy: np.ndarray
    var_Sz: np.ndarray
    cov_SySz: np.ndarray


def collective_moments(c: Correlators, N: int) -> SpinMoments:
    """First and second moments of the collective spin of a symmetric state."""
    Sx = N * np.real(c.sp)
    Sy = N * np.imag(c.sp)
    Sz = 0.5 * N * c.m
    pair_yy = -2 * np.real(c.spp) + 2 * np.real(c.spm)
    var_Sy = N / 4 + N * (N - 1) / 4 * pair_yy - Sy**2
    var_Sz = N / 4 * (1 - c.m**2)
    cov = N * (N - 1) / 4 * 2 * np.imag(c.spz) - Sy * Sz
    return SpinMoments(np.stack([Sx, Sy, Sz], axis=-1), var_Sy, var_Sz, cov)


def _xi2_from(S2, vy, vz, cov, N):
    return N / (2 * S2) * (vy + vz - np.sqrt((vy - vz) ** 2 + 4 * cov**2))


def ramsey_xi2(moments: SpinMoments, N: int):
    """Ramsey squeezing parameter and the optimal quadrature angle.

    The angle is measured from +z about x, with the quadrature
    ``cos(psi) S_z - sin(psi) S_y``.
    """
    S2 = np.sum(np.asarray(moments.mean_S) ** 2, axis=-1)
    if np.any(S2 == 0):
        raise DegenerateError("mean spin length is zero: squeezing undefined")
    vy, vz, cov = moments.var_Sy, moments.var_Sz, moments.cov_SySz
    xi2 = _xi2_from(S2, vy, vz, cov, N)
    psi = 0.5 * np.arctan2(2 * cov, vy - vz)
    if np.ndim(xi2) == 0:
        return float(xi2), float(psi)
    return xi2, psi


# ---------------------------------------------------------------------------
# tau scans
# ---------------------------------------------------------------------------


def default_taus() -> np.ndarray:
    """Log grid from 10 us to 10 ms, 200 points per decade."""
    return np.logspace(-5, -2, 601)


@dataclass(frozen=True)
class SqueezeRunParams:
    """Inputs of a spin-squeezing run, angular units.

    ``Jbar_ref`` is the mean Ising strength the decoherence rates were quoted
    against; it is informational and not used in the evolution.  With
    ``single_loop`` the detuning at each ``tau`` closes one phase-space loop;
    otherwise ``delta`` is used as given.
    """

    N: int
    f: float
    g: float = 0.0
    tau: float = 1e-3
    rates: DecoherenceRates = field(default_factory=DecoherenceRates)
    nbar: float = 0.0
    noise: NoiseModel = field(default_factory=NoiseModel)
    Jbar_ref: float = 0.0
    delta: float | None = None
    single_loop: bool = True
    coupling: str = "hamiltonian"
    averaging: str = "xi2"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"spin squeezing needs N >= 2, got {self.N}")
        if self.f < 0 or self.g < 0 or self.nbar < 0:
            raise DomainError("f, g and nbar must be >= 0")
        if not self.tau > 0:
            raise DomainError(f"tau must be > 0, got {self.tau}")
        if not self.single_loop and self.delta is None:
            raise DomainError("delta is required when single_loop is off")
        if self.coupling not in COUPLINGS:
            raise DomainError(f"coupling must be one of {COUPLINGS}")
        if self.averaging not in ("xi2", "moments"):
            raise DomainError("averaging must be 'xi2' or 'moments'")

    def detuning(self, tau):
        if self.single_loop:
            return np.sqrt((TWO_PI / np.asarray(tau, dtype=float)) ** 2 + self.g**2)
        return np.full(np.shape(tau), float(self.delta))


def _moments_grid(p: SqueezeRunParams, delta, t):
    """Moments on broadcast arrays of detuning and duration; NaN where delta <= g."""
    valid = delta > p.g
    safe = np.where(valid, delta, p.g + 1.0 + p.g)
    frame = bogoliubov_frame(safe, p.g, p.f, 0.0)
    J, alpha = effective_J_alpha(frame, t, p.N, p.coupling)
    c = spin_correlators(p.N, J, alpha, t, p.rates, p.nbar)
    mom = collective_moments(c, p.N)
    return mom, valid


def _xi2_grid(p: SqueezeRunParams, delta, t):
    mom, valid = _moments_grid(p, delta, t)
    S2 = np.sum(mom.mean_S**2, axis=-1)
    # a sample whose mean spin underflows has no defined squeezing; it is
    # dropped like an out-of-domain draw
    valid = valid & (S2 > 0)
    with np.errstate(all="ignore"):
        xi2 = _xi2_from(S2, mom.var_Sy, mom.var_Sz, mom.cov_SySz, p.N)
        psi = 0.5 * np.arctan2(2 * mom.cov_SySz, mom.var_Sy - mom.var_Sz)
    return np.where(valid, xi2, np.nan), np.where(valid, psi, np.nan), mom, valid


def _average_moments(p, mom, valid):
    """xi^2 of the sample mixture: average raw first and second moments."""
    N = p.N
    S = np.where(valid[..., None], mom.mean_S, 0.0)
    Sy, Sz = S[..., 1], S[..., 2]
    w = valid.sum(axis=0)
    mean = lambda x: np.where(valid, x, 0.0).sum(axis=0) / w
    mS = S.sum(axis=0) / w[..., None]
    yy = mean(mom.var_Sy + Sy**2) - mS[..., 1] ** 2
    zz = mean(mom.var_Sz + Sz**2) - mS[..., 2] ** 2
    yz = mean(mom.cov_SySz + Sy * Sz) - mS[..., 1] * mS[..., 2]
    S2 = np.sum(mS**2, axis=-1)
    return _xi2_from(S2, yy, zz, yz, N), 0.5 * np.arctan2(2 * yz, yy - zz)


def squeezing_scan(p: SqueezeRunParams, taus=None, max_rejected=MAX_REJECTED_FRACTION) -> ScanResult:
    """Ramsey squeezing versus interaction time.

    With ``p.noise.sigma > 0`` each tau is averaged over Gaussian detuning
    offsets (one shared draw for all tau).  Points whose rejected fraction
    exceeds ``max_rejected`` are reported as NaN and excluded from the
    optimum; a scan where every point is rejected raises
    :class:`SampleRejectionError`.

    Columns: ``tau_s, xi2, xi_db, psi_opt_rad, rejected_fraction``.  The
    metadata holds the parabola-refined optimum.
    """
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    if taus.size == 0 or np.any(taus <= 0):
        raise DomainError("taus must be nonempty and positive")
    delta0 = p.detuning(taus)
    eps = p.noise.offsets()
    delta = delta0[None, :] + eps[:, None]
    t = np.broadcast_to(taus[None, :], delta.shape)
    with np.errstate(all="ignore"):
        return _scan(p, taus, delta, t, eps, max_rejected)


def _scan(p, taus, delta, t, eps, max_rejected):
    xi2_s, psi_s, mom, valid = _xi2_grid(p, delta, t)
    rejected = 1 - valid.mean(axis=0)
    if p.noise.sigma == 0:
        xi2, psi = xi2_s[0], psi_s[0]
    elif p.averaging == "xi2":
        xi2 = np.nanmean(np.where(valid, xi2_s, np.nan), axis=0) if valid.any() else np.full(taus.shape, np.nan)
        # angle of the averaged covariance matrix, reported for orientation
        _, psi = _average_moments(p, mom, valid)
    else:
        xi2, psi = _average_moments(p, mom, valid)
    xi2 = np.where(rejected > max_rejected, np.nan, xi2)
    psi = np.where(rejected > max_rejected, np.nan, psi)
    if np.all(np.isnan(xi2)):
        if np.all(rejected == 0):
            raise DegenerateError("mean spin length underflowed at every tau")
        raise SampleRejectionError("every tau exceeds the rejected-fraction ceiling", float(rejected.min()))
    xi_db = -10 * np.log10(xi2)
    meta = _optimum(taus, xi_db)
    meta.update(
        {
            "N": p.N,
            "g_hz": p.g / TWO_PI,
            "f_rad_s": p.f,
            "nbar": p.nbar,
            "sigma_hz": p.noise.sigma,
            "n_samples": int(eps.size),
            "seed": p.noise.seed,
            "coupling": p.coupling,
            "averaging": p.averaging,
        }
    )
    return ScanResult(
        {"tau_s": taus, "xi2": xi2, "xi_db": xi_db, "psi_opt_rad": psi, "rejected_fraction": rejected},
        meta,
    )


def _optimum(taus, xi_db):
    """Grid optimum refined by a parabola through its neighbours in log tau."""
    i = int(np.nanargmax(xi_db))
    best_db, best_tau = float(xi_db[i]), float(taus[i])
    if 0 < i < taus.size - 1 and np.all(np.isfinite(xi_db[i - 1 : i + 2])):
        x = np.log(taus[i - 1 : i + 2])
        y = xi_db[i - 1 : i + 2]
        a, b, c = np.polyfit(x, y, 2)
        if a < 0:
            xv = -b / (2 * a)
            if x[0] <= xv <= x[2]:
                best_tau = float(math.exp(xv))
                best_db = float(c - b**2 / (4 * a))
    return {"optimal_xi_db": best_db, "optimal_tau_s": best_tau, "grid_optimal_xi_db": float(xi_db[i])}


def optimal_squeezing(p: SqueezeRunParams, taus=None) -> float:
    """Best squeezing in dB over the tau grid."""
    return squeezing_scan(p, taus).metadata["optimal_xi_db"]
