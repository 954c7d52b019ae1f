"""Squeeze / displace / anti-squeeze displacement sensing.

The variance with which a small spin-independent displacement can be read
out in a single spin-echo shot, including Gaussian shot-to-shot fluctuations
of the c.m. frequency and a finite parametric drive strength ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ScanResult, hz_to_rad
from .errors import DomainError

#: Default single-shot variance at the standard quantum limit (ground-state
#: zero-point fluctuations in dimensionless displacement units).
SQL_VARIANCE = 0.25


@dataclass(frozen=True)
class SensingParams:
    """Inputs of the sensitivity model, angular units.

    ``g = inf`` stands for an instantaneous squeeze.
    """

    f: float
    Gamma: float = 0.0
    tau: float = 1e-3
    r: float = 0.0
    g: float = math.inf
    sigma: float = 0.0
    nbar: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"tau must be > 0, got {self.tau}")
        if self.r < 0:
            raise DomainError(f"r must be >= 0, got {self.r}")
        if self.r > 0 and not self.g > 0:
            raise DomainError("r > 0 requires a finite-strength drive g > 0")
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.Gamma < 0 or self.nbar < 0:
            raise DomainError("Gamma and nbar must be >= 0")

    @classmethod
    def from_hz(cls, f, Gamma=0.0, tau=1e-3, r=0.0, g_hz=math.inf, sigma_hz=0.0, nbar=0.0):
        """Build from ``g`` and ``sigma`` quoted in Hz (``f`` stays in rad/s)."""
        return cls(f=f, Gamma=Gamma, tau=tau, r=r, g=hz_to_rad(g_hz), sigma=hz_to_rad(sigma_hz), nbar=nbar)


def _drive_terms(r, g, tau):
    """The three 1/g pieces; zero at r = 0 or g = inf."""
    if r == 0 or math.isinf(g):
        z = np.zeros_like(tau)
        return z, z, z
    em2r = math.exp(-2 * r)
    a = (r - 0.5 * (1 - em2r)) / g**2
    b = tau * 0.5 * (1 - em2r) / g
    c = math.sinh(r) * math.exp(r) / (g * tau)
    return a + 0 * tau, b, c


def displacement_variance(p: SensingParams, tau=None):
    """Single-shot displacement variance (Delta beta)^2.

    Parameters
    ----------
    p : SensingParams
    tau : float or array_like, optional
        Overrides ``p.tau``; arrays are evaluated elementwise.
    """
    if not p.f > 0:
        raise DomainError("f must be > 0: no force, no signal")
    t = np.asarray(p.tau if tau is None else tau, dtype=float)
    if np.any(t <= 0):
        raise DomainError("tau must be > 0")
    s2 = p.sigma**2
    e2r = math.exp(2 * p.r)
    a, b, c = _drive_terms(p.r, p.g, t)
    bracket = 1 + s2 * t**2 / 3 + s2 * a + s2 * b
    out = (
        np.exp(2 * p.Gamma * t) / (4 * p.f**2 * t**2 * e2r) * bracket
        + s2 * t**2 / (2 * e2r) * (1 + c) ** 2 * (p.nbar + 0.5)
        + p.f**2 * s2 * t**4 / (9 * e2r)
    )
    return float(out) if out.ndim == 0 else out


def db_below_sql(var, sql_var=SQL_VARIANCE):
    """Decibels by which ``var`` sits below ``sql_var``."""
    var = np.asarray(var, dtype=float)
    if np.any(var <= 0) or sql_var <= 0:
        raise DomainError("variances must be positive")
    out = 10 * np.log10(sql_var / var)
    return float(out) if out.ndim == 0 else out


def enhancement_scan(p: SensingParams, taus, sql_var=SQL_VARIANCE) -> ScanResult:
    """Variance with and without squeezing across arm durations.

    Columns: ``tau_s, var_r, var_r0, gain_db, db_below_sql``.  The metadata
    carries the tau minimising each variance and the gain between the two
    optima.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size == 0 or np.any(taus <= 0):
        raise DomainError("taus must be nonempty and positive")
    var_r = np.atleast_1d(displacement_variance(p, taus))
    p0 = SensingParams(f=p.f, Gamma=p.Gamma, tau=p.tau, r=0.0, g=p.g, sigma=p.sigma, nbar=p.nbar)
    var_r0 = np.atleast_1d(displacement_variance(p0, taus))
    i, i0 = int(np.argmin(var_r)), int(np.argmin(var_r0))
    meta = {
        "tau_opt_r_s": float(taus[i]),
        "tau_opt_r0_s": float(taus[i0]),
        "var_opt_r": float(var_r[i]),
        "var_opt_r0": float(var_r0[i0]),
        "optimal_gain_db": float(10 * np.log10(var_r0[i0] / var_r[i])),
        "db_below_sql_r": float(db_below_sql(var_r[i], sql_var)),
        "db_below_sql_r0": float(db_below_sql(var_r0[i0], sql_var)),
        "sql_var": float(sql_var),
    }
    return ScanResult(
        {
            "tau_s": taus,
            "var_r": var_r,
            "var_r0": var_r0,
            "gain_db": 10 * np.log10(var_r0 / var_r),
            "db_below_sql": np.atleast_1d(db_below_sql(var_r, sql_var)),
        },
        meta,
    )
