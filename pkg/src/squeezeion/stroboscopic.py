"""Squeeze-then-displace Ramsey sequence.

A short parametric pulse squeezes the c.m. mode by ``r``; a resonant
spin-dependent displacement of duration ``tau`` then probes the squeezed
variance along the direction set by the relative phase ``delta_phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .core import DriveParams, MotionalState, TrapParams
from .errors import DomainError, FitFailure


@dataclass(frozen=True)
class StroboConfig:
    trap: TrapParams
    drive: DriveParams
    motion: MotionalState
    t_s: float = 0.0
    delta_phi: float = 0.0

    def __post_init__(self):
        if self.t_s < 0:
            raise DomainError(f"squeeze duration must be >= 0, got {self.t_s}")
        r_pulse = self.drive.g * self.t_s
        if r_pulse > 0 and self.motion.r > 0 and not math.isclose(r_pulse, self.motion.r, rel_tol=1e-9):
            raise DomainError(
                f"inconsistent squeezing: g*t_s = {r_pulse:.6g} but motion.r = {self.motion.r:.6g}"
            )

    @property
    def r(self) -> float:
        """Squeezing parameter, from ``motion.r`` or else ``g * t_s``."""
        return self.motion.r if self.motion.r > 0 else self.drive.g * self.t_s


@dataclass(frozen=True)
class PhaseScanPoint:
    delta_phi: float
    bright_fraction: float
    std_dev: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.bright_fraction <= 1.0:
            raise DomainError(f"bright fraction outside [0, 1]: {self.bright_fraction}")
        if self.std_dev < 0:
            raise DomainError(f"negative std_dev: {self.std_dev}")


@dataclass(frozen=True)
class StroboFit:
    r: float
    r_err: float
    r_stat: float
    r_sys: float
    amplitude: float
    r_at_nbar: tuple = ()


def chi(r, delta_phi):
    """Phase-dependent squeezing factor (2 at r = 0)."""
    r = np.asarray(r, dtype=float)
    c = np.cos(delta_phi)
    out = np.exp(2 * r) * (1 + c) + np.exp(-2 * r) * (1 - c)
    return float(out) if np.ndim(out) == 0 else out


def _bright(r, delta_phi, ftau_sq, nbar, N, decay):
    exponent = ftau_sq * (2 * nbar + 1) * chi(r, delta_phi) / (4 * N)
    return 0.5 - 0.5 * decay * np.exp(-exponent)


def strobo_bright_fraction(cfg: StroboConfig, delta_phi=None):
    """Thermally averaged bright fraction at the end of the sequence.

    ``delta_phi`` overrides ``cfg.delta_phi`` and may be an array.
    """
    phi = cfg.delta_phi if delta_phi is None else np.asarray(delta_phi, dtype=float)
    d = cfg.drive
    decay = math.exp(-d.Gamma * d.tau)
    out = _bright(cfg.r, phi, (d.f * d.tau) ** 2, cfg.motion.nbar, cfg.trap.N, decay)
    return float(out) if np.ndim(out) == 0 else out


def phase_scan(cfg: StroboConfig, phis) -> list[PhaseScanPoint]:
    values = strobo_bright_fraction(cfg, np.asarray(phis, dtype=float))
    return [PhaseScanPoint(float(p), float(v)) for p, v in zip(phis, np.atleast_1d(values))]


def amplified_displacement(beta_i: complex, r: float, aligned: bool = True) -> complex:
    """Displacement after a squeeze / displace / anti-squeeze sandwich.

    Along the amplified quadrature the gain is exp(r); orthogonal to it the
    displacement shrinks by exp(-r).
    """
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")
    return complex(beta_i) * math.exp(r if aligned else -r)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _check_coverage(phis: np.ndarray):
    if phis.size < 8:
        raise FitFailure(f"need at least 8 phase points, got {phis.size}")
    wrapped = np.sort(np.mod(phis, 2 * math.pi))
    gaps = np.diff(np.concatenate([wrapped, [wrapped[0] + 2 * math.pi]]))
    if gaps.max() > math.pi / 2:
        raise FitFailure("phase points do not cover a full period (gap > pi/2)")


def _weights(std: np.ndarray) -> np.ndarray:
    if np.all(std > 0):
        return 1.0 / std**2
    return np.ones_like(std)


def _fit_r(phis, y, w, ftau_sq, nbar, N, decay, r_max, r_step):
    def cost(r):
        resid = y - _bright(r, phis, ftau_sq, nbar, N, decay)
        return float(np.sum(w * resid**2))

    grid = np.arange(0.0, r_max + 0.5 * r_step, r_step)
    costs = np.array([cost(r) for r in grid])
    k = int(np.argmin(costs))
    spread = costs.max() - costs.min()
    if spread <= 1e-14 * max(1.0, costs.max()):
        raise FitFailure("cost is flat in r: squeezing parameter unidentifiable")
    if k == 0 or k == grid.size - 1:
        raise FitFailure(f"best r sits on the search boundary ({grid[k]:.3g})")
    res = minimize_scalar(
        cost,
        bounds=(grid[k - 1], grid[k + 1]),
        method="bounded",
        options={"xatol": 1e-12, "maxiter": 500},
    )
    return float(res.x), float(res.fun)


def fit_strobo_r(
    data: list[PhaseScanPoint],
    cfg: StroboConfig,
    nbar_err: float = 0.2,
    fit_amplitude: bool = False,
    r_max: float = 3.0,
    r_step: float = 0.02,
) -> StroboFit:
    """Fit the squeezing parameter to a relative-phase scan.

    A coarse grid over ``[0, r_max]`` locates the minimum of the weighted
    squared residuals, then a bounded Brent search refines it inside the
    neighbouring grid cells.  The reported uncertainty combines the
    curvature-based statistical error with the spread of refits at
    ``nbar -/+ nbar_err``.

    With ``fit_amplitude`` the product |f tau|^2 is fitted jointly with r as
    a nuisance parameter instead of being taken from ``cfg``.
    """
    phis = np.array([p.delta_phi for p in data], dtype=float)
    y = np.array([p.bright_fraction for p in data], dtype=float)
    std = np.array([p.std_dev for p in data], dtype=float)
    _check_coverage(phis)
    if np.ptp(y) < 1e-12:
        raise FitFailure("flat phase scan: squeezing parameter unidentifiable")
    w = _weights(std)

    d = cfg.drive
    N = cfg.trap.N
    decay = math.exp(-d.Gamma * d.tau)
    nbar = cfg.motion.nbar
    ftau_sq = (d.f * d.tau) ** 2
    if ftau_sq == 0 and not fit_amplitude:
        raise FitFailure("f * tau = 0: the scan carries no information on r")

    if fit_amplitude:
        r_hat, ftau_sq = _fit_r_and_amplitude(phis, y, w, ftau_sq, nbar, N, decay, r_max, r_step)
        _, cost_min = r_hat, float(np.sum(w * (y - _bright(r_hat, phis, ftau_sq, nbar, N, decay)) ** 2))
    else:
        r_hat, cost_min = _fit_r(phis, y, w, ftau_sq, nbar, N, decay, r_max, r_step)

    # curvature (Gauss-Newton) error on r
    h = 1e-6
    jac = (_bright(r_hat + h, phis, ftau_sq, nbar, N, decay) - _bright(r_hat - h, phis, ftau_sq, nbar, N, decay)) / (2 * h)
    info = float(np.sum(w * jac**2))
    dof = max(phis.size - (2 if fit_amplitude else 1), 1)
    if np.all(std > 0):
        r_stat = math.sqrt(1.0 / info)
    else:
        r_stat = math.sqrt(cost_min / dof / info)

    r_at_nbar = ()
    r_sys = 0.0
    if nbar_err > 0 and not fit_amplitude:
        lo = max(nbar - nbar_err, 0.0)
        hi = nbar + nbar_err
        r_lo, _ = _fit_r(phis, y, w, ftau_sq, lo, N, decay, r_max, r_step)
        r_hi, _ = _fit_r(phis, y, w, ftau_sq, hi, N, decay, r_max, r_step)
        r_at_nbar = ((lo, r_lo), (hi, r_hi))
        r_sys = max(abs(r_lo - r_hat), abs(r_hi - r_hat))
    return StroboFit(
        r=r_hat,
        r_err=math.hypot(r_stat, r_sys),
        r_stat=r_stat,
        r_sys=r_sys,
        amplitude=ftau_sq,
        r_at_nbar=r_at_nbar,
    )


def _fit_r_and_amplitude(phis, y, w, ftau_sq0, nbar, N, decay, r_max, r_step):
    from scipy.optimize import least_squares

    # start from the r-only grid fit at the nominal amplitude
    start_amp = ftau_sq0 if ftau_sq0 > 0 else 1.0
    try:
        r0, _ = _fit_r(phis, y, w, start_amp, nbar, N, decay, r_max, r_step)
    except FitFailure:
        r0 = 0.5 * r_max
    sw = np.sqrt(w)

    def resid(p):
        r, log_amp = p
        return sw * (y - _bright(r, phis, math.exp(log_amp), nbar, N, decay))

    res = least_squares(
        resid,
        x0=[r0, math.log(start_amp)],
        bounds=([0.0, -50.0], [r_max, 50.0]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    r_hat = float(res.x[0])
    if r_hat <= 1e-9 or r_hat >= r_max - 1e-9:
        raise FitFailure(f"best r sits on the search boundary ({r_hat:.3g})")
    return r_hat, math.exp(res.x[1])


def with_r(cfg: StroboConfig, r: float) -> StroboConfig:
    """Copy of ``cfg`` with the squeezing parameter replaced."""
    return replace(cfg, motion=replace(cfg.motion, r=r), t_s=0.0)
