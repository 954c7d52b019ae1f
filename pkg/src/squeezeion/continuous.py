"""Spin echo with the ODF and parametric drive applied together.

Closed forms for the segment displacements, the total loop displacement and
geometric phase, the bright fraction of a thermal-coherent crystal, the
shifted decoupling points, and the fits used to calibrate ``g`` and the
initial motional state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import j0

from .core import (
    MAX_REJECTED_FRACTION,
    TWO_PI,
    BogoliubovFrame,
    DriveParams,
    MotionalState,
    NoiseModel,
    ScanResult,
    TrapParams,
    bogoliubov_frame,
    gaussian_average,
    rad_to_hz,
)
from .errors import DegenerateError, DomainError, FitFailure

#: Phase step of the relative-phase band evaluator.
BAND_STEP = math.pi / 32


@dataclass(frozen=True)
class ContinuousConfig:
    """Settings of one continuous-protocol shot.

    The Bogoliubov frame is derived from ``drive`` on every access.
    """

    trap: TrapParams
    drive: DriveParams
    motion: MotionalState = field(default_factory=MotionalState)
    noise: NoiseModel = field(default_factory=NoiseModel)
    delta_phi_c: float = math.pi / 2

    @property
    def frame(self) -> BogoliubovFrame:
        d = self.drive
        return bogoliubov_frame(d.delta, d.g, d.f, self.delta_phi_c)


@dataclass(frozen=True)
class DecouplingScan:
    detunings: np.ndarray
    bright: np.ndarray
    tau: float

    def __post_init__(self):
        det = np.asarray(self.detunings, dtype=float)
        bright = np.asarray(self.bright, dtype=float)
        if det.shape != bright.shape or det.ndim != 1:
            raise DomainError("detunings and bright must be 1-D and of equal length")
        if np.any(np.diff(det) <= 0):
            raise DomainError("detunings must be strictly increasing")
        if not self.tau > 0:
            raise DomainError(f"tau must be > 0, got {self.tau}")
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "bright", bright)


@dataclass(frozen=True)
class GCalibrationPoint:
    voltage: float
    g: float
    tau: float = 1e-3

    def __post_init__(self):
        if not self.voltage > 0:
            raise DomainError(f"voltage must be > 0, got {self.voltage}")
        if self.g < 0:
            raise DomainError(f"g must be >= 0, got {self.g}")


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _alpha(frame: BogoliubovFrame, phi_odf, t0, t1, N):
    fp, dp, r = frame.f_prime, frame.delta_prime, frame.r
    at = (fp / dp) * (np.exp(-1j * dp * t1) - np.exp(-1j * dp * t0))
    pre = np.exp(1j * phi_odf) / (2 * math.sqrt(N))
    return pre * (at * np.cosh(r) + np.exp(1j * frame.delta_phi_c) * np.conj(at) * np.sinh(r))


def segment_displacement(cfg: ContinuousConfig, t0: float, t1: float) -> complex:
    """Displacement of the c.m. mode accrued between ``t0`` and ``t1``."""
    if t1 < t0:
        raise DomainError("need t1 >= t0")
    return complex(_alpha(cfg.frame, cfg.drive.phi_odf, t0, t1, cfg.trap.N))


def _alpha_total(frame, phi_odf, tau, t_pi, N):
    fp, dp, r = frame.f_prime, frame.delta_prime, frame.r
    a = (np.exp(-1j * dp * tau) - 1) * (1 - np.exp(-1j * dp * (tau + t_pi)))
    b = (np.exp(1j * dp * tau) - 1) * (1 - np.exp(1j * dp * (tau + t_pi)))
    pre = np.exp(1j * phi_odf) / (2 * dp * math.sqrt(N))
    return pre * (fp * a * np.cosh(r) + np.exp(1j * frame.delta_phi_c) * np.conj(fp) * b * np.sinh(r))


def _phase_total(frame, tau, t_pi, N):
    dp = frame.delta_prime
    x = dp * tau
    braces = np.sin(x) - x + (1 - np.cos(x)) * np.sin(dp * (tau + t_pi))
    return np.abs(frame.f_prime) ** 2 / (2 * dp**2 * N) * braces


def total_displacement(cfg: ContinuousConfig) -> complex:
    """Net displacement alpha_T left after both echo arms."""
    d = cfg.drive
    return complex(_alpha_total(cfg.frame, d.phi_odf, d.tau, d.t_pi, cfg.trap.N))


def total_phase(cfg: ContinuousConfig) -> float:
    """Effective geometric phase Phi_T of the echo loop."""
    d = cfg.drive
    return float(_phase_total(cfg.frame, d.tau, d.t_pi, cfg.trap.N))


def _bright_closed(delta, g, f, phi_odf, dphic, tau, t_pi, N, nbar, beta_abs, Gamma):
    """Broadcasting bright fraction; NaN wherever ``delta <= g``."""
    delta = np.asarray(delta, dtype=float)
    valid = delta > g
    safe = np.where(valid, delta, g + 1.0 + np.abs(g))
    frame = bogoliubov_frame(safe, g, f, dphic)
    aT = np.abs(_alpha_total(frame, phi_odf, tau, t_pi, N))
    phiT = _phase_total(frame, tau, t_pi, N)
    contrast = (
        np.exp(-2 * aT**2 * (2 * nbar + 1))
        * math.exp(-2 * Gamma * tau)
        * j0(4 * aT * beta_abs)
        * np.cos(4 * phiT) ** (N - 1)
    )
    return np.where(valid, 0.5 - 0.5 * contrast, np.nan)


def _params(cfg: ContinuousConfig):
    d, m = cfg.drive, cfg.motion
    return dict(
        g=d.g,
        f=d.f,
        phi_odf=d.phi_odf,
        dphic=cfg.delta_phi_c,
        tau=d.tau,
        t_pi=d.t_pi,
        N=cfg.trap.N,
        nbar=m.nbar,
        beta_abs=abs(m.beta),
        Gamma=d.Gamma,
    )


def continuous_bright_fraction(cfg: ContinuousConfig, max_rejected=MAX_REJECTED_FRACTION) -> float:
    """Bright fraction at the end of the sequence, noise-averaged if ``sigma > 0``.

    The coherent amplitude enters only through |beta|: its phase is taken
    uniformly random from shot to shot.
    """
    cfg.frame  # raise early on an unstable nominal setting
    kw = _params(cfg)
    delta = cfg.drive.delta
    res = gaussian_average(lambda eps: _bright_closed(delta + eps, **kw), cfg.noise, max_rejected)
    return float(res.mean)


def decoupling_scan(cfg: ContinuousConfig, detunings, max_rejected=MAX_REJECTED_FRACTION) -> ScanResult:
    """Bright fraction across detunings (rad/s), everything else from ``cfg``.

    Points whose rejected fraction exceeds ``max_rejected`` are reported as
    NaN instead of aborting the whole scan.
    """
    det = np.asarray(detunings, dtype=float)
    kw = _params(cfg)
    res = gaussian_average(lambda eps: _bright_closed(det[None, :] + eps[:, None], **kw), cfg.noise)
    mean = np.atleast_1d(np.asarray(res.mean, dtype=float)).copy()
    rejected = np.atleast_1d(np.asarray(res.rejected_fraction, dtype=float))
    mean[rejected > max_rejected] = np.nan
    return ScanResult(
        {"delta_hz": rad_to_hz(det), "bright_fraction": mean, "rejected_fraction": rejected},
        {"tau_s": cfg.drive.tau, "g_hz": rad_to_hz(cfg.drive.g), "delta_phi_c_rad": cfg.delta_phi_c},
    )


def phase_band(cfg: ContinuousConfig, detunings, step=BAND_STEP):
    """Pointwise min and max of the bright fraction over delta_phi_c in [0, 2 pi)."""
    from dataclasses import replace

    phases = np.arange(0.0, TWO_PI - 1e-12, step)
    curves = np.array([decoupling_scan(replace(cfg, delta_phi_c=p), detunings)["bright_fraction"] for p in phases])
    return np.nanmin(curves, axis=0), np.nanmax(curves, axis=0)


def decoupling_frequency(tau: float, g: float, k: int = 1) -> float:
    """Detuning (rad/s) of the k-th spin-motion decoupling point."""
    if not tau > 0 or g < 0:
        raise DomainError("need tau > 0 and g >= 0")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    return math.hypot(TWO_PI * k / tau, g)


def extract_g(delta_measured: float, tau: float, k: int = 1) -> float:
    """Parametric strength (rad/s) from a measured decoupling detuning."""
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    base = TWO_PI * k / tau
    if delta_measured < base:
        raise DomainError(
            f"decoupling detuning {delta_measured:.6g} rad/s is below the g = 0 position {base:.6g} rad/s"
        )
    return math.sqrt((delta_measured - base) * (delta_measured + base))


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecouplingFit:
    nbar: float
    beta: float
    cost: float


def fit_decoupling_scan(scan: DecouplingScan, cfg: ContinuousConfig) -> DecouplingFit:
    """Least-squares estimate of (nbar, |beta|) from a decoupling scan.

    A log-spaced grid in nbar (0.1 to 300) crossed with a linear grid in
    |beta| (0 to 30) seeds a Nelder-Mead refinement in (log nbar, |beta|).
    """
    det, y = scan.detunings, scan.bright
    d = cfg.drive
    base = TWO_PI / scan.tau
    ks = np.arange(1, int(det[-1] / base) + 2)
    points = np.sqrt((base * ks) ** 2 + d.g**2)
    if np.count_nonzero((points >= det[0]) & (points <= det[-1])) < 2:
        raise FitFailure("scan must span at least two decoupling points")
    if np.ptp(y) < 1e-12:
        raise FitFailure("flat decoupling scan: nothing to fit")
    if not d.f > 0:
        raise FitFailure("f = 0: the scan carries no information on the motion")

    kw = _params(cfg)
    kw["tau"] = scan.tau
    del kw["nbar"], kw["beta_abs"]
    noise = cfg.noise

    if noise.sigma == 0:
        def model(nbar, beta):
            return _bright_closed(det, nbar=nbar, beta_abs=beta, **kw)
    else:
        eps = noise.offsets()

        def model(nbar, beta):
            vals = _bright_closed(det[None, :] + eps[:, None], nbar=nbar, beta_abs=beta, **kw)
            return np.nanmean(vals, axis=0)

    def cost(p):
        return float(np.sum((model(math.exp(p[0]), abs(p[1])) - y) ** 2))

    nbars = np.geomspace(0.1, 300, 40)
    betas = np.linspace(0, 30, 61)
    grid = np.array([[cost((math.log(n), b)) for b in betas] for n in nbars])
    i, j = np.unravel_index(np.nanargmin(grid), grid.shape)
    res = minimize(
        cost,
        x0=[math.log(nbars[i]), betas[j]],
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 20000, "maxfev": 40000},
    )
    # a second pass restarts the simplex at the optimum to shake off stalls
    res = minimize(
        cost,
        x0=res.x,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-18, "maxiter": 20000, "maxfev": 40000},
    )
    nbar_hat, beta_hat = math.exp(res.x[0]), abs(float(res.x[1]))
    if not res.success and res.fun > 1e-8 * max(float(np.sum(y**2)), 1e-30):
        raise FitFailure(f"simplex did not converge: {res.message}")
    if nbar_hat <= 0.1 * (1 + 1e-6) or nbar_hat >= 300 * (1 - 1e-6) or beta_hat >= 30:
        raise FitFailure(f"fit ran to the search boundary (nbar={nbar_hat:.4g}, beta={beta_hat:.4g})")
    return DecouplingFit(nbar_hat, beta_hat, float(res.fun))


@dataclass(frozen=True)
class LinearGFit:
    slope: float
    intercept: float
    residuals: np.ndarray


def fit_linear_g(points: list[GCalibrationPoint], zero_intercept: bool = True) -> LinearGFit:
    """Ordinary least-squares line through g versus drive voltage.

    With ``zero_intercept`` (the default) the line is forced through the
    origin and a single point suffices.  A free intercept needs at least two
    distinct voltages.
    """
    if not points:
        raise DegenerateError("no calibration points")
    v = np.array([p.voltage for p in points], dtype=float)
    g = np.array([p.g for p in points], dtype=float)
    if v.size > 1 and np.ptp(v) == 0:
        raise DegenerateError("all voltages are equal: slope is not identifiable")
    if zero_intercept:
        slope = float(v @ g / (v @ v))
        intercept = 0.0
    else:
        if np.unique(v).size < 2:
            raise DegenerateError("a free intercept needs at least two distinct voltages")
        A = np.column_stack([v, np.ones_like(v)])
        (slope, intercept), *_ = np.linalg.lstsq(A, g, rcond=None)
        slope, intercept = float(slope), float(intercept)
    return LinearGFit(slope, intercept, g - (slope * v + intercept))
