"""Registry of oracle-equivalence checks.

Every closed form in the stroboscopic, continuous and spin-squeezing modules
is certified by at least one entry here; ``CLOSED_FORMS`` lists them and a
test enforces the coverage.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import __version__
from ..continuous import (
    ContinuousConfig,
    continuous_bright_fraction,
    decoupling_frequency,
    extract_g,
    segment_displacement,
    total_phase,
)
from ..core import DriveParams, MotionalState, TrapParams, bogoliubov_frame
from ..spin_squeezing import (
    DecoherenceRates,
    collective_moments,
    effective_J_alpha,
    ramsey_xi2,
    spin_correlators,
)
from ..stroboscopic import StroboConfig, amplified_displacement, chi, phase_scan, strobo_bright_fraction
from .continuous import (
    continuous_oracle,
    driven_ising_correlators,
    interaction_picture_mean,
    loop_closure_deficit,
)
from .lindblad import ising_with_motion, oracle_correlators, oracle_xi2
from .strobo import amplification_identity, strobo_oracle

CLOSED_FORMS = {
    "stroboscopic": ["chi", "strobo_bright_fraction", "phase_scan", "amplified_displacement"],
    "continuous": [
        "segment_displacement",
        "total_displacement",
        "total_phase",
        "continuous_bright_fraction",
        "decoupling_frequency",
        "extract_g",
    ],
    "spin_squeezing": ["phi_psi", "effective_J_alpha", "spin_correlators", "collective_moments", "ramsey_xi2"],
}

# Trap constants only enter the continuous closed forms through N.
_TRAP = dict(omega_z=1.59e6, Omega_c=7.6e6, omega_r=180e3)


@dataclass(frozen=True)
class Check:
    name: str
    closed_forms: tuple
    tolerance: float
    run: Callable[[], float]
    description: str = ""


@dataclass
class CheckResult:
    name: str
    closed_forms: list
    max_deviation: float
    tolerance: float
    passed: bool
    error: str | None = None
    cases: int = 0

    def as_dict(self):
        return {
            "name": self.name,
            "closed_forms": list(self.closed_forms),
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "cases": self.cases,
            "error": self.error,
        }


REGISTRY: dict[str, Check] = {}


def register(name, closed_forms, tolerance, description=""):
    def deco(fn):
        REGISTRY[name] = Check(name, tuple(closed_forms), tolerance, fn, description)
        return fn

    return deco


# ---------------------------------------------------------------------------
# Stroboscopic
# ---------------------------------------------------------------------------

STROBO_R = (0.0, 0.5, 1.25)
STROBO_NBAR = (0.0, 0.38, 2.0)
STROBO_FTAU = (0.8, 2.0)
STROBO_PHIS = tuple(np.linspace(0, 2 * math.pi, 16, endpoint=False))


def strobo_deviation(rs=STROBO_R, nbars=STROBO_NBAR, ftaus=STROBO_FTAU, phis=STROBO_PHIS):
    """Largest |closed form - Fock oracle| for N = 1, Gamma = 0."""
    trap = TrapParams(N=1, **_TRAP)
    worst, cases = 0.0, 0
    for r in rs:
        for nbar in nbars:
            for ftau in ftaus:
                cfg = StroboConfig(trap, DriveParams(f=ftau / 1e-3, tau=1e-3), MotionalState(nbar=nbar, r=r))
                closed = [p.bright_fraction for p in phase_scan(cfg, phis)]
                for phi, c in zip(phis, closed):
                    o, _, _ = strobo_oracle(r, phi, ftau, nbar)
                    worst = max(worst, abs(o - c))
                    cases += 1
    return worst, cases


@register("strobo-fock", ["chi", "strobo_bright_fraction", "phase_scan"], 1e-6,
          "squeeze-displace Ramsey bright fraction vs Fock-space evolution, N=1")
def _strobo():
    return strobo_deviation()


@register("amplification-identity", ["amplified_displacement"], 1e-8,
          "S^dag D_sd(beta) S vs D_sd(G beta) on low Fock states, aligned and orthogonal")
def _amplification():
    worst, cases = 0.0, 0
    for r in (0.0, 0.5, 1.25):
        for theta in (0.0, 1.1):
            for aligned in (True, False):
                arg = theta / 2 + (0 if aligned else math.pi / 2)
                beta = 0.3 * np.exp(1j * arg)
                dev, beta_p = amplification_identity(beta, r, theta)
                worst = max(worst, dev, abs(beta_p - amplified_displacement(beta, r, aligned)))
                cases += 1
    return worst, cases


# ---------------------------------------------------------------------------
# Continuous protocol
# ---------------------------------------------------------------------------

ECHO = dict(delta=2 * math.pi * 1e3, tau=0.37e-3, t_pi=50e-6, f=2 * math.pi * 0.8e3, phi_odf=0.3)
ECHO_G_RATIOS = (0.0, 0.25, 0.5)
ECHO_MOTION = ((0.0, 0.0), (0.5, 0.7), (1.0, 1.0))
ECHO_PHASES = (0.0, math.pi / 2)


def _echo_cfg(g, nbar, beta, dphic, N=2, **over):
    p = {**ECHO, **over}
    drive = DriveParams(f=p["f"], delta=p["delta"], g=g, tau=p["tau"], t_pi=p["t_pi"], phi_odf=p["phi_odf"])
    return ContinuousConfig(TrapParams(N=N, **_TRAP), drive, MotionalState(nbar, beta), delta_phi_c=dphic)


def echo_deviation(g_ratios=ECHO_G_RATIOS, motions=ECHO_MOTION, phases=ECHO_PHASES):
    """Largest |closed form - unitary oracle| for N = 2, Gamma = 0, sigma = 0."""
    worst, cases = 0.0, 0
    for gr in g_ratios:
        g = gr * ECHO["delta"]
        for nbar, beta in motions:
            for dphic in phases:
                closed = continuous_bright_fraction(_echo_cfg(g, nbar, beta, dphic))
                o, _ = continuous_oracle(2, ECHO["f"], ECHO["delta"], g, ECHO["tau"], ECHO["t_pi"],
                                         nbar, beta, ECHO["phi_odf"], dphic)
                worst = max(worst, abs(o - closed))
                cases += 1
    return worst, cases


@register("continuous-echo", ["continuous_bright_fraction", "total_displacement"], 1e-5,
          "echo bright fraction vs density-matrix evolution of the full Hamiltonian, N=2")
def _echo():
    return echo_deviation()


@register("geometric-phase", ["total_phase"], 1e-8,
          "at a decoupling point the bright fraction is set by the geometric phase alone")
def _phase():
    worst, cases = 0.0, 0
    tau = ECHO["tau"]
    for gr in (0.0, 0.4):
        for k in (1, 2):
            g = gr * 2 * math.pi / tau
            delta = decoupling_frequency(tau, g, k)
            for dphic in (0.0, math.pi / 2):
                cfg = _echo_cfg(g, 0.0, 0.0, dphic, delta=delta, f=2 * math.pi * 3e3)
                closed = 0.5 - 0.5 * math.cos(4 * total_phase(cfg))
                o, _ = continuous_oracle(2, cfg.drive.f, delta, g, tau, ECHO["t_pi"], 0.0, 0.0,
                                         ECHO["phi_odf"], dphic)
                worst = max(worst, abs(o - closed))
                cases += 1
    return worst, cases


@register("segment-displacement", ["segment_displacement"], 1e-9,
          "interaction-picture <a> of a spin eigenstate equals N alpha(0, t)")
def _segment():
    worst, cases = 0.0, 0
    for N in (1, 2):
        for gr in (0.0, 0.3):
            for dphic in (0.0, 0.9):
                f, delta, t = 1.3, 2.0, 1.7
                cfg = ContinuousConfig(
                    TrapParams(N=N, **_TRAP),
                    DriveParams(f=f, delta=delta, g=gr * delta, phi_odf=0.4, tau=1.0),
                    delta_phi_c=dphic,
                )
                m = interaction_picture_mean(f, delta, gr * delta, t, N, 0.4, dphic)
                worst = max(worst, abs(m - N * segment_displacement(cfg, 0.0, t)))
                cases += 1
    return worst, cases


@register("decoupling-closure", ["decoupling_frequency", "extract_g"], 1e-4,
          "motional state returns to the force-free evolution at the predicted decoupling point")
def _closure():
    worst, cases = 0.0, 0
    tau = 1e-3
    for g in (0.0, 2 * math.pi * 400, 2 * math.pi * 1500):
        for k in (1, 2):
            delta = decoupling_frequency(tau, g, k)
            worst = max(worst, loop_closure_deficit(2 * math.pi * 0.8e3, delta, g, tau))
            worst = max(worst, abs(extract_g(delta, tau, k) - g) / (2 * math.pi))
            cases += 1
    return worst, cases


# ---------------------------------------------------------------------------
# Spin squeezing
# ---------------------------------------------------------------------------


def lindblad_draws(n=100, seed=2024):
    """Random (N, J, rates, alpha, nbar, t) with every ingredient nonzero."""
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield dict(
            N=int(rng.choice([2, 3])),
            J=float(rng.uniform(0.2, 3.0)),
            rates=DecoherenceRates(*rng.uniform(0.01, 0.5, 3)),
            alpha=complex(rng.uniform(0.05, 0.4) * np.exp(1j * rng.uniform(0, 2 * math.pi))),
            nbar=float(rng.uniform(0.05, 1.0)),
            t=float(rng.uniform(0.1, 2.0)),
        )


def lindblad_deviation(n=100, seed=2024):
    """Largest |pipeline xi^2 - oracle xi^2| and correlator deviation."""
    worst_xi, worst_c, cases = 0.0, 0.0, 0
    for d in lindblad_draws(n, seed):
        N = d["N"]
        rho = ising_with_motion(N, d["J"], d["alpha"], d["t"], d["rates"], d["nbar"])
        c = spin_correlators(N, d["J"], d["alpha"], d["t"], d["rates"], d["nbar"])
        xi_c, _ = ramsey_xi2(collective_moments(c, N), N)
        xi_o, _ = oracle_xi2(rho, N)
        closed = np.array([c.sp, c.spp, c.spm, c.spz, c.m], dtype=complex)
        worst_xi = max(worst_xi, abs(xi_c - xi_o))
        worst_c = max(worst_c, float(np.max(np.abs(closed - np.array(oracle_correlators(rho, N))))))
        cases += 1
    return worst_xi, worst_c, cases


@register("lindblad-pipeline", ["phi_psi", "spin_correlators", "collective_moments", "ramsey_xi2"], 1e-6,
          "correlators -> moments -> xi_R^2 vs Liouvillian evolution plus motional channel, N=2,3")
def _pipeline():
    worst_xi, _, cases = lindblad_deviation()
    return worst_xi, cases


@register("lindblad-correlators", ["phi_psi", "spin_correlators"], 1e-8,
          "single-spin and pair correlators vs the Lindblad oracle")
def _correlators():
    _, worst_c, cases = lindblad_deviation(n=30, seed=7)
    return worst_c, cases


@register("driven-ising", ["effective_J_alpha"], 1e-8,
          "effective Ising coupling and residual displacement vs full spin-motion unitary, N=2")
def _driven():
    worst, cases = 0.0, 0
    rates = DecoherenceRates()
    for f, delta, g, t, nbar in ((1.3, 2.0, 0.6, 2.1, 0.3), (0.9, 3.0, 0.0, 1.2, 0.0), (1.1, 2.5, 1.5, 0.8, 0.5)):
        o = np.array(driven_ising_correlators(2, f, delta, g, t, nbar))
        J, alpha = effective_J_alpha(bogoliubov_frame(delta, g, f, 0.0), t, 2)
        c = spin_correlators(2, J, alpha, t, rates, nbar)
        worst = max(worst, float(np.max(np.abs(o - np.array([c.sp, c.spp, c.spm, c.spz, c.m])))))
        cases += 1
    return worst, cases


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def run_check(name: str) -> CheckResult:
    chk = REGISTRY[name]
    try:
        dev, cases = chk.run()
        dev = float(dev)
        return CheckResult(name, list(chk.closed_forms), dev, chk.tolerance, dev <= chk.tolerance, None, cases)
    except Exception as err:  # a crashing check is a failed certification
        return CheckResult(name, list(chk.closed_forms), float("nan"), chk.tolerance, False,
                           f"{type(err).__name__}: {err}")


def thread_count(default: int = 1) -> int:
    raw = os.environ.get("SQUEEZEION_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def run_checks(names=None, threads: int | None = None) -> list[CheckResult]:
    """Run the named checks (all by default); order of the output is the
    registry order regardless of how many workers run them."""
    names = list(REGISTRY) if names is None else list(names)
    threads = thread_count() if threads is None else threads
    if threads <= 1:
        return [run_check(n) for n in names]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_check, names))


def manifest(results: list[CheckResult]) -> dict:
    covered = sorted({cf for r in results for cf in r.closed_forms})
    return {
        "version": __version__,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
        "covered_closed_forms": covered,
    }
