"""
Measuring motional squeezing with a phase scan
==============================================

A spin-dependent kick is applied, the motion is squeezed, and a second kick
is applied.  How well the spins disentangle depends on the relative phase
between the squeeze and the kicks, so scanning that phase and fitting the
bright fraction recovers the squeezing parameter r.
"""

import math

import numpy as np

from squeezeion.cli import _strobo_cfg
from squeezeion.core import squeezing_db
from squeezeion.io import load_config
from squeezeion.stroboscopic import PhaseScanPoint, fit_strobo_r, phase_scan, with_r

cfg = _strobo_cfg(load_config("fig2b"))
phis = np.linspace(0, 2 * math.pi, 64, endpoint=False)

# noiseless synthetic scan at r = 1.25
scan = phase_scan(cfg, phis)
print("phase (rad)   bright fraction")
for p in scan[::8]:
    print(f"{p.delta_phi:10.3f}   {p.bright_fraction:.4f}")

# add 50-shot binomial noise and refit, allowing for the temperature uncertainty
rng = np.random.default_rng(1)
shots = 50
noisy = []
for p in scan:
    k = rng.binomial(shots, p.bright_fraction)
    b = k / shots
    noisy.append(PhaseScanPoint(p.delta_phi, b, max(math.sqrt(b * (1 - b) / shots), 0.02)))
fit = fit_strobo_r(noisy, cfg, nbar_err=0.2)
amp_db, var_db = squeezing_db(fit.r)
print(f"\nfitted r = {fit.r:.3f} +/- {fit.r_err:.3f} (stat {fit.r_stat:.3f}, sys {fit.r_sys:.3f})")
print(f"that is {amp_db:.2f} dB below ground-state amplitude, {var_db:.2f} dB in variance")

# without squeezing the scan is flat
flat = phase_scan(with_r(cfg, 0.0), phis)
print(f"\nspread of the r = 0 scan: {np.ptp([p.bright_fraction for p in flat]):.2e}")
