"""
Calibrating the parametric coupling from decoupling points
==========================================================

Under a continuous parametric drive the spins and motion decouple when the
phase-space loop closes.  With no drive this happens at multiples of 1/tau;
the drive pushes the points up to sqrt((k/tau)^2 + (g/2 pi)^2), so measuring
the shift gives g.
"""

from dataclasses import replace

import numpy as np

from squeezeion.cli import _continuous_cfg
from squeezeion.continuous import (
    DecouplingScan,
    GCalibrationPoint,
    decoupling_frequency,
    decoupling_scan,
    extract_g,
    fit_decoupling_scan,
    fit_linear_g,
)
from squeezeion.core import hz_to_rad, rad_to_hz
from squeezeion.io import load_config

cfg = _continuous_cfg(load_config("fig4cde"))
tau = cfg.drive.tau
det_hz = np.linspace(500, 4500, 401)

for g_hz in (0.0, 500.0, 1500.0):
    c = replace(cfg, drive=replace(cfg.drive, g=hz_to_rad(g_hz)))
    scan = decoupling_scan(c, hz_to_rad(det_hz))
    b = scan["bright_fraction"]
    pred = [rad_to_hz(decoupling_frequency(tau, hz_to_rad(g_hz), k)) for k in range(1, 4)]
    # deepest sampled point within 150 Hz of each loop-closure point
    found = []
    for p in pred:
        near = np.abs(det_hz - p) <= 150
        found.append(det_hz[near][np.argmin(b[near])])
    print(f"g = {g_hz:6.0f} Hz  loop closure {[round(p, 1) for p in pred]}  scan minima {[round(x) for x in found]}")

# the minima sit slightly above the loop-closure points: the spin-spin phase
# picked up along the loop also varies with detuning

# thermal and coherent motion from the undriven scan
det = hz_to_rad(det_hz)
scan = decoupling_scan(cfg, det)
fit = fit_decoupling_scan(DecouplingScan(det, scan["bright_fraction"], tau), cfg)
print(f"\nfitted nbar = {fit.nbar:.3f}, |beta| = {fit.beta:.3f}")

# g from a measured first decoupling point, then g against drive voltage
shifted = 15532.0
g = extract_g(hz_to_rad(shifted), tau)
print(f"first decoupling point at {shifted} Hz -> g/2pi = {rad_to_hz(g):.1f} Hz")
volts = np.array([10.0, 20.0, 30.0, 40.0, 51.0])
rng = np.random.default_rng(3)
points = [GCalibrationPoint(v, hz_to_rad(303.92 * v + rng.normal(0, 100)), tau) for v in volts]
line = fit_linear_g(points)
print(f"slope {rad_to_hz(line.slope):.2f} Hz/V, rms residual {rad_to_hz(np.std(line.residuals)):.1f} Hz")
