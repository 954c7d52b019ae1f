"""
Squeezing-enhanced displacement sensing
=======================================

Amplifying the motion before reading out a small displacement lowers the
displacement variance by e^{2r} when the c.m. frequency is stable.  With
frequency noise the gain shrinks, and the loss depends on how quickly the
squeeze is applied.
"""

import math

import numpy as np

from squeezeion.io import load_config
from squeezeion.sensing import SensingParams, enhancement_scan

cfg = load_config("fig3c")
d = cfg["drive"]
taus = np.geomspace(1e-5, 1e-2, 601)
r = cfg["motion"]["r"]
print(f"ideal gain at r = {r}: {10 * math.log10(math.exp(2 * r)):.2f} dB\n")

print("sigma (Hz)  g (kHz)  best tau (us)  below SQL (dB)  gain (dB)")
for sigma in (0.0, 10.0, 40.0):
    for g_hz in (2e3, 4e3, 15.5e3, math.inf):
        p = SensingParams.from_hz(d["f_rad_s"], d["gamma_per_s"], r=r, g_hz=g_hz, sigma_hz=sigma,
                                  nbar=cfg["motion"]["nbar"])
        m = enhancement_scan(p, taus).metadata
        g_txt = "inf" if math.isinf(g_hz) else f"{g_hz / 1e3:g}"
        print(f"{sigma:10.0f}  {g_txt:>7}  {m['tau_opt_r_s'] * 1e6:13.1f}  {m['db_below_sql_r']:14.2f}  "
              f"{m['optimal_gain_db']:9.2f}")
