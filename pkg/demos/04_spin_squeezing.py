"""
Spin squeezing with a parametrically amplified interaction
==========================================================

The optical dipole force mediates an Ising interaction through the c.m.
mode.  Amplifying the mode strengthens that interaction relative to light
scattering, but also makes the result more sensitive to fluctuations of the
mode frequency.  This script maps that trade-off for a 400-ion crystal.
"""

from dataclasses import replace

from squeezeion.cli import squeeze_params
from squeezeion.core import NoiseModel, hz_to_rad
from squeezeion.io import load_config
from squeezeion.spin_squeezing import DecoherenceRates, squeezing_scan

base = squeeze_params(load_config("fig6abc"))
samples = 1000  # the acceptance suite uses 4000


def best(g_hz, sigma_hz, **over):
    p = replace(base, g=hz_to_rad(g_hz), noise=NoiseModel(sigma_hz, samples, 7), **over)
    return squeezing_scan(p).metadata["optimal_xi_db"]


print(f"no drive, no noise:           {best(0.0, 0.0):6.2f} dB")
print(f"strong drive, no decoherence: {best(1e6, 0.0, rates=DecoherenceRates()):6.2f} dB\n")

print("sigma (Hz)  " + "  ".join(f"g={g / 1e3:>4g}k" for g in (0, 4e3, 10e3, 40e3)))
for sigma in (0.0, 10.0, 40.0):
    row = [best(g, sigma) for g in (0.0, 4e3, 10e3, 40e3)]
    print(f"{sigma:10.0f}  " + "  ".join(f"{v:7.2f}" for v in row))
