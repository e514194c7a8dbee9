"""
Couplings and regime checks
===========================

Derive the dispersive couplings for a centimetre cavity and look at the
dimensionless ratios that decide whether the weak-measurement picture holds.
"""

import math

from atomwva import PhysicalParams, derive_couplings

# Omega x_c / delta = 0.1 fixes the detuning from the other inputs
params = PhysicalParams.from_ratio(0.1, wavelength=0.01, Omega0_over_2pi=1e4, k_x0=math.pi / 4)
c = derive_couplings(params)

print(f"detuning  delta / 2pi    = {params.delta_over_2pi:10.1f} Hz")
print(f"gradient  Omega x_c / 2pi = {c.Omega_xc / (2 * math.pi):10.1f} Hz")
print(f"shift     g0 / 2pi       = {c.g0 / (2 * math.pi):10.1f} Hz")
print(f"kick      g_c            = {c.g_c:10.3e}")
print()

# each flag is a ratio that must stay small; 0.1 warns and 0.5 fails
for flag in c.flags:
    print(f"{flag.name:22s} {flag.ratio:9.2e}  {flag.status}")

# moving k x0 towards pi/2 pushes x_c = tan(k x0) / k out to infinity
near = derive_couplings(PhysicalParams.from_ratio(0.1, k_x0=1.57))
print()
print("k x0 = 1.57:", next(f for f in near.flags if f.name == "k_x0").status)
