"""
Spin doublet and the rotation window
====================================

Builds the spin-1 Hamiltonian for a tilted field, compares the reduced
2x2 doublet with exact diagonalisation, and scans omega0 through the
window set by gyroscopic stability and the spin-flip resonances.
"""
import math

import numpy as np

from nanorotor_sgi import ScenarioParams, build_h_spin, feshbach_reduce, validate_omega0

p = ScenarioParams()
for B in (1e-4, 1e-3, 1e-2):
    h3 = build_h_spin(B * math.cos(0.3), B * math.sin(0.3), 0.7, p)
    exact = np.sort(h3.eigvalsh())[1:]
    reduced = np.sort(feshbach_reduce(h3, p).eigvalsh())
    err = np.max(np.abs(reduced - exact)) / (p.mu_spin * B)
    print(f"B = {B:7.0e} T: relative error {err:.2e}, (mu B / D)^2 = {(p.mu_spin * B / p.D_zfs) ** 2:.2e}")

print()
for f in (1e2, 1e3, 1e4, 1e6, 1e8):
    print(f"{f:7.0e} Hz  {validate_omega0(p.replace(omega0=2 * math.pi * f)).to_line()}")
