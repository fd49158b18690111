"""Discrete Schrodinger evolution on a ring.

The Euler step is the direct reading of the tick rule and slowly inflates the
norm.  The Cayley step is its unitary cousin.  Exact evolution uses the
Laplacian spectrum.  The sum over walks reproduces the Euler kernel.
"""
import warnings

import numpy as np

from relsim import Stepper, WaveState, build_lattice, kernel_matrix, laplacian, path_sum_kernels
from relsim.experiments import run_dispersion

ring = build_lattice([64], periodic=True)
lap = laplacian(ring)
start = WaveState.localized(64, 0)

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for scheme in ("euler", "cayley", "exact"):
        final = Stepper(scheme, 0.1, lap).evolve(start, 1000)
        print(f"{scheme:>6}: norm after 1000 ticks = {final.norm:.6g}  (|norm - 1| = {abs(final.norm - 1):.1e})")

small = build_lattice([5], periodic=True)
walks = path_sum_kernels(small, 0.3, 4)[-1]
print("sum over walks vs (I + i mu L)^4, max deviation:",
      f"{np.abs(walks - kernel_matrix(small, 0.3, 4)).max():.1e}")

print("\nphase per tick of plane waves on C64 (mu = 0.1):")
print("   m        k   measured  mu(2-2cos k)    mu k^2")
for m in (1, 2, 4, 8, 16, 32):
    rep = run_dispersion(n=64, m=m, mu=0.1, ticks=20).report
    print(f"{m:4d} {rep['k']:8.4f} {rep['phase_per_tick']:10.6f} {rep['discrete_theory']:13.6f} "
          f"{rep['continuum_theory']:9.6f}")
