"""
Homogeneous cosmology of the deformation scalar
===============================================

A free massless scalar with stiff equation of state drives
a(t) ~ t^(1/3); RK4 keeps the Friedmann constraint to round-off.
"""

import math

import numpy as np

from dgk import Couplings, ScalarSectorSpec, canonical_scalar_reduce, frw_solve

# start where the power-law solution has a(t0) = 1
H0 = math.sqrt(8 * math.pi / 3 * 0.5)
t0 = 1 / (3 * H0)
sol = frw_solve(ScalarSectorSpec(), Couplings(), {"a0": 1.0, "phidot0": 1.0}, 10 * t0, 1e-3 * t0, t0=t0)

slope = np.polyfit(np.log(sol.t), np.log(sol.a), 1)[0]
print(f"fitted exponent {slope:.6f}, max constraint drift {sol.max_drift:.2e}")

# halving dt cuts the drift by about 2^4
for frac in (0.2, 0.1, 0.05):
    d = frw_solve(ScalarSectorSpec(), Couplings(), {"a0": 1.0, "phidot0": 1.0}, 10 * t0, frac * t0, t0=t0).max_drift
    print(f"dt = {frac} t0: drift {d:.3e}")

# a non-canonical kinetic term nu chi0 is absorbed by rescaling the field
print(canonical_scalar_reduce(ScalarSectorSpec(m2=8.0), nu=4.0).to_dict())
