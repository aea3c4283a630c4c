"""Derivative and adjoint checks on a two-entry saturating dictionary.

1. Taylor test: the remainder T(a + s h) - T(a) - s T'(a) h should shrink
   like s^2 (at least s^1.5).
2. Dot-product test: <T'(a) h, w> = <h, T'(a)^* w> to round-off for the
   discrete adjoint.
3. The backward-equation adjoint (independent ODE time stepping) approaches
   the discrete one as the grid is refined.
"""

import numpy as np

from hyperwave.adjoint import apply_adjoint_continuous, apply_adjoint_discrete
from hyperwave.forward import solve_forward
from hyperwave.reference import reference_setup
from hyperwave.verification import adjoint_certificate, taylor_order_test

setup = reference_setup(d=1, n=16, m=64, T=0.5)
h = np.array([0.5, -0.4])

slope, table = taylor_order_test(setup, setup.alpha, h)
print("Taylor remainders")
for row in table:
    print(f"  s={row['s']:7.0e}  r={row['remainder']:.3e}  r/s={row['remainder_over_s']:.3e}")
print(f"  fitted order {slope:.3f}")

for d, n in ((1, 8), (2, 6)):
    s = reference_setup(d, n, 16, 0.2)
    print(f"dot-product mismatch d={d}: {adjoint_certificate(s, s.alpha, trials=20):.2e}")

print("continuous vs discrete adjoint")
for n in (8, 16, 32):
    s = reference_setup(1, n, 4 * (n + 1), 0.5)
    u, _ = solve_forward(s)
    x, t = s.grid.nodes(), s.grid.times[:, None, None]
    w = np.sin(2 * np.pi * x)[None] * np.cos(3 * t)
    gd = apply_adjoint_discrete(s, s.alpha, u, w)
    gc = apply_adjoint_continuous(s, s.alpha, u, w)
    print(f"  n={n:3d}  relative difference {np.linalg.norm(gc - gd) / np.linalg.norm(gd):.3e}")
