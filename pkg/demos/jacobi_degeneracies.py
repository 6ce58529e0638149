"""Conjugate points along Reeb geodesics, and what they do to exp.

Along the geodesic with constant stream function c, a Jacobi field started
with w0 = sin(m z) vanishes at t = 1 when c (n + 2) = 2 pi / m.  Those
speeds accumulate at zero.  Finite differences of the nonlinear exp at c_m
then shrink linearly in epsilon along sin(m z), but settle to a positive
constant along a generic direction.
"""

import numpy as np

from contactlab import Circle, c1_failure_report, jacobi_solve, kernel_direction
from contactlab.fields import l2_norm

m = Circle(256)
for k in (1, 2, 4):
    c, w0 = kernel_direction(m, k)
    sol = jacobi_solve(m, c, w0, 1.0, n_times=5)
    norms = ", ".join(f"{l2_norm(g):.3f}" for g in sol.g_states)
    print(f"m={k}  c_m={c:.4f}  |g(t)| at t=0,1/4,...,1: {norms}")

rep = c1_failure_report(m, [1, 2, 4], [1e-2, 5e-3, 2.5e-3])
print(rep.summary())
print("c_m for m = 1..32:", np.round([kernel_direction(m, k)[0] for k in (1, 2, 4, 8, 16, 32)], 4))
