"""Curvature of random planes, by two independent routes.

The first route is Arnold's formula for right-invariant metrics, built out
of brackets and coadjoint operators.  The second integrates a perfect
square.  Agreement of the two, and the sign of the second, is the point.
"""

import numpy as np

from contactlab import Circle, TorusK, curvature_sweep, sectional

m = Circle(256)
a = m.grid.coords[0]
print("K(sin, cos) =", sectional(m, m.field(np.sin(a)), m.field(np.cos(a))), " 2/pi =", 2 / np.pi)

for model, max_freq in ((Circle(256), 8), (TorusK((16, 16, 16)), 2)):
    rep = curvature_sweep(model, 50, max_freq, seed=1)
    print(rep.summary())
