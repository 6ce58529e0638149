"""Reeb-invariant stream functions on the Hopf sphere and the quotient 2-sphere.

Functions constant along Hopf circles generate quantomorphisms.  They
descend to Hamiltonians on the base, their contact fields push forward to
Hamiltonian fields, and the L2 norms differ by the length of a fiber.
"""

import numpy as np

from contactlab import SphereHopf, submersion_isometry_check, totally_geodesic_defect
from contactlab.fields import random_band_limited
from contactlab.quanto import hamiltonian_field_defect, pushforward, random_quantomorphism

m = SphereHopf((24, 32, 32))
f = m.field(np.cos(2 * m.grid.coords[0]))
v = pushforward(m, f)
print("d pi(S f) for f = cos 2 eta: eta-part", np.abs(v[0]).max(), " psi-part", v[1].min(), v[1].max())
print("Hamiltonian defect and scale:", hamiltonian_field_defect(m, f))

fields = [f] + [random_quantomorphism(m, s, 3, mean_zero=True) for s in range(5)]
rep = submersion_isometry_check(m, fields)
print("norm ratios:", [round(r["norm_ratio"], 12) for r in rep.rows], " 2 pi =", 2 * np.pi)

g = random_band_limited(9, 3, m.grid)
print("totally geodesic defect:", totally_geodesic_defect(m, fields[1], g))
