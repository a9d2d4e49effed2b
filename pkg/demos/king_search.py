"""Hunting the kings: states with no low-order multipoles at all.

For each order M, ask for star placements whose multipole content vanishes
through order M. The optimizer answers with the platonic suspects for
small spin, so this doubles as a geometry check.
"""

import math

import numpy as np

import majorana as mj
from majorana.kings import SearchConfig, minimize


def describe(result):
    print(f"2S = {result.label.twoS}, target order M = {result.M}")
    print(f"  best A_M          : {result.objective:.3e}")
    print(f"  unpolarized order : {result.unpolarized_order}")
    print(f"  restarts converged: {result.restarts_converged}")
    for p in result.constellation.points():
        print(f"  star at theta = {p.theta:7.4f}, phi = {p.phi:7.4f}")
    print()


# Two stars, no dipole: the antipodal pair (any great-circle diameter; the
# gauge pins it as pole + antipole).
describe(minimize(2, SearchConfig(M=1, restarts=8)))

# Four stars, no dipole or quadrupole: the regular tetrahedron.
result = minimize(4, SearchConfig(M=2, restarts=16))
describe(result)
zs = [mj.sphere_to_stereo(p) for p in result.constellation.points()]
chords = sorted(
    mj.chordal_distance(zs[i], zs[j])
    for i in range(4) for j in range(i + 1, 4)
)
print("tetrahedron edge check: chords =", np.round(chords, 6),
      " vs sqrt(8/3) =", round(math.sqrt(8 / 3), 6))
print()

# Six stars suppressing through octupole: the regular octahedron.
describe(minimize(6, SearchConfig(M=3, restarts=16)))

# Not everything is suppressible: a single star always has a dipole, and
# the best it can do at M = 1 is A_1 = 1/2.
describe(minimize(1, SearchConfig(M=1, restarts=4)))
