"""A first walk through the star representation.

Every pure spin-S state is, up to phase, a multiset of 2S points on the
sphere: the roots of its stellar polynomial, pushed through stereographic
projection. This script builds a few familiar states and prints where
their stars land.
"""

import numpy as np

import majorana as mj


def show(name, state):
    c = mj.constellation_from_state(state)
    print(f"\n{name}  (2S = {state.label.twoS})")
    for p in c.points():
        print(f"  star at theta = {p.theta:7.4f}, phi = {p.phi:7.4f}")
    if c.infinity_count:
        print(f"  ({c.infinity_count} of those sit at the theta = pi pole)")


# Extremal basis states are as classical as spin gets: every star on one
# point. |S, -S> projects to z = 0, |S, +S> to the opposite pole.
show("|1, -1>", mj.basis_state(2, -2))
show("|1, +1>", mj.basis_state(2, 2))

# A coherent state is a rotated extremal state, so its stars stay fused:
# one 2S-fold point. Note the exact collapse; the solver certifies the
# multiplicity rather than scattering the cluster.
z0 = 0.6 + 0.2j
coh = mj.coherent_state(4, z0)
c = mj.constellation_from_state(coh)
print(f"\ncoherent at z0 = {z0}  (2S = 4)")
print("  roots:", np.round(c.finite_roots, 12))
print("  all equal:", bool(np.all(c.finite_roots == c.finite_roots[0])))

# The balanced superposition of the two extremal levels spreads its stars
# as far apart as they can get: the 2S-th roots of unity on the equator.
show("(|3,3> - |3,-3>)/sqrt(2)", mj.noon_state(6))

# Round trip: the constellation determines the state up to global phase.
rng = np.random.default_rng(1)
psi = mj.SpinState(5, rng.normal(size=6) + 1j * rng.normal(size=6))
back = mj.state_from_constellation(mj.constellation_from_state(psi))
fid = abs(np.vdot(psi.amplitudes, back.amplitudes))
print(f"\nrandom 2S=5 state, round-trip fidelity: {fid:.15f}")
