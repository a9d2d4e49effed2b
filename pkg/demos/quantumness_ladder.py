"""How "quantum" is a spin state, order by order?

The density matrix splits into multipoles rho_Kq; the squared lengths w_K
are rotation invariants, and the cumulative tails A_M measure how much of
the state lives above multipole order M. Coherent states carry the largest
possible A_M at every order; the states crowned in king_search.py carry
none at all up to their order.
"""

import numpy as np

import majorana as mj
from majorana.multipoles import cumulative_quantumness, husimi_q, multipoles

twoS = 6

states = {
    "coherent": mj.coherent_state(twoS, 0.8 - 0.3j),
    "extremal |3,3>": mj.basis_state(twoS, twoS),
    "middle |3,0>": mj.basis_state(twoS, 0),
    "balanced extremal pair": mj.noon_state(twoS),
}
rng = np.random.default_rng(4)
states["random"] = mj.SpinState(twoS, rng.normal(size=7) + 1j * rng.normal(size=7))

print(f"cumulative quantumness A_M, 2S = {twoS}")
header = "  ".join(f"A_{m}" for m in range(1, twoS + 1))
print(f"{'state':24s} {header}")
for name, st in states.items():
    spec = multipoles(st)
    row = "  ".join(f"{cumulative_quantumness(spec, m):.3f}" for m in range(1, twoS + 1))
    print(f"{name:24s} {row}")

# Two identities worth knowing: the invariant lengths always sum to one,
# and the top tail depends only on purity, A_2S = 2S/(2S+1).
spec = multipoles(states["random"])
print(f"\nsum of w_K: {spec.w.sum():.15f}")
print(f"A_{twoS} = {spec.A[twoS]:.15f}  (2S/(2S+1) = {twoS/(twoS+1):.15f})")

# A coherent state is the top of the ladder at every order.
coh = multipoles(states["coherent"])
beats = all(coh.A[m] >= multipoles(st).A[m] for m in range(1, twoS + 1)
            for st in states.values())
print(f"coherent dominates every A_M here: {beats}")

# The Husimi function vanishes exactly at the azimuth-reflected stars; its
# zeros ARE the constellation, which is why the stars are observable.
st = states["random"]
c = mj.constellation_from_state(st)
q_at_zeros = max(husimi_q(st, (p.theta, -p.phi)) for p in c.points())
print(f"max Husimi value over conjugated stars: {q_at_zeros:.2e}")
