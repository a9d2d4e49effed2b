"""Hamiltonian symbols, star velocities, and trajectory integration."""

import math

import numpy as np
import pytest

import majorana as mj
from majorana.dynamics import (
    builtin_hamiltonian,
    differential_symbol,
    equilibrium_residual,
    evolve,
    evolve_exact,
    hamiltonian,
    match_stars,
    matched_distance,
    star_velocities,
)
from majorana.errors import DegenerateConstellation, LabelMismatch
from majorana.stellar import elementary_symmetric


def _random_state(rng, twoS):
    amps = rng.normal(size=twoS + 1) + 1j * rng.normal(size=twoS + 1)
    return mj.SpinState(twoS, amps)


def _random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2.0


# -- construction -------------------------------------------------------------------


def test_hamiltonian_validation(rng):
    with pytest.raises(ValueError):
        hamiltonian(2, np.eye(2))  # wrong size for 2S=2
    bad = _random_hermitian(rng, 3)
    bad[0, 1] += 1e-6
    with pytest.raises(ValueError):
        hamiltonian(2, bad)
    with pytest.raises(ValueError):
        hamiltonian(2, np.full((3, 3), np.nan))
    with pytest.raises(ValueError):
        builtin_hamiltonian(2, "Sq")


def test_builtin_matrices_match_spin_operators():
    sx, sy, sz = mj.spin_matrices(3)
    assert np.allclose(builtin_hamiltonian(3, "Sx").matrix, sx)
    assert np.allclose(builtin_hamiltonian(3, "Sy", 2.0).matrix, 2.0 * sy)
    assert np.allclose(builtin_hamiltonian(3, "Sz2", 0.5).matrix, 0.5 * sz @ sz)


# -- differential symbol -------------------------------------------------------------


def test_symbol_of_sz_frozen():
    omega = 1.3
    h = builtin_hamiltonian(2, "Sz", omega)
    sym = differential_symbol(h)
    assert len(sym) == 3
    # h_0 = -omega S = -omega, h_1 = omega z, h_2 = 0 for 2S = 2
    assert np.allclose(sym[0], [-omega, 0, 0, 0, 0], atol=1e-13)
    assert np.allclose(sym[1], [0, omega, 0, 0, 0], atol=1e-13)
    assert np.allclose(sym[2], 0.0, atol=1e-13)


def test_symbol_of_sz2_frozen():
    chi = 1.0
    h = builtin_hamiltonian(4, "Sz2", chi)
    sym = differential_symbol(h)
    # S = 2: h_0 = 4, h_1 = -3 z, h_2 = z^2 reproduce (m^2 on each monomial)
    assert sym[0][0] == pytest.approx(4.0 * chi, abs=1e-12)
    assert sym[1][1] == pytest.approx(-3.0 * chi, abs=1e-12)
    assert sym[2][2] == pytest.approx(chi, abs=1e-12)
    assert np.allclose(sym[3], 0.0, atol=1e-12)
    assert np.allclose(sym[4], 0.0, atol=1e-12)


def test_symbol_reconstructs_matrix_action(rng):
    # Sum_n h_n(z) f^(n)(z) must equal the polynomial of H|psi> at any z.
    for twoS in (1, 2, 3, 5):
        st = _random_state(rng, twoS)
        h = hamiltonian(twoS, _random_hermitian(rng, twoS + 1))
        sym = differential_symbol(h)
        weights = np.array([math.sqrt(math.comb(twoS, k)) for k in range(twoS + 1)])
        f = weights * st.amplitudes
        target = weights * (h.matrix @ st.amplitudes)
        zs = rng.normal(size=6) + 1j * rng.normal(size=6)
        for z in zs:
            lhs = 0.0 + 0.0j
            df = f
            for n in range(twoS + 1):
                lhs += np.polyval(sym[n][::-1], z) * np.polyval(df[::-1], z)
                df = np.polyder(df[::-1])[::-1]
            rhs = np.polyval(target[::-1], z)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


# -- velocities ----------------------------------------------------------------------


def test_linear_velocity_is_rigid_rotation(rng):
    omega = 0.8
    h = builtin_hamiltonian(3, "Sz", omega)
    st = _random_state(rng, 3)
    c = mj.constellation_from_state(st)
    if c.infinity_count or len(c.finite_roots) < 3:
        pytest.skip("degenerate draw")
    v = star_velocities(c, h)
    assert np.allclose(v, 1j * omega * c.finite_roots, atol=1e-10)


def test_kerr_velocity_frozen(rng):
    # w' = i chi (2 w^2 sum_{l != k} 1/(w_k - w_l) - (2S - 1) w)
    chi = 0.7
    twoS = 4
    h = builtin_hamiltonian(twoS, "Sz2", chi)
    st = _random_state(rng, twoS)
    c = mj.constellation_from_state(st)
    if c.infinity_count:
        pytest.skip("degenerate draw")
    w = c.finite_roots
    v = star_velocities(c, h)
    for k in range(twoS):
        recip = sum(1.0 / (w[k] - w[l]) for l in range(twoS) if l != k)
        want = 1j * chi * (2.0 * w[k] ** 2 * recip - (twoS - 1) * w[k])
        assert v[k] == pytest.approx(want, rel=1e-9, abs=1e-11)


def test_velocity_against_finite_difference(rng):
    twoS = 3
    h = hamiltonian(twoS, _random_hermitian(rng, twoS + 1))
    st = _random_state(rng, twoS)
    c = mj.constellation_from_state(st)
    v = star_velocities(c, h)
    dt = 1e-7
    c2 = mj.constellation_from_state(evolve_exact(st, h, dt))
    perm = match_stars(c, c2)
    moved = (c2.finite_roots[perm] - c.finite_roots) / dt
    assert np.allclose(moved, v, atol=2e-5)


def test_velocity_rejects_degenerate():
    h = builtin_hamiltonian(4, "Sz")
    with pytest.raises(DegenerateConstellation):
        star_velocities(mj.constellation_from_state(mj.coherent_state(4, 0.3)), h)
    with pytest.raises(DegenerateConstellation):
        star_velocities(mj.Constellation(2, [0.0], 1), h=builtin_hamiltonian(2, "Sz"))


def test_label_mismatch_raises(rng):
    h = builtin_hamiltonian(2, "Sz")
    with pytest.raises(LabelMismatch):
        star_velocities(mj.Constellation(4, [1.0, 2.0, 3.0, 4.0]), h)
    with pytest.raises(LabelMismatch):
        evolve(_random_state(rng, 4), h, 1.0)


# -- equilibria ----------------------------------------------------------------------


def test_equilibrium_residual_frozen(rng):
    # Highest-weight state under Sz is stationary.
    h = builtin_hamiltonian(4, "Sz", 1.0)
    top = mj.constellation_from_state(mj.basis_state(4, 4))
    assert equilibrium_residual(top, h) <= 1e-12
    # NOON state under omega0 Sz rotates: residual omega0.
    omega0 = 1.7
    noon = mj.constellation_from_state(mj.noon_state(2))
    assert equilibrium_residual(
        noon, builtin_hamiltonian(2, "Sz", omega0)
    ) == pytest.approx(omega0, rel=1e-9)
    # Zero Hamiltonian freezes everything.
    z = hamiltonian(3, np.zeros((4, 4)))
    c = mj.constellation_from_state(_random_state(rng, 3))
    assert equilibrium_residual(c, z) <= 1e-12


def test_eigenstate_is_equilibrium(rng):
    twoS = 3
    h = hamiltonian(twoS, _random_hermitian(rng, twoS + 1))
    vec = h.evecs[:, 1]
    c = mj.constellation_from_state(mj.SpinState(twoS, vec))
    assert equilibrium_residual(c, h) <= 1e-8


# -- exact propagator ----------------------------------------------------------------


def test_evolve_exact_unitary(rng):
    twoS = 4
    st = _random_state(rng, twoS)
    h = hamiltonian(twoS, _random_hermitian(rng, twoS + 1))
    out = evolve_exact(st, h, 0.9)
    assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)
    # energy is conserved
    e0 = st.amplitudes.conj() @ h.matrix @ st.amplitudes
    e1 = out.amplitudes.conj() @ h.matrix @ out.amplitudes
    assert e1.real == pytest.approx(e0.real, abs=1e-12)
    # composition property
    two_leg = evolve_exact(evolve_exact(st, h, 0.4), h, 0.5)
    overlap = abs(np.vdot(two_leg.amplitudes, out.amplitudes))
    assert overlap == pytest.approx(1.0, abs=1e-12)


# -- trajectories ---------------------------------------------------------------------


def test_evolve_argument_validation(rng):
    st = _random_state(rng, 2)
    h = builtin_hamiltonian(2, "Sz")
    with pytest.raises(ValueError):
        evolve(st, h, -1.0)
    with pytest.raises(ValueError):
        evolve(st, h, 1.0, dt_max=0.0)
    with pytest.raises(ValueError):
        evolve(st, h, 1.0, checkpoints=[2.0])
    with pytest.raises(ValueError):
        evolve(st, h, 1.0, checkpoints=[-0.1])


def test_evolve_time_zero(rng):
    st = _random_state(rng, 2)
    traj = evolve(st, builtin_hamiltonian(2, "Sz"), 0.0)
    assert len(traj.times) == 1
    assert traj.times[0] == 0.0
    assert traj.fallback_intervals == ()
    c0 = mj.constellation_from_state(st)
    assert matched_distance(traj.at(0.0), c0) <= 1e-12


def test_linear_rotation_matches_phase_map(rng):
    omega = 1.1
    st = _random_state(rng, 3)
    c0 = mj.constellation_from_state(st)
    if c0.infinity_count:
        pytest.skip("degenerate draw")
    h = builtin_hamiltonian(3, "Sz", omega)
    t_final = 2.0
    traj = evolve(st, h, t_final, checkpoints=np.linspace(0, t_final, 9))
    for t in np.linspace(0, t_final, 9):
        got = traj.at(t)
        want = mj.Constellation(
            3, c0.finite_roots * np.exp(1j * omega * t), c0.infinity_count
        )
        assert matched_distance(got, want) <= 1e-9


def test_linear_evolution_preserves_chords(rng):
    # a Sx + b Sy + c Sz generates a rigid rotation of the sphere
    twoS = 3
    sx, sy, sz = mj.spin_matrices(twoS)
    h = hamiltonian(twoS, 0.4 * sx - 0.8 * sy + 0.3 * sz)
    st = _random_state(rng, twoS)
    c0 = mj.constellation_from_state(st)
    traj = evolve(st, h, 1.5)
    z0 = [mj.sphere_to_stereo(p) for p in c0.points()]
    d0 = sorted(
        mj.chordal_distance(z0[i], z0[j])
        for i in range(len(z0))
        for j in range(i + 1, len(z0))
    )
    end = traj.snapshots[-1]
    z1 = [mj.sphere_to_stereo(p) for p in end.points()]
    d1 = sorted(
        mj.chordal_distance(z1[i], z1[j])
        for i in range(len(z1))
        for j in range(i + 1, len(z1))
    )
    assert np.allclose(d0, d1, atol=1e-9)


def test_eigenstate_stays_put(rng):
    twoS = 3
    h = hamiltonian(twoS, _random_hermitian(rng, twoS + 1))
    vec = h.evecs[:, 2]
    st = mj.SpinState(twoS, vec)
    c0 = mj.constellation_from_state(st)
    traj = evolve(st, h, 1.0)
    assert matched_distance(traj.snapshots[-1], c0) <= 1e-8


def test_energy_conserved_along_trajectory(rng):
    twoS = 3
    h = hamiltonian(twoS, _random_hermitian(rng, twoS + 1))
    st = _random_state(rng, twoS)
    c0 = mj.constellation_from_state(st)
    traj = evolve(st, h, 1.0, checkpoints=[0.25, 0.5, 0.75, 1.0])
    def energy(c):
        amps = mj.state_from_constellation(c).amplitudes
        return float((amps.conj() @ h.matrix @ amps).real)
    e0 = energy(c0)
    for t in (0.25, 0.5, 0.75, 1.0):
        assert energy(traj.at(t)) == pytest.approx(e0, abs=1e-8)


def test_checkpoints_are_landed_exactly(rng):
    st = _random_state(rng, 2)
    h = builtin_hamiltonian(2, "Sz", 0.9)
    pts = [0.123456, 0.5, 0.777777]
    traj = evolve(st, h, 1.0, checkpoints=pts)
    for t in pts + [0.0, 1.0]:
        assert np.min(np.abs(traj.times - t)) == 0.0


def test_kerr_coherent_ignition():
    # A coherent start is maximally degenerate; the integrator must launch
    # through the exact propagator without reporting a fallback window, then
    # track the spreading stars.
    chi = 0.7
    st = mj.coherent_state(4, 0.6 + 0.2j)
    h = builtin_hamiltonian(4, "Sz2", chi)
    t_final = 0.1 / chi
    traj = evolve(st, h, t_final)
    assert traj.fallback_intervals == ()
    c0 = mj.constellation_from_state(st)
    spread0 = _spread(c0)
    spread1 = _spread(traj.snapshots[-1])
    assert spread1 - spread0 > 1e-3
    want = mj.constellation_from_state(evolve_exact(st, h, t_final))
    assert matched_distance(traj.snapshots[-1], want) <= 1e-6


def _spread(c):
    zs = [mj.sphere_to_stereo(p) for p in c.points()]
    return max(
        mj.chordal_distance(zs[i], zs[j])
        for i in range(len(zs))
        for j in range(i + 1, len(zs))
    )


def test_collision_flyby_stays_accurate():
    # psi = (1, sqrt(2) e^{-0.3 i}, 1)/norm under Sz^2: the two stars touch
    # exactly at t = 0.3 (the discriminant crosses zero there).  The touch
    # is a single instant, so the step controller may thread through it; the
    # contract is accuracy on the far side, with a bridge only if the stars
    # are still fused at an accepted step.
    amps = np.array([1.0, math.sqrt(2.0) * np.exp(-0.3j), 1.0])
    st = mj.SpinState(2, amps)
    h = builtin_hamiltonian(2, "Sz2", 1.0)
    traj = evolve(st, h, 0.6)
    # the controller must have felt the event and refined
    assert np.min(np.diff(traj.times)) < 1e-8
    for lo, hi in traj.fallback_intervals:
        assert lo < 0.3 < hi
    want = mj.constellation_from_state(evolve_exact(st, h, 0.6))
    assert matched_distance(traj.snapshots[-1], want) <= 1e-6


def test_pole_crossing_is_bridged_and_reported():
    # A single star driven by Sx crosses the infinity pole at t = pi, a
    # finite-time blowup of the chart coordinate that the ODE cannot step
    # over.  The exact propagator must bridge it and say so.
    st = mj.basis_state(1, 1)
    h = builtin_hamiltonian(1, "Sx", 1.0)
    t_final = 2.0 * math.pi
    traj = evolve(st, h, t_final)
    spans = [iv for iv in traj.fallback_intervals if iv[0] < math.pi < iv[1]]
    assert spans, f"no bridge covering t=pi: {traj.fallback_intervals}"
    lo, hi = spans[0]
    assert hi - lo < 0.1
    inside = [f for t, f in zip(traj.times, traj.fallback_flags) if lo < t <= hi]
    assert inside and any(inside)
    # full turn of a half-integer spin returns the ray to itself
    want = mj.constellation_from_state(evolve_exact(st, h, t_final))
    assert matched_distance(traj.snapshots[-1], want) <= 1e-6


def test_polar_eigenstate_under_sz(rng):
    # |S, -S> maps to all stars at infinity; the run is one long bridge that
    # reports nothing because the output is exact.
    st = mj.basis_state(4, -4)
    traj = evolve(st, builtin_hamiltonian(4, "Sz"), 1.0)
    assert traj.fallback_intervals == ()
    assert all(c.infinity_count == 4 for c in traj.snapshots)


# -- matching -------------------------------------------------------------------------


def test_match_stars_with_infinity():
    a = mj.Constellation(3, [0.0, 1.0], 1)
    b = mj.Constellation(3, [1.0 + 1e-9, 1e-9], 1)
    perm = match_stars(a, b)
    assert sorted(perm) == [0, 1, 2]
    assert matched_distance(a, b) <= 1e-8


def test_matched_distance_label_mismatch():
    a = mj.Constellation(2, [0.0, 1.0])
    b = mj.Constellation(3, [0.0, 1.0, 2.0])
    with pytest.raises(LabelMismatch):
        matched_distance(a, b)
