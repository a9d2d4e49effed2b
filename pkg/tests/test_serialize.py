"""Emit/parse round trips and schema validation."""

import json
import math

import numpy as np
import pytest

import majorana as mj
from majorana.dynamics import builtin_hamiltonian, evolve
from majorana.errors import LabelMismatch
from majorana.kings import SearchConfig, minimize
from majorana.multipoles import multipoles, q_grid
from majorana.serialize import (
    emit_constellation,
    emit_kings,
    emit_multipoles,
    emit_qgrid,
    emit_state,
    emit_trajectory,
    parse_constellation,
    parse_hamiltonian,
    parse_state,
)


def _random_state(rng, twoS):
    amps = rng.normal(size=twoS + 1) + 1j * rng.normal(size=twoS + 1)
    return mj.SpinState(twoS, amps)


# -- states ---------------------------------------------------------------------


def test_state_emission_frozen():
    got = emit_state(mj.noon_state(2))
    want = (
        '{"twoS":2,"amplitudes":[[-0.70710678118654746,0],'
        "[0,0],[0.70710678118654746,0]]}"
    )
    assert got == want


def test_state_round_trip_is_bit_exact(rng):
    for twoS in (1, 3, 7):
        st = _random_state(rng, twoS)
        back = parse_state(emit_state(st))
        assert back.label == st.label
        assert np.array_equal(back.amplitudes, st.amplitudes)


def test_state_accepts_plain_numbers():
    st = parse_state('{"twoS":1,"amplitudes":[1,[0,1]]}')
    assert np.allclose(st.amplitudes, [1 / math.sqrt(2), 1j / math.sqrt(2)])


def test_state_rejects_malformed():
    with pytest.raises(ValueError):
        parse_state('{"amplitudes":[[1,0]]}')
    with pytest.raises(ValueError):
        parse_state('{"twoS":2,"amplitudes":[[1,0]]}')
    with pytest.raises(ValueError):
        parse_state('{"twoS":true,"amplitudes":[[1,0],[0,0]]}')
    with pytest.raises(ValueError):
        parse_state('{"twoS":1,"amplitudes":"nope"}')
    with pytest.raises(ValueError):
        parse_state('{"twoS":1,"amplitudes":[[1,0],[0,')


# -- constellations ----------------------------------------------------------------


def test_constellation_round_trip_exact(rng):
    c = mj.Constellation(5, [0.3 + 0.4j, -1.25, 2.0 - 1e-7j], 2)
    back = parse_constellation(emit_constellation(c))
    assert back.label == c.label
    assert back.infinity_count == 2
    assert np.array_equal(back.finite_roots, c.finite_roots)


def test_constellation_angles_round_trip():
    c = mj.Constellation(3, [0.0, 1.0 + 1.0j], 1)
    back = parse_constellation(emit_constellation(c, angles=True))
    assert back.label == c.label
    assert back.infinity_count == 1
    assert np.allclose(back.finite_roots, c.finite_roots, atol=1e-12)


def test_constellation_angles_infer_twos():
    text = '{"stars":[[0.0,0.0],[3.141592653589793,0.0]]}'
    c = parse_constellation(text)
    assert c.label.twoS == 2
    assert c.infinity_count == 1
    assert np.allclose(c.finite_roots, [0.0])


def test_constellation_rejects_malformed():
    with pytest.raises(ValueError):
        parse_constellation('{"twoS":2,"roots":[[0,0]]}')  # count mismatch
    with pytest.raises(ValueError):
        parse_constellation('{"twoS":2,"roots":[[0,0],[1,0]],"infinity_count":true}')
    with pytest.raises(ValueError):
        parse_constellation('{"twoS":1,"stars":[[0.1]]}')


# -- multipole spectra ---------------------------------------------------------------


def test_multipole_emission_structure(rng):
    st = _random_state(rng, 3)
    spec = multipoles(st)
    obj = json.loads(emit_multipoles(spec))
    assert obj["twoS"] == 3
    assert len(obj["rho"]) == 16
    assert len(obj["w"]) == 4
    assert len(obj["A"]) == 4
    assert obj["A"][0] == 0.0
    assert obj["A"][3] == pytest.approx(spec.A[3])
    rec = {(d["K"], d["q"]): d["re"] + 1j * d["im"] for d in obj["rho"]}
    for k, q, v in spec.items():
        assert rec[(k, q)] == pytest.approx(v, abs=1e-16)


def test_multipole_emission_truncation(rng):
    spec = multipoles(_random_state(rng, 4))
    obj = json.loads(emit_multipoles(spec, upto=2))
    assert len(obj["rho"]) == 9
    assert len(obj["w"]) == 3
    assert len(obj["A"]) == 3
    with pytest.raises(ValueError):
        emit_multipoles(spec, upto=5)
    with pytest.raises(ValueError):
        emit_multipoles(spec, upto=-1)


# -- Husimi grid CSV -----------------------------------------------------------------


def test_qgrid_csv_shape(rng):
    grid = q_grid(_random_state(rng, 2), 4, 5)
    text = emit_qgrid(grid)
    lines = text.split("\n")
    assert lines[0] == "theta,phi,Q"
    assert len(lines) == 1 + 4 * 5
    first = lines[1].split(",")
    assert float(first[0]) == pytest.approx(grid.theta_nodes[0])
    assert float(first[1]) == pytest.approx(grid.phi_nodes[0])
    assert float(first[2]) == pytest.approx(grid.values[0, 0])
    # theta-major ordering: the second row advances phi, not theta
    second = lines[2].split(",")
    assert float(second[0]) == pytest.approx(grid.theta_nodes[0])
    assert float(second[1]) == pytest.approx(grid.phi_nodes[1])


# -- kings ---------------------------------------------------------------------------


def test_kings_emission_fields():
    result = minimize(2, SearchConfig(M=1, restarts=4))
    obj = json.loads(emit_kings(result))
    assert obj["twoS"] == 2
    assert obj["M"] == 1
    assert obj["objective"] == pytest.approx(result.objective)
    assert obj["unpolarized_order"] == result.unpolarized_order
    assert obj["restarts_converged"] == result.restarts_converged
    inner = obj["constellation"]
    assert inner["twoS"] == 2
    assert len(inner["roots"]) + inner["infinity_count"] == 2
    assert "history" not in obj


# -- Hamiltonians ---------------------------------------------------------------------


def test_parse_hamiltonian_matrix(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    m = (g + g.conj().T) / 2.0
    rows = ",".join(
        "[" + ",".join(f"[{float(v.real)!r},{float(v.imag)!r}]" for v in row) + "]"
        for row in m
    )
    h = parse_hamiltonian(f'{{"twoS":2,"matrix":[{rows}]}}')
    assert np.allclose(h.matrix, m, atol=1e-15)


def test_parse_hamiltonian_builtin():
    h = parse_hamiltonian('{"builtin":"Sz","coupling":2.5,"twoS":3}')
    _, _, sz = mj.spin_matrices(3)
    assert np.allclose(h.matrix, 2.5 * sz)
    # label can supply the dimension instead
    h2 = parse_hamiltonian('{"builtin":"Sz","coupling":2.5}', label=3)
    assert np.allclose(h2.matrix, h.matrix)


def test_parse_hamiltonian_errors(rng):
    with pytest.raises(ValueError):
        parse_hamiltonian('{"builtin":"Sz"}')  # no dimension anywhere
    with pytest.raises(LabelMismatch):
        parse_hamiltonian('{"builtin":"Sz","twoS":2}', label=4)
    with pytest.raises(LabelMismatch):
        parse_hamiltonian('{"twoS":2,"matrix":[[0,0,0],[0,0,0],[0,0,0]]}', label=3)
    with pytest.raises(ValueError):
        parse_hamiltonian('{"twoS":2,"matrix":[[0,0],[0,0]]}')  # wrong size
    with pytest.raises(ValueError):
        parse_hamiltonian('{"twoS":1,"matrix":[[0,[1,0]],[[2,0],0]]}')  # not Hermitian


# -- trajectories -----------------------------------------------------------------------


def test_trajectory_jsonl(rng):
    st = _random_state(rng, 2)
    traj = evolve(st, builtin_hamiltonian(2, "Sz", 1.0), 0.05)
    text = emit_trajectory(traj)
    lines = text.split("\n")
    assert len(lines) == len(traj.times)
    for line, t, snap, flag in zip(lines, traj.times, traj.snapshots, traj.fallback_flags):
        obj = json.loads(line)
        assert obj["t"] == pytest.approx(t)
        assert obj["infinity_count"] == snap.infinity_count
        assert obj["fallback"] is flag
        assert len(obj["roots"]) == len(snap.finite_roots)
