"""Star equations of motion under a spin Hamiltonian.

A Hermitian H acts on root polynomials as a differential operator
sum_n h_n(z) d^n/dz^n of order at most 2S.  Each root z_k of the evolving
polynomial then obeys a closed ODE driven by the symbol values h_n(z_k) and
the elementary symmetric functions of the reciprocal separations
1/(z_k - z_j).  That system is integrated with an embedded Dormand-Prince
5(4) pair; whenever stars collide or run off the chart the integrator
bridges the episode with the exact unitary evolution of the underlying
state, re-solves for the roots, and resumes, recording the bridged window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import DegenerateConstellation, LabelMismatch, StepUnderflow
from .stellar import (
    Constellation,
    SpinLabel,
    SpinState,
    _as_label,
    _binom_sqrt,
    chordal_distance,
    constellation_from_state,
    elementary_symmetric,
    spin_matrices,
)

__all__ = [
    "HamiltonianSpec",
    "StarTrajectory",
    "hamiltonian",
    "builtin_hamiltonian",
    "differential_symbol",
    "star_velocities",
    "evolve",
    "evolve_exact",
    "equilibrium_residual",
    "match_stars",
    "matched_distance",
]

# Collision / flight-to-infinity thresholds.  The integrator hands off to the
# exact propagator strictly before the velocity field degenerates, and only
# resumes once the constellation is safely inside the tractable region again.
_COLLIDE_CHORD = 1e-6
_RESUME_CHORD = 3e-6
_MIN_VELOCITY_CHORD = 1e-9
_MAX_SEGMENTS = 64

# A pole crossing in a multi-star constellation starves the step controller:
# the runaway star inflates the error estimate of its O(1) neighbours and the
# accepted step collapses like a high power of the remaining time, so the
# |z| blowup trigger is never reached at finite cost.  Cap the work per
# segment instead, and after a cost handoff resume only once every star is
# comfortably generic, or the bridge would hand straight back into the grind.
_CALM_MAG = 30.0
_CALM_CHORD = 1e-4


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Hermitian generator plus its derived differential symbol.

    symbol[n] holds the coefficients (low to high) of h_n(z); the arrays are
    length 4S+1 because solving the triangular monomial system produces
    degree up to 2n.  evals/evecs cache the eigendecomposition used by the
    exact propagator.
    """

    label: SpinLabel
    matrix: np.ndarray
    symbol: tuple[np.ndarray, ...]
    symbol_matrix: np.ndarray
    evals: np.ndarray
    evecs: np.ndarray


def _derive_symbol(matrix: np.ndarray, twoS: int) -> list[np.ndarray]:
    d = twoS + 1
    width = 2 * twoS + 1
    binom = _binom_sqrt(twoS)
    action = (binom[:, None] / binom[None, :]) * matrix
    coeffs: list[np.ndarray] = []
    for n in range(d):
        acc = np.zeros(width, dtype=complex)
        acc[:d] = action[:, n]
        for j, hj in enumerate(coeffs):
            lo = n - j
            acc[lo:] -= math.perm(n, j) * hj[: width - lo]
        coeffs.append(acc / math.factorial(n))
    return coeffs


def hamiltonian(label: SpinLabel | int, matrix: np.ndarray) -> HamiltonianSpec:
    """Build the spec for an explicit Hermitian matrix in the |S, m> basis."""
    label = _as_label(label)
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (label.dim, label.dim):
        raise ValueError(f"matrix must be {label.dim}x{label.dim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.conj().T).max()) > 1e-12 * scale:
        raise ValueError("matrix must be Hermitian")
    m = (m + m.conj().T) / 2.0
    evals, evecs = np.linalg.eigh(m)
    symbol = _derive_symbol(m, label.twoS)
    symbol_matrix = np.array(symbol)
    for a in (m, symbol_matrix, evals, evecs, *symbol):
        a.flags.writeable = False
    return HamiltonianSpec(label, m, tuple(symbol), symbol_matrix, evals, evecs)


_BUILTIN_NAMES = ("Sz", "Sz2", "Sx", "Sy")


def builtin_hamiltonian(
    label: SpinLabel | int, name: str, coupling: float = 1.0
) -> HamiltonianSpec:
    """Named single-axis generators: coupling * {Sz, Sz^2, Sx, Sy}."""
    label = _as_label(label)
    sx, sy, sz = spin_matrices(label.twoS)
    if name == "Sz":
        base = sz
    elif name == "Sz2":
        base = sz @ sz
    elif name == "Sx":
        base = sx
    elif name == "Sy":
        base = sy
    else:
        raise ValueError(f"unknown builtin {name!r}; expected one of {_BUILTIN_NAMES}")
    return hamiltonian(label, float(coupling) * base)


def differential_symbol(h: HamiltonianSpec) -> tuple[np.ndarray, ...]:
    """Coefficient arrays of h_n(z), n = 0..2S, low to high powers."""
    return h.symbol


# -- velocity field ---------------------------------------------------------------


def _raw_velocities(w: np.ndarray, h: HamiltonianSpec) -> np.ndarray:
    """dz_k/dt for finite pairwise-distinct roots; no validation."""
    n = len(w)
    diff = w[:, None] - w[None, :]
    np.fill_diagonal(diff, 1.0)
    recip = 1.0 / diff
    np.fill_diagonal(recip, 0.0)
    # Row k accumulates e_j of its reciprocal separations; the zeroed
    # diagonal entry is inert because e_j ignores zeros in the multiset.
    esym = np.zeros((n, n), dtype=complex)
    esym[:, 0] = 1.0
    for j in range(n):
        esym[:, 1:] = esym[:, 1:] + recip[:, j, None] * esym[:, :-1]
    width = h.symbol_matrix.shape[1]
    powers = np.empty((width, n), dtype=complex)
    powers[0] = 1.0
    for i in range(1, width):
        powers[i] = powers[i - 1] * w
    values = h.symbol_matrix @ powers            # values[n', k] = h_n'(w_k)
    fact = np.array([math.factorial(o) for o in range(1, n + 1)], dtype=float)
    return 1j * np.einsum("ok,ko->k", values[1:] * fact[:, None], esym)


def _min_chord(w: np.ndarray) -> float:
    if len(w) < 2:
        return math.inf
    inv = 1.0 / np.sqrt(1.0 + np.abs(w) ** 2)
    chord = 2.0 * np.abs(w[:, None] - w[None, :]) * np.outer(inv, inv)
    np.fill_diagonal(chord, math.inf)
    return float(chord.min())


def star_velocities(c: Constellation, h: HamiltonianSpec) -> np.ndarray:
    """Root velocities, aligned with c.finite_roots order."""
    if c.label != h.label:
        raise LabelMismatch("constellation and Hamiltonian labels differ")
    if c.infinity_count > 0:
        raise DegenerateConstellation("a star at infinity has no chart velocity")
    if _min_chord(c.finite_roots) < _MIN_VELOCITY_CHORD:
        raise DegenerateConstellation("coincident stars make the velocity singular")
    return _raw_velocities(c.finite_roots, h)


def equilibrium_residual(c: Constellation, h: HamiltonianSpec) -> float:
    """max_k |dz_k/dt|, with coincident stars treated as one multiple star.

    Each cluster's velocity is evaluated at its centroid with only the other
    clusters' reciprocal separations contributing (weighted by multiplicity),
    which is the finite limit of the equations of motion at coincidence.
    """
    if c.label != h.label:
        raise LabelMismatch("constellation and Hamiltonian labels differ")
    if c.infinity_count > 0:
        raise DegenerateConstellation("a star at infinity has no chart velocity")
    roots = c.finite_roots
    if len(roots) == 0:
        return 0.0
    groups: list[list[complex]] = []
    for z in roots:
        for g in groups:
            if abs(z - g[0]) <= 1e-7 * (1.0 + max(abs(z), abs(g[0]))):
                g.append(complex(z))
                break
        else:
            groups.append([complex(z)])
    centers = [sum(g) / len(g) for g in groups]
    counts = [len(g) for g in groups]
    width = h.symbol_matrix.shape[1]
    worst = 0.0
    for k, ck in enumerate(centers):
        recips = [
            1.0 / (ck - cj)
            for j, cj in enumerate(centers)
            if j != k
            for _ in range(counts[j])
        ]
        esym = elementary_symmetric(np.array(recips, dtype=complex))
        powers = ck ** np.arange(width)
        values = h.symbol_matrix @ powers
        v = 0j
        for n in range(1, h.label.twoS + 1):
            if n - 1 < len(esym):
                v += math.factorial(n) * values[n] * esym[n - 1]
        worst = max(worst, abs(1j * v))
    return worst


# -- exact propagation ---------------------------------------------------------------


def evolve_exact(state: SpinState, h: HamiltonianSpec, t: float) -> SpinState:
    """exp(-i H t) applied through the cached eigendecomposition."""
    if state.label != h.label:
        raise LabelMismatch("state and Hamiltonian labels differ")
    phases = np.exp(-1j * h.evals * float(t))
    amps = h.evecs @ (phases * (h.evecs.conj().T @ state.amplitudes))
    return SpinState(state.label, amps)


# -- trajectories ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StarTrajectory:
    """Snapshot sequence of an integrated constellation.

    fallback_flags marks snapshots produced by the exact-evolution bridge;
    fallback_intervals lists the bridged time windows.
    """

    label: SpinLabel
    times: np.ndarray
    snapshots: tuple[Constellation, ...]
    fallback_intervals: tuple[tuple[float, float], ...]
    fallback_flags: tuple[bool, ...]

    def at(self, t: float) -> Constellation:
        """Snapshot at the recorded time nearest to t."""
        return self.snapshots[int(np.argmin(np.abs(self.times - t)))]


# Dormand-Prince 5(4) tableau.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_ERR = (
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)
_RTOL = 1e-9
_ATOL = 1e-12


def evolve(
    state: SpinState,
    h: HamiltonianSpec,
    t_final: float,
    dt_max: float | None = None,
    *,
    checkpoints=None,
) -> StarTrajectory:
    """Integrate the star ODEs from the state's constellation to t_final.

    Snapshots are recorded at every accepted step, at each requested
    checkpoint time (landed on exactly), and across exact-evolution bridges.
    t_final = 0 yields the single initial snapshot.
    """
    if state.label != h.label:
        raise LabelMismatch("state and Hamiltonian labels differ")
    t_final = float(t_final)
    if not math.isfinite(t_final) or t_final < 0:
        raise ValueError("t_final must be finite and >= 0")
    norm = float(np.abs(h.evals).max()) if h.label.twoS > 0 else 0.0
    if dt_max is None:
        dt_max = 0.01 / norm if norm > 0 else max(t_final, 1.0)
    dt_max = float(dt_max)
    if dt_max <= 0:
        raise ValueError("dt_max must be positive")

    if checkpoints is None:
        checkpoints = ()
    forced: list[float] = []
    for c in sorted(set(float(x) for x in checkpoints)):
        if not (0.0 <= c <= t_final):
            raise ValueError(f"checkpoint {c} outside [0, {t_final}]")
        if c > 0.0:
            forced.append(c)
    if t_final > 0 and (not forced or forced[-1] < t_final):
        forced.append(t_final)

    twoS = h.label.twoS
    # Large |z| overflows the symbol's power table before 1e8; cap the safe
    # region accordingly so the bridge takes over first.
    blowup = min(1e8, 10.0 ** (250.0 / max(1, 2 * twoS)))
    resume_mag = blowup / 10.0
    floor = 1e-14 * t_final if t_final > 0 else 0.0

    start = constellation_from_state(state)
    times = [0.0]
    snaps = [start]
    flags = [False]
    intervals: list[tuple[float, float]] = []

    if t_final == 0.0 or twoS == 0:
        if twoS == 0 and t_final > 0.0:
            times.append(t_final)
            snaps.append(start)
            flags.append(False)
        return StarTrajectory(
            h.label, np.array(times), tuple(snaps), tuple(intervals), tuple(flags)
        )

    eig_amp0 = h.evecs.conj().T @ state.amplitudes

    def exact_state(t: float) -> SpinState:
        return SpinState(h.label, h.evecs @ (np.exp(-1j * h.evals * t) * eig_amp0))

    def is_safe(c: Constellation) -> bool:
        if c.infinity_count > 0:
            return False
        w = c.finite_roots
        if float(np.abs(w).max()) > resume_mag:
            return False
        return _min_chord(w) >= _RESUME_CHORD

    def is_calm(c: Constellation) -> bool:
        w = c.finite_roots
        return float(np.abs(w).max()) <= _CALM_MAG and _min_chord(w) >= _CALM_CHORD

    def looks_degenerate(w: np.ndarray) -> bool:
        if not np.all(np.isfinite(w)):
            return True
        return _min_chord(w) < 1e-4 or float(np.abs(w).max()) > blowup / 100.0

    def velocity(w: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return _raw_velocities(w, h)

    def triggered(w: np.ndarray) -> bool:
        if not np.all(np.isfinite(w)):
            return True
        if float(np.abs(w).max()) > blowup:
            return True
        return _min_chord(w) < _COLLIDE_CHORD

    t = 0.0
    w = np.array(start.finite_roots) if is_safe(start) else None
    next_idx = 0
    segments = 0
    stuck = False
    eps_t = 1e-15 * max(1.0, t_final)

    while t < t_final - eps_t:
        segments += 1
        if w is None or segments > _MAX_SEGMENTS:
            # exact-evolution bridge: find the earliest horizon at which the
            # constellation is integrable again (or run to the end).  A bridge
            # launched at t = 0 only separates a degenerate initial
            # constellation (coherent states, basis states); that is startup,
            # not an integration failure, and is not reported as fallback.
            ignition = t == 0.0
            remaining = t_final - t
            tau = remaining
            if segments <= _MAX_SEGMENTS:
                probe = remaining * 1e-18
                while probe < remaining:
                    c = constellation_from_state(exact_state(t + probe))
                    if is_safe(c) and (not stuck or is_calm(c)):
                        tau = probe
                        break
                    probe *= 4.0
            fill = int(min(64, max(1, round(tau / dt_max))))
            samples = sorted(
                {t + tau * k / fill for k in range(1, fill + 1)}
                | {f for f in forced if t < f <= t + tau + eps_t}
            )
            for s in samples:
                s = min(s, t_final)
                snap = constellation_from_state(exact_state(s))
                times.append(s)
                snaps.append(snap)
                flags.append(not ignition)
            if not ignition:
                intervals.append((t, min(t + tau, t_final)))
            t = min(t + tau, t_final)
            while next_idx < len(forced) and forced[next_idx] <= t + eps_t:
                next_idx += 1
            w = np.array(snaps[-1].finite_roots) if is_safe(snaps[-1]) else None
            stuck = False
            continue

        # ODE segment toward the next forced time.
        target = forced[next_idx]
        budget = 1000 + 50 * int(math.ceil((target - t) / dt_max))
        spent = 0
        hstep = min(dt_max, target - t)
        k1 = velocity(w)
        if not np.all(np.isfinite(k1)):
            w = None
            continue
        stages = [k1] + [None] * 6
        while True:
            spent += 1
            if spent > budget:
                w = None
                stuck = True
                break
            hstep = min(hstep, dt_max, target - t)
            if hstep < floor:
                if looks_degenerate(w):
                    w = None
                    break
                raise StepUnderflow(
                    f"step {hstep:.3e} below resolution at t={t:.6g} "
                    "with a nondegenerate constellation"
                )
            ok = True
            for i in range(1, 7):
                y = w + hstep * sum(
                    a * stages[j] for j, a in enumerate(_DP_A[i]) if a != 0.0
                )
                if not np.all(np.isfinite(y)):
                    ok = False
                    break
                stages[i] = velocity(y)
                if not np.all(np.isfinite(stages[i])):
                    ok = False
                    break
            if ok:
                ynew = y  # stage 7 abscissa equals the 5th-order solution
                err_vec = hstep * sum(
                    e * stages[j] for j, e in enumerate(_DP_ERR) if e != 0.0
                )
                scale = _ATOL + _RTOL * np.maximum(np.abs(w), np.abs(ynew))
                err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
            else:
                err = math.inf
            if not math.isfinite(err):
                hstep *= 0.25
                continue
            if err > 1.0:
                hstep *= max(0.2, 0.9 * err ** -0.2)
                continue
            if triggered(ynew):
                w = None
                break
            t += hstep
            w = ynew
            times.append(min(t, target))
            snaps.append(Constellation(h.label, w, 0))
            flags.append(False)
            stages[0] = stages[6]  # first-same-as-last reuse
            if t >= target - eps_t:
                t = target
                times[-1] = target
                next_idx += 1
                break
            grow = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            hstep *= grow

    return StarTrajectory(
        h.label,
        np.array(times),
        tuple(snaps),
        tuple(intervals),
        tuple(flags),
    )


# -- star matching ----------------------------------------------------------------------


def _point_values(c: Constellation) -> list[complex]:
    return list(c.finite_roots) + [complex(math.inf, 0.0)] * c.infinity_count


def match_stars(a: Constellation, b: Constellation) -> np.ndarray:
    """Permutation p minimizing total chordal distance; b's star p[i]
    corresponds to a's star i (stars ordered as finite list then infinity)."""
    if a.label != b.label:
        raise LabelMismatch("constellations have different labels")
    pa, pb = _point_values(a), _point_values(b)
    cost = np.array([[chordal_distance(x, y) for y in pb] for x in pa])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    perm = np.empty(len(pa), dtype=int)
    perm[rows] = cols
    return perm


def matched_distance(a: Constellation, b: Constellation) -> float:
    """Largest single-star chordal distance under the optimal matching."""
    pa, pb = _point_values(a), _point_values(b)
    if not pa:
        return 0.0
    perm = match_stars(a, b)
    return max(chordal_distance(pa[i], pb[perm[i]]) for i in range(len(pa)))
