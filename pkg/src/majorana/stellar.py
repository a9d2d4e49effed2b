"""Spin states, their root polynomials, and star constellations.

A pure spin-S state with amplitudes psi_k (k = S + m, ascending m) defines
the polynomial

    f(z) = sum_k sqrt(C(2S, k)) psi_k z**k,

whose root multiset on the Riemann sphere determines the state up to global
phase.  Degree deficiency counts as roots at infinity; under the chart used
here (z = tan(theta/2) exp(-i phi)) infinity is the theta = pi pole.  All
conversions in this module are exact in that correspondence; the only
numerics live in the root solver.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import LabelMismatch, NonConvergence
from .rootfinding import find_roots, find_roots_batch, polyval_many

__all__ = [
    "SpinLabel",
    "SpinState",
    "StellarPolynomial",
    "Constellation",
    "SpherePoint",
    "INFINITY",
    "is_infinite",
    "spin_matrices",
    "basis_state",
    "coherent_state",
    "noon_state",
    "overlap",
    "rotate",
    "elementary_symmetric",
    "stellar_polynomial",
    "constellation_from_state",
    "constellations_from_states",
    "state_from_constellation",
    "stereo_to_sphere",
    "sphere_to_stereo",
    "chordal_distance",
]

#: Stereographic image of the theta = pi pole.
INFINITY = complex(math.inf, 0.0)


def is_infinite(z: complex) -> bool:
    """True if z stands for the point at infinity (any non-finite value)."""
    z = complex(z)
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


@dataclass(frozen=True, order=True)
class SpinLabel:
    """Spin quantum number, stored as the integer 2S."""

    twoS: int

    def __post_init__(self) -> None:
        if not isinstance(self.twoS, (int, np.integer)) or self.twoS < 0:
            raise ValueError(f"twoS must be a nonnegative integer, got {self.twoS!r}")
        object.__setattr__(self, "twoS", int(self.twoS))

    @property
    def S(self) -> float:
        return self.twoS / 2.0

    @property
    def dim(self) -> int:
        return self.twoS + 1


def _as_label(label: SpinLabel | int) -> SpinLabel:
    return label if isinstance(label, SpinLabel) else SpinLabel(label)


def _require_same_label(a: SpinLabel, b: SpinLabel) -> None:
    if a != b:
        raise LabelMismatch(f"spin labels differ: 2S={a.twoS} vs 2S={b.twoS}")


@dataclass(frozen=True, eq=False)
class SpinState:
    """Normalized pure state; amplitudes[k] is psi_{m=k-S}."""

    label: SpinLabel
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        label = _as_label(self.label)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (label.dim,):
            raise ValueError(
                f"expected {label.dim} amplitudes for 2S={label.twoS}, "
                f"got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        peak = float(np.abs(amps).max())
        if peak == 0.0:
            raise ValueError("state vector must be nonzero")
        # Pre-scaling keeps the norm square inside the float range even for
        # raw Vieta coefficients of huge or tiny roots.
        scaled = amps / peak
        total = peak * float(np.linalg.norm(scaled))
        if abs(total - 1.0) > 32.0 * np.finfo(float).eps:
            amps = scaled / float(np.linalg.norm(scaled))
        # else: already unit norm; dividing again would only add rounding noise
        amps.flags.writeable = False
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "amplitudes", amps)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class StellarPolynomial:
    """Root polynomial of a state; coefficients[k] multiplies z**k."""

    label: SpinLabel
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        label = _as_label(self.label)
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.shape != (label.dim,):
            raise ValueError("coefficient count must equal 2S + 1")
        coeffs.flags.writeable = False
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "coefficients", coeffs)

    def __call__(self, z: complex | np.ndarray) -> complex | np.ndarray:
        res = polyval_many(self.coefficients, np.asarray(z, dtype=complex))
        return complex(res) if np.isscalar(z) or np.ndim(z) == 0 else res


@dataclass(frozen=True, eq=False)
class Constellation:
    """Multiset of 2S stars: finite stereographic roots plus a count at the
    theta = pi pole (polynomial degree deficiency)."""

    label: SpinLabel
    finite_roots: np.ndarray
    infinity_count: int = 0

    def __post_init__(self) -> None:
        label = _as_label(self.label)
        roots = np.asarray(self.finite_roots, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(roots)):
            raise ValueError("finite_roots must be finite; use infinity_count")
        if self.infinity_count < 0:
            raise ValueError("infinity_count must be nonnegative")
        if len(roots) + self.infinity_count != label.twoS:
            raise ValueError(
                f"need exactly 2S={label.twoS} stars, got {len(roots)} finite "
                f"+ {self.infinity_count} at infinity"
            )
        roots = roots[np.lexsort((roots.imag, roots.real))]
        roots.flags.writeable = False
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "finite_roots", roots)
        object.__setattr__(self, "infinity_count", int(self.infinity_count))

    def points(self) -> list[SpherePoint]:
        """All 2S stars as sphere angles, infinity stars last."""
        pts = [stereo_to_sphere(z) for z in self.finite_roots]
        pts.extend(SpherePoint(math.pi, 0.0) for _ in range(self.infinity_count))
        return pts


@dataclass(frozen=True)
class SpherePoint:
    """Polar angles: theta in [0, pi], phi in [0, 2*pi)."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not (-1e-12 <= self.theta <= math.pi + 1e-12):
            raise ValueError(f"theta out of [0, pi]: {self.theta}")
        theta = min(max(self.theta, 0.0), math.pi)
        phi = float(self.phi) % (2.0 * math.pi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)


# -- chart -------------------------------------------------------------------


def stereo_to_sphere(z: complex) -> SpherePoint:
    if is_infinite(z):
        return SpherePoint(math.pi, 0.0)
    z = complex(z)
    theta = 2.0 * math.atan(abs(z))
    phi = -cmath.phase(z) if z != 0 else 0.0
    return SpherePoint(theta, phi)


def sphere_to_stereo(p: SpherePoint) -> complex:
    if p.theta == math.pi:
        return INFINITY
    return math.tan(p.theta / 2.0) * cmath.exp(-1j * p.phi)


def chordal_distance(a: complex, b: complex) -> float:
    """Euclidean distance of the two points embedded on the unit sphere.

    Ranges over [0, 2]; both arguments may be the point at infinity.
    """
    ainf, binf = is_infinite(a), is_infinite(b)
    if ainf and binf:
        return 0.0
    if ainf or binf:
        z = complex(b if ainf else a)
        return 2.0 / math.sqrt(1.0 + abs(z) ** 2)
    a, b = complex(a), complex(b)
    return 2.0 * abs(a - b) / math.sqrt((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


# -- operators ----------------------------------------------------------------


@lru_cache(maxsize=None)
def _binom_sqrt(twoS: int) -> np.ndarray:
    out = np.array([math.sqrt(math.comb(twoS, k)) for k in range(twoS + 1)])
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def spin_matrices(twoS: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sx, Sy, Sz) in the amplitude ordering used by SpinState."""
    d = twoS + 1
    m = (np.arange(d) - twoS / 2.0).astype(float)
    raise_amp = np.sqrt((twoS / 2.0 - m[:-1]) * (twoS / 2.0 + m[:-1] + 1.0))
    sp = np.zeros((d, d), dtype=complex)
    sp[np.arange(1, d), np.arange(d - 1)] = raise_amp
    sx = (sp + sp.conj().T) / 2.0
    sy = (sp - sp.conj().T) / 2j
    sz = np.diag(m).astype(complex)
    for a in (sx, sy, sz):
        a.flags.writeable = False
    return sx, sy, sz


def basis_state(label: SpinLabel | int, two_m: int) -> SpinState:
    """The eigenstate |S, m> given as the integer 2m."""
    label = _as_label(label)
    if (two_m + label.twoS) % 2 != 0 or abs(two_m) > label.twoS:
        raise ValueError(f"2m={two_m} invalid for 2S={label.twoS}")
    amps = np.zeros(label.dim, dtype=complex)
    amps[(two_m + label.twoS) // 2] = 1.0
    return SpinState(label, amps)


def coherent_state(label: SpinLabel | int, z0: complex) -> SpinState:
    """State whose overlap magnitude peaks at stereographic point z0.

    Any non-finite z0 gives the theta = pi pole state |S, S>; z0 = 0 gives
    |S, -S>.  Amplitudes are assembled in log form so huge |z0| cannot
    overflow before normalization.
    """
    label = _as_label(label)
    twoS = label.twoS
    if is_infinite(z0):
        return basis_state(label, twoS)
    z0 = complex(z0)
    if z0 == 0:
        return basis_state(label, -twoS)
    r = abs(z0)
    if r <= 1.0:
        lognorm = (twoS / 2.0) * math.log1p(r * r)
    else:
        lognorm = twoS * math.log(r) + (twoS / 2.0) * math.log1p(r ** -2)
    k = np.arange(twoS + 1)
    logbin = np.array(
        [math.lgamma(twoS + 1) - math.lgamma(j + 1) - math.lgamma(twoS - j + 1)
         for j in k]
    )
    mag = np.exp(0.5 * logbin + k * math.log(r) - lognorm)
    amps = mag * np.exp(1j * k * cmath.phase(z0))
    return SpinState(label, amps)


def noon_state(label: SpinLabel | int) -> SpinState:
    """Equal superposition of the two polar basis states whose stars form a
    regular 2S-gon on the equator."""
    label = _as_label(label)
    if label.twoS < 1:
        raise ValueError("need 2S >= 1")
    amps = np.zeros(label.dim, dtype=complex)
    amps[0] = -1.0
    amps[-1] = 1.0
    return SpinState(label, amps)


def overlap(a: SpinState, b: SpinState) -> complex:
    """Inner product <a|b>."""
    _require_same_label(a.label, b.label)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def rotate(state: SpinState, theta: float, phi: float) -> SpinState:
    """Rigid rotation of the constellation.

    rotate(basis_state(label, -2S), theta, phi) lands the coherent state at
    tan(theta/2) exp(-i phi); rotate(state, 0, alpha) spins every star about
    the poles, z -> z exp(-i alpha).
    """
    twoS = state.label.twoS
    sx, sy, sz = spin_matrices(twoS)
    m = np.real(np.diag(sz))
    axis = math.cos(phi) * sy - math.sin(phi) * sx
    evals, evecs = np.linalg.eigh(axis)
    tilt = (evecs * np.exp(1j * theta * evals)) @ evecs.conj().T
    amps = tilt @ (np.exp(1j * phi * m) * state.amplitudes)
    return SpinState(state.label, amps)


# -- state <-> constellation ---------------------------------------------------


def elementary_symmetric(roots: np.ndarray) -> np.ndarray:
    """e_0 .. e_r of the given values (e_0 = 1)."""
    roots = np.asarray(roots, dtype=complex).reshape(-1)
    e = np.zeros(len(roots) + 1, dtype=complex)
    e[0] = 1.0
    for j, w in enumerate(roots):
        e[1 : j + 2] = e[1 : j + 2] + w * e[0 : j + 1]
    return e


def _elementary_symmetric_scaled(roots: np.ndarray) -> np.ndarray:
    """Like elementary_symmetric but renormalized along the way; the result
    is a common positive multiple of the true values (safe for huge roots)."""
    roots = np.asarray(roots, dtype=complex).reshape(-1)
    e = np.zeros(len(roots) + 1, dtype=complex)
    e[0] = 1.0
    for j, w in enumerate(roots):
        e[1 : j + 2] = e[1 : j + 2] + w * e[0 : j + 1]
        peak = np.abs(e).max()
        if peak > 1e200:
            e /= peak
    return e


def stellar_polynomial(state: SpinState) -> StellarPolynomial:
    coeffs = _binom_sqrt(state.label.twoS) * state.amplitudes
    return StellarPolynomial(state.label, coeffs)


def _trim_ends(f: np.ndarray, tol: float) -> tuple[int, np.ndarray, int, float]:
    """Split off the roots pinned at z = 0 (leading near-zero coefficients)
    and at infinity (trailing ones); returns (lead, core, tail, scale)."""
    scale = float(np.abs(f).max())
    keep = np.abs(f) > tol * scale
    lead = int(np.argmax(keep))
    tail = int(np.argmax(keep[::-1]))
    return lead, f[lead : len(f) - tail], tail, scale


def _check_contract(
    f: np.ndarray, roots: np.ndarray, twoS: int, tol: float, scale: float
) -> None:
    residual = np.abs(polyval_many(f, roots))
    bound = tol * scale * np.maximum(1.0, np.abs(roots)) ** twoS
    if np.any(residual > bound):
        raise NonConvergence(
            f"stellar root residual {residual.max():.3e} exceeds contract"
        )


def constellation_from_state(state: SpinState, tol: float = 1e-10) -> Constellation:
    """Solve for the star multiset of the state.

    tol sets both the relative coefficient size treated as zero when
    trimming degenerate ends of the polynomial and the backward-error bound
    demanded of every root:  |f(z)| <= tol * max|f_k| * max(1, |z|)**2S.
    Raises NonConvergence if the solver cannot meet that bound.
    """
    twoS = state.label.twoS
    if twoS == 0:
        return Constellation(state.label, np.zeros(0, dtype=complex), 0)
    f = stellar_polynomial(state).coefficients
    lead, core, tail, scale = _trim_ends(f, tol)
    roots = np.concatenate(
        [
            np.zeros(lead, dtype=complex),
            find_roots(core, tol=tol) if len(core) > 1 else np.zeros(0, complex),
        ]
    )
    _check_contract(f, roots, twoS, tol, scale)
    return Constellation(state.label, roots, tail)


def constellations_from_states(
    states, tol: float = 1e-10
) -> list[Constellation]:
    """constellation_from_state over a whole sequence of states.

    States whose trimmed root polynomials share a degree are solved as one
    stacked batch, which is far faster than looping; every result satisfies
    the same residual contract as the scalar routine.  Raises NonConvergence
    if any state in the batch fails it.
    """
    states = list(states)
    results: list[Constellation | None] = [None] * len(states)
    groups: dict[int, list[tuple[int, np.ndarray, int, np.ndarray, int, float]]] = {}
    for i, state in enumerate(states):
        twoS = state.label.twoS
        if twoS == 0:
            results[i] = Constellation(state.label, np.zeros(0, dtype=complex), 0)
            continue
        f = stellar_polynomial(state).coefficients
        lead, core, tail, scale = _trim_ends(f, tol)
        if len(core) <= 1:
            roots = np.zeros(lead, dtype=complex)
            _check_contract(f, roots, twoS, tol, scale)
            results[i] = Constellation(state.label, roots, tail)
            continue
        groups.setdefault(len(core), []).append((i, f, lead, core, tail, scale))
    for members in groups.values():
        stack = np.array([core for _, _, _, core, _, _ in members])
        solved = find_roots_batch(stack, tol=tol)
        for (i, f, lead, _, tail, scale), found in zip(members, solved):
            state = states[i]
            roots = np.concatenate([np.zeros(lead, dtype=complex), found])
            _check_contract(f, roots, state.label.twoS, tol, scale)
            results[i] = Constellation(state.label, roots, tail)
    return results


def state_from_constellation(c: Constellation) -> SpinState:
    """Rebuild the unique normalized state with the given stars.

    The returned phase is canonical: the highest-degree surviving
    coefficient of the root polynomial is real and positive.
    """
    twoS = c.label.twoS
    if twoS == 0:
        return SpinState(c.label, np.ones(1, dtype=complex))
    r = len(c.finite_roots)
    e = _elementary_symmetric_scaled(c.finite_roots)
    coeffs = np.zeros(twoS + 1, dtype=complex)
    signs = (-1.0) ** np.arange(r, -1, -1)
    coeffs[: r + 1] = signs * e[::-1]
    amps = coeffs / _binom_sqrt(twoS)
    return SpinState(c.label, amps)
