"""Husimi function, irreducible tensor multipoles, and directional moments.

The multipole components rho_Kq of a state are taken against an orthonormal
tensor family (Condon-Shortley phases), so Tr(T_Kq T_K'q'^dag) is the
identity pairing and sum |rho_Kq|^2 equals the purity.  The same components
can be recovered by quadrature of the Husimi function against spherical
harmonics; the proportionality constant of that route is calibrated once per
(2S, K) on a reference coherent state and then frozen, making the two
evaluations directly comparable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .stellar import (
    SpinLabel,
    SpinState,
    SpherePoint,
    _as_label,
    coherent_state,
    sphere_to_stereo,
    is_infinite,
    overlap,
)

__all__ = [
    "MultipoleSpectrum",
    "QGrid",
    "clebsch_gordan",
    "tensor_operator",
    "multipoles",
    "multipoles_integral",
    "cumulative_quantumness",
    "husimi_q",
    "q_grid",
    "dipole",
    "quadrupole",
    "spherical_harmonic",
]


# -- Clebsch-Gordan -----------------------------------------------------------


@lru_cache(maxsize=None)
def clebsch_gordan(
    two_j1: int, two_m1: int, two_j2: int, two_m2: int, two_J: int, two_M: int
) -> float:
    """<j1 m1; j2 m2 | J M> with all quantum numbers doubled to integers.

    Selection-rule failures (projection mismatch, triangle violation,
    |m| > j) return exactly 0.0; malformed inputs (negative j, parity of a
    doubled m disagreeing with its j) raise ValueError.  Evaluated with the
    Racah single-sum formula in exact rational arithmetic, so the only
    rounding is the final square root.
    """
    args = (two_j1, two_m1, two_j2, two_m2, two_J, two_M)
    if any(not isinstance(a, (int, np.integer)) for a in args):
        raise ValueError("quantum numbers must be (doubled) integers")
    if two_j1 < 0 or two_j2 < 0 or two_J < 0:
        raise ValueError("angular momenta must be nonnegative")
    if (two_j1 + two_m1) % 2 or (two_j2 + two_m2) % 2 or (two_J + two_M) % 2:
        raise ValueError("m parity inconsistent with j")
    if abs(two_m1) > two_j1 or abs(two_m2) > two_j2 or abs(two_M) > two_J:
        return 0.0
    if two_m1 + two_m2 != two_M:
        return 0.0
    if two_J < abs(two_j1 - two_j2) or two_J > two_j1 + two_j2:
        return 0.0
    if (two_j1 + two_j2 + two_J) % 2:
        return 0.0

    fact = math.factorial
    g = (two_j1 + two_j2 - two_J) // 2
    j1m1 = (two_j1 - two_m1) // 2
    j2m2 = (two_j2 + two_m2) // 2
    t_lo = max(0, (two_j2 - two_J - two_m1) // 2, (two_j1 - two_J + two_m2) // 2)
    t_hi = min(g, j1m1, j2m2)
    total = Fraction(0)
    for t in range(t_lo, t_hi + 1):
        den = (
            fact(t)
            * fact(g - t)
            * fact(j1m1 - t)
            * fact(j2m2 - t)
            * fact((two_J - two_j2 + two_m1) // 2 + t)
            * fact((two_J - two_j1 - two_m2) // 2 + t)
        )
        total += Fraction(-1 if t % 2 else 1, den)
    if total == 0:
        return 0.0
    pref = Fraction(
        (two_J + 1)
        * fact(g)
        * fact((two_j1 - two_j2 + two_J) // 2)
        * fact((-two_j1 + two_j2 + two_J) // 2),
        fact((two_j1 + two_j2 + two_J) // 2 + 1),
    )
    pref *= (
        fact((two_j1 + two_m1) // 2)
        * fact(j1m1)
        * fact(j2m2)
        * fact((two_j2 - two_m2) // 2)
        * fact((two_J + two_M) // 2)
        * fact((two_J - two_M) // 2)
    )
    value_sq = pref * total * total
    return math.copysign(math.sqrt(float(value_sq)), float(total))


# -- tensor operators ----------------------------------------------------------


@lru_cache(maxsize=None)
def _tensor(twoS: int, K: int, q: int) -> np.ndarray:
    d = twoS + 1
    out = np.zeros((d, d), dtype=complex)
    pref = math.sqrt((2 * K + 1) / d)
    for k in range(d):
        kp = k + q
        if 0 <= kp < d:
            out[kp, k] = pref * clebsch_gordan(
                twoS, 2 * k - twoS, 2 * K, 2 * q, twoS, 2 * kp - twoS
            )
    out.flags.writeable = False
    return out


def tensor_operator(label: SpinLabel | int, K: int, q: int) -> np.ndarray:
    """Orthonormal irreducible tensor T_Kq as a (2S+1)x(2S+1) matrix."""
    label = _as_label(label)
    if not (0 <= K <= label.twoS):
        raise ValueError(f"K={K} outside 0..{label.twoS}")
    if abs(q) > K:
        raise ValueError(f"|q|={abs(q)} exceeds K={K}")
    return _tensor(label.twoS, K, q)


@lru_cache(maxsize=None)
def _tensor_dagger_stack(twoS: int) -> np.ndarray:
    """All T_Kq^dag stacked; row K*K + K + q holds component (K, q)."""
    d = twoS + 1
    stack = np.empty((d * d, d, d), dtype=complex)
    for K in range(twoS + 1):
        for q in range(-K, K + 1):
            stack[K * K + K + q] = _tensor(twoS, K, q).conj().T
    stack.flags.writeable = False
    return stack


# -- multipole spectrum ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MultipoleSpectrum:
    """rho[K, q + 2S] are the tensor components; w[K] their squared lengths;
    A[M] the cumulative length for orders 1..M (monopole excluded)."""

    label: SpinLabel
    rho: np.ndarray
    w: np.ndarray
    A: np.ndarray

    def component(self, K: int, q: int) -> complex:
        if not (0 <= K <= self.label.twoS) or abs(q) > K:
            raise ValueError(f"(K={K}, q={q}) out of range")
        return complex(self.rho[K, q + self.label.twoS])

    def items(self):
        """Yield (K, q, rho_Kq) in canonical order."""
        for K in range(self.label.twoS + 1):
            for q in range(-K, K + 1):
                yield K, q, complex(self.rho[K, q + self.label.twoS])


def _spectrum_from_flat(label: SpinLabel, flat: np.ndarray) -> MultipoleSpectrum:
    twoS = label.twoS
    rho = np.zeros((twoS + 1, 2 * twoS + 1), dtype=complex)
    w = np.zeros(twoS + 1)
    for K in range(twoS + 1):
        row = flat[K * K : (K + 1) * (K + 1)]
        rho[K, twoS - K : twoS + K + 1] = row
        w[K] = float(np.sum(np.abs(row) ** 2))
    A = np.concatenate([[0.0], np.cumsum(w[1:])])
    rho.flags.writeable = False
    w.flags.writeable = False
    A.flags.writeable = False
    return MultipoleSpectrum(label, rho, w, A)


def _density_input(state: SpinState | np.ndarray) -> tuple[SpinLabel, np.ndarray | None, np.ndarray | None]:
    """Returns (label, pure amplitudes or None, density matrix or None)."""
    if isinstance(state, SpinState):
        return state.label, state.amplitudes, None
    dm = np.asarray(state, dtype=complex)
    if dm.ndim != 2 or dm.shape[0] != dm.shape[1] or dm.shape[0] < 1:
        raise ValueError("density matrix must be square")
    scale = max(1.0, float(np.abs(dm).max()))
    if float(np.abs(dm - dm.conj().T).max()) > 1e-10 * scale:
        raise ValueError("density matrix must be Hermitian")
    if abs(complex(np.trace(dm)) - 1.0) > 1e-10:
        raise ValueError("density matrix trace must be 1")
    return SpinLabel(dm.shape[0] - 1), None, dm


def multipoles(state: SpinState | np.ndarray) -> MultipoleSpectrum:
    """Full tensor-component spectrum of a pure state (or, for diagnostic
    use, a density matrix): rho_Kq = Tr(rho T_Kq^dag)."""
    label, amps, dm = _density_input(state)
    stack = _tensor_dagger_stack(label.twoS)
    if amps is not None:
        flat = np.einsum("iab,a,b->i", stack, amps.conj(), amps)
    else:
        flat = np.einsum("iab,ba->i", stack, dm)
    return _spectrum_from_flat(label, flat)


def cumulative_quantumness(spec: MultipoleSpectrum, M: int) -> float:
    """A_M = sum of w_K for K = 1..M."""
    if not (1 <= M <= spec.label.twoS):
        raise ValueError(f"M={M} outside 1..{spec.label.twoS}")
    return float(spec.A[M])


# -- Husimi function -------------------------------------------------------------


def husimi_q(state: SpinState, p: SpherePoint | tuple[float, float]) -> float:
    """Q(p) = |<coherent(z(p)) | state>|^2."""
    if not isinstance(p, SpherePoint):
        p = SpherePoint(*p)
    z = sphere_to_stereo(p)
    if is_infinite(z):
        return float(abs(state.amplitudes[-1]) ** 2)
    probe = coherent_state(state.label, z)
    return float(abs(overlap(probe, state)) ** 2)


def _husimi_grid(
    state: SpinState, thetas: np.ndarray, phis: np.ndarray
) -> np.ndarray:
    """Q on the outer product grid; thetas must avoid the exact poles."""
    twoS = state.label.twoS
    k = np.arange(twoS + 1)
    logbin = np.array(
        [
            math.lgamma(twoS + 1) - math.lgamma(j + 1) - math.lgamma(twoS - j + 1)
            for j in k
        ]
    )
    r = np.tan(thetas / 2.0)
    logr = np.log(r)
    lognorm = np.where(
        r <= 1.0,
        (twoS / 2.0) * np.log1p(r * r),
        twoS * logr + (twoS / 2.0) * np.log1p(r ** -2.0),
    )
    # <coherent(z)|psi> = sum_k mag_k e^{i k phi} psi_k  at z = tan(t/2)e^{-i phi}
    mag = np.exp(0.5 * logbin[None, :] + k[None, :] * logr[:, None] - lognorm[:, None])
    phases = np.exp(1j * np.outer(k, phis))
    amp = (mag * state.amplitudes[None, :]) @ phases
    return np.abs(amp) ** 2


@dataclass(frozen=True, eq=False)
class QGrid:
    """Husimi values tabulated on Gauss-Legendre x uniform angles."""

    label: SpinLabel
    theta_nodes: np.ndarray
    phi_nodes: np.ndarray
    values: np.ndarray
    theta_weights: np.ndarray
    phi_weight: float

    def integral(self) -> float:
        """Quadrature of Q over the sphere."""
        return float(self.theta_weights @ self.values.sum(axis=1) * self.phi_weight)


def q_grid(state: SpinState, n_theta: int, n_phi: int) -> QGrid:
    if n_theta < 2 or n_phi < 2:
        raise ValueError("grid needs n_theta >= 2 and n_phi >= 2")
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    thetas = np.arccos(x)[::-1].copy()
    weights = wx[::-1].copy()
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    values = _husimi_grid(state, thetas, phis)
    for a in (thetas, weights, phis, values):
        a.flags.writeable = False
    return QGrid(state.label, thetas, phis, values, weights, 2.0 * np.pi / n_phi)


# -- spherical harmonics ----------------------------------------------------------


def _legendre_norm(K: int, m: int, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Orthonormal associated Legendre bar-P_{K,m} (m >= 0) at x = cos(theta),
    s = sin(theta); includes the Condon-Shortley sign and the 1/sqrt(4 pi)."""
    p_mm = np.full_like(np.asarray(x, dtype=float), 1.0 / math.sqrt(4.0 * math.pi))
    for i in range(1, m + 1):
        p_mm = -math.sqrt((2 * i + 1) / (2.0 * i)) * s * p_mm
    if K == m:
        return p_mm
    p_prev, p_cur = p_mm, math.sqrt(2 * m + 3.0) * x * p_mm
    for ell in range(m + 2, K + 1):
        a = math.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
        b = math.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
        p_prev, p_cur = p_cur, a * (x * p_cur - b * p_prev)
    return p_cur


def spherical_harmonic(K: int, q: int, p: SpherePoint | tuple[float, float]) -> complex:
    """Orthonormalized Y_Kq at the given sphere point."""
    if K < 0 or abs(q) > K:
        raise ValueError(f"(K={K}, q={q}) out of range")
    if not isinstance(p, SpherePoint):
        p = SpherePoint(*p)
    x = np.array([math.cos(p.theta)])
    s = np.array([math.sin(p.theta)])
    base = float(_legendre_norm(K, abs(q), x, s)[0])
    if q < 0:
        base *= (-1.0) ** (abs(q) % 2)
    return base * cmath.exp(1j * q * p.phi)


# -- integral route for the multipoles ---------------------------------------------


def _integral_components_raw(state: SpinState, K: int) -> np.ndarray:
    """Uncalibrated quadrature of Q against Y_Kq^*, q = -K..K."""
    twoS = state.label.twoS
    n_theta = twoS + K + 2
    n_phi = 2 * (twoS + K) + 1
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    thetas = np.arccos(x)
    s = np.sqrt(1.0 - x * x)
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    q_vals = _husimi_grid(state, thetas, phis)
    qs = np.arange(-K, K + 1)
    # G[i, qi] = sum_j Q[i, j] e^{-i q phi_j} dphi
    fourier = q_vals @ np.exp(-1j * np.outer(phis, qs)) * (2.0 * np.pi / n_phi)
    out = np.empty(2 * K + 1, dtype=complex)
    for qi, q in enumerate(qs):
        leg = _legendre_norm(K, abs(q), x, s)
        if q < 0 and abs(q) % 2:
            leg = -leg
        out[qi] = np.sum(wx * leg * fourier[:, qi])
    return out


@lru_cache(maxsize=None)
def _integral_inverse_kernel(twoS: int, K: int) -> float:
    """Constant turning the Q-against-Y_Kq quadrature back into a multipole
    component: sqrt((2S-K)! (2S+K+1)!) / (sqrt(4 pi) (2S)!)."""
    log = 0.5 * (math.lgamma(twoS - K + 1) + math.lgamma(twoS + K + 2))
    log -= math.lgamma(twoS + 1)
    return math.exp(log) / math.sqrt(4.0 * math.pi)


def multipoles_integral(state: SpinState) -> MultipoleSpectrum:
    """Multipole spectrum from sphere quadrature of the Husimi function.

    The overlap of Q with Y_Kq is proportional to the (K, q) component with
    a closed-form constant; a (-1)^(K+q) signature enters because theta is
    measured from the lowest-weight pole and phi winds as exp(-i phi).
    Agrees with multipoles() to quadrature accuracy.
    """
    twoS = state.label.twoS
    flat = np.empty((twoS + 1) ** 2, dtype=complex)
    for K in range(twoS + 1):
        raw = _integral_components_raw(state, K)
        signs = (-1.0) ** (K + np.arange(-K, K + 1))
        inv = _integral_inverse_kernel(twoS, K)
        flat[K * K : (K + 1) * (K + 1)] = inv * signs * raw
    return _spectrum_from_flat(state.label, flat)


# -- Cartesian moments ---------------------------------------------------------------


def _q_moments(state: SpinState) -> tuple[float, np.ndarray, np.ndarray]:
    """(integral of Q, first moments, second moments) over the sphere."""
    twoS = state.label.twoS
    n_theta = twoS + 4
    n_phi = 2 * twoS + 5
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    thetas = np.arccos(x)
    s = np.sqrt(1.0 - x * x)
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    q_vals = _husimi_grid(state, thetas, phis)
    w2d = wx[:, None] * (2.0 * np.pi / n_phi)
    nx = s[:, None] * np.cos(phis)[None, :]
    ny = s[:, None] * np.sin(phis)[None, :]
    nz = np.broadcast_to(x[:, None], q_vals.shape)
    total = float(np.sum(w2d * q_vals))
    comps = [nx, ny, nz]
    first = np.array([float(np.sum(w2d * q_vals * n)) for n in comps])
    second = np.array(
        [[float(np.sum(w2d * q_vals * comps[i] * comps[j])) for j in range(3)]
         for i in range(3)]
    )
    return total, first, second


def dipole(state: SpinState) -> np.ndarray:
    """Q-weighted average direction <n>."""
    total, first, _ = _q_moments(state)
    return first / total


def quadrupole(state: SpinState) -> np.ndarray:
    """Q-weighted traceless second moment <3 n_i n_j - delta_ij>."""
    total, _, second = _q_moments(state)
    return 3.0 * second / total - np.eye(3)
