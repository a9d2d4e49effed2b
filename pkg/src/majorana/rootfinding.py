"""Simultaneous polynomial root solving with multiplicity recovery.

The solver is tuned for the polynomials that arise from spin states: degree
up to a few dozen, coefficients normalized to max modulus 1, and physically
meaningful root collisions (a coherent state is one root repeated to full
degree).  Plain iteration scatters an m-fold root over a circle of radius
about eps**(1/m), so after the simultaneous pass we detect tight root
clusters and re-solve each candidate multiple root on a derivative of the
polynomial, where it is simple and recoverable to machine precision.

Coefficient arrays are ordered low to high: coeffs[k] multiplies z**k.
"""

from __future__ import annotations

import numpy as np
from scipy.cluster.hierarchy import linkage, to_tree

from .errors import NonConvergence

_EPS = float(np.finfo(float).eps)

# Acceptance factor for the derivative-magnitude test that validates a
# candidate m-fold root.  Larger values merge near-collisions more eagerly.
_CLUSTER_C = 1e3


def polyval_many(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Horner evaluation of sum_k coeffs[k] z**k at each entry of z."""
    acc = np.full_like(np.asarray(z, dtype=complex), coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


def _eval_floor(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Rounding-noise scale of Horner evaluation at z (running error bound)."""
    az = np.abs(np.asarray(z))
    acc = np.full_like(az, abs(coeffs[-1]))
    for c in coeffs[-2::-1]:
        acc = acc * az + abs(c)
    return _EPS * (2.0 * len(coeffs)) * acc


def derivative(coeffs: np.ndarray, order: int = 1) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    for _ in range(order):
        if len(c) <= 1:
            return np.zeros(1, dtype=complex)
        c = c[1:] * np.arange(1, len(c))
    return c


def _initial_points(coeffs: np.ndarray) -> np.ndarray:
    """Perturbed circle inside the Fujiwara root bound."""
    n = len(coeffs) - 1
    cn = abs(coeffs[-1])
    radius = 2.0 * max(
        (abs(coeffs[n - k]) / cn) ** (1.0 / k) for k in range(1, n + 1)
    )
    k = np.arange(n)
    # Irrational angle step and a small radial stagger break every symmetry
    # a structured polynomial could otherwise get stuck on.
    ang = 2.0 * np.pi * k / n + 0.43
    rad = 0.8 * radius * (1.0 + 0.05 * np.sin(2.39996 * k))
    return rad * np.exp(1j * ang)


def _aberth(coeffs: np.ndarray, z: np.ndarray, max_iter: int = 400) -> np.ndarray:
    """Aberth-Ehrlich simultaneous iteration from the given start points."""
    dcoeffs = derivative(coeffs)
    n = len(z)
    frozen = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        p = polyval_many(coeffs, z)
        frozen |= np.abs(p) <= _eval_floor(coeffs, z)
        if frozen.all():
            break
        dp = polyval_many(dcoeffs, z)
        dp = np.where(dp == 0, _EPS, dp)
        newton = p / dp
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        repulsion = (1.0 / diff).sum(axis=1)
        denom = 1.0 - newton * repulsion
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        step = np.where(frozen, 0.0, newton / denom)
        z = z - step
        frozen |= np.abs(step) <= 1e-14 * (1.0 + np.abs(z))
        if frozen.all():
            break
    return z


def _newton_polish(coeffs: np.ndarray, z: np.ndarray, iters: int = 3) -> np.ndarray:
    """A few guarded Newton steps; a point only moves if its residual drops."""
    d = derivative(coeffs)
    p = polyval_many(coeffs, z)
    for _ in range(iters):
        dp = polyval_many(d, z)
        dp = np.where(dp == 0, np.inf, dp)
        znew = z - p / dp
        pnew = polyval_many(coeffs, znew)
        take = np.abs(pnew) < np.abs(p)
        z = np.where(take, znew, z)
        p = np.where(take, pnew, p)
    return z


# -- batched path -----------------------------------------------------------------
#
# Solving many same-degree polynomials (one per spin state) is dominated by
# Python-level Horner loops when done one at a time; stacking the
# coefficient rows turns every iteration into a handful of array ops over
# the whole batch.  Results feed the identical per-polynomial finishing
# stage as the scalar path.


def _horner_batch(coeffs: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of row b's polynomial at each z[b, :]."""
    p = np.empty_like(z)
    p[:] = coeffs[:, -1, None]
    dp = np.zeros_like(z)
    for k in range(coeffs.shape[1] - 2, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[:, k, None]
    return p, dp


def _initial_points_batch(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[1] - 1
    k = np.arange(1, n + 1)
    ratios = np.abs(coeffs[:, -2::-1]) / np.abs(coeffs[:, -1, None])
    radius = 2.0 * (ratios ** (1.0 / k)).max(axis=1)
    j = np.arange(n)
    ang = np.exp(1j * (2.0 * np.pi * j / n + 0.43))
    rad = 0.8 * radius[:, None] * (1.0 + 0.05 * np.sin(2.39996 * j))
    return rad * ang


def _aberth_batch(coeffs: np.ndarray, z: np.ndarray, max_iter: int = 250) -> np.ndarray:
    n = z.shape[1]
    diag = np.arange(n)
    frozen = np.zeros(z.shape, dtype=bool)
    checkpoint = np.inf
    for it in range(max_iter):
        p, dp = _horner_batch(coeffs, z)
        dp = np.where(dp == 0, _EPS, dp)
        newton = p / dp
        diff = z[:, :, None] - z[:, None, :]
        diff[:, diag, diag] = np.inf
        repulsion = (1.0 / diff).sum(axis=2)
        denom = 1.0 - newton * repulsion
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        step = np.where(frozen, 0.0, newton / denom)
        z = z - step
        frozen |= np.abs(step) <= 1e-14 * (1.0 + np.abs(z))
        if frozen.all():
            break
        if (it + 1) % 8 == 0:
            # Multiple roots never freeze (the step hovers near eps**(1/m));
            # once the largest live step stops shrinking and is already
            # tiny, further sweeps are churn and polishing takes over.
            live = float(np.abs(step).max())
            if live < 1e-6 and live > 0.5 * checkpoint:
                break
            checkpoint = live
    return z


def _newton_polish_batch(coeffs: np.ndarray, z: np.ndarray, iters: int = 3) -> np.ndarray:
    p, dp = _horner_batch(coeffs, z)
    for _ in range(iters):
        dp = np.where(dp == 0, np.inf, dp)
        znew = z - p / dp
        pnew, dpnew = _horner_batch(coeffs, znew)
        take = np.abs(pnew) < np.abs(p)
        z = np.where(take, znew, z)
        p = np.where(take, pnew, p)
        dp = np.where(take, dpnew, dp)
    return z


def _worst_residual(coeffs: np.ndarray, z: np.ndarray) -> float:
    n = len(coeffs) - 1
    p = np.abs(polyval_many(coeffs, z))
    lim = np.maximum(1.0, np.abs(z)) ** n
    with np.errstate(invalid="ignore"):
        ratio = p / lim
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    return float(ratio.max()) if len(ratio) else 0.0


def _coef_scale(coeffs: np.ndarray, z: complex) -> float:
    """sum_k |coeffs[k]| |z|**k, the natural magnitude of p near z."""
    az = abs(z)
    acc = abs(coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * az + abs(c)
    return acc


def _coef_scale_many(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    az = np.abs(np.asarray(z))
    acc = np.full_like(az, abs(coeffs[-1]))
    for c in coeffs[-2::-1]:
        acc = acc * az + abs(c)
    return acc


def _all_simple(coeffs: np.ndarray, roots: np.ndarray) -> bool:
    """True when every estimate is confidently a simple root.

    An m-fold root pushes |p'| down to order eps**((m-1)/m) of its
    coefficient scale (about 1e-8 for a double root), far below this gate,
    so skipping the cluster stage on a pass can never hide a multiple.
    """
    if len(roots) < 2:
        return True
    dc = derivative(coeffs)
    dp = np.abs(polyval_many(dc, roots))
    return bool((dp > 1e-5 * _coef_scale_many(dc, roots)).all())


def _refine_multiple(
    coeffs: np.ndarray,
    derivs: list[np.ndarray],
    center: complex,
    m: int,
    spread: float,
) -> complex | None:
    """Try to certify an m-fold root near center; return it or None.

    An m-fold root of p is a simple root of p^(m-1), so Newton on that
    derivative converges quadratically to full precision.  The candidate is
    accepted only if every lower derivative of p vanishes there to within the
    perturbation theory of an m-fold root (|p^(j)| of order eps**((m-j)/m)
    relative to its coefficient-magnitude scale).
    """
    g = derivs[m - 1]
    dg = derivs[m]
    z = center
    leash = max(4.0 * spread, 1e-7 * (1.0 + abs(center)))
    for _ in range(60):
        gv = complex(polyval_many(g, np.array([z]))[0])
        dgv = complex(polyval_many(dg, np.array([z]))[0])
        if dgv == 0:
            return None
        step = gv / dgv
        z = z - step
        if abs(z - center) > leash:
            return None
        if abs(step) <= 1e-15 * (1.0 + abs(z)):
            break
    else:
        return None
    for j in range(m):
        mag = abs(complex(polyval_many(derivs[j], np.array([z]))[0]))
        scale = _coef_scale(derivs[j], z)
        if mag > _CLUSTER_C * scale * _EPS ** ((m - j) / m):
            return None
    return z


def _validated_clusters(
    coeffs: np.ndarray, roots: np.ndarray
) -> list[tuple[complex, int]]:
    """Walk the single-linkage merge tree of the root estimates top-down,
    replacing every certifiable tight cluster by one exact multiple root."""
    n = len(roots)
    if n == 1:
        return [(complex(roots[0]), 1)]
    derivs = [np.asarray(coeffs, dtype=complex)]
    for _ in range(len(coeffs) - 1):
        derivs.append(derivative(derivs[-1]))
    pts = np.column_stack([roots.real, roots.imag])
    tree = to_tree(linkage(pts, method="single"))
    out: list[tuple[complex, int]] = []

    def visit(node) -> None:
        idx = node.pre_order(lambda leaf: leaf.id)
        if len(idx) == 1:
            out.append((complex(roots[idx[0]]), 1))
            return
        sub = roots[idx]
        center = complex(sub.mean())
        spread = float(np.abs(sub - center).max())
        # A genuine m-fold root scatters estimates over about eps**(1/m);
        # anything much wider is a set of distinct roots, not worth a
        # refinement attempt.
        limit = 10.0 * _EPS ** (1.0 / len(idx)) * (1.0 + abs(center))
        if spread <= min(0.5 * (1.0 + abs(center)), limit):
            z = _refine_multiple(coeffs, derivs, center, len(idx), spread)
            if z is not None:
                out.append((z, len(idx)))
                return
        visit(node.left)
        visit(node.right)

    visit(tree)
    return out


def _merge_by_radius(
    clusters: list[tuple[complex, int]], radius: float
) -> list[tuple[complex, int]]:
    """Greedy single-linkage merge of points closer than radius*(1+|z|)."""
    items = [[z, m] for z, m in clusters]
    merged = True
    while merged:
        merged = False
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                zi, mi = items[i]
                zj, mj = items[j]
                if abs(zi - zj) <= radius * (1.0 + max(abs(zi), abs(zj))):
                    w = (mi * zi + mj * zj) / (mi + mj)
                    items[i] = [w, mi + mj]
                    del items[j]
                    merged = True
                    break
            if merged:
                break
    return [(z, m) for z, m in items]


def find_roots(
    coeffs: np.ndarray, tol: float = 1e-10, cluster_radius: float = 1e-7
) -> np.ndarray:
    """All roots of the polynomial, multiplicities expanded, sorted.

    coeffs must have nonzero first and last entries (no roots at zero or
    infinity; the caller strips those).  Raises NonConvergence when no
    candidate set meets the backward-error contract
    |p(z)| <= tol * max|coeffs| * max(1, |z|)**degree.
    """
    c = np.asarray(coeffs, dtype=complex)
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    scale = np.abs(c).max()
    if scale == 0 or c[0] == 0 or c[-1] == 0:
        raise ValueError("coefficients must be trimmed and nonzero")
    c = c / scale
    if n == 1:
        return np.array([-c[0] / c[1]])
    roots = _newton_polish(c, _aberth(c, _initial_points(c)))
    return _finish(c, roots, tol, cluster_radius)


def _finish(
    c: np.ndarray, roots: np.ndarray, tol: float, cluster_radius: float
) -> np.ndarray:
    """Residual contract, multiplicity recovery, canonical order."""
    n = len(c) - 1
    if _worst_residual(c, roots) > tol:
        alt = _newton_polish(c, np.roots(c[::-1]))
        if _worst_residual(c, alt) < _worst_residual(c, roots):
            roots = alt
        if _worst_residual(c, roots) > tol:
            raise NonConvergence(
                f"root residual {_worst_residual(c, roots):.3e} exceeds "
                f"tolerance {tol:.3e} for degree {n}"
            )
    if _all_simple(c, roots):
        clusters = [(complex(z), 1) for z in roots]
    else:
        clusters = _validated_clusters(c, roots)
    clusters = _merge_by_radius(clusters, cluster_radius)
    expanded = np.array(
        [z for z, m in clusters for _ in range(m)], dtype=complex
    )
    if _worst_residual(c, expanded) > tol:
        raise NonConvergence(
            "clustered roots violate the residual contract "
            f"({_worst_residual(c, expanded):.3e} > {tol:.3e})"
        )
    order = np.lexsort((expanded.imag, expanded.real))
    return expanded[order]


def find_roots_batch(
    coeffs: np.ndarray, tol: float = 1e-10, cluster_radius: float = 1e-7
) -> list[np.ndarray]:
    """find_roots over a stack of same-degree coefficient rows."""
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 2:
        raise ValueError("expected a 2-d coefficient stack")
    n = c.shape[1] - 1
    if n < 1:
        return [np.zeros(0, dtype=complex) for _ in range(c.shape[0])]
    scale = np.abs(c).max(axis=1, keepdims=True)
    if (scale == 0).any() or (c[:, 0] == 0).any() or (c[:, -1] == 0).any():
        raise ValueError("coefficient rows must be trimmed and nonzero")
    c = c / scale
    if n == 1:
        return [np.array([-row[0] / row[1]]) for row in c]
    z = _newton_polish_batch(c, _aberth_batch(c, _initial_points_batch(c)))
    return [_finish(c[b], z[b], tol, cluster_radius) for b in range(c.shape[0])]
