"""Complex quartic roots in radicals (resolvent cubic + Ferrari factorisation).

The depressed quartic y^4 + p y^2 + q y + r is split as

    (y^2 + a y + m)(y^2 - a y + n),   m = z0 + b,  n = z0 - b,

where z0 is a root of the resolvent cubic
z^3 - (p/2) z^2 - r z + (r p / 2 - q^2 / 8), a = sqrt(2 z0 - p) and
b = -q / (2 a). Roots come from the two quadratic factors. Every result is
residual-checked against the original polynomial and recomputed from the
companion matrix if the check fails.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError
from .model import QuarticCoeffs

RESIDUAL_TOL = 1e-9
_OMEGA3 = complex(-0.5, np.sqrt(3.0) / 2.0)  # primitive cube root of unity


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    residuals: np.ndarray
    method: str = "radicals"  # or "companion-fallback"

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def permuted(self, order) -> "RootSet":
        order = list(order)
        return replace(self, roots=self.roots[order], residuals=self.residuals[order])


@dataclass(frozen=True)
class ResolventSolution:
    z0: complex
    a: complex
    b: complex
    m: complex
    n: complex


def normalized_residuals(coeffs, roots) -> np.ndarray:
    """|P(x)| / ((1 + max|c_i|) (1 + |x|)^deg) for a monic polynomial."""
    coeffs = [complex(c) for c in coeffs]
    roots = np.asarray(roots, dtype=complex)
    value = np.ones_like(roots)
    for c in coeffs:
        value = value * roots + c
    scale = (1.0 + max(abs(c) for c in coeffs)) * (1.0 + np.abs(roots)) ** len(coeffs)
    return np.abs(value) / scale


def _cbrt(x: complex) -> complex:
    if x == 0:
        return 0j
    return cmath.exp(cmath.log(x) / 3.0)


def _quadratic(b: complex, c: complex) -> tuple[complex, complex]:
    """Roots of y^2 + b y + c without cancellation."""
    disc = cmath.sqrt(b * b - 4.0 * c)
    if (b.conjugate() * disc).real < 0:
        disc = -disc
    big = -(b + disc) / 2.0
    if big == 0:
        return 0j, 0j
    return big, c / big


def _polish(coeffs, x: complex, steps: int = 2) -> complex:
    """Newton refinement, keeping a step only if the residual drops."""
    deg = len(coeffs)

    def value_and_slope(z):
        v, d = 1 + 0j, 0j
        for c in coeffs:
            d = d * z + v
            v = v * z + c
        return v, d

    fx, dfx = value_and_slope(x)
    for _ in range(steps):
        if dfx == 0 or fx == 0:
            break
        cand = x - fx / dfx
        fc, dfc = value_and_slope(cand)
        if abs(fc) >= abs(fx) or abs(cand - x) > 1e-3 * (1.0 + abs(x)) * deg:
            break
        x, fx, dfx = cand, fc, dfc
    return x


def solve_cubic(c2, c1, c0) -> np.ndarray:
    """Three roots of z^3 + c2 z^2 + c1 z + c0 by Cardano's construction."""
    c2, c1, c0 = complex(c2), complex(c1), complex(c0)
    P = c1 - c2 * c2 / 3.0
    Q = 2.0 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
    disc = cmath.sqrt((Q / 2.0) ** 2 + (P / 3.0) ** 3)
    # pick the sign that avoids cancellation in -Q/2 +- disc
    s1, s2 = -Q / 2.0 + disc, -Q / 2.0 - disc
    w = s1 if abs(s1) >= abs(s2) else s2
    u = _cbrt(w)
    shift = c2 / 3.0
    if u == 0:
        roots = [-shift] * 3
    else:
        v = -P / (3.0 * u)
        roots = [
            _OMEGA3**k * u + _OMEGA3 ** (-k) * v - shift for k in range(3)
        ]
    coeffs = (c2, c1, c0)
    return np.array([_polish(coeffs, z) for z in roots], dtype=complex)


def resolvent(p, q, r) -> ResolventSolution:
    """Resolvent-cubic root and Ferrari factor constants.

    Of the three cubic roots, the one maximising |2 z0 - p| is used so that
    a = sqrt(2 z0 - p) stays away from zero.
    """
    p, q, r = complex(p), complex(q), complex(r)
    zs = solve_cubic(-p / 2.0, -r, r * p / 2.0 - q * q / 8.0)
    z0 = max(zs, key=lambda z: abs(2.0 * z - p))
    a = cmath.sqrt(2.0 * z0 - p)
    b = -q / (2.0 * a) if a != 0 else 0j
    return ResolventSolution(z0, a, b, z0 + b, z0 - b)


def _depressed_roots(p: complex, q: complex, r: complex) -> list[complex]:
    if p == 0 and q == 0 and r == 0:
        return [0j] * 4
    if q == 0:
        # biquadratic: two quadratics in y^2
        roots = []
        for s in _quadratic(p, r):
            y = cmath.sqrt(s)
            roots += [y, -y]
        return roots
    res = resolvent(p, q, r)
    if res.a == 0:
        raise NumericalError("degenerate Ferrari factorisation (a = 0 with q != 0)")
    return [*_quadratic(res.a, res.m), *_quadratic(-res.a, res.n)]


def companion_roots(A, B, C, D) -> np.ndarray:
    """Roots of l^4 + A l^3 + B l^2 + C l + D as companion-matrix eigenvalues."""
    comp = np.zeros((4, 4), dtype=complex)
    comp[0, :] = [-complex(A), -complex(B), -complex(C), -complex(D)]
    comp[1, 0] = comp[2, 1] = comp[3, 2] = 1.0
    if not np.all(np.isfinite(comp)):
        raise NumericalError(f"non-finite quartic coefficients {(A, B, C, D)}")
    try:
        return np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"companion eigen-solve did not converge for {(A, B, C, D)}") from exc


def _finish(coeffs, roots) -> RootSet:
    roots = np.array([_polish(coeffs, x) for x in roots], dtype=complex)
    res = normalized_residuals(coeffs, roots)
    if np.all(res <= RESIDUAL_TOL):
        return RootSet(roots, res, "radicals")
    roots = companion_roots(*coeffs)
    return RootSet(roots, normalized_residuals(coeffs, roots), "companion-fallback")


def solve_depressed_quartic(p, q, r) -> RootSet:
    """Roots of y^4 + p y^2 + q y + r."""
    p, q, r = complex(p), complex(q), complex(r)
    coeffs = (0j, p, q, r)
    try:
        roots = _depressed_roots(p, q, r)
    except NumericalError:
        roots = companion_roots(*coeffs)
        return RootSet(roots, normalized_residuals(coeffs, roots), "companion-fallback")
    return _finish(coeffs, roots)


def solve_quartic(qc: QuarticCoeffs) -> RootSet:
    """Roots of the full quartic via its depressed form, l = y - A/4."""
    coeffs = qc.monic
    try:
        ys = _depressed_roots(qc.p, qc.q, qc.r)
    except NumericalError:
        roots = companion_roots(*coeffs)
        return RootSet(roots, normalized_residuals(coeffs, roots), "companion-fallback")
    return _finish(coeffs, [y - qc.shift for y in ys])


def track_branches(prev: RootSet, nxt: RootSet) -> RootSet:
    """Reorder ``nxt`` so that root k continues root k of ``prev``.

    Exhaustive search over the 24 assignments minimising the summed
    distance; ties go to the lexicographically smallest (Re, Im) ordering.
    """
    prev_r = np.asarray(prev.roots if isinstance(prev, RootSet) else prev, dtype=complex)
    nxt_r = nxt.roots
    if len(prev_r) != 4 or len(nxt_r) != 4:
        raise ValueError("branch tracking needs two sets of 4 roots")
    dist = np.abs(nxt_r[:, None] - prev_r[None, :])
    best, best_key = None, None
    for perm in itertools.permutations(range(4)):
        cost = sum(dist[perm[k], k] for k in range(4))
        key = (cost, tuple((nxt_r[i].real, nxt_r[i].imag) for i in perm))
        if best_key is None or cost < best_key[0] - 1e-15 * (1 + cost) or (
            abs(cost - best_key[0]) <= 1e-15 * (1 + cost) and key[1] < best_key[1]
        ):
            best, best_key = perm, key
    return nxt.permuted(best)
