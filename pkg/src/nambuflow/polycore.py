"""Univariate polynomial tools: roots, symmetric functions, resultants and
discriminants, plus the reduced coefficients of the symmetric-constraint flow.

All coefficient sequences are stored in ascending powers.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class PolyError(ValueError):
    pass


@dataclass(frozen=True)
class UniPoly:
    """Real polynomial ``sum(coeffs[k] * X**k)``.

    Trailing zero coefficients are stripped on construction so that the
    leading coefficient is nonzero unless the polynomial is identically zero.
    """

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = [float(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> float:
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, x):
        acc = 0.0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "UniPoly":
        if self.degree == 0:
            return UniPoly([0.0])
        return UniPoly(k * c for k, c in enumerate(self.coeffs) if k > 0)

    def __mul__(self, other: "UniPoly") -> "UniPoly":
        return UniPoly(np.convolve(self.coeffs, other.coeffs))

    def __add__(self, other: "UniPoly") -> "UniPoly":
        a, b = self.coeffs, other.coeffs
        m = max(len(a), len(b))
        return UniPoly((a[k] if k < len(a) else 0.0) + (b[k] if k < len(b) else 0.0) for k in range(m))

    def __neg__(self) -> "UniPoly":
        return UniPoly(-c for c in self.coeffs)

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def divide_root(self, r: float) -> tuple["UniPoly", float]:
        """Synthetic division by ``X - r``; returns (quotient, remainder)."""
        desc = list(reversed(self.coeffs))
        out = [desc[0]]
        for c in desc[1:]:
            out.append(c + r * out[-1])
        rem = out.pop()
        return UniPoly(reversed(out)), rem

    def roots(self) -> np.ndarray:
        if self.degree < 1:
            return np.array([], dtype=complex)
        return np.roots(list(reversed(self.coeffs)))

    def __repr__(self) -> str:
        return f"UniPoly({list(self.coeffs)})"


@dataclass(frozen=True)
class SymConstants:
    """Constants ``x_1..x_n`` of the symmetric map; ``None`` marks the free one."""

    x: tuple[float | None, ...]

    def __init__(self, x: Sequence[float | None]):
        vals = tuple(None if v is None else float(v) for v in x)
        free = [k for k, v in enumerate(vals) if v is None]
        if len(free) != 1:
            raise PolyError(f"exactly one constant must be free, got {len(free)}")
        if not all(math.isfinite(v) for v in vals if v is not None):
            raise PolyError("fixed constants must be finite")
        object.__setattr__(self, "x", vals)

    @classmethod
    def free_last(cls, fixed: Sequence[float]) -> "SymConstants":
        return cls(list(fixed) + [None])

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def free_index(self) -> int:
        """1-based index of the free constant."""
        return self.x.index(None) + 1

    def get(self, k: int) -> float:
        """``x_k`` with the conventions ``x_0 = 1`` and ``x_k = 0`` for ``k > n``."""
        if k == 0:
            return 1.0
        if k > self.n:
            return 0.0
        v = self.x[k - 1]
        if v is None:
            raise PolyError(f"x_{k} is free")
        return v


def poly_from_roots(roots: Sequence[float]) -> UniPoly:
    """Monic polynomial with the given roots."""
    c = np.array([1.0])
    for r in roots:
        c = np.convolve(c, [-float(r), 1.0])
    return UniPoly(c)


def elementary_symmetric(values: Sequence[float]) -> np.ndarray:
    """``e_1..e_n`` of ``values`` from the expansion of ``prod(1 + X_k z)``."""
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for k, v in enumerate(values):
        e[1 : k + 2] = e[1 : k + 2] + v * e[: k + 1]
    return e[1:]


def sylvester_matrix(p: UniPoly, q: UniPoly) -> np.ndarray:
    m, n = p.degree, q.degree
    size = m + n
    S = np.zeros((size, size))
    pd = list(reversed(p.coeffs))
    qd = list(reversed(q.coeffs))
    for r in range(n):
        S[r, r : r + m + 1] = pd
    for r in range(m):
        S[n + r, r : r + n + 1] = qd
    return S


def resultant(p: UniPoly, q: UniPoly) -> float:
    """Sylvester resultant, ``lc(p)^deg q * lc(q)^deg p * prod(a_i - b_j)``."""
    if p.is_zero() or q.is_zero():
        raise PolyError("undefined resultant")
    if p.degree == 0:
        return p.lead ** q.degree
    if q.degree == 0:
        return q.lead ** p.degree
    return exact_det(sylvester_matrix(p, q))


def exact_det(S: np.ndarray) -> float:
    """Determinant of a float matrix, exact in rationals before the final rounding.

    Fraction-free Bareiss elimination; the Sylvester matrices here are at most
    about 12 x 12, and floating LU loses up to six digits on clustered roots.
    """
    A = [[Fraction(float(x)) for x in row] for row in S]
    n = len(A)
    sign, prev = 1, Fraction(1)
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0.0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev
        prev = A[k][k]
    return float(sign * A[n - 1][n - 1])


def discriminant(p: UniPoly) -> float:
    """Classical discriminant ``lc^(2d-2) * prod_{k<l} (r_k - r_l)^2``.

    For monic input this is exactly the squared root-difference product.
    """
    d = p.degree
    if d < 2:
        raise PolyError("discriminant needs degree >= 2")
    sign = -1.0 if (d * (d - 1) // 2) % 2 else 1.0
    return sign * resultant(p, p.derivative()) / p.lead


def root_product_discriminant(roots: Sequence[complex]) -> float:
    acc = 1.0 + 0j
    for k in range(len(roots)):
        for l in range(k + 1, len(roots)):
            acc *= (roots[k] - roots[l]) ** 2
    return acc.real


def poly_from_h(h: Sequence[float]) -> UniPoly:
    """``h_0 X^{d} - h_1 X^{d-1} + h_2 X^{d-2} - ...`` with ``d = len(h) - 1``."""
    d = len(h) - 1
    return UniPoly((-1) ** (d - k) * h[d - k] for k in range(d + 1))


def d_formula(n: int, h: Sequence[float]) -> float:
    """Explicit homogeneous expressions for the discriminant of ``P_{n-1}``, n = 3, 4, 5."""
    if n == 3:
        h0, h1, h2 = h[:3]
        return h1**2 - 4 * h0 * h2
    if n == 4:
        h0, h1, h2, h3 = h[:4]
        return (h1**2 * h2**2 - 4 * h0 * h2**3 - 4 * h1**3 * h3
                + 18 * h0 * h1 * h2 * h3 - 27 * h0**2 * h3**2)
    if n == 5:
        h0, h1, h2, h3, h4 = h[:5]
        return (h1**2 * h2**2 * h3**2 - 4 * h1**2 * h2**3 * h4 - 4 * h1**3 * h3**3
                + 18 * h1**3 * h2 * h3 * h4
                - 27 * h1**4 * h4**2 - 4 * h0 * h2**3 * h3**2 + 18 * h0 * h1 * h2 * h3**3
                + 16 * h0 * h2**4 * h4
                - 80 * h0 * h1 * h2**2 * h3 * h4 + 144 * h0 * h1**2 * h2 * h4**2
                - 6 * h0 * h1**2 * h3**2 * h4
                + 144 * h0**2 * h2 * h3**2 * h4 - 128 * h0**2 * h2**2 * h4**2
                - 192 * h0**2 * h1 * h3 * h4**2
                - 27 * h0**2 * h3**4 + 256 * h0**3 * h4**3)
    raise PolyError(f"no printed formula for n={n}")


def h_from_x(x: SymConstants | Sequence[float], W: float) -> np.ndarray:
    """``h_1..h_{n-1}`` with ``h_k = x_k - x_{k-1} W + ... + (-W)^k``.

    Accepts either :class:`SymConstants` with ``x_n`` free, or the plain
    sequence ``x_1..x_{n-1}``.
    """
    if isinstance(x, SymConstants):
        fixed = [x.get(k) for k in range(1, x.n)]
    else:
        fixed = [float(v) for v in x]
    h = np.empty(len(fixed))
    prev = 1.0
    for k, xk in enumerate(fixed):
        prev = xk - W * prev
        h[k] = prev
    return h


def reduced_coefficients(x: SymConstants, W: float) -> np.ndarray:
    """``h'_0..h'_{n-1}``: symmetric functions of the coordinates other than ``W = X_i``.

    Uses ``x_k = h'_k + W h'_{k-1}`` for every fixed ``k``, with ``h'_0 = 1``
    and ``h'_n = 0``: forward below the free index, backward above it.
    """
    n, i = x.n, x.free_index
    h = np.zeros(n + 1)
    h[0] = 1.0
    for k in range(1, i):
        h[k] = x.get(k) - W * h[k - 1]
    for k in range(n - 1, i - 1, -1):
        h[k] = (x.get(k + 1) - h[k + 1]) / W
    return h[:n]


def w_denominator_power(n: int, i: int) -> int:
    """Power of ``W`` cleared from the free-``x_i`` discriminant (0 when i = n)."""
    return 0 if i == n else n * (n - i) - 2


def w_degree_bound(n: int, i: int) -> int:
    return (n - 1) * (n - 2) if i == n else n * (n - 2)


def _disc_at(x: SymConstants, W: float) -> float:
    n, i = x.n, x.free_index
    if i == n:
        h = np.concatenate([[1.0], h_from_x(x, W)])
        return discriminant(poly_from_h(h)) if n >= 3 else 1.0
    h = reduced_coefficients(x, W)
    return discriminant(poly_from_h(h)) * W ** w_denominator_power(n, i)


def chebyshev_nodes(count: int, lo: float = -2.0, hi: float = 2.0) -> np.ndarray:
    k = np.arange(count)
    z = np.cos((2 * k + 1) * np.pi / (2 * count))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * z


def newton_interpolate(nodes: Sequence[float], values: Sequence[float]) -> UniPoly:
    """Interpolating polynomial via divided differences, expanded to monomials."""
    xs = np.asarray(nodes, dtype=float)
    coef = np.array(values, dtype=float)
    m = len(xs)
    for j in range(1, m):
        coef[j:] = (coef[j:] - coef[j - 1 : -1]) / (xs[j:] - xs[: m - j])
    poly = UniPoly([coef[-1]])
    for j in range(m - 2, -1, -1):
        poly = poly * UniPoly([-xs[j], 1.0]) + UniPoly([coef[j]])
    return poly


def discriminant_in_W(x: SymConstants, free_index: int | None = None, *,
                      degree: int | None = None, rtol: float = 1e-9) -> UniPoly:
    """Discriminant of the remaining coordinates' polynomial as a polynomial in ``W``.

    With ``x_n`` free this is ``D_{n-1}(W)`` of degree ``(n-1)(n-2)``.  With
    another ``x_i`` free the discriminant is rational in ``W``; the returned
    polynomial is ``W**w_denominator_power(n, i)`` times it, of degree at most
    ``n(n-2)``.  ``degree`` overrides the bound; if three extra samples
    disagree with the interpolant, the bound was wrong and PolyError is raised.
    """
    if free_index is not None and free_index != x.free_index:
        raise PolyError(f"free_index {free_index} does not match constants (free x_{x.free_index})")
    n, i = x.n, x.free_index
    if n < 3:
        raise PolyError("need n >= 3 for a discriminant in W")
    bound = w_degree_bound(n, i) if degree is None else degree
    nodes = chebyshev_nodes(bound + 1)
    poly = newton_interpolate(nodes, [_disc_at(x, w) for w in nodes])
    check = np.array([-1.7, 0.61, 1.93])
    want = np.array([_disc_at(x, w) for w in check])
    got = np.array([poly(w) for w in check])
    scale = max(1.0, float(np.max(np.abs(want))), float(np.max(np.abs(poly.coeffs))))
    if np.max(np.abs(got - want)) > rtol * scale:
        raise PolyError("degree bound violated")
    return _clean(poly, scale * 1e-13)


def _clean(p: UniPoly, tol: float) -> UniPoly:
    c = list(p.coeffs)
    while len(c) > 1 and abs(c[-1]) <= tol:
        c.pop()
    return UniPoly(c)


def cubic_roots(p: UniPoly) -> list[complex]:
    """Roots of a cubic by Cardano (trigonometric form for three real roots),
    each polished with one Newton step."""
    if p.degree != 3:
        raise PolyError("cubic_roots needs degree 3")
    d, c, b, a = p.coeffs
    b, c, d = b / a, c / a, d / a
    # depressed t^3 + P t + Q with X = t - b/3
    shift = b / 3.0
    P = c - b * b / 3.0
    Q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (Q / 2.0) ** 2 + (P / 3.0) ** 3
    if P < 0 and disc <= 0:
        r = 2.0 * math.sqrt(-P / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * Q / (P * r)))
        phi = math.acos(arg) / 3.0
        ts = [r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
        roots: list[complex] = [complex(t - shift) for t in ts]
    else:
        sq = cmath.sqrt(disc)
        u = _cbrt(-Q / 2.0 + sq)
        v = -P / (3.0 * u) if u != 0 else _cbrt(-Q / 2.0 - sq)
        w = complex(-0.5, math.sqrt(3.0) / 2.0)
        roots = [u + v - shift, w * u + w.conjugate() * v - shift, w.conjugate() * u + w * v - shift]
        roots = [complex(z.real, 0.0) if abs(z.imag) <= 1e-14 * max(1.0, abs(z)) else z for z in roots]
    dp = p.derivative()
    out = []
    for z in roots:
        f, g = _ceval(p, z), _ceval(dp, z)
        if g != 0:
            z = z - f / g
        out.append(z)
    return out


def _cbrt(z: complex) -> complex:
    if isinstance(z, complex) and z.imag == 0.0:
        z = z.real
    if isinstance(z, float):
        return complex(math.copysign(abs(z) ** (1.0 / 3.0), z))
    return z ** (1.0 / 3.0)


def _ceval(p: UniPoly, z: complex) -> complex:
    acc = 0j
    for c in reversed(p.coeffs):
        acc = acc * z + c
    return acc
