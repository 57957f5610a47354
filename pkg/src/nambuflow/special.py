"""Jacobi elliptic functions, closed-form n=3 solutions, and time integrals
``t = ∫ dW / sqrt(D(W))`` with their inversion."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _quad
from scipy.special import ellipkinc

from . import _dopri
from .flows import nambu_rhs, symmetric_flow_free_i
from .integrate import IntegratorConfig, integrate
from .polycore import SymConstants, UniPoly, cubic_roots, discriminant_in_W


class SpecialError(ValueError):
    pass


@dataclass(frozen=True)
class JacobiTriple:
    sn: float
    cn: float
    dn: float


def _jacobi_agm(u: float, m: float) -> JacobiTriple:
    # descending Landen / AGM, 0 < m < 1
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > 1e-16 * a[-1] and len(a) < 40:
        an, bn = 0.5 * (a[-1] + b), math.sqrt(a[-1] * b)
        c.append(0.5 * (a[-1] - b))
        a.append(an)
        b = bn
    N = len(a) - 1
    phi = (2.0**N) * a[N] * u
    prev = phi
    for k in range(N, 0, -1):
        prev = phi
        phi = 0.5 * (phi + math.asin(c[k] * math.sin(phi) / a[k]))
    sn, cn = math.sin(phi), math.cos(phi)
    dn = cn / math.cos(prev - phi) if N > 0 else math.sqrt(1.0 - m * sn * sn)
    return JacobiTriple(sn, cn, dn)


def jacobi(u: float, m: float) -> JacobiTriple:
    """``(sn, cn, dn)(u | m)`` for real u and parameter ``m = k^2 <= 1``."""
    u, m = float(u), float(m)
    if m > 1.0:
        raise SpecialError("m > 1: use reciprocal-parameter transform externally")
    if m == 0.0:
        return JacobiTriple(math.sin(u), math.cos(u), 1.0)
    if m == 1.0:
        s = 1.0 / math.cosh(u)
        return JacobiTriple(math.tanh(u), s, s)
    if m < 0.0:
        # sn(u|m) = sd(v|mu)/sqrt(1-m), cn = cd, dn = nd with mu = -m/(1-m), v = u sqrt(1-m)
        r = math.sqrt(1.0 - m)
        j = _jacobi_agm(u * r, -m / (1.0 - m))
        return JacobiTriple(j.sn / (r * j.dn), j.cn / j.dn, 1.0 / j.dn)
    return _jacobi_agm(u, m)


def circle_solution(x1: float, x2: float, t: float) -> np.ndarray:
    """Closed-form symmetric n=3 orbit with ``e_1 = x1``, ``e_2 = x2``."""
    disc = x1 * x1 - 3.0 * x2
    if disc < 0:
        raise SpecialError("no real circle: x1^2 < 3 x2")
    r = 2.0 * math.sqrt(disc)
    th = math.sqrt(3.0) * t
    return np.array([(x1 + r * math.cos(th + ph)) / 3.0 for ph in (0.0, -2 * math.pi / 3, 2 * math.pi / 3)])


def diagonal_solution_n3(x1: float, x2: float, t: float) -> np.ndarray:
    """``(sqrt(2(x1-x2)) dn, sqrt(2 x2) cn, sqrt(2 x2) sn)`` at ``u = sqrt(2(x1-x2)) t``,
    with the negative parameter ``m = x2/(x2-x1)``."""
    if not x1 > x2 > 0:
        raise SpecialError("diagonal closed form needs x1 > x2 > 0")
    a = math.sqrt(2.0 * (x1 - x2))
    b = math.sqrt(2.0 * x2)
    j = jacobi(a * t, x2 / (x2 - x1))
    return np.array([a * j.dn, b * j.cn, b * j.sn])


@dataclass(frozen=True)
class X2FreeCurve:
    """Real roots ``alpha >= beta >= gamma`` of ``X^3 - 2 x1 X^2 + x1^2 X - 4 x3``."""

    x1: float
    x3: float
    alpha: float
    beta: float
    gamma: float

    @property
    def m(self) -> float:
        return self.alpha * (self.beta - self.gamma) / (self.beta * (self.alpha - self.gamma))

    @property
    def rate(self) -> float:
        return 0.5 * math.sqrt((self.alpha - self.gamma) * self.beta)


def x2_free_curve(x1: float, x3: float) -> X2FreeCurve:
    roots = cubic_roots(UniPoly([-4.0 * x3, x1 * x1, -2.0 * x1, 1.0]))
    if any(abs(z.imag) > 1e-9 * max(1.0, abs(z)) for z in roots):
        raise SpecialError(f"cubic has complex roots for x1={x1}, x3={x3}")
    a, b, g = sorted((z.real for z in roots), reverse=True)
    if b <= 0 or a == g:
        raise SpecialError(f"degenerate roots alpha={a}, beta={b}, gamma={g}")
    curve = X2FreeCurve(x1, x3, a, b, g)
    if not 0.0 <= curve.m < 1.0:
        raise SpecialError(f"modulus outside [0, 1): m={curve.m}")
    return curve


def elliptic_solution_x2_free(x1: float, x3: float, t: float) -> np.ndarray:
    """Elliptic orbit with ``e_1 = x1`` and ``e_3 = x3`` fixed.

    ``X_1 = alpha gamma sn^2 / (gamma - alpha cn^2)`` and
    ``X_{2,3} = (x1 - X_1)/2 ± R``; the halving is what makes ``e_1 = x1``.
    ``t = 0`` is a pole (``sn = 0``) and raises.
    """
    cv = x2_free_curve(x1, x3)
    j = jacobi(cv.rate * t, cv.m)
    if abs(j.sn) < 1e-300:
        raise SpecialError("pole of the parametrization (sn = 0)")
    den = cv.gamma - cv.alpha * j.cn**2
    X1 = cv.alpha * cv.gamma * j.sn**2 / den
    R = (cv.alpha - cv.gamma) ** 1.5 * math.sqrt(cv.beta) * j.cn * j.dn / (2.0 * den * j.sn)
    half = 0.5 * (x1 - X1)
    return np.array([X1, half + R, half - R])


def x2_free_pole_time(x1: float, x3: float) -> float:
    """First ``t > 0`` where ``gamma = alpha cn^2`` and the orbit escapes to infinity."""
    cv = x2_free_curve(x1, x3)
    phi = math.acos(math.sqrt(cv.gamma / cv.alpha))
    return float(ellipkinc(phi, cv.m)) / cv.rate


# ---------------------------------------------------------------------------
# hyper-elliptic quadrature


@dataclass(frozen=True)
class HyperEllipticProblem:
    D: UniPoly
    W0: float
    branch_sign: float = 1.0


def _real_roots(D: UniPoly) -> list[float]:
    out = []
    dD = D.derivative()
    for z in D.roots():
        if abs(z.imag) > 1e-7 * max(1.0, abs(z)):
            continue
        r = z.real
        for _ in range(3):
            g = dD(r)
            if g == 0:
                break
            r -= D(r) / g
        out.append(r)
    return sorted(out)


def _is_double(D: UniPoly, r: float) -> bool:
    scale = max(abs(c) for c in D.coeffs) * max(1.0, abs(r)) ** D.degree
    return abs(D.derivative()(r)) <= 1e-8 * scale


def _segment(D: UniPoly, a: float, b: float, weight: Callable[[float], float] | None,
             roots: Sequence[float]) -> float:
    """``∫_a^b weight(W) dW / sqrt(D(W))`` for a < b, D > 0 inside.

    Near a root r of D at or just beyond an endpoint, ``W = r ± s^2`` turns
    the inverse square root into the smooth ``2 / sqrt(±D(W)/(W - r))``.
    """
    w = weight or (lambda W: 1.0)
    span = b - a
    mid = 0.5 * (a + b)
    near = 0.25 * span
    left = next((r for r in roots if a - near <= r <= a + 1e-12 * max(1.0, abs(a))), None)
    right = next((r for r in roots if b - 1e-12 * max(1.0, abs(b)) <= r <= b + near), None)
    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=200)
    total = 0.0
    if left is not None:
        if _is_double(D, left):
            raise SpecialError("non-integrable singularity: double root at path end")
        Q, _ = D.divide_root(left)
        lo, hi = math.sqrt(max(a - left, 0.0)), math.sqrt(mid - left)
        total += _quad.quad(lambda s: 2.0 * w(left + s * s) / math.sqrt(Q(left + s * s)), lo, hi, **opts)[0]
    else:
        total += _quad.quad(lambda W: w(W) / math.sqrt(D(W)), a, mid, **opts)[0]
    if right is not None:
        if _is_double(D, right):
            raise SpecialError("non-integrable singularity: double root at path end")
        Q, _ = D.divide_root(right)
        lo, hi = math.sqrt(max(right - b, 0.0)), math.sqrt(right - mid)
        total += _quad.quad(lambda s: 2.0 * w(right - s * s) / math.sqrt(-Q(right - s * s)), lo, hi, **opts)[0]
    else:
        total += _quad.quad(lambda W: w(W) / math.sqrt(D(W)), mid, b, **opts)[0]
    return total


def branch_integral(D: UniPoly, W0: float, W: float, weight: Callable[[float], float] | None = None) -> float:
    """Signed ``∫_{W0}^{W} weight dW / sqrt(D)`` along a path free of interior roots."""
    if W == W0:
        return 0.0
    a, b = min(W0, W), max(W0, W)
    roots = _real_roots(D)
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    for r in roots:
        if a + tol < r < b - tol:
            if _is_double(D, r):
                raise SpecialError("non-integrable singularity: double root on path")
            raise SpecialError(f"path crosses a root of D at {r}")
    val = _segment(D, a, b, weight, roots)
    return val if W > W0 else -val


def hyperelliptic_time(prob: HyperEllipticProblem, W: float) -> float:
    """``t = branch_sign * ∫_{W0}^{W} dW / sqrt(D(W))`` on one branch."""
    return prob.branch_sign * branch_integral(prob.D, prob.W0, W)


@dataclass
class Inversion:
    W: float
    branch_sign: float
    turning_points: list[float] = field(default_factory=list)
    turning_times: list[float] = field(default_factory=list)


def invert_hyperelliptic_path(prob: HyperEllipticProblem, t: float, *, rtol: float = 1e-13,
                              atol: float = 1e-15) -> Inversion:
    """Solve ``(dW/dt)^2 = D(W)`` from ``W0`` on ``prob.branch_sign`` for time t.

    Propagates ``W'' = D'(W)/2`` with ``W' = ±sqrt(D)``, which is smooth
    through simple roots of D; every sign change of ``W'`` is a turning point,
    located by bisection plus one Newton step on the dense output.
    """
    D, dD = prob.D, prob.D.derivative()
    W0 = float(prob.W0)
    D0 = D(W0)
    if D0 < -1e-14 * max(1.0, max(abs(c) for c in D.coeffs)):
        raise SpecialError("D(W0) < 0: no real motion")
    P0 = prob.branch_sign * math.sqrt(max(D0, 0.0))
    if P0 == 0.0:
        if _is_double(D, W0) or dD(W0) == 0.0:
            raise SpecialError("stall at a double root of D")
    if t == 0.0:
        return Inversion(W0, prob.branch_sign)
    fun = lambda s, y: np.array([y[1], 0.5 * dD(y[0])])
    st = _dopri.DormandPrince(fun, 0.0, [W0, P0], float(t), rtol, atol)
    out = Inversion(W0, prob.branch_sign)
    while not st.finished:
        status = st.step()
        if status != _dopri.STATUS_OK:
            raise SpecialError(f"propagation failed (status {status})")
        p_old, p_new = st.y_old[1], st.y[1]
        if p_old * p_new < 0:
            lo, hi = st.t_old, st.t
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if st.dense(mid)[1] * p_old > 0:
                    lo = mid
                else:
                    hi = mid
            tc = 0.5 * (lo + hi)
            Wc, Pc = st.dense(tc)
            acc = 0.5 * dD(Wc)
            if acc != 0:
                tc -= Pc / acc
            r = Wc
            for _ in range(3):
                g = dD(r)
                if g != 0:
                    r -= D(r) / g
            out.turning_points.append(r)
            out.turning_times.append(tc)
    out.W = float(st.y[0])
    if st.y[1] != 0.0:
        out.branch_sign = math.copysign(1.0, st.y[1])
    return out


def invert_hyperelliptic(prob: HyperEllipticProblem, t: float) -> float:
    return invert_hyperelliptic_path(prob, t).W


def path_time(prob: HyperEllipticProblem, inv: Inversion) -> float:
    """Elapsed time along ``W0 -> turning points -> W``, summed segment by segment."""
    pts = [prob.W0] + list(inv.turning_points) + [inv.W]
    total = sum(abs(branch_integral(prob.D, a, b)) for a, b in zip(pts[:-1], pts[1:]))
    return total


# ---------------------------------------------------------------------------
# free x_i


def _sym_with_free(x: Sequence[float], n: int, i: int) -> SymConstants:
    vals: list[float | None] = [float(v) for v in x]
    if len(vals) == n:
        vals[i - 1] = None
    else:
        vals.insert(i - 1, None)
    return SymConstants(vals)


def free_xi_time(n: int, i: int, x: Sequence[float], W: float, W0: float) -> float:
    """``(-1)^(n-i) ∫_{W0}^{W} dW / (W^n sqrt(D_{n-1,i}(W)))`` taken literally,
    with ``D_{n-1,i}`` the polynomial from ``discriminant_in_W``.

    ``x`` lists the n-1 fixed constants (or all n, the i-th ignored).
    """
    if not 1 <= i <= n:
        raise SpecialError("free index out of range")
    if min(W0, W) <= 0.0 <= max(W0, W):
        raise SpecialError("W = 0 on the integration path")
    N = discriminant_in_W(_sym_with_free(x, n, i))
    if N(0.5 * (W0 + W)) < 0:
        raise SpecialError("D_{n-1,i} < 0 on the path: integrand is not real")
    val = branch_integral(N, W0, W, weight=lambda w: w ** (-n))
    return (-1) ** (n - i) * val


def flow_time(n: int, i: int, x: Sequence[float], W: float, W0: float, sign: float) -> float:
    """Time from the Nambu flow itself: ``∫ dW / F`` with ``F^2 = N(W) W^p``,
    ``p = 2 - (n-2)(n-i)`` (p = 0 for i = n), and the branch ``sign`` of F."""
    if min(W0, W) <= 0.0 <= max(W0, W) and i != n:
        raise SpecialError("W = 0 on the integration path")
    N = discriminant_in_W(_sym_with_free(x, n, i))
    p = 0 if i == n else 2 - (n - 2) * (n - i)
    mid = 0.5 * (W0 + W)
    sigma = 1.0 if mid**p >= 0 else -1.0
    weight = (lambda w: 1.0) if p == 0 else (lambda w: (sigma * w**p) ** -0.5)
    return sign * branch_integral(N * UniPoly([sigma]), W0, W, weight=weight)


@dataclass
class FreeXiCheck:
    t: float
    W0: float
    W: float
    closed_form: float
    from_flow: float

    @property
    def discrepancy(self) -> float:
        return self.closed_form - self.t

    @property
    def flow_error(self) -> float:
        return self.from_flow - self.t


def free_xi_check(n: int, i: int, X0, t: float) -> FreeXiCheck:
    """Integrate the free-``x_i`` flow from ``X0`` for time t and compare t with
    the closed-form integral and with the flow-consistent one."""
    X0 = np.asarray(X0, dtype=float)
    spec = symmetric_flow_free_i(n, None, i)
    x = list(spec.invariants(X0))
    traj = integrate(spec, X0, (0.0, t), IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14), samples=64)
    W = traj.states[:, i - 1]
    if np.any(np.diff(W) * np.sign(W[-1] - W[0]) < 0):
        raise SpecialError("W is not monotone over the requested time; choose a shorter t")
    sign = math.copysign(1.0, nambu_rhs(spec, X0)[i - 1])
    closed = free_xi_time(n, i, x, W[-1], W[0])
    consistent = flow_time(n, i, x, W[-1], W[0], sign)
    return FreeXiCheck(t, float(W[0]), float(W[-1]), closed, consistent)
