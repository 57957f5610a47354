"""Discrete-time periodic Toda map ``M -> U^{-1} M U`` and its spectral invariants."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares


class TodaError(ValueError):
    pass


@dataclass(frozen=True)
class TodaState:
    i: np.ndarray
    v: np.ndarray

    def __init__(self, i: Sequence[float], v: Sequence[float]):
        i = np.array(i, dtype=float)
        v = np.array(v, dtype=float)
        if i.shape != v.shape or i.ndim != 1 or len(i) < 3:
            raise TodaError("i and v must be vectors of equal length m >= 3")
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(v))):
            raise TodaError("non-finite state")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "v", v)

    @property
    def m(self) -> int:
        return len(self.i)

    @property
    def c(self) -> float:
        """Value of the product constraint ``v_1 ... v_m``."""
        return float(np.prod(self.v))

    @property
    def det_U(self) -> float:
        return float(np.prod(self.i) - (-1) ** self.m)

    def to_json(self) -> dict:
        return {"i": self.i.tolist(), "v": self.v.tolist()}


def build_M(s: TodaState) -> np.ndarray:
    m = s.m
    M = np.zeros((m, m))
    for j in range(m):
        M[j, j] = s.i[j] + s.v[j]
        if j + 1 < m:
            M[j, j + 1] = 1.0
            M[j + 1, j] = s.i[j + 1] * s.v[j]
    M[0, m - 1] = s.i[0] * s.v[m - 1]
    M[m - 1, 0] = 1.0
    return M


def build_U(s: TodaState) -> np.ndarray:
    m = s.m
    U = np.diag(s.i)
    for j in range(m - 1):
        U[j, j + 1] = 1.0
    U[m - 1, 0] = 1.0
    return U


def step(M: np.ndarray, U: np.ndarray) -> np.ndarray:
    """``U^{-1} M U`` as the solution of ``U M' = M U``."""
    if abs(np.linalg.det(U)) <= 1e-12:
        raise TodaError("singular U")
    return np.linalg.solve(U, M @ U)


def structure_residual(M: np.ndarray) -> float:
    """Deviation of the entries fixed by the Toda form (superdiagonal and ``M_m1`` equal 1)."""
    m = len(M)
    fixed = [M[j, j + 1] for j in range(m - 1)] + [M[m - 1, 0]]
    return float(max(abs(x - 1.0) for x in fixed))


def invariants_from_matrix(M: np.ndarray) -> np.ndarray:
    """``x_k`` = sum of k x k principal minors, by the Faddeev-LeVerrier recursion."""
    M = np.asarray(M, dtype=float)
    m = len(M)
    x = np.empty(m)
    B = np.eye(m)
    for k in range(1, m + 1):
        MB = M @ B
        ck = np.trace(MB) / k
        x[k - 1] = ck * (-1) ** (k + 1)
        B = MB - ck * np.eye(m)
    return x


def invariants_from_state(s: TodaState) -> np.ndarray:
    """Three-point closed forms of the invariants in terms of ``(i, v)``."""
    if s.m != 3:
        raise TodaError("printed formulas are m=3 only")
    i1, i2, i3 = s.i
    v1, v2, v3 = s.v
    x1 = i1 + i2 + i3 + v1 + v2 + v3
    x2 = (i1 * i2 + i1 * i3 + i2 * i3 + i1 * v2 + i2 * v3 + i3 * v1
          + v1 * v2 + v1 * v3 + v2 * v3)
    x3 = (1 + i1 * i2 * i3) * (1 + v1 * v2 * v3)
    return np.array([x1, x2, x3])


def _state_jacobian(i, v) -> np.ndarray:
    i1, i2, i3 = i
    v1, v2, v3 = v
    P, Q = 1 + i1 * i2 * i3, 1 + v1 * v2 * v3
    return np.array([
        [1, 1, 1, 1, 1, 1],
        [i2 + i3 + v2, i1 + i3 + v3, i1 + i2 + v1, i3 + v2 + v3, i1 + v1 + v3, i2 + v1 + v2],
        [i2 * i3 * Q, i1 * i3 * Q, i1 * i2 * Q, v2 * v3 * P, v1 * v3 * P, v1 * v2 * P],
        [0, 0, 0, v2 * v3, v1 * v3, v1 * v2],
    ], dtype=float)


Gauge = Callable[[np.ndarray, np.ndarray], float]


def pin_gauge(component: str, value: float) -> Gauge:
    """Gauge condition fixing one of ``i1..i3``, ``v1..v3`` to ``value``."""
    name, idx = component[0], int(component[1:]) - 1
    if name not in "iv" or not 0 <= idx < 3:
        raise TodaError(f"unknown component {component!r}")
    if name == "i":
        return lambda i, v: i[idx] - value
    return lambda i, v: v[idx] - value


def reconstruct(lam: Sequence[float], c: float, X: Sequence[float] | None,
                gauge: Sequence[Gauge], guess: TodaState, *, tol: float = 1e-10,
                max_iter: int = 100, consistency_tol: float = 1e-8) -> TodaState:
    """Damped Newton for ``(i, v)`` with spectral invariants ``e_k(lam)``,
    ``v1 v2 v3 = c`` and two caller-supplied gauge conditions.

    When ``X`` is given, its first two symmetric functions must equal those of
    ``lam`` (the Nambu Hamiltonians are the spectral constants).
    """
    if len(gauge) != 2:
        raise TodaError("need exactly two gauge conditions")
    lam = np.asarray(lam, dtype=float)
    target = np.array([lam.sum(), lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2], lam.prod()])
    if X is not None:
        X = np.asarray(X, dtype=float)
        eX = np.array([X.sum(), X[0] * X[1] + X[0] * X[2] + X[1] * X[2]])
        if np.max(np.abs(eX - target[:2])) > consistency_tol * max(1.0, float(np.max(np.abs(target[:2])))):
            raise TodaError("Nambu Hamiltonians of X do not match the spectral constants")

    def residual(z):
        i, v = z[:3], z[3:]
        inv = invariants_from_state(TodaState(i, v))
        return np.concatenate([inv - target, [np.prod(v) - c], [g(i, v) for g in gauge]])

    def jac(z):
        i, v = z[:3], z[3:]
        J = np.empty((6, 6))
        J[:4] = _state_jacobian(i, v)
        for r, g in enumerate(gauge):
            for k in range(6):
                h = 1e-7 * max(1.0, abs(z[k]))
                zp, zm = z.copy(), z.copy()
                zp[k] += h
                zm[k] -= h
                J[4 + r, k] = (g(zp[:3], zp[3:]) - g(zm[:3], zm[3:])) / (2 * h)
        return J

    z = np.concatenate([guess.i, guess.v]).astype(float)
    r = residual(z)
    norm = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return TodaState(z[:3], z[3:])
        J = jac(z)
        if not np.all(np.isfinite(J)) or abs(np.linalg.det(J)) < 1e-14 * max(1.0, np.max(np.abs(J))) ** 6:
            raise TodaError("singular Jacobian at Newton iterate")
        dz = np.linalg.solve(J, r)
        lam_step = 1.0
        while lam_step > 1e-6:
            z_new = z - lam_step * dz
            r_new = residual(z_new)
            n_new = float(np.linalg.norm(r_new))
            if np.all(np.isfinite(r_new)) and n_new < (1 - 1e-4 * lam_step) * norm:
                break
            lam_step *= 0.5
        z, r, norm = z_new, r_new, n_new
    if np.max(np.abs(r)) < tol:
        return TodaState(z[:3], z[3:])
    raise TodaError(f"Newton did not converge: residual {np.max(np.abs(r)):.3e}")


def constraint_residual(s: TodaState, lam: Sequence[float], c: float, gauge: Sequence[Gauge]) -> float:
    lam = np.asarray(lam, dtype=float)
    target = np.array([lam.sum(), lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2], lam.prod()])
    r = np.concatenate([invariants_from_state(s) - target, [s.c - c], [g(s.i, s.v) for g in gauge]])
    return float(np.max(np.abs(r)))


def random_state(rng: np.random.Generator, m: int = 3, c: float = 1.0) -> TodaState:
    """Entries drawn from [0.5, 2]; v rescaled so that ``prod(v) = c``."""
    i = rng.uniform(0.5, 2.0, m)
    v = rng.uniform(0.5, 2.0, m)
    if c > 0:
        v = v * (c / np.prod(v)) ** (1.0 / m)
    return TodaState(i, v)


def factor_state(M: np.ndarray, c: float, guess: TodaState, *, tol: float = 1e-10) -> TodaState:
    """Recover ``(i, v)`` with ``build_M(i, v) = M`` and ``prod(v) = c``.

    The cyclic factorization has finitely many solutions; the product
    constraint picks the branch, and ``guess`` (normally the previous state)
    keeps the iteration on it.
    """
    m = len(M)
    d = np.diag(M)
    sub = np.array([M[j + 1, j] for j in range(m - 1)] + [M[0, m - 1]])

    def res(z):
        i, v = z[:m], z[m:]
        return np.concatenate([i + v - d, np.roll(i, -1) * v - sub, [np.prod(v) - c]])

    def jac(z):
        i, v = z[:m], z[m:]
        J = np.zeros((2 * m + 1, 2 * m))
        J[:m, :m] = J[:m, m:] = np.eye(m)
        for j in range(m):
            J[m + j, (j + 1) % m] = v[j]
            J[m + j, m + j] = i[(j + 1) % m]
        J[2 * m, m:] = [np.prod(np.delete(v, k)) for k in range(m)]
        return J

    z = least_squares(res, np.concatenate([guess.i, guess.v]), jac=jac, method="lm",
                      xtol=1e-15, ftol=1e-15, gtol=1e-15).x
    # Gauss-Newton polish: the system is consistent, so this converges quadratically
    for _ in range(3):
        z = z - np.linalg.lstsq(jac(z), res(z), rcond=None)[0]
    err = float(np.max(np.abs(res(z))))
    if not err < tol * max(1.0, float(np.max(np.abs(M)))):
        raise TodaError(f"structured refactorization failed: residual {err:.3e}")
    return TodaState(z[:m], z[m:])


@dataclass
class TodaRun:
    matrices: list
    states: list
    invariants: np.ndarray
    structure: np.ndarray


def iterate(s: TodaState, steps: int, c: float | None = None) -> TodaRun:
    """Apply the map ``steps`` times, rebuilding U from the refactored state each step."""
    if steps < 0:
        raise TodaError("steps must be >= 0")
    c = s.c if c is None else c
    M = build_M(s)
    mats, states = [M], [s]
    structure = [structure_residual(M)]
    for _ in range(steps):
        M = step(build_M(s), build_U(s))
        structure.append(structure_residual(M))
        s = factor_state(M, c, s)
        mats.append(M)
        states.append(s)
    inv = np.array([invariants_from_matrix(A) for A in mats])
    return TodaRun(mats, states, inv, np.array(structure))


def continuum_variables(a: Sequence[float], b: Sequence[float]) -> TodaState:
    """``(v_j, i_j) = (2 a_j, 1 - b_j)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return TodaState(1.0 - b, 2.0 * a)


__all__ = [
    "TodaState", "TodaError", "build_M", "build_U", "step", "structure_residual",
    "invariants_from_matrix", "invariants_from_state", "reconstruct", "pin_gauge",
    "constraint_residual", "random_state", "iterate", "factor_state", "TodaRun", "continuum_variables",
]
