"""Pure-Python kernels: polynomial Nambu right-hand side and a Dormand-Prince
5(4) stepper with PI step control and 4th-order dense output.

``_kernels.pyx`` compiles ``poly_rhs`` and ``dopri_poly`` with the same
signatures and the same arithmetic order; ``_backend`` picks one at import.
"""
from __future__ import annotations

import math

import numpy as np

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75


def _det_lu(a: list[list[float]]) -> float:
    """Determinant of a small square matrix by Gaussian elimination with partial pivoting."""
    m = len(a)
    if m == 0:
        return 1.0
    a = [row[:] for row in a]
    det = 1.0
    for k in range(m):
        p = max(range(k, m), key=lambda r: abs(a[r][k]))
        if a[p][k] == 0.0:
            return 0.0
        if p != k:
            a[k], a[p] = a[p], a[k]
            det = -det
        piv = a[k][k]
        det *= piv
        for r in range(k + 1, m):
            f = a[r][k] / piv
            if f != 0.0:
                ar, ak = a[r], a[k]
                for c in range(k + 1, m):
                    ar[c] -= f * ak[c]
    return det


def gradient_matrix(exps, coefs, owner, X) -> list[list[float]]:
    n = len(X)
    G = [[0.0] * n for _ in range(n - 1)]
    for t in range(len(coefs)):
        e = exps[t]
        row = G[owner[t]]
        for v in range(n):
            ev = e[v]
            if ev == 0:
                continue
            val = coefs[t] * ev
            for w in range(n):
                ew = e[w] - 1 if w == v else e[w]
                if ew:
                    val *= X[w] ** ew
            row[v] += val
    return G


def poly_rhs(exps, coefs, owner, X) -> np.ndarray:
    """``dX_j/dt = (-1)^(n-j) * det(gradient matrix without column j)``, j counted from 1."""
    X = [float(v) for v in X]
    n = len(X)
    G = gradient_matrix(exps, coefs, owner, X)
    out = np.empty(n)
    for j in range(n):
        minor = [[row[c] for c in range(n) if c != j] for row in G]
        sign = -1.0 if (n - 1 - j) % 2 else 1.0
        out[j] = sign * _det_lu(minor)
    return out


class DormandPrince:
    """One-trajectory DOPRI5 stepper over a callable ``fun(t, y) -> ndarray``."""

    def __init__(self, fun, t0, y0, t_bound, rtol, atol, max_step=math.inf, first_step=None):
        self.fun = fun
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.t_bound = float(t_bound)
        self.direction = 1.0 if t_bound >= t0 else -1.0
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.k1 = np.asarray(fun(self.t, self.y), dtype=float)
        self.nfev = 1
        self.h = first_step if first_step else self._initial_step()
        self.facold = 1e-4
        self.t_old = self.t
        self.y_old = self.y
        self.naccept = 0
        self.nreject = 0
        self._rcont = None

    def _initial_step(self) -> float:
        sc = self.atol + self.rtol * np.abs(self.y)
        d0 = math.sqrt(float(np.mean((self.y / sc) ** 2)))
        d1 = math.sqrt(float(np.mean((self.k1 / sc) ** 2)))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, abs(self.t_bound - self.t), self.max_step)
        y1 = self.y + self.direction * h0 * self.k1
        f1 = np.asarray(self.fun(self.t + self.direction * h0, y1), dtype=float)
        self.nfev += 1
        d2 = math.sqrt(float(np.mean(((f1 - self.k1) / sc) ** 2))) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100 * h0, h1, self.max_step)

    def step(self) -> int:
        """Advance one accepted step; returns a status code."""
        fun, t, y, k1 = self.fun, self.t, self.y, self.k1
        d = self.direction
        while True:
            h = min(self.h, self.max_step, abs(self.t_bound - t))
            if h < 16 * np.spacing(max(abs(t), 1.0)):
                return STATUS_UNDERFLOW
            hs = d * h
            k2 = fun(t + C2 * hs, y + hs * (A21 * k1))
            k3 = fun(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
            k4 = fun(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = fun(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = fun(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y1 = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
            k7 = fun(t + hs, y1)
            self.nfev += 6
            if not np.all(np.isfinite(y1)):
                self.h = 0.5 * h
                self.nreject += 1
                if not np.all(np.isfinite(y)):
                    return STATUS_NONFINITE
                continue
            err_vec = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            sc = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y1))
            err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))
            fac11 = err ** EXPO1 if err > 0 else 0.0
            if err <= 1.0:
                fac = fac11 / self.facold ** BETA
                fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
                self.facold = max(err, 1e-4)
                r2 = y1 - y
                r3 = hs * k1 - r2
                r4 = r2 - hs * k7 - r3
                r5 = hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
                self._rcont = (y, r2, r3, r4, r5, hs)
                self.t_old, self.y_old = t, y
                self.t = t + hs if h < abs(self.t_bound - t) else self.t_bound
                self.y = y1
                self.k1 = k7
                self.h = h / fac
                self.naccept += 1
                return STATUS_OK
            self.nreject += 1
            self.h = h / min(1.0 / FAC_MIN, fac11 / SAFETY)

    def dense(self, t: float) -> np.ndarray:
        y0, r2, r3, r4, r5, hs = self._rcont
        th = (t - self.t_old) / hs
        th1 = 1.0 - th
        return y0 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))

    @property
    def finished(self) -> bool:
        return self.t == self.t_bound


def dopri_solve(fun, y0, t0, t1, t_eval, rtol, atol, max_step=math.inf, max_steps=100000):
    """Integrate ``fun`` from t0 to t1, reporting the states at ``t_eval``.

    Returns ``(Y, n_reached, status, stats)`` where rows ``Y[:n_reached]`` are
    valid; on failure the remaining rows are NaN.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    Y = np.full((len(t_eval), len(y0)), np.nan)
    stepper = DormandPrince(fun, t0, y0, t1, rtol, atol, max_step)
    d = stepper.direction
    k = 0
    while k < len(t_eval) and d * (t_eval[k] - t0) <= 0:
        Y[k] = y0
        k += 1
    status = STATUS_OK
    while not stepper.finished:
        if stepper.naccept >= max_steps:
            status = STATUS_MAX_STEPS
            break
        status = stepper.step()
        if status != STATUS_OK:
            break
        while k < len(t_eval) and d * (t_eval[k] - stepper.t) <= 0:
            Y[k] = stepper.dense(t_eval[k]) if t_eval[k] != stepper.t else stepper.y
            k += 1
    stats = {"naccept": stepper.naccept, "nreject": stepper.nreject, "nfev": stepper.nfev,
             "t_final": stepper.t}
    return Y, k, status, stats


def dopri_poly(exps, coefs, owner, y0, t0, t1, t_eval, rtol, atol, max_step=math.inf, max_steps=100000):
    return dopri_solve(lambda t, X: poly_rhs(exps, coefs, owner, X), y0, t0, t1, t_eval,
                       rtol, atol, max_step, max_steps)


def step_mesh(fun, y0, t0, t1, rtol, atol, max_step=math.inf, max_steps=100000):
    """Accepted step times of an adaptive run, endpoints included."""
    stepper = DormandPrince(fun, t0, y0, t1, rtol, atol, max_step)
    mesh = [float(t0)]
    while not stepper.finished:
        if stepper.naccept >= max_steps:
            return np.array(mesh), STATUS_MAX_STEPS
        status = stepper.step()
        if status != STATUS_OK:
            return np.array(mesh), status
        mesh.append(stepper.t)
    return np.array(mesh), STATUS_OK


def fixed_mesh_solve(fun, y0, mesh):
    """Fifth-order DOPRI solution on a prescribed mesh, no error control.

    The result is a smooth function of ``y0``, which is what finite
    differences across neighbouring trajectories need.
    """
    y = np.array(y0, dtype=float)
    for t, t_next in zip(mesh[:-1], mesh[1:]):
        hs = t_next - t
        k1 = fun(t, y)
        k2 = fun(t + C2 * hs, y + hs * (A21 * k1))
        k3 = fun(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
        k4 = fun(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = fun(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = fun(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
    return y
