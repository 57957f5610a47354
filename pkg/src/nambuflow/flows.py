"""Nambu flows built from polynomial Hamiltonians.

The right-hand side is ``dX_j/dt = {H_1, ..., H_{n-1}, X_j}``: the signed
(n-1)-minors of the Hamiltonian gradient matrix.  Families provided:
symmetric (elementary symmetric polynomials, one constant relaxed),
diagonal (cyclic rectangle diagonals), quadratic (``1/2 sum A_jk X_k^2``),
and custom.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _backend
from .polycore import SymConstants


class FlowError(ValueError):
    pass


Exponent = tuple[int, ...]


@dataclass(frozen=True)
class MultiPoly:
    """Sparse real polynomial in ``nvars`` variables: exponent tuple -> coefficient."""

    nvars: int
    terms: Mapping[Exponent, float] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[Exponent, float] = {}
        for e, c in self.terms.items():
            e = tuple(int(v) for v in e)
            if len(e) != self.nvars or any(v < 0 for v in e):
                raise FlowError(f"bad exponent {e} for {self.nvars} variables")
            c = float(c)
            if c != 0.0:
                clean[e] = clean.get(e, 0.0) + c
        object.__setattr__(self, "terms", {e: c for e, c in sorted(clean.items()) if c != 0.0})

    @classmethod
    def constant(cls, nvars: int, c: float) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, k: int) -> "MultiPoly":
        """``X_k`` with k counted from 1."""
        e = [0] * nvars
        e[k - 1] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def elementary(cls, nvars: int, k: int) -> "MultiPoly":
        """``e_k(X_1..X_nvars)``."""
        terms = {}
        for combo in itertools.combinations(range(nvars), k):
            e = [0] * nvars
            for v in combo:
                e[v] = 1
            terms[tuple(e)] = 1.0
        return cls(nvars, terms)

    @classmethod
    def quadratic(cls, weights: Sequence[float]) -> "MultiPoly":
        """``1/2 sum_k w_k X_k^2``."""
        n = len(weights)
        terms = {}
        for k, w in enumerate(weights):
            e = [0] * n
            e[k] = 2
            terms[tuple(e)] = 0.5 * w
        return cls(n, terms)

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return MultiPoly(self.nvars, terms)

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, (int, float)):
            return MultiPoly(self.nvars, {e: c * other for e, c in self.terms.items()})
        terms: dict[Exponent, float] = {}
        for (e1, c1), (e2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            e = tuple(a + b for a, b in zip(e1, e2))
            terms[e] = terms.get(e, 0.0) + c1 * c2
        return MultiPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __neg__(self) -> "MultiPoly":
        return self * -1.0

    def __call__(self, X) -> float | np.ndarray:
        """Evaluate at one point (shape (n,)) or a batch (shape (k, n))."""
        X = np.asarray(X, dtype=float)
        acc = np.zeros(X.shape[:-1])
        for e, c in self.terms.items():
            term = np.full(X.shape[:-1], c)
            for v, p in enumerate(e):
                if p:
                    term = term * X[..., v] ** p
            acc = acc + term
        return float(acc) if acc.ndim == 0 else acc

    def grad(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        g = np.zeros(self.nvars)
        for e, c in self.terms.items():
            for v, p in enumerate(e):
                if p == 0:
                    continue
                val = c * p
                for w, q in enumerate(e):
                    q = q - 1 if w == v else q
                    if q:
                        val *= X[w] ** q
                g[v] += val
        return g

    def to_json(self) -> list:
        return [[list(e), c] for e, c in self.terms.items()]

    @classmethod
    def from_json(cls, nvars: int, data: Iterable) -> "MultiPoly":
        return cls(nvars, {tuple(e): c for e, c in data})


def grad(p: MultiPoly, X) -> np.ndarray:
    return p.grad(X)


@dataclass(frozen=True)
class PolyTable:
    """Flattened Hamiltonian terms for the rhs kernels."""

    exps: np.ndarray
    coefs: np.ndarray
    owner: np.ndarray

    @classmethod
    def build(cls, hamiltonians: Sequence[MultiPoly]) -> "PolyTable":
        rows, coefs, owner = [], [], []
        for j, H in enumerate(hamiltonians):
            for e, c in H.terms.items():
                rows.append(e)
                coefs.append(c)
                owner.append(j)
        n = hamiltonians[0].nvars
        exps = np.array(rows, dtype=np.int64).reshape(len(rows), n)
        return cls(exps, np.array(coefs, dtype=float), np.array(owner, dtype=np.int64))

    @cached_property
    def exps_py(self):
        return tuple(tuple(int(v) for v in r) for r in self.exps)

    @cached_property
    def coefs_py(self):
        return tuple(float(c) for c in self.coefs)

    @cached_property
    def owner_py(self):
        return tuple(int(o) for o in self.owner)


FAMILIES = ("symmetric", "diagonal", "quadratic", "custom")


@dataclass(frozen=True)
class FlowSpec:
    """One Nambu flow.

    ``relaxed`` is the constraint function freed to become time (``f_n`` in
    the full map); with it the map ``X -> (H_1, ..., H_{n-1}, relaxed)`` is
    available for Jacobian checks.  ``constants`` records the fixed values of
    the Hamiltonians the flow was built for, when known.
    """

    n: int
    hamiltonians: tuple[MultiPoly, ...]
    family: str = "custom"
    free_index: int | None = None
    relaxed: MultiPoly | None = None
    A: np.ndarray | None = None
    constants: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n < 2:
            raise FlowError("n must be >= 2")
        if len(self.hamiltonians) != self.n - 1:
            raise FlowError(f"need {self.n - 1} Hamiltonians, got {len(self.hamiltonians)}")
        if any(H.nvars != self.n for H in self.hamiltonians):
            raise FlowError("Hamiltonian arity does not match n")
        if self.family not in FAMILIES:
            raise FlowError(f"unknown family {self.family!r}")
        fi = self.n if self.free_index is None else self.free_index
        if not 1 <= fi <= self.n:
            raise FlowError("free_index out of range")
        object.__setattr__(self, "free_index", fi)
        if self.family == "quadratic":
            if self.A is None or np.shape(self.A) != (self.n - 1, self.n):
                raise FlowError("quadratic family needs an (n-1) x n matrix A")
        if self.relaxed is not None and self.relaxed.nvars != self.n:
            raise FlowError("relaxed constraint arity does not match n")

    @cached_property
    def table(self) -> PolyTable:
        return PolyTable.build(self.hamiltonians)

    @property
    def full_map(self) -> tuple[MultiPoly, ...] | None:
        if self.relaxed is None:
            return None
        return self.hamiltonians + (self.relaxed,)

    def invariants(self, X) -> np.ndarray:
        """``H_1..H_{n-1}`` at one point (n,) or a batch (k, n)."""
        X = np.asarray(X, dtype=float)
        vals = [np.asarray(H(X)) for H in self.hamiltonians]
        return np.stack(vals, axis=-1)

    def with_hamiltonians(self, hamiltonians: Sequence[MultiPoly]) -> "FlowSpec":
        return FlowSpec(self.n, tuple(hamiltonians), self.family, self.free_index,
                        self.relaxed, self.A, self.constants)

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "family": self.family,
            "free_index": self.free_index,
            "hamiltonians": [H.to_json() for H in self.hamiltonians],
        }
        if self.relaxed is not None:
            out["relaxed"] = self.relaxed.to_json()
        if self.A is not None:
            out["A"] = np.asarray(self.A).tolist()
        if self.constants is not None:
            out["constants"] = list(self.constants)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "FlowSpec":
        n = int(data["n"])
        hams = tuple(MultiPoly.from_json(n, h) for h in data["hamiltonians"])
        relaxed = MultiPoly.from_json(n, data["relaxed"]) if data.get("relaxed") is not None else None
        A = np.array(data["A"], dtype=float) if data.get("A") is not None else None
        consts = tuple(data["constants"]) if data.get("constants") is not None else None
        return cls(n, hams, data.get("family", "custom"), data.get("free_index"), relaxed, A, consts)


def gradient_matrix(spec: FlowSpec, X) -> np.ndarray:
    return np.array([H.grad(X) for H in spec.hamiltonians]).reshape(spec.n - 1, spec.n)


def nambu_rhs(spec: FlowSpec, X, *, pure: bool = False) -> np.ndarray:
    """Signed minors of the Hamiltonian gradient matrix at ``X``."""
    return _backend.poly_rhs(spec.table, np.asarray(X, dtype=float), pure=pure)


def _sym_constants(n: int, x) -> tuple[float, ...] | None:
    if x is None:
        return None
    if isinstance(x, SymConstants):
        return tuple(v for v in x.x if v is not None)
    return tuple(float(v) for v in x)


def symmetric_flow(n: int, x: SymConstants | Sequence[float] | None = None) -> FlowSpec:
    """Hamiltonians ``e_1..e_{n-1}``; ``e_n`` is the relaxed constraint."""
    if n < 2:
        raise FlowError("symmetric flow needs n >= 2")
    hams = tuple(MultiPoly.elementary(n, k) for k in range(1, n))
    return FlowSpec(n, hams, "symmetric", n, MultiPoly.elementary(n, n), None, _sym_constants(n, x))


def symmetric_flow_free_i(n: int, x: SymConstants | Sequence[float] | None, i: int) -> FlowSpec:
    """Hamiltonians ``e_j`` for ``j != i`` in increasing order; ``e_i`` is relaxed."""
    if not 1 <= i <= n:
        raise FlowError(f"free index {i} out of range 1..{n}")
    if n < 2:
        raise FlowError("symmetric flow needs n >= 2")
    hams = tuple(MultiPoly.elementary(n, k) for k in range(1, n + 1) if k != i)
    return FlowSpec(n, hams, "symmetric", i, MultiPoly.elementary(n, i), None, _sym_constants(n, x))


def diagonal_matrix(n: int) -> np.ndarray:
    """Weights of ``x_j = (X_j^2 + X_{j+1}^2)/2``, j = 1..n-1."""
    A = np.zeros((n - 1, n))
    for j in range(n - 1):
        A[j, j] = A[j, j + 1] = 1.0
    return A


def diagonal_flow(n: int, x: Sequence[float] | None = None) -> FlowSpec:
    """Cyclic diagonal constraints; ``x_n = (X_n^2 + X_1^2)/2`` is relaxed."""
    if n < 3:
        raise FlowError("diagonal flow needs n >= 3")
    A = diagonal_matrix(n)
    hams = tuple(MultiPoly.quadratic(row) for row in A)
    last = np.zeros(n)
    last[0] = last[-1] = 1.0
    return FlowSpec(n, hams, "diagonal", n, MultiPoly.quadratic(last), A,
                    None if x is None else tuple(float(v) for v in x))


def diagonal_alphas(x: Sequence[float]) -> np.ndarray:
    """``alpha_j = 2(x_j - x_{j+1} + ... ± x_{n-1})`` so that ``X_j^2 = alpha_j + (-1)^(n-j) W^2``."""
    x = [float(v) for v in x]
    m = len(x)  # n - 1
    alphas = np.empty(m)
    for j in range(m):
        alphas[j] = 2.0 * sum((-1) ** (k - j) * x[k] for k in range(j, m))
    return alphas


def diagonal_solve(x: Sequence[float], W: float) -> np.ndarray:
    """Squares ``X_1^2..X_{n-1}^2`` on the constraint set at ``X_n = W``."""
    a = diagonal_alphas(x)
    n = len(a) + 1
    return np.array([a[j] + (-1) ** (n - (j + 1)) * W * W for j in range(n - 1)])


NAHM = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
EULER_TOP = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])


def quadratic_flow(A, relaxed_weights: Sequence[float] | None = None,
                   x: Sequence[float] | None = None) -> FlowSpec:
    """``H_j = 1/2 sum_k A_jk X_k^2``.  ``relaxed_weights`` optionally supplies
    the last row of the full map for Jacobian checks."""
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != A.shape[0] + 1:
        raise FlowError("A must have shape (n-1, n)")
    n = A.shape[1]
    minors = [np.linalg.det(np.delete(A, j, axis=1)) for j in range(n)]
    if all(abs(d) == 0.0 for d in minors):
        raise FlowError("every minor of A vanishes")
    hams = tuple(MultiPoly.quadratic(row) for row in A)
    relaxed = MultiPoly.quadratic(relaxed_weights) if relaxed_weights is not None else None
    return FlowSpec(n, hams, "quadratic", n, relaxed, A, None if x is None else tuple(x))


def quadratic_closed_form(A, X) -> np.ndarray:
    """``(-1)^(n-j) det A_j * prod(X) / X_j``, evaluated without dividing."""
    A = np.asarray(A, dtype=float)
    X = np.asarray(X, dtype=float)
    n = len(X)
    out = np.empty(n)
    for j in range(n):
        others = np.prod(np.delete(X, j))
        out[j] = (-1) ** (n - (j + 1)) * np.linalg.det(np.delete(A, j, axis=1)) * others
    return out


def map_jacobian_det(f: Sequence[MultiPoly], X) -> tuple[float, bool]:
    """``det d(f_1..f_n)/d(X_1..X_n)`` at X and whether it is numerically singular."""
    J = np.array([p.grad(X) for p in f])
    det = float(np.linalg.det(J))
    scale = float(np.prod(np.maximum(np.linalg.norm(J, axis=1), 1e-300)))
    return det, abs(det) <= 1e-12 * scale


@dataclass
class Reparametrization:
    xn: np.ndarray
    rate_residual: float
    constant_drift: float


def reparametrize(times, states, f_n: MultiPoly, detJ: Callable[[np.ndarray], float],
                  spec: FlowSpec | None = None, *, edge: int = 2) -> Reparametrization:
    """``x_n(t) = f_n(X(t))`` along samples, checking ``dx_n/dt * det J = 1``.

    ``detJ`` is the Jacobian of the inverse map ``x -> X``.  The rate is taken
    by second-order finite differences; ``edge`` samples are dropped at each
    end.  With ``spec``, the drift of ``x_1..x_{n-1}`` is measured too.
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    xn = np.asarray(f_n(states), dtype=float)
    rate = np.gradient(xn, times, edge_order=2)
    dj = np.array([detJ(X) for X in states])
    inner = slice(edge, len(times) - edge)
    rate_residual = float(np.max(np.abs(rate[inner] * dj[inner] - 1.0)))
    drift = 0.0
    if spec is not None:
        inv = spec.invariants(states)
        drift = float(np.max(np.abs(inv - inv[0])))
    return Reparametrization(xn, rate_residual, drift)


def vandermonde(values: Sequence[float]) -> float:
    """``prod_{k<l} (v_k - v_l)``."""
    acc = 1.0
    for k, l in itertools.combinations(range(len(values)), 2):
        acc *= values[k] - values[l]
    return acc


def free_i_closed_form(X, i: int) -> float:
    """``(-W)^(n-i) prod_{k<l; k,l != i} (X_k - X_l)`` with ``W = X_i``."""
    X = list(map(float, X))
    n = len(X)
    W = X[i - 1]
    rest = X[: i - 1] + X[i:]
    return (-W) ** (n - i) * vandermonde(rest)


def swap_hamiltonians(spec: FlowSpec, a: int = 0, b: int = 1) -> FlowSpec:
    hams = list(spec.hamiltonians)
    hams[a], hams[b] = hams[b], hams[a]
    return spec.with_hamiltonians(hams)


def divergence(spec: FlowSpec, X, h: float = 1e-6) -> float:
    """Central-difference divergence of the rhs at X."""
    X = np.asarray(X, dtype=float)
    acc = 0.0
    for j in range(spec.n):
        step = h * max(1.0, abs(X[j]))
        e = np.zeros(spec.n)
        e[j] = step
        acc += (nambu_rhs(spec, X + e)[j] - nambu_rhs(spec, X - e)[j]) / (2 * step)
    return acc


def solve_constraints(f: Sequence[MultiPoly], targets: Sequence[float], X0, *,
                      tol: float = 1e-14, max_iter: int = 50) -> np.ndarray:
    """Newton solve of ``f_k(X) = targets_k`` for a square map, started at ``X0``."""
    X = np.array(X0, dtype=float)
    targets = np.asarray(targets, dtype=float)
    for _ in range(max_iter):
        r = np.array([p(X) for p in f]) - targets
        J = np.array([p.grad(X) for p in f])
        try:
            dX = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise FlowError("constraints unsolvable: singular Jacobian") from exc
        X = X - dX
        if np.max(np.abs(dX)) <= tol * max(1.0, float(np.max(np.abs(X)))):
            break
    r = np.array([p(X) for p in f]) - targets
    if not np.all(np.isfinite(X)) or np.max(np.abs(r)) > 1e-9 * max(1.0, float(np.max(np.abs(targets)))):
        raise FlowError(f"constraints unsolvable: residual {np.max(np.abs(r)):.3e}")
    return X


def prod_over(X, j: int) -> float:
    return math.prod(float(v) for k, v in enumerate(X) if k != j)
