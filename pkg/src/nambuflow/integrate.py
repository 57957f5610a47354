"""Adaptive integration of Nambu flows with invariant-drift and volume monitoring."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend, _dopri
from .flows import FlowError, FlowSpec, MultiPoly, diagonal_alphas, nambu_rhs, solve_constraints
from .polycore import SymConstants, discriminant_in_W

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 512


class IntegrationError(RuntimeError):
    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_steps: int = 100000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


@dataclass
class Trajectory:
    """Samples of one integration; times are monotone in the integration direction."""

    times: np.ndarray
    states: np.ndarray
    invariants: np.ndarray
    status: int = _dopri.STATUS_OK
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == _dopri.STATUS_OK

    @property
    def drift(self) -> float:
        if self.invariants.size == 0:
            return 0.0
        return float(np.max(np.abs(self.invariants - self.invariants[0])))

    def __len__(self) -> int:
        return len(self.times)


def integrate(spec: FlowSpec, X0, t_span, cfg: IntegratorConfig | None = None, *,
              samples: int = DEFAULT_SAMPLES, t_eval=None, pure: bool = False,
              raise_on_failure: bool = True) -> Trajectory:
    """Integrate the flow from ``X0`` over ``t_span`` with DOPRI5.

    States are reported on ``t_eval`` (default: ``samples`` uniform points).
    On failure the partial trajectory is attached to the raised
    IntegrationError, or returned with a nonzero ``status`` when
    ``raise_on_failure`` is false.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = map(float, t_span)
    if t0 == t1:
        raise ValueError("degenerate t_span")
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (spec.n,) or not np.all(np.isfinite(X0)):
        raise ValueError(f"X0 must be a finite vector of length {spec.n}")
    if t_eval is None:
        if samples < 2:
            raise ValueError("need at least 2 samples")
        t_eval = np.linspace(t0, t1, samples)
    t_eval = np.asarray(t_eval, dtype=float)
    Y, reached, status, stats = _backend.dopri_poly(
        spec.table, X0, t0, t1, t_eval, cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.max_steps, pure=pure)
    times, states = t_eval[:reached], Y[:reached]
    traj = Trajectory(times, states, spec.invariants(states) if reached else np.empty((0, spec.n - 1)),
                      status, stats)
    log.debug("integrated %s n=%d over [%g, %g]: %s", spec.family, spec.n, t0, t1, stats)
    if status != _dopri.STATUS_OK:
        msg = {1: "max_steps exceeded", 2: "step size underflow", 3: "non-finite state"}[status]
        log.info("integration stopped at t=%g: %s", stats["t_final"], msg)
        if raise_on_failure:
            raise IntegrationError(msg, traj)
    return traj


@dataclass
class DriftReport:
    max_abs: np.ndarray
    mean_abs: np.ndarray

    @property
    def worst(self) -> float:
        return float(np.max(self.max_abs)) if self.max_abs.size else 0.0

    def to_json(self) -> dict:
        return {"max_abs": self.max_abs.tolist(), "mean_abs": self.mean_abs.tolist(), "worst": self.worst}


def conservation_report(traj: Trajectory, spec: FlowSpec) -> DriftReport:
    """Per-Hamiltonian max and mean absolute drift from the first sample."""
    inv = spec.invariants(traj.states)
    dev = np.abs(inv - inv[0])
    return DriftReport(dev.max(axis=0), dev.mean(axis=0))


def _fixed_run(spec: FlowSpec, X0, mesh) -> np.ndarray:
    return _dopri.fixed_mesh_solve(lambda t, X: nambu_rhs(spec, X), X0, mesh)


def volume_check(spec: FlowSpec, x_const, t: float, seed_state, cfg: IntegratorConfig | None = None,
                 *, rel_step: float = 1e-5) -> float:
    """Finite-difference ``det dX(t)/d(x_1, ..., x_{n-1}, t)``.

    ``t = 0`` is the hyperplane through ``seed_state`` orthogonal to the flow
    there; perturbed constants are Newton-solved onto it from the seed.  Any
    t-origin surface parametrised by the constants gives the same determinant,
    and this one stays transversal where the relaxed constraint is stationary.
    All perturbed runs share the step mesh of the base run so the differences
    see a smooth map.  ``dX/dt`` is the rhs at ``X(t)``.
    """
    cfg = cfg or IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    seed = np.asarray(getattr(seed_state, "X", seed_state), dtype=float)
    x_const = np.asarray(x_const, dtype=float)
    n = spec.n
    if x_const.shape != (n - 1,):
        raise ValueError(f"need {n - 1} constants")
    normal = nambu_rhs(spec, seed)
    if not np.any(normal):
        raise FlowError("seed is a fixed point of the flow")
    plane = MultiPoly(n, {tuple(int(k == j) for k in range(n)): normal[j] for j in range(n)})
    f = list(spec.hamiltonians) + [plane]
    c_plane = plane(seed)

    def start(xc):
        return solve_constraints(f, list(xc) + [c_plane], seed)

    X0 = start(x_const)
    fun = lambda s, X: nambu_rhs(spec, X)
    if t != 0.0:
        mesh, status = _dopri.step_mesh(fun, X0, 0.0, t, cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.max_steps)
        if status != _dopri.STATUS_OK:
            raise IntegrationError("volume_check base run failed")
    else:
        mesh = np.array([0.0])
    J = np.empty((n, n))
    for j in range(n - 1):
        h = rel_step * max(1.0, abs(x_const[j]))
        cols = []
        for sgn in (1.0, -1.0):
            xc = x_const.copy()
            xc[j] += sgn * h
            cols.append(_fixed_run(spec, start(xc), mesh))
        J[:, j] = (cols[0] - cols[1]) / (2 * h)
    J[:, n - 1] = nambu_rhs(spec, _fixed_run(spec, X0, mesh))
    return float(np.linalg.det(J))


class BranchMismatch(FlowError):
    pass


def scalar_reduce(spec: FlowSpec, X, *, rtol: float = 1e-7) -> float:
    """``F(W) = dW/dt`` from the constraint-eliminated closed form at ``X``.

    Symmetric family: ``|F|^2 = D(W)`` (times ``W^(2-(n-2)(n-i))`` when ``x_i``,
    i < n, is free); diagonal family: ``|F|^2 = prod_j (alpha_j + (-1)^(n-j) W^2)``.
    The branch sign is taken from the rhs and the magnitude is checked against it.
    """
    X = np.asarray(X, dtype=float)
    n, i = spec.n, spec.free_index
    W = X[i - 1]
    rhs = nambu_rhs(spec, X)[i - 1]
    F2 = reduced_square(spec, X)
    mag = math.sqrt(max(F2, 0.0))
    F = math.copysign(mag, rhs)
    # compare squares: near a turning point sqrt would turn rounding in F^2 into ~sqrt(eps)
    floor = 1e-12 * max(1.0, float(np.max(np.abs(X)))) ** ((n - 1) * (n - 2) + 2)
    if abs(rhs * rhs - F2) > rtol * max(rhs * rhs, abs(F2)) + floor:
        raise BranchMismatch(f"reduced |F(W)|={mag:.6g} disagrees with rhs {rhs:.6g} at W={W:.6g}")
    return F


def reduced_square(spec: FlowSpec, X) -> float:
    """``F(W)^2`` from the fixed constants read off ``X``."""
    X = np.asarray(X, dtype=float)
    n, i = spec.n, spec.free_index
    W = X[i - 1]
    x_all = [H(X) for H in spec.hamiltonians]
    if spec.family == "symmetric":
        if n == 2:
            return 1.0
        vals: list[float | None] = list(x_all)
        vals.insert(i - 1, None)
        D = discriminant_in_W(SymConstants(vals))
        if i == n:
            return float(D(W))
        return float(D(W)) * W ** (2 - (n - 2) * (n - i))
    if spec.family == "diagonal" and i == n:
        alphas = diagonal_alphas(x_all)
        return float(np.prod([alphas[j] + (-1) ** (n - (j + 1)) * W * W for j in range(n - 1)]))
    raise FlowError(f"scalar reduction not available for family {spec.family!r} with free x_{i}")


__all__ = [
    "IntegratorConfig", "Trajectory", "IntegrationError", "integrate", "conservation_report",
    "DriftReport", "volume_check", "scalar_reduce", "reduced_square", "BranchMismatch",
]
