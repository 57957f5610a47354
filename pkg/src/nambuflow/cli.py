"""Command-line scenario runner.

Every invocation reads one JSON config (schema in ``docs/config.md``) and
writes its results under ``--out-dir``.  Exit codes: 0 success, 2 config
error, 3 numerical failure (including a failed closed-form comparison).
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import _backend
from .flows import FlowError, FlowSpec, diagonal_flow, quadratic_flow, NAHM, EULER_TOP, \
    symmetric_flow, symmetric_flow_free_i, nambu_rhs
from .integrate import IntegrationError, IntegratorConfig, conservation_report, integrate, \
    reduced_square, volume_check
from .polycore import PolyError, SymConstants, d_formula, discriminant_in_W, reduced_coefficients
from .special import SpecialError, circle_solution, diagonal_solution_n3, elliptic_solution_x2_free, \
    x2_free_pole_time
from .toda import TodaError, TodaState, iterate, random_state

log = logging.getLogger("nambuflow")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Tolerances(_Strict):
    rel_tol: float = Field(1e-10, gt=0)
    abs_tol: float = Field(1e-12, gt=0)
    max_step: float = Field(math.inf, gt=0)
    max_steps: int = Field(100000, ge=1)

    def build(self) -> IntegratorConfig:
        return IntegratorConfig(self.rel_tol, self.abs_tol, self.max_step, self.max_steps)


class FlowRunConfig(_Strict):
    family: Literal["symmetric", "diagonal", "quadratic"]
    n: int = Field(ge=2)
    constants: Optional[list[float]] = None
    free_index: Optional[int] = None
    X0: Optional[list[float]] = None
    A: Optional[list[list[float]] | Literal["nahm", "euler"]] = None
    t_span: tuple[float, float] = (0.0, 10.0)
    samples: int = Field(512, ge=2)
    tolerances: Tolerances = Tolerances()
    volume_t: float = 1.0
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check(self):
        if self.constants is not None and len(self.constants) != self.n - 1:
            raise ValueError(f"constants must have n-1 = {self.n - 1} entries")
        if self.X0 is not None and len(self.X0) != self.n:
            raise ValueError(f"X0 must have n = {self.n} entries")
        if self.t_span[0] == self.t_span[1]:
            raise ValueError("degenerate t_span")
        if self.free_index is not None and self.family != "symmetric":
            raise ValueError("free_index is only meaningful for the symmetric family")
        if self.A is not None and self.family != "quadratic":
            raise ValueError("A is only meaningful for the quadratic family")
        return self


class FlowCompareConfig(_Strict):
    family: Literal["symmetric-n3", "diagonal-n3", "x2free-n3"]
    constants: tuple[float, float]
    t_span: Optional[tuple[float, float]] = None
    samples: int = Field(512, ge=2)
    tolerances: Tolerances = Tolerances()
    tolerance: float = Field(1e-6, gt=0)
    constraint_tolerance: float = Field(1e-8, gt=0)


class DiscConfig(_Strict):
    n: int = Field(ge=3, le=5)
    constants: list[float]
    W: Optional[list[float]] = None
    W_range: Optional[tuple[float, float, int]] = None

    @model_validator(mode="after")
    def _check(self):
        if len(self.constants) != self.n - 1:
            raise ValueError(f"constants must have n-1 = {self.n - 1} entries")
        if self.W is not None and self.W_range is not None:
            raise ValueError("give W or W_range, not both")
        if self.W_range is not None and self.W_range[2] < 1:
            raise ValueError("W_range count must be >= 1")
        return self


class TodaStateConfig(_Strict):
    i: list[float]
    v: list[float]


class TodaRunConfig(_Strict):
    m: int = Field(3, ge=3)
    state: Optional[TodaStateConfig] = None
    seed: Optional[int] = None
    c: float = 1.0
    steps: int = Field(100, ge=0)

    @model_validator(mode="after")
    def _check(self):
        if (self.state is None) == (self.seed is None):
            raise ValueError("give exactly one of state or seed")
        if self.state is not None and not (len(self.state.i) == len(self.state.v) == self.m):
            raise ValueError(f"state.i and state.v must have m = {self.m} entries")
        return self


# ---------------------------------------------------------------------------
# output helpers


def _write_table(path: Path, header: list[str], rows: np.ndarray) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _write_json(path: Path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _emit(out_dir: Path, stem: str, fmt: str, header: list[str], rows) -> Path:
    if fmt == "csv":
        path = out_dir / f"{stem}.csv"
        _write_table(path, header, rows)
    else:
        path = out_dir / f"{stem}.json"
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        _write_json(path, {"columns": header, "rows": rows.tolist()})
    return path


# ---------------------------------------------------------------------------
# flow run


def _quadratic_matrix(cfg: FlowRunConfig) -> np.ndarray:
    if cfg.A is None:
        raise ConfigError("quadratic family needs A (matrix, 'nahm' or 'euler')")
    if isinstance(cfg.A, str):
        if cfg.n != 3:
            raise ConfigError(f"{cfg.A!r} is a 3-variable matrix")
        return NAHM if cfg.A == "nahm" else EULER_TOP
    return np.array(cfg.A, dtype=float)


def build_flow(cfg: FlowRunConfig) -> tuple[FlowSpec, np.ndarray]:
    """Flow spec and initial point for a ``flow run`` config."""
    n = cfg.n
    if cfg.family == "symmetric":
        i = cfg.free_index or n
        spec = symmetric_flow(n, cfg.constants) if i == n else symmetric_flow_free_i(n, cfg.constants, i)
    elif cfg.family == "diagonal":
        spec = diagonal_flow(n, cfg.constants)
    else:
        spec = quadratic_flow(_quadratic_matrix(cfg), x=cfg.constants)
        if spec.n != n:
            raise ConfigError(f"A has {spec.n} columns but n = {n}")
    if cfg.X0 is not None:
        X0 = np.array(cfg.X0, dtype=float)
    elif cfg.constants is not None and n == 3 and cfg.family == "symmetric" and spec.free_index == 3:
        X0 = circle_solution(cfg.constants[0], cfg.constants[1], cfg.t_span[0])
    elif cfg.constants is not None and n == 3 and cfg.family == "diagonal":
        X0 = diagonal_solution_n3(cfg.constants[0], cfg.constants[1], cfg.t_span[0])
    elif cfg.seed is not None:
        X0 = np.random.default_rng(cfg.seed).uniform(-1.0, 1.0, n)
    else:
        raise ConfigError("X0 is required for this family (or give seed)")
    if cfg.constants is not None:
        got = spec.invariants(X0)
        scale = max(1.0, float(np.max(np.abs(cfg.constants))))
        if np.max(np.abs(got - np.array(cfg.constants))) > 1e-8 * scale:
            raise ConfigError(f"X0 has Hamiltonian values {got.tolist()}, not the configured constants")
    return spec, X0


def _reduction_residual(spec: FlowSpec, states: np.ndarray) -> float | None:
    """Max relative ``|F|^2`` vs reduced-square mismatch away from turning points."""
    if spec.family != "symmetric" or spec.n < 3:
        return None
    i = spec.free_index
    F2 = np.array([nambu_rhs(spec, X)[i - 1] ** 2 for X in states])
    D = np.array([reduced_square(spec, X) for X in states])
    keep = F2 > 1e-6 * F2.max() if F2.max() > 0 else np.zeros(len(F2), bool)
    if not keep.any():
        return None
    return float(np.max(np.abs(F2[keep] - D[keep]) / F2[keep]))


def cmd_flow_run(cfg: FlowRunConfig, out_dir: Path, fmt: str) -> dict:
    try:
        spec, X0 = build_flow(cfg)
    except (FlowError, PolyError, SpecialError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        traj = integrate(spec, X0, cfg.t_span, cfg.tolerances.build(), samples=cfg.samples)
    except IntegrationError as exc:
        raise NumericalFailure(f"integration failed: {exc}") from exc
    n = spec.n
    header = ["t"] + [f"X{k}" for k in range(1, n + 1)] + [f"H{k}" for k in range(1, n)]
    rows = np.column_stack([traj.times, traj.states, traj.invariants])
    path = _emit(out_dir, "trajectory", fmt, header, rows)
    drift = conservation_report(traj, spec)
    report = {
        "family": spec.family,
        "n": n,
        "free_index": spec.free_index,
        "X0": X0.tolist(),
        "t_span": list(cfg.t_span),
        "samples": len(traj),
        "drift": drift.to_json(),
        "stats": {k: traj.stats[k] for k in ("naccept", "nreject", "nfev")},
    }
    try:
        x_const = spec.invariants(X0)
        report["volume_det"] = volume_check(spec, x_const, cfg.volume_t, X0)
    except (FlowError, IntegrationError) as exc:
        log.info("volume check skipped: %s", exc)
        report["volume_det"] = None
    report["reduction_residual"] = _reduction_residual(spec, traj.states)
    _write_json(out_dir / "report.json", report)
    report["outputs"] = [str(path.name), "report.json"]
    return report


# ---------------------------------------------------------------------------
# flow compare


def _compare_setup(cfg: FlowCompareConfig):
    a, b = cfg.constants
    if cfg.family == "symmetric-n3":
        spec = symmetric_flow(3, [a, b])
        closed = lambda t: circle_solution(a, b, t)
        span = cfg.t_span or (0.0, 2 * math.pi / math.sqrt(3.0))
        fixed = lambda X: np.array([X.sum(), X[0] * X[1] + X[0] * X[2] + X[1] * X[2]]) - [a, b]
    elif cfg.family == "diagonal-n3":
        spec = diagonal_flow(3, [a, b])
        closed = lambda t: diagonal_solution_n3(a, b, t)
        span = cfg.t_span or (0.0, 5.0)
        fixed = lambda X: np.array([X[0] ** 2 + X[1] ** 2, X[1] ** 2 + X[2] ** 2]) / 2 - [a, b]
    else:
        spec = symmetric_flow_free_i(3, [a, b], 2)
        closed = lambda t: elliptic_solution_x2_free(a, b, t)
        if cfg.t_span is None:
            tp = x2_free_pole_time(a, b)
            span = (0.25 * tp, 0.75 * tp)
        else:
            span = cfg.t_span
        fixed = lambda X: np.array([X.sum(), X.prod()]) - [a, b]
    closed(span[0])
    return spec, closed, span, fixed


def cmd_flow_compare(cfg: FlowCompareConfig, out_dir: Path, fmt: str) -> dict:
    """Integrate from the closed form's initial point under every label
    permutation and time direction; report the best match."""
    try:
        spec, closed, span, fixed = _compare_setup(cfg)
    except (FlowError, PolyError, SpecialError) as exc:
        raise ConfigError(str(exc)) from exc
    t = np.linspace(span[0], span[1], cfg.samples)
    try:
        ref = np.array([closed(s) for s in t])
        ref_rev = np.array([closed(2 * span[0] - s) for s in t])
    except SpecialError as exc:
        raise ConfigError(f"closed form undefined on t_span: {exc}") from exc
    best = None
    for perm in itertools.permutations(range(3)):
        p = list(perm)
        for sign, target in ((1, ref), (-1, ref_rev)):
            try:
                traj = integrate(spec, target[0, p], span, cfg.tolerances.build(), t_eval=t)
            except IntegrationError as exc:
                # the mismatched direction can run into a pole of the orbit
                log.info("permutation %s, sign %+d: %s", p, sign, exc)
                continue
            dev = float(np.max(np.abs(traj.states - target[:, p])))
            if best is None or dev < best[0]:
                best = (dev, p, sign, traj)
    if best is None:
        raise NumericalFailure("integration failed for every label permutation")
    dev, perm, sign, traj = best
    constraint = float(np.max(np.abs([fixed(X) for X in ref])))
    header = ["t"] + [f"X{k}" for k in (1, 2, 3)] + [f"C{k}" for k in (1, 2, 3)]
    rows = np.column_stack([t, traj.states, (ref if sign > 0 else ref_rev)[:, perm]])
    path = _emit(out_dir, "compare", fmt, header, rows)
    report = {
        "family": cfg.family,
        "constants": list(cfg.constants),
        "t_span": list(span),
        "max_deviation": dev,
        "permutation": [k + 1 for k in perm],
        "time_sign": sign,
        "closed_form_constraint_residual": constraint,
        "passed": bool(dev < cfg.tolerance and constraint < cfg.constraint_tolerance),
    }
    _write_json(out_dir / "compare_report.json", report)
    report["outputs"] = [path.name, "compare_report.json"]
    if not report["passed"]:
        raise NumericalFailure(f"closed form mismatch: deviation {dev:.3e}, constraints {constraint:.3e}")
    return report


# ---------------------------------------------------------------------------
# disc


def cmd_disc(cfg: DiscConfig, out_dir: Path, fmt: str) -> dict:
    n = cfg.n
    x = SymConstants.free_last(cfg.constants)
    try:
        D = discriminant_in_W(x)
    except PolyError as exc:
        raise NumericalFailure(str(exc)) from exc
    if cfg.W is not None:
        Ws = np.array(cfg.W, dtype=float)
    else:
        lo, hi, count = cfg.W_range or (-2.0, 2.0, 9)
        Ws = np.linspace(lo, hi, int(count))
    rows = []
    for W in Ws:
        h = reduced_coefficients(x, W)
        val, ref = D(W), d_formula(n, h)
        rows.append([W, val, ref, abs(val - ref) / max(abs(ref), 1e-300)])
    coeff_path = _emit(out_dir, "disc_coeffs", fmt, ["power", "coefficient"],
                       np.column_stack([np.arange(len(D.coeffs)), D.coeffs]))
    table_path = _emit(out_dir, "disc_table", fmt, ["W", "D", "d_formula", "rel_diff"], np.array(rows))
    worst = float(max(r[3] for r in rows)) if rows else 0.0
    return {"n": n, "degree": D.degree, "max_rel_diff": worst,
            "outputs": [coeff_path.name, table_path.name]}


# ---------------------------------------------------------------------------
# toda run


def cmd_toda_run(cfg: TodaRunConfig, out_dir: Path, fmt: str) -> dict:
    try:
        if cfg.state is not None:
            s = TodaState(cfg.state.i, cfg.state.v)
        else:
            s = random_state(np.random.default_rng(cfg.seed), cfg.m, cfg.c)
    except TodaError as exc:
        raise ConfigError(str(exc)) from exc
    if abs(s.det_U) <= 1e-12:
        raise NumericalFailure("singular U")
    try:
        run = iterate(s, cfg.steps, s.c)
    except (TodaError, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(str(exc)) from exc
    m = s.m
    header = ["step"] + [f"x{k}" for k in range(1, m + 1)] + ["structure_residual"]
    rows = np.column_stack([np.arange(cfg.steps + 1), run.invariants, run.structure])
    path = _emit(out_dir, "toda", fmt, header, rows)
    x0 = run.invariants[0]
    rel = np.max(np.abs(run.invariants - x0) / np.maximum(np.abs(x0), 1e-300))
    return {"m": m, "steps": cfg.steps, "initial": s.to_json(), "max_relative_drift": float(rel),
            "outputs": [path.name]}


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    ("flow", "run"): (FlowRunConfig, cmd_flow_run),
    ("flow", "compare"): (FlowCompareConfig, cmd_flow_compare),
    ("disc", None): (DiscConfig, cmd_disc),
    ("toda", "run"): (TodaRunConfig, cmd_toda_run),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="path to the JSON scenario config")
    common.add_argument("--out-dir", default=".", help="directory for output files")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--quiet", action="store_true", help="suppress the stdout summary")

    p = argparse.ArgumentParser(prog="nambuflow", description="Nambu flow and Toda map scenario runner")
    sub = p.add_subparsers(dest="group", required=True)
    flow = sub.add_parser("flow", help="integrate or compare flows").add_subparsers(dest="action", required=True)
    flow.add_parser("run", parents=[common], help="integrate one flow")
    flow.add_parser("compare", parents=[common], help="integration vs closed form")
    sub.add_parser("disc", parents=[common], help="discriminant polynomial table")
    toda = sub.add_parser("toda", help="discrete Toda map").add_subparsers(dest="action", required=True)
    toda.add_parser("run", parents=[common], help="iterate the map")
    return p


def _configure_logging() -> None:
    level = os.environ.get("NAMBU_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "error"
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("nambuflow").setLevel(levels[level])


def load_config(path: str, model: type[_Strict]) -> _Strict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    _configure_logging()
    model, handler = COMMANDS[(args.group, getattr(args, "action", None))]
    try:
        cfg = load_config(args.config, model)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        log.info("backend: %s", _backend.NAME)
        summary = handler(cfg, out_dir, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.quiet:
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
