"""Benchmark harness: run the three test problems and the retraction comparison.

Usage::

    spst-bench nearest --n 100 --k 10 --method all --seed 7
    spst-bench symplectic-eig --n 100 --p 5 --method rtr2 --format json
    spst-bench psd --n 100 --m 50 --r 20 --k 20 --iter-log iters.csv
    spst-bench geodesic-compare --n 100 --k 10 --t-min 0.01 --t-max 1

Exit codes: 0 on success, 1 if any run ended with MaxIter or
SubproblemFailure, 2 on an invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import manifold as mf
from . import optimize as op
from . import problems as pb
from .hessian import HessianKind
from .retraction import cayley_retraction, cayley_simple, geodesic

METHODS = ("rsd", "rcg", "rtr1", "rtr2")
PROBLEMS = ("nearest", "symplectic-eig", "psd", "geodesic-compare")
# seed offset for the initial point, so it never shares a stream with the instance
X0_SEED_OFFSET = 1000


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    problem: str
    n: int = 100
    k: int = 10
    p: int = 5
    m: int = 50
    r: int = 20
    l: int = 3
    c: float = 2.0
    d: float = 1.0
    method: str = "all"
    seed: int = 0
    grad_tol: float = 1e-6
    min_step: float = 1e-11
    max_iter: int = 1000
    mu: int = 5
    nonmonotone: bool = False
    out: str | None = None
    format: str = "csv"
    iter_log: str | None = None
    dump_dir: str | None = None
    t_grid: list[float] = field(default_factory=list)

    def validate(self) -> None:
        """Check parameter ranges; raises ConfigError before anything is allocated."""
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.problem in PROBLEMS, f"unknown problem {self.problem!r}")
        need(self.method == "all" or self.method in METHODS, f"unknown method {self.method!r}")
        need(self.format in ("csv", "json"), f"unknown format {self.format!r}")
        need(self.n >= 1, "--n must be >= 1")
        need(self.seed >= 0, "--seed must be >= 0")
        need(self.grad_tol > 0, "--grad-tol must be positive")
        need(self.min_step > 0, "--min-step must be positive")
        need(self.max_iter >= 0, "--max-iter must be >= 0")
        need(self.mu >= 1, "--mu must be >= 1")
        if self.problem in ("nearest", "geodesic-compare"):
            need(1 <= self.k <= self.n, "need 1 <= k <= n")
        if self.problem == "symplectic-eig":
            need(1 <= self.p <= self.n, "need 1 <= p <= n")
            need(2 <= self.l <= self.n, "need 2 <= l <= n")
            need(self.c != 0, "--c must be nonzero")
        if self.problem == "psd":
            need(1 <= self.k <= self.n, "need 1 <= k <= n")
            need(1 <= self.r <= self.n, "need 1 <= r <= n")
            need(self.m >= 1, "--m must be >= 1")
        if self.problem == "geodesic-compare":
            t = self.t_grid
            need(len(t) > 0, "empty t grid")
            need(all(x > 0 for x in t), "t grid must be positive")
            need(all(a < b for a, b in zip(t, t[1:])), "t grid must be ascending")

    @property
    def methods(self) -> tuple[str, ...]:
        return METHODS if self.method == "all" else (self.method,)


@dataclass
class ReportRow:
    method: str
    num_iter: int
    wall_seconds: float
    final_grad_norm: float
    feasibility: float
    final_f: float
    termination: str


REPORT_FIELDS = tuple(f.name for f in dataclasses.fields(ReportRow))
ITER_FIELDS = ("method", "iteration", "f", "grad_norm", "step", "wall_time", "slope", "rho", "accepted")
GEO_FIELDS = ("t", "feas_geodesic", "feas_cay1", "feas_cay2", "err_cay1", "err_cay2")
TIMING_FIELDS = ("wall_seconds", "wall_time")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _json_value(v):
    # json cannot hold inf/nan; store them as strings
    if isinstance(v, float) and not math.isfinite(v):
        return _fmt(v)
    if isinstance(v, float):
        return float(_fmt(v))
    return v


def _write_text(text: str, path: str | os.PathLike | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def _table_text(rows: list[dict], fields: tuple[str, ...], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{f: _json_value(r[f]) for f in fields} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def emit_report(rows: list[ReportRow], fmt: str = "csv", path: str | os.PathLike | None = None) -> None:
    """Write summary rows as CSV or JSON (stdout when ``path`` is None)."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    _write_text(_table_text([dataclasses.asdict(r) for r in rows], REPORT_FIELDS, fmt), path)


def _coerce(value, target):
    if target is int or target == "int":
        return int(value)
    if target is float or target == "float":
        return float(value)
    return str(value)


def parse_report(text: str, fmt: str = "csv") -> list[ReportRow]:
    """Inverse of :func:`emit_report`."""
    types = {f.name: f.type for f in dataclasses.fields(ReportRow)}
    if fmt == "json":
        raw = json.loads(text)
    else:
        raw = list(csv.DictReader(io.StringIO(text)))
    return [ReportRow(**{k: _coerce(r[k], types[k]) for k in REPORT_FIELDS}) for r in raw]


def iteration_rows(report: op.RunReport, method: str) -> list[dict]:
    return [dict(method=method, **dataclasses.asdict(rec)) for rec in report.iterations]


def emit_iterations(reports: dict[str, op.RunReport], path: str | os.PathLike) -> None:
    rows = [row for m, rep in reports.items() for row in iteration_rows(rep, m)]
    _write_text(_table_text(rows, ITER_FIELDS, "csv"), path)


# ---------------------------------------------------------------- experiments

@dataclass
class Instance:
    prob: pb.ObjectiveBundle
    x0: np.ndarray
    data: dict[str, np.ndarray]


def build_instance(cfg: ExperimentConfig) -> Instance:
    """Problem data and the shared initial point for ``cfg``."""
    x0_seed = cfg.seed + X0_SEED_OFFSET
    if cfg.problem == "nearest":
        A = pb.gen_nearest_target(cfg.n, cfg.k, cfg.seed)
        return Instance(pb.nearest_problem(A), mf.random_point(cfg.n, cfg.k, x0_seed), {"A": A})
    if cfg.problem == "symplectic-eig":
        inst = pb.gen_williamson(cfg.n, cfg.l, cfg.c, cfg.d, cfg.seed)
        E = mf.selector(cfg.n, cfg.p)
        x0 = cayley_retraction(E, mf.random_tangent(E, x0_seed), 0.5)
        return Instance(pb.brockett_problem(inst.A, cfg.p), x0, {"A": inst.A, "S": inst.S})
    if cfg.problem == "psd":
        inst = pb.gen_psd_instance(cfg.n, cfg.m, cfg.r, cfg.seed)
        return Instance(pb.psd_problem(inst.S, cfg.k), mf.random_point(cfg.n, cfg.k, x0_seed),
                        {"S": inst.S, "T": inst.T, "C": inst.C})
    raise ConfigError(f"{cfg.problem} is not an optimization problem")


def run_method(method: str, prob: pb.ObjectiveBundle, x0: np.ndarray, cfg: ExperimentConfig) -> op.RunReport:
    stop = op.StoppingRule(cfg.grad_tol, cfg.min_step, cfg.max_iter)
    ls = op.LineSearchConfig(nonmonotone=cfg.nonmonotone)
    if method == "rsd":
        return op.solve_rsd(prob, x0, ls, stop)
    if method == "rcg":
        return op.solve_rcg(prob, x0, op.CgConfig(mu=cfg.mu), ls, stop)
    kind = HessianKind.EXACT if method == "rtr1" else HessianKind.PROJECTED
    return op.solve_rtr(prob, x0, hess_kind=kind, stop=stop)


def summary_row(method: str, report: op.RunReport) -> ReportRow:
    return ReportRow(method=method, num_iter=report.num_iter, wall_seconds=report.wall_time,
                     final_grad_norm=report.final_grad_norm, feasibility=report.feasibility,
                     final_f=report.final_f, termination=report.termination.value)


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ReportRow], dict[str, op.RunReport]]:
    """Build the instance and run every requested method from the same initial point."""
    cfg.validate()
    inst = build_instance(cfg)
    if cfg.dump_dir:
        out = Path(cfg.dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, M in {**inst.data, "x0": inst.x0}.items():
            pb.save_matrix(out / f"{name}.txt", M)
    reports = {m: run_method(m, inst.prob, inst.x0, cfg) for m in cfg.methods}
    rows = [summary_row(m, rep) for m, rep in reports.items()]
    return rows, reports


def geodesic_compare(n: int, k: int, seed: int, t_grid) -> list[dict]:
    """Feasibility of geodesic and both Cayley retractions, and their distance to the geodesic."""
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(t <= 0 for t in t_grid) or any(a >= b for a, b in zip(t_grid, t_grid[1:])):
        raise ConfigError("t grid must be positive and ascending")
    U = mf.random_point(n, k, seed)
    D = mf.random_tangent(U, seed + X0_SEED_OFFSET)
    rows = []
    for t in t_grid:
        g = geodesic(U, D, t, check=False)
        c1 = cayley_simple(U, D, t, check=False)
        c2 = cayley_retraction(U, D, t, check=False)
        rows.append(dict(t=t, feas_geodesic=mf.check_point(g), feas_cay1=mf.check_point(c1),
                         feas_cay2=mf.check_point(c2), err_cay1=float(np.linalg.norm(c1 - g)),
                         err_cay2=float(np.linalg.norm(c2 - g))))
    return rows


# ---------------------------------------------------------------------- CLI

def _default_seed() -> int:
    raw = os.environ.get("SPST_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SPST_SEED must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spst-bench", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="problem", required=True)

    def common(p, k_default):
        p.add_argument("--n", type=int, default=100)
        p.add_argument("--k", type=int, default=k_default)
        p.add_argument("--seed", type=int, default=None, help="default: $SPST_SEED or 0")
        p.add_argument("--out", default=None, help="report path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    def solver(p):
        p.add_argument("--method", choices=METHODS + ("all",), default="all")
        p.add_argument("--grad-tol", type=float, default=1e-6)
        p.add_argument("--min-step", type=float, default=1e-11)
        p.add_argument("--max-iter", type=int, default=1000)
        p.add_argument("--mu", type=int, default=5, help="R-CG restart period")
        p.add_argument("--nonmonotone", action="store_true", help="Armijo test against c_i")
        p.add_argument("--iter-log", default=None, help="per-iteration CSV path")
        p.add_argument("--dump-dir", default=None, help="write instance matrices here")

    p = sub.add_parser("nearest", help="nearest symplectic matrix")
    common(p, 10)
    solver(p)

    p = sub.add_parser("symplectic-eig", help="symplectic eigenvalues via the Brockett cost")
    common(p, 10)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--l", type=int, default=3)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--d", type=float, default=1.0)
    solver(p)

    p = sub.add_parser("psd", help="proper symplectic decomposition")
    common(p, 20)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--r", type=int, default=20)
    solver(p)

    p = sub.add_parser("geodesic-compare", help="geodesic vs Cayley retractions")
    common(p, 10)
    p.add_argument("--t-min", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--t-count", type=int, default=50)
    p.add_argument("--t", type=float, nargs="+", default=None, help="explicit t grid")
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(problem=ns.problem)
    for f in dataclasses.fields(ExperimentConfig):
        if f.name != "problem" and hasattr(ns, f.name) and getattr(ns, f.name) is not None:
            setattr(cfg, f.name, getattr(ns, f.name))
    if ns.seed is None:
        cfg.seed = _default_seed()
    if ns.problem == "symplectic-eig":
        cfg.k = cfg.p
    if ns.problem == "geodesic-compare":
        if ns.t is not None:
            cfg.t_grid = list(ns.t)
        else:
            if not 0 < ns.t_min < ns.t_max or ns.t_count < 1:
                raise ConfigError("need 0 < t-min < t-max and t-count >= 1")
            cfg.t_grid = [float(t) for t in np.geomspace(ns.t_min, ns.t_max, ns.t_count)]
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        print(f"spst-bench: error: {exc}", file=sys.stderr)
        return 2
    if cfg.problem == "geodesic-compare":
        rows = geodesic_compare(cfg.n, cfg.k, cfg.seed, cfg.t_grid)
        _write_text(_table_text(rows, GEO_FIELDS, cfg.format), cfg.out)
        return 0
    rows, reports = run_experiment(cfg)
    emit_report(rows, cfg.format, cfg.out)
    if cfg.iter_log:
        emit_iterations(reports, cfg.iter_log)
    bad = {op.Termination.MAX_ITER, op.Termination.SUBPROBLEM_FAILURE}
    return 1 if any(rep.termination in bad for rep in reports.values()) else 0


if __name__ == "__main__":
    sys.exit(main())
