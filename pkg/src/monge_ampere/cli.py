"""Command-line front end.

Subcommands::

    monge-ampere solve --dim 2 --n 31 --stencil 17 --example c2
    monge-ampere study --example c2 --n 31 63 --stencil 9 17 33 --jobs 4
    monge-ampere compare --example c2 --n 31 --solver newton semi-implicit
    monge-ampere gradient-map --example c2 --n 31 --output map.csv

``solve`` and ``compare`` write JSON by default, ``study`` and
``gradient-map`` write CSV.  Floats are written with 17 significant digits so
values read back are bit-identical.  The exit status is 0 only if every
requested solve converged.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, create_grid, multilinear_weights
from .problems import lookup, max_error
from .solvers import INITS, METHODS, SCHEMES, SingularJacobianError, SolverConfig, solve
from .stencil import named_stencil

log = logging.getLogger(__name__)

STENCILS = {2: (9, 17, 33), 3: (19,)}
DEFAULT_STENCIL = {2: 17, 3: 19}
EXAMPLES = ("c2", "c1", "blowup", "cone")
REPORT_FIELDS = ("config", "iterations", "residual_history", "damping_history",
                 "seconds", "max_error", "converged")
STUDY_FIELDS = ("n", "stencil", "max_error", "iterations", "seconds",
                "converged", "message")
MAP_FIELDS = ("kind", "x", "y", "Dx_u", "Dy_u")


class UsageError(ValueError):
    pass


@dataclass
class RunRequest:
    subcommand: str
    dim: int = 2
    n: list = field(default_factory=lambda: [31])
    stencil: list = None
    example: str = "c2"
    solver: list = field(default_factory=lambda: ["newton"])
    scheme: str = "monotone"
    delta: float = None
    epsilon: float = None
    tol: float = None
    max_iter: int = None
    init: str = None
    coarse_factor: int = None
    init_file: str = None
    save_solution: str = None
    output: str = None
    format: str = None
    jobs: int = 1
    circle_points: int = 256

    def validate(self):
        if self.dim not in STENCILS:
            raise UsageError(f"--dim must be 2 or 3, got {self.dim}")
        if self.stencil is None:
            self.stencil = [DEFAULT_STENCIL[self.dim]]
        bad = [s for s in self.stencil if s not in STENCILS[self.dim]]
        if bad:
            raise UsageError(f"--stencil {bad[0]} is not available in {self.dim}D "
                             f"(choose from {list(STENCILS[self.dim])})")
        try:
            problem = lookup(self.example, self.dim)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for n in self.n:
            if n < 3:
                raise UsageError(f"--n must be at least 3, got {n}")
            try:
                problem.check_grid(create_grid(self.dim, n))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        for method in self.solver:
            if method == "semi-implicit" and self.dim != 2:
                raise UsageError("the semi-implicit solver is 2D only")
            if method == "explicit" and self.scheme != "monotone":
                raise UsageError("the explicit solver needs --scheme monotone")
        if self.subcommand != "study" and (len(self.n) > 1 or len(self.stencil) > 1):
            raise UsageError("lists of --n/--stencil are only accepted by 'study'")
        if self.subcommand != "compare" and len(self.solver) > 1:
            raise UsageError("several --solver values are only accepted by 'compare'")
        if (self.init == "given") != (self.init_file is not None):
            raise UsageError("--init given and --init-file go together")
        if self.subcommand == "gradient-map" and self.dim != 2:
            raise UsageError("gradient-map needs --dim 2")
        if self.format is None:
            self.format = "csv" if self.subcommand in ("study", "gradient-map") else "json"
        if self.subcommand == "gradient-map" and self.format != "csv":
            raise UsageError("gradient-map writes CSV only")
        return problem

    def config(self, method, grid):
        kw = dict(method=method, scheme=self.scheme)
        for name, value in (("delta", self.delta), ("epsilon", self.epsilon),
                            ("tol", self.tol), ("max_iter", self.max_iter),
                            ("init", self.init),
                            ("coarse_init_factor", self.coarse_factor)):
            if value is not None:
                kw[name] = value
        if self.init == "given":
            vals = np.load(self.init_file)
            if vals.size != grid.size:
                raise UsageError(f"{self.init_file} holds {vals.size} values, "
                                 f"grid has {grid.size}")
            kw["initial"] = GridFunction(grid, vals)
        try:
            return SolverConfig(**kw)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def echo(self, n, stencil, method):
        return {"dim": self.dim, "n": n, "stencil": stencil,
                "example": self.example, "solver": method, "scheme": self.scheme,
                "delta": self.delta, "epsilon": self.epsilon, "tol": self.tol,
                "max_iter": self.max_iter, "init": self.init,
                "coarse_factor": self.coarse_factor, "init_file": self.init_file}


def _clean(x):
    """Round-trippable JSON values: non-finite floats become null."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def fmt(x):
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


def run_cell(request, n, stencil_points, method):
    """One solve; returns ``(report dict, solution or None)``."""
    problem = lookup(request.example, request.dim)
    grid = create_grid(request.dim, n)
    stencil = named_stencil(stencil_points, request.dim)
    config = request.config(method, grid)
    out = {"config": request.echo(n, stencil_points, method), "iterations": 0,
           "residual_history": [], "damping_history": [], "seconds": 0.0,
           "max_error": math.nan, "converged": False, "message": ""}
    try:
        u, report = solve(problem, grid, stencil, config)
    except (SingularJacobianError, ValueError, FloatingPointError) as exc:
        out["message"] = f"{type(exc).__name__}: {exc}"
        return out, None
    out.update(iterations=report.iterations,
               residual_history=report.residual_history,
               damping_history=report.damping_history,
               seconds=report.wall_time,
               max_error=max_error(u, problem, grid),
               converged=report.converged,
               message=report.message)
    return out, u


def _study_cell(args):
    request, n, stencil = args
    report, _ = run_cell(request, n, stencil, request.solver[0])
    return report


def run_solve(request):
    report, u = run_cell(request, request.n[0], request.stencil[0], request.solver[0])
    if request.save_solution and u is not None:
        np.save(request.save_solution, u.flat)
    if request.format == "json":
        text = json.dumps(_clean({k: report[k] for k in REPORT_FIELDS}), indent=2)
    else:
        text = _csv_text(REPORT_FIELDS[1:], [_flat_row(report)])
    return text + ("\n" if not text.endswith("\n") else ""), report["converged"]


def _flat_row(report):
    row = dict(report)
    row["residual_history"] = " ".join(fmt(float(r)) for r in report["residual_history"])
    row["damping_history"] = " ".join(fmt(float(a)) for a in report["damping_history"])
    return row


def _csv_text(fields, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([fmt(row.get(k)) for k in fields])
    return buf.getvalue()


def run_study(request):
    cells = [(request, n, s) for n in request.n for s in request.stencil]
    if request.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=request.jobs) as pool:
            reports = list(pool.map(_study_cell, cells))
    else:
        reports = [_study_cell(c) for c in cells]
    rows = [{"n": c[1], "stencil": c[2], **r} for c, r in zip(cells, reports)]
    ok = all(r["converged"] for r in rows)
    if request.format == "json":
        keep = [{k: r[k] for k in STUDY_FIELDS} for r in rows]
        return json.dumps(_clean(keep), indent=2) + "\n", ok
    return _csv_text(STUDY_FIELDS, rows), ok


def run_compare(request):
    runs = [run_cell(request, request.n[0], request.stencil[0], m)[0]
            for m in request.solver]
    ok = all(r["converged"] for r in runs)
    if request.format == "json":
        body = [{k: r[k] for k in REPORT_FIELDS} for r in runs]
        return json.dumps(_clean(body), indent=2) + "\n", ok
    fields = ("solver", "iterations", "seconds", "max_error", "converged")
    rows = [{"solver": r["config"]["solver"], **r} for r in runs]
    return _csv_text(fields, rows), ok


def gradient_map(u, circle_points=256):
    """Image of the grid and of the inscribed circle under ``x -> grad u(x)``.

    Gradients are centered first differences at interior nodes.  Circle
    points use the same differences (one-sided, second order, on the boundary)
    interpolated bilinearly.

    Returns
    -------
    list of dict
        Rows with keys ``kind`` ("mesh" or "circle"), ``x``, ``y``, ``Dx_u``,
        ``Dy_u``.
    """
    grid = u.grid
    if grid.dim != 2:
        raise ValueError("gradient map needs a 2D grid function")
    gx, gy = np.gradient(u.values, grid.h, edge_order=2)
    rows = []
    for node in grid.interior:
        x, y = grid.coords[node]
        rows.append({"kind": "mesh", "x": float(x), "y": float(y),
                     "Dx_u": float(gx.flat[node]), "Dy_u": float(gy.flat[node])})
    if circle_points > 0:
        theta = 2 * np.pi * np.arange(circle_points) / circle_points
        pts = np.clip(0.5 + 0.5 * np.column_stack([np.cos(theta), np.sin(theta)]), 0, 1)
        W = multilinear_weights(grid, pts)
        cx, cy = W @ gx.reshape(-1), W @ gy.reshape(-1)
        for (x, y), a, b in zip(pts, cx, cy):
            rows.append({"kind": "circle", "x": float(x), "y": float(y),
                         "Dx_u": float(a), "Dy_u": float(b)})
    return rows


def run_gradient_map(request):
    report, u = run_cell(request, request.n[0], request.stencil[0], request.solver[0])
    if u is None:
        log.error("solve failed: %s", report["message"])
        return "", False
    if request.save_solution:
        np.save(request.save_solution, u.flat)
    if not report["converged"]:
        log.warning("solve did not converge; mapping the last iterate")
    return _csv_text(MAP_FIELDS, gradient_map(u, request.circle_points)), report["converged"]


RUNNERS = {"solve": run_solve, "study": run_study, "compare": run_compare,
           "gradient-map": run_gradient_map}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="monge-ampere",
        description="Monotone finite difference solvers for det(D^2 u) = f.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, many_n=False, many_solvers=False):
        p.add_argument("--dim", type=int, default=2, choices=(2, 3))
        p.add_argument("--n", type=int, nargs="+" if many_n else None,
                       default=[31] if many_n else 31,
                       help="nodes per side (a list for study)")
        p.add_argument("--stencil", type=int, nargs="+" if many_n else None,
                       help="stencil points: 9, 17, 33 in 2D, 19 in 3D")
        p.add_argument("--example", default="c2", choices=EXAMPLES)
        p.add_argument("--solver", choices=METHODS, nargs="+" if many_solvers else None,
                       default=["newton", "semi-implicit"] if many_solvers else "newton")
        p.add_argument("--scheme", choices=SCHEMES, default="monotone")
        p.add_argument("--delta", type=float, help="regularization parameter")
        p.add_argument("--epsilon", type=float, help="Jacobian floor")
        p.add_argument("--tol", type=float, help="max-norm residual tolerance")
        p.add_argument("--max-iter", type=int)
        p.add_argument("--init", choices=INITS)
        p.add_argument("--coarse-factor", type=int,
                       help="compute the initial guess on a grid this much coarser")
        p.add_argument("--init-file", help=".npy of node values for --init given")
        p.add_argument("--output", "-o", help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"))

    p = sub.add_parser("solve", help="one solve, JSON report")
    common(p)
    p.add_argument("--save-solution", help="write node values to this .npy file")
    p = sub.add_parser("study", help="convergence table over n and stencil")
    common(p, many_n=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel cells")
    p = sub.add_parser("compare", help="several solvers on one problem")
    common(p, many_solvers=True)
    p = sub.add_parser("gradient-map", help="CSV of the gradient image of the grid")
    common(p)
    p.add_argument("--save-solution", help="write node values to this .npy file")
    p.add_argument("--circle-points", type=int, default=256)
    return parser


def request_from_args(args):
    def listify(x):
        return x if isinstance(x, list) or x is None else [x]
    return RunRequest(
        subcommand=args.subcommand, dim=args.dim, n=listify(args.n),
        stencil=listify(args.stencil), example=args.example,
        solver=listify(args.solver), scheme=args.scheme, delta=args.delta,
        epsilon=args.epsilon, tol=args.tol, max_iter=args.max_iter,
        init=args.init, coarse_factor=args.coarse_factor,
        init_file=args.init_file,
        save_solution=getattr(args, "save_solution", None),
        output=args.output, format=args.format,
        jobs=getattr(args, "jobs", 1),
        circle_points=getattr(args, "circle_points", 256))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    request = request_from_args(args)
    try:
        request.validate()
        text, ok = RUNNERS[request.subcommand](request)
    except UsageError as exc:
        parser.error(str(exc))
    if request.output:
        with open(request.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
