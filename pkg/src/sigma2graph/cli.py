"""Command-line entry point.

    python -m sigma2graph <command> [--config FILE] [--out DIR] [--seed N]
                          [--threads K] [--section.key=value ...]

Exit status: 0 success, 1 input error, 2 solver failure, 3 verification failure.
"""
import argparse
import logging
import os
import sys
import time
from contextlib import nullcontext

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__, barriers, config, curvature, dirichlet, entire, verify
from .errors import InputError, SolverError
from .grid import GridFunction, read_grid_csv, write_grid_csv

log = logging.getLogger(__name__)

OUT_ENV = "SIGMA2GRAPH_OUT"
EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    p = _Parser(prog="sigma2graph", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=config.COMMANDS)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="BLAS thread cap (0 = library default)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_overrides(extra):
    """``--section.key=value`` or ``--section.key value`` pairs."""
    out = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise InputError(f"unrecognized argument {tok!r}")
        key, eq, val = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise InputError(f"missing value for --{key}")
            i += 1
            val = extra[i]
        out.append((key, val))
        i += 1
    return out


def resolve_config(argv):
    args, extra = build_parser().parse_known_args(argv)
    cfg = config.load(args.config) if args.config else config.RunConfig()
    for key, val in parse_overrides(extra):
        cfg.set(key, val)
    cfg.run.command = args.command
    if args.seed is not None:
        cfg.run.seed = args.seed
    if args.threads is not None:
        cfg.run.threads = args.threads
    if args.out:
        cfg.run.out = args.out
    elif not cfg.run.out:
        cfg.run.out = os.environ.get(OUT_ENV, "out")
    return config.validate(cfg), args


# --- builders -----------------------------------------------------------------

def build_curvature(cfg):
    c = cfg.curvature
    if c.file:
        grid, _ = read_grid_csv(c.file)
        return curvature.sampled(grid)
    if c.name == "constant":
        return curvature.builtin("constant", h=c.h)
    return curvature.builtin(c.name, amp=c.amp)


def read_sphere_csv(path):
    """Asymptotic data on the circle: rows ``theta,value`` (``#`` comments)."""
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read sphere samples {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise InputError(f"{path}: expected two columns theta,value")
    return barriers.SphereFunction.from_angles(data[:, 0], data[:, 1])


def build_sphere(cfg):
    b = cfg.barrier
    if b.f_file:
        return read_sphere_csv(b.f_file)
    amp, mode = b.f_amp, b.f_mode
    return barriers.SphereFunction.from_callable(
        lambda y: amp * np.cos(mode * np.arctan2(y[..., 1], y[..., 0])), 2)


def build_barriers(cfg):
    b, dim = cfg.barrier, cfg.run.dim
    if b.kind == "hyperboloid":
        return barriers.hyperboloid_barriers(b.h1, b.h2, dim), None
    if b.kind == "treibergs":
        f = build_sphere(cfg)
        return barriers.treibergs_barriers(f, b.h1, b.h2), f
    lower, _ = read_grid_csv(b.lower_file)
    upper, _ = read_grid_csv(b.upper_file)
    if lower.dim != dim or upper.dim != dim:
        raise InputError("barrier grid dimension does not match run.dim")
    return barriers.BarrierPair(barriers.GridBarrier(lower), barriers.GridBarrier(upper),
                                None, "grid"), None


def solver_config(cfg):
    s = cfg.solver
    return dirichlet.SolverConfig(schedule=s.continuation, tol=s.tol, stage_tol=s.stage_tol,
                                  max_newton=s.max_newton, damping=s.damping, linear=s.linear)


def exact_reference(cfg):
    """The hyperboloid solving H = const with lightcone asymptotics, if applicable."""
    if cfg.curvature.file or cfg.curvature.name != "constant" or cfg.barrier.kind != "hyperboloid":
        return None
    return barriers.hyperboloid_for_pinching(cfg.curvature.h, cfg.run.dim)


# --- output -------------------------------------------------------------------

class Artifacts:
    """Writes files under the output directory with a common comment header."""

    def __init__(self, cfg):
        self.root = cfg.run.out
        os.makedirs(self.root, exist_ok=True)
        self.header = {"sigma2graph": __version__, "config_hash": cfg.digest(),
                       "numpy": np.__version__, "scipy": scipy.__version__}
        self.files = []

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.root, name)

    def _head(self):
        return "".join(f"# {k}: {v}\n" for k, v in self.header.items())

    def grid(self, name, g):
        write_grid_csv(self.path(name), g, self.header)

    def table(self, name, columns, rows):
        with open(self.path(name), "w") as fh:
            fh.write(self._head() + ",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")

    def keyvalue(self, name, items):
        with open(self.path(name), "w") as fh:
            fh.write(self._head())
            for k, v in items.items():
                fh.write(f"{k}={_cell(v)}\n")

    def text(self, name, body):
        with open(self.path(name), "w") as fh:
            fh.write(self._head() + body)

    def manifest(self, cfg, extra=None):
        items = {"command": cfg.run.command, "seed": cfg.run.seed}
        items.update(extra or {})
        items["files"] = ",".join(self.files + ["manifest.txt"])
        self.keyvalue("manifest.txt", items)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    return str(v)


# --- commands -----------------------------------------------------------------

def cmd_solve_dirichlet(cfg, art):
    H = build_curvature(cfg)
    bp, _ = build_barriers(cfg)
    d = cfg.domain
    u, rep = dirichlet.solve_dirichlet(H, bp, d.R, d.h, cfg.run.dim, solver_config(cfg))
    art.grid("u.csv", u)
    art.table("residual_history.csv", ["step", "t", "residual"],
              [(i, t, r) for i, (t, r) in enumerate(zip(rep.t_history, rep.residual_history))])
    summary = dict(rep.as_dict())
    ref = exact_reference(cfg)
    if ref is not None and cfg.barrier.h1 == cfg.curvature.h:
        summary["sup_error_vs_exact"] = float(np.max(np.abs(u.values - ref(u.points()))))
    art.keyvalue("report.txt", summary)
    art.manifest(cfg, {"R": d.R, "h": d.h, "converged": rep.converged})
    return summary, EXIT_OK


def cmd_solve_entire(cfg, art):
    H = build_curvature(cfg)
    bp, f = build_barriers(cfg)
    d = cfg.domain
    u, run = entire.solve_entire(H, bp, d.R0, d.schedule, d.h, cfg.solver.entire_tol,
                                 solver_config(cfg), cfg.run.dim, sphere=f)
    for st in run.stages:
        art.grid(f"stage_R{st.R:g}.csv", st.solution)
    art.grid("u.csv", u)
    art.table("gaps.csv", ["k", "R_k", "R_k1", "delta"],
              [(k, run.radii[k], run.radii[k + 1], g) for k, g in enumerate(run.gaps)])
    prof = entire.ring_profile(run.residuals)
    art.table("residual.csv", ["r", "sup_abs_residual", "mean_residual"],
              [(r, s, float(np.mean(run.residuals[r]))) for r, s in prof])
    summary = {"R0": d.R0, "schedule": list(run.radii), "gaps": list(run.gaps),
               "stopped_early": run.stopped_early, "warnings": len(run.warnings),
               "ring_residuals": [s for _, s in prof]}
    ref = exact_reference(cfg)
    if ref is not None:
        pts = u.points()
        mask = np.linalg.norm(pts, axis=-1) <= d.R0 + 1e-12
        summary["sup_error_vs_exact"] = float(np.max(np.abs(u.values - ref(pts))[mask]))
    art.keyvalue("report.txt", summary)
    art.manifest(cfg, {"schedule": list(run.radii), "gaps": list(run.gaps),
                       "ring_radii": [r for r, _ in prof],
                       "ring_residuals": [s for _, s in prof]})
    return summary, EXIT_OK


def cmd_barriers(cfg, art):
    bp, f = build_barriers(cfg)
    d = cfg.domain
    grid = GridFunction.box(d.R, d.h, cfg.run.dim)
    pts = grid.points()
    lower = grid.with_values(bp.lower(pts))
    upper = grid.with_values(bp.upper(pts))
    art.grid("lower.csv", lower)
    art.grid("upper.csv", upper)
    if cfg.barrier.kind != "grid":
        art.text("barriers.txt", "[lower]\n" + barriers.barrier_to_text(bp.lower)
                 + "[upper]\n" + barriers.barrier_to_text(bp.upper))
    summary = {"min_gap": float(np.min(upper.values - lower.values)),
               "slope_lower": barriers.discrete_slope(lower),
               "slope_upper": barriers.discrete_slope(upper)}
    if f is not None:
        summary["curvature_modulus"] = f.curvature_modulus
    art.keyvalue("report.txt", summary)
    art.manifest(cfg)
    status = EXIT_OK if summary["min_gap"] >= 0 else EXIT_VERIFY
    return summary, status


def cmd_oracle_radial(cfg, art):
    H = build_curvature(cfg)
    if not H.radial:
        raise InputError(f"curvature.name: {H.name} is not radial")
    bp, _ = build_barriers(cfg)
    dim, R = cfg.run.dim, cfg.domain.R
    x = np.zeros(dim)
    x[0] = R
    Hr = lambda r, z: float(H.of_radius(r, z, dim))  # noqa: E731
    prof = verify.radial_shoot(Hr, dim, R, float(bp.lower(x)))
    res = verify.radial_residual(prof, Hr)
    art.table("profile.csv", ["r", "u", "du", "lam_radial", "lam_angular", "sigma2"],
              zip(prof.r, prof.u, prof.du, prof.lam_radial, prof.lam_angular, prof.sigma2))
    summary = {"R": R, "u0": float(prof.u[0]), "max_residual": float(np.max(res))}
    art.keyvalue("report.txt", summary)
    art.manifest(cfg)
    return summary, EXIT_OK


def cmd_verify(cfg, art):
    v = cfg.verify
    results = verify.battery(cfg.run.seed, v.samples, v.ilt_samples, v.pairs, v.radial_cases)
    width = max(len(r.name) for r in results)
    lines = [f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  value={_cell(r.value)}"
             f"  threshold={_cell(r.threshold)}" for r in results]
    art.text("verify_table.txt", "\n".join(lines) + "\n")
    keys = ["count", "min", "max", "mean", "epsilon"]
    art.table("verify_samples.csv", ["suite", "passed"] + keys,
              [[r.name, int(r.passed)] + [r.stats.get(k, "") for k in keys] for r in results])
    art.manifest(cfg, {"suites": len(results), "failures": sum(not r.passed for r in results)})
    summary = {r.name: "PASS" if r.passed else "FAIL" for r in results}
    return summary, EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {
    "solve-dirichlet": cmd_solve_dirichlet,
    "solve-entire": cmd_solve_entire,
    "barriers": cmd_barriers,
    "oracle-radial": cmd_oracle_radial,
    "verify": cmd_verify,
}


def run(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, args = resolve_config(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    limits = threadpool_limits(cfg.run.threads) if cfg.run.threads else nullcontext()
    t0 = time.perf_counter()
    try:
        with limits:
            art = Artifacts(cfg)
            art.text("config.txt", cfg.to_text())
            summary, status = COMMANDS[cfg.run.command](cfg, art)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"sigma2graph {cfg.run.command}  config {cfg.digest()}  seed {cfg.run.seed}")
    for k, v in summary.items():
        print(f"  {k:<28} {_cell(v)}")
    print(f"  {'outputs':<28} {cfg.run.out}")
    print(f"  {'wall_time_s':<28} {time.perf_counter() - t0:.2f}")
    print("status:", {0: "ok", 3: "verification failed"}.get(status, status))
    return status


def main():
    sys.exit(run())
