"""Expanding-domain construction of entire solutions."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .barriers import sphere_samples
from .dirichlet import SolverConfig, solve_dirichlet
from .errors import DomainError, SolverError, StageFailure
from .grid import GridFunction

log = logging.getLogger(__name__)


def default_schedule(R0, stages=3):
    first = max(2.0 * R0, R0 + 2.0)
    return tuple(first * 2.0**i for i in range(stages))


@dataclass
class Stage:
    R: float
    solution: GridFunction
    report: object


@dataclass
class ExpansionRun:
    R0: float
    schedule: tuple
    h: float
    stages: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    stopped_early: bool = False

    @property
    def radii(self):
        return [s.R for s in self.stages]


def common_grid(R0, h, dim):
    return GridFunction.box(R0, h, dim)


def resample(u, target):
    """Multilinear resampling of ``u`` onto the nodes of ``target``."""
    return target.with_values(u.interpolate(target.points()))


def stabilization_gap(u_prev, u_next, R0):
    """sup over B_R0 of |u_next - u_prev| after resampling to a common grid."""
    h = min(u_prev.spacing, u_next.spacing)
    common = common_grid(R0, h, u_prev.dim)
    a = resample(u_prev, common).values
    b = resample(u_next, common).values
    mask = np.linalg.norm(common.points(), axis=-1) <= R0 + 1e-12
    return float(np.max(np.abs(a - b)[mask]))


def solve_entire(H, barriers, R0, schedule=None, h=1.0 / 16, tol=1e-8, config=None,
                 dim=None, sphere=None):
    """Solve on growing boxes with lower-barrier boundary data until the
    stabilization gap on B_R0 drops below ``tol`` or the schedule ends.

    Returns the last stage resampled to the [-R0, R0]^n grid and the run.
    """
    dim = dim or getattr(barriers.lower, "dim", 2)
    schedule = tuple(float(r) for r in (schedule or default_schedule(R0)))
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError(f"schedule must be strictly increasing: {schedule}")
    if schedule[0] <= R0:
        raise DomainError(f"first radius {schedule[0]} must exceed R0={R0}")
    run = ExpansionRun(R0, schedule, h)
    for R in schedule:
        try:
            u, report = solve_dirichlet(H, barriers, R, h, dim, config)
        except SolverError as exc:
            raise StageFailure(f"stage R={R} failed: {exc}", partial_run=run) from exc
        run.stages.append(Stage(R, u, report))
        log.info("stage R=%g: %d Newton iterations, residual %.2e", R, report.iterations,
                 report.residual)
        if len(run.stages) > 1:
            gap = stabilization_gap(run.stages[-2].solution, u, R0)
            run.gaps.append(gap)
            if len(run.gaps) > 1 and gap > 10.0 * run.gaps[-2]:
                run.warnings.append(f"gap grew by more than 10x at R={R}: "
                                    f"{run.gaps[-2]:.3g} -> {gap:.3g}")
            if gap < tol:
                run.stopped_early = R != schedule[-1]
                break
    last = run.stages[-1].solution
    if sphere is not None:
        run.residuals = asymptotic_residual(last, sphere)
    elif getattr(barriers, "pinching", None) is not None:
        run.residuals = asymptotic_residual(last, None)
    return resample(last, common_grid(R0, h, dim)), run


def asymptotic_residual(u, f=None, fractions=(0.25, 0.5, 0.75), directions=32, radii=None):
    """u(r x) - r - f(x) on rings r = fraction * R for sampled unit directions x.

    Returns a dict radius -> array of residuals (f = 0 when omitted).
    """
    R = float(np.min(np.abs(np.concatenate([u.origin, u.upper]))))
    dirs = sphere_samples(u.dim, directions if u.dim == 2 else 4 * directions)
    fvals = np.zeros(dirs.shape[0]) if f is None else np.asarray(f.value(dirs), dtype=float)
    out = {}
    for r in (radii if radii is not None else [frac * R for frac in fractions]):
        if r > R:
            raise DomainError(f"ring r={r} outside the domain")
        out[r] = u.interpolate(r * dirs) - r - fvals
    return out


def ring_profile(residuals):
    """(radius, sup |residual|) pairs sorted by radius."""
    return [(r, float(np.max(np.abs(v)))) for r, v in sorted(residuals.items())]
