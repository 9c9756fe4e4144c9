"""Truncated-domain Dirichlet problem H_2[u] = H(x, u), u = boundary data on
the box [-R, R]^n, solved by damped Newton inside a monotonized continuation.

For each continuation parameter t the frozen problem

    H_2[u] e^{-k u} = t H(x, v) e^{-k v} + (1 - t) H(x, phi_1) e^{-k phi_1}

is solved with v the previous continuation iterate.  A final coupled Newton
solve on H_2[u] - H(x, u) polishes the t = 1 fixed point.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

from . import geometry
from .errors import (EllipticityError, HypothesisError, SolverError, SolverStall,
                     SpacelikeLost)
from .grid import GridFunction, interior

log = logging.getLogger(__name__)

DIRECT_LIMIT_2D = 513**2
DIRECT_LIMIT = 40_000


@dataclass
class SolverConfig:
    schedule: tuple = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    tol: float = 1e-10
    stage_tol: float = None
    max_newton: int = 60
    shrink: float = 0.5
    min_step: float = 1e-12
    margin: float = 1e-12
    damping: float = 1.0
    barrier_tol_factor: float = 10.0
    linear: str = "auto"
    linear_rtol: float = 1e-10
    check_barriers: bool = True
    floor: float = 1e-12

    def stage_tolerance(self, h):
        if self.stage_tol is not None:
            return self.stage_tol
        return max(1e-9, 0.1 * h * h)


@dataclass
class ContinuationState:
    """Frozen data of one continuation stage."""

    t: float
    k: float
    v: GridFunction
    phi1: GridFunction
    H: object

    def rhs(self, pts):
        """Right-hand side at the interior points ``pts``."""
        sl = interior(self.v.dim)
        v = self.v.values[sl]
        p1 = self.phi1.values[sl]
        out = np.zeros(v.shape)
        if self.t != 0.0:
            out += self.t * self.H(pts, v) * np.exp(-self.k * v)
        if self.t != 1.0:
            out += (1.0 - self.t) * self.H(pts, p1) * np.exp(-self.k * p1)
        return out


@dataclass
class StepReport:
    step_length: float
    residual_before: float
    residual_after: float
    delta_norm: float
    nu_max: float
    margin_min: float


@dataclass
class SolverReport:
    iterations: int = 0
    residual: float = np.inf
    nu_max: float = np.nan
    margin_min: float = np.nan
    sandwich_violations: int = 0
    sandwich_constant: float = 0.0
    wall_time: float = 0.0
    k: float = 0.0
    converged: bool = False
    all_iterates_admissible: bool = True
    residual_history: list = field(default_factory=list)
    t_history: list = field(default_factory=list)
    strict_convexity_lost: bool = False
    rounding_limited: bool = False

    def as_dict(self):
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "nu_max": self.nu_max,
            "margin_min": self.margin_min,
            "sandwich_violations": self.sandwich_violations,
            "sandwich_constant": self.sandwich_constant,
            "wall_time": self.wall_time,
            "k": self.k,
            "converged": self.converged,
            "all_iterates_admissible": self.all_iterates_admissible,
            "strict_convexity_lost": self.strict_convexity_lost,
            "rounding_limited": self.rounding_limited,
        }


def interior_points(grid):
    return grid.points()[interior(grid.dim)]


def _check_jets(grad, hess, margin, where):
    """Spacelike check (raises) and admissibility data of interior jets."""
    sq = np.sum(grad**2, axis=-1)
    if np.any(~(sq < 1.0)):
        idx = np.unravel_index(int(np.argmax(np.where(np.isfinite(sq), sq, np.inf))), sq.shape)
        full = tuple(int(i) + 1 for i in idx)
        raise SpacelikeLost(f"{where}: spacelikeness lost at grid index {full}",
                            worst_index=full, worst_slope=float(np.sqrt(sq[idx])))
    s1, s2 = geometry.sigma1_sigma2(grad, hess)
    nu = 1.0 / np.sqrt(1.0 - sq)
    return s1, s2, nu


def h2_grid(u):
    """H_2 of a grid function at interior nodes (plus the interior jets)."""
    grad, hess = u.derivatives()
    _check_jets(grad, hess, 0.0, "h2_grid")
    return geometry.h2(grad, hess)


def residual(u, state, H=None):
    """H_2[u] e^{-k u} - RHS on the interior; zero on the boundary."""
    if H is not None and H is not state.H:
        state = ContinuationState(state.t, state.k, state.v, state.phi1, H)
    grad, hess = u.derivatives()
    _check_jets(grad, hess, 0.0, "residual")
    sl = interior(u.dim)
    vals = geometry.h2(grad, hess) * np.exp(-state.k * u.values[sl]) - state.rhs(interior_points(u))
    out = np.zeros(u.shape)
    out[sl] = vals
    return u.with_values(out)


def coupled_residual(u, H):
    """H_2[u] - H(x, u) on the interior; zero on the boundary."""
    grad, hess = u.derivatives()
    _check_jets(grad, hess, 0.0, "residual")
    sl = interior(u.dim)
    out = np.zeros(u.shape)
    out[sl] = geometry.h2(grad, hess) - H(interior_points(u), u.values[sl])
    return u.with_values(out)


# --- linear algebra -----------------------------------------------------------

def _offsets(dim):
    return [tuple(o) for o in np.array(np.meshgrid(*([[-1, 0, 1]] * dim), indexing="ij"))
            .reshape(dim, -1).T]


def stencil_weights(c, b, zeroth, h):
    """Map offset -> interior coefficient array of the linearized operator."""
    dim = b.shape[-1]
    w = {o: np.zeros(b.shape[:-1]) for o in _offsets(dim)}
    center = (0,) * dim
    w[center] += zeroth
    for i in range(dim):
        e = [0] * dim
        e[i] = 1
        ep, em = tuple(e), tuple(-x for x in e)
        w[center] += -2.0 * c[..., i, i] / h**2
        w[ep] += c[..., i, i] / h**2 + b[..., i] / (2.0 * h)
        w[em] += c[..., i, i] / h**2 - b[..., i] / (2.0 * h)
        for j in range(i + 1, dim):
            q = 2.0 * c[..., i, j] / (4.0 * h**2)
            for si, sj, sgn in ((1, 1, 1), (-1, -1, 1), (1, -1, -1), (-1, 1, -1)):
                o = [0] * dim
                o[i], o[j] = si, sj
                w[tuple(o)] += sgn * q
    return w


def assemble(weights, inner_shape):
    """Sparse matrix over interior unknowns in lexicographic order."""
    dim = len(inner_shape)
    N = int(np.prod(inner_shape))
    idx = np.arange(N).reshape(inner_shape)
    rows, cols, vals = [], [], []
    for o, wt in weights.items():
        src = []
        dst = []
        for ax, s in enumerate(o):
            m = inner_shape[ax]
            src.append(slice(max(0, -s), m - max(0, s)))
            dst.append(slice(max(0, s), m - max(0, -s)))
        r = idx[tuple(src)].ravel()
        cidx = idx[tuple(dst)].ravel()
        v = wt[tuple(src)].ravel()
        keep = v != 0
        rows.append(r[keep])
        cols.append(cidx[keep])
        vals.append(v[keep])
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    return A


def linear_solve(A, rhs, method="auto", rtol=1e-10, dim=2):
    N = A.shape[0]
    if method == "auto":
        limit = DIRECT_LIMIT_2D if dim == 2 else DIRECT_LIMIT
        method = "direct" if N <= limit else "iterative"
    if method == "direct":
        return splu(A.tocsc(), permc_spec="COLAMD").solve(rhs)
    ilu = spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
    M = LinearOperator(A.shape, ilu.solve)
    x, info = gmres(A, rhs, M=M, rtol=rtol, atol=0.0, restart=100, maxiter=50)
    if info != 0:
        raise SolverError(f"iterative linear solve did not converge (info={info})")
    return x


# --- Newton -------------------------------------------------------------------

def _evaluate(u, state, coupled):
    """Residual vector, interior jets data and linearization pieces."""
    grad, hess = u.derivatives()
    s1, s2, nu = _check_jets(grad, hess, 0.0, "newton")
    sl = interior(u.dim)
    pts = interior_points(u)
    uu = u.values[sl]
    H2 = geometry.h2(grad, hess)
    if coupled:
        F = H2 - state.H(pts, uu)
    else:
        F = H2 * np.exp(-state.k * uu) - state.rhs(pts)
    return F, grad, hess, s1, s2, nu, H2, pts, uu


def jacobian(u, state, coupled=False):
    """Sparse Jacobian of the (frozen or coupled) residual at ``u``."""
    F, grad, hess, s1, s2, nu, H2, pts, uu = _evaluate(u, state, coupled)
    return _jacobian_from(grad, hess, s1, s2, H2, pts, uu, state, coupled, u.spacing)


def _jacobian_from(grad, hess, s1, s2, H2, pts, uu, state, coupled, h):
    if np.any(~((s1 > 0) & (s2 > 0))):
        raise EllipticityError("linearization requested at a non-admissible iterate")
    c, b = geometry.h2_coefficients(grad, hess)
    if coupled:
        scale = np.ones(uu.shape)
        zeroth = -state.H.dH_dz(pts, uu)
    else:
        scale = np.exp(-state.k * uu)
        zeroth = -state.k * H2 * scale
    c = c * scale[..., None, None]
    b = b * scale[..., None]
    return assemble(stencil_weights(c, b, zeroth, h), uu.shape), zeroth


def newton_step(u, state, H=None, config=None, coupled=False):
    """One damped Newton step with a backtracking line search.

    Acceptance needs spacelikeness, admissibility (margin ``config.margin``)
    at every interior node and a decrease of the sup residual.
    """
    config = config or SolverConfig()
    if H is not None and H is not state.H:
        state = ContinuationState(state.t, state.k, state.v, state.phi1, H)
    F, grad, hess, s1, s2, nu, H2, pts, uu = _evaluate(u, state, coupled)
    if np.any(~((s1 > config.margin) & (s2 > config.margin))):
        raise EllipticityError("Newton step started from a non-admissible iterate")
    J, _ = _jacobian_from(grad, hess, s1, s2, H2, pts, uu, state, coupled, u.spacing)
    r0 = float(np.max(np.abs(F)))
    noise = rounding_floor(u, J)
    delta = linear_solve(J, -F.ravel(), config.linear, config.linear_rtol, u.dim)
    delta = delta.reshape(uu.shape)
    sl = interior(u.dim)
    s = config.damping
    last = {}
    while s >= config.min_step:
        trial = u.copy()
        trial.values[sl] += s * delta
        try:
            Ft, g_t, h_t, s1t, s2t, nut, *_ = _evaluate(trial, state, coupled)
        except SpacelikeLost as exc:
            last = {"reason": "spacelike", "step": s, "slope": exc.worst_slope}
            s *= config.shrink
            continue
        mt = geometry.admissibility_margin(s1t, s2t)
        ok_adm = np.all((s1t > config.margin) & (s2t > config.margin))
        rt = float(np.max(np.abs(Ft)))
        if ok_adm and (rt < r0 or rt <= config.floor):
            return trial, StepReport(s, r0, rt, float(np.max(np.abs(s * delta))),
                                     float(np.max(nut)), float(np.min(mt)))
        last = {"reason": "admissibility" if not ok_adm else "residual", "step": s,
                "residual": rt, "margin": float(np.min(mt))}
        s *= config.shrink
    if r0 <= noise:
        # no decrease possible below the rounding level of the stencils
        return u, StepReport(0.0, r0, r0, 0.0, float(np.max(nu)),
                             float(np.min(geometry.admissibility_margin(s1, s2))))
    raise SolverStall(f"line search exhausted at t={state.t}: {last}", last_t=state.t,
                      diagnostics={"residual": r0, **last})


def harmonic_extension(g):
    """Discrete harmonic function with the boundary values of ``g``."""
    dim = g.dim
    sl = interior(dim)
    inner = tuple(m - 2 for m in g.shape)
    c = np.broadcast_to(np.eye(dim), inner + (dim, dim))
    b = np.zeros(inner + (dim,))
    A = assemble(stencil_weights(c, b, np.zeros(inner), g.spacing), inner)
    _, hess = g.derivatives()
    rhs = -np.trace(hess, axis1=-2, axis2=-1)
    out = g.values.copy()
    out[sl] = linear_solve(A, rhs.ravel(), dim=dim).reshape(inner)
    return out


def rounding_floor(u, J):
    """Residual level set by rounding of the grid values in the stencils."""
    row = np.asarray(abs(J).sum(axis=1)).ravel()
    return 64.0 * np.finfo(float).eps * float(np.max(np.abs(u.values))) * float(np.max(row))


def monotonization_exponent(H, pts, phi1, phi2, levels=9):
    """max(sup_K (1/H) dH/dz, 0) over the sampled barrier slab K."""
    k = 0.0
    for s in np.linspace(0.0, 1.0, levels):
        z = (1.0 - s) * phi1 + s * phi2
        k = max(k, float(np.max(H.dH_dz(pts, z) / H(pts, z))))
    return max(k, 0.0)


def check_barriers(H, phi1, phi2, tol):
    """Discrete barrier hypotheses; raises HypothesisError listing worst points."""
    sl = interior(phi1.dim)
    pts = interior_points(phi1)
    problems = []
    order = phi1.values - phi2.values
    if np.max(order) > tol:
        idx = np.unravel_index(int(np.argmax(order)), order.shape)
        problems.append(("ordering phi1 <= phi2", idx, float(order[idx])))
    g1, h1 = phi1.derivatives()
    try:
        s1, s2, _ = _check_jets(g1, h1, 0.0, "lower barrier")
    except SpacelikeLost as exc:
        raise HypothesisError(f"lower barrier not spacelike: {exc}") from exc
    if np.any(~((s1 > 0) & (s2 > 0))):
        idx = np.unravel_index(int(np.argmin(np.minimum(s1, s2))), s1.shape)
        problems.append(("lower barrier admissible", tuple(i + 1 for i in idx),
                         float(min(s1[idx], s2[idx]))))
    sub = s2 - H(pts, phi1.values[sl]) + tol
    if np.min(sub) < 0:
        idx = np.unravel_index(int(np.argmin(sub)), sub.shape)
        problems.append(("H2[phi1] >= H(x, phi1)", tuple(i + 1 for i in idx), float(sub[idx] - tol)))
    g2, h2_ = phi2.derivatives()
    try:
        t1, t2, _ = _check_jets(g2, h2_, 0.0, "upper barrier")
    except SpacelikeLost as exc:
        raise HypothesisError(f"upper barrier not spacelike: {exc}") from exc
    adm = (t1 > 0) & (t2 > 0)
    sup = np.where(adm, H(pts, phi2.values[sl]) - t2 + tol, np.inf)
    if np.min(sup) < 0:
        idx = np.unravel_index(int(np.argmin(sup)), sup.shape)
        problems.append(("H2[phi2] <= H(x, phi2)", tuple(i + 1 for i in idx), float(sup[idx] - tol)))
    if problems:
        msg = "; ".join(f"{name} fails at {idx} (by {val:.3g})" for name, idx, val in problems)
        raise HypothesisError("barrier check failed: " + msg, problems)


def _iterate_stats(u, margin):
    grad, hess = u.derivatives()
    s1, s2, nu = _check_jets(grad, hess, 0.0, "iterate")
    m = geometry.admissibility_margin(s1, s2)
    return float(np.max(nu)), float(np.min(m)), bool(np.all((s1 > margin) & (s2 > margin)))


def newton_solve(u, state, config, tol, coupled, report):
    """Newton iterations at fixed state until the sup residual is <= tol."""
    F = (coupled_residual(u, state.H) if coupled else residual(u, state)).values
    r = float(np.max(np.abs(F)))
    report.residual_history.append(r)
    report.t_history.append(state.t)
    it = 0
    while r > tol:
        if it >= config.max_newton:
            raise SolverStall(f"no convergence in {it} Newton iterations at t={state.t} "
                              f"(residual {r:.3g})", last_t=state.t, diagnostics={"residual": r})
        u, step = newton_step(u, state, config=config, coupled=coupled)
        if step.step_length == 0.0:
            report.rounding_limited = True
            log.info("t=%.3f: residual %.3e at rounding level", state.t, r)
            break
        it += 1
        report.iterations += 1
        r = step.residual_after
        report.residual_history.append(r)
        report.t_history.append(state.t)
        report.nu_max = max(report.nu_max, step.nu_max) if np.isfinite(report.nu_max) else step.nu_max
        report.margin_min = min(report.margin_min, step.margin_min) if np.isfinite(report.margin_min) else step.margin_min
        log.debug("t=%.3f it=%d step=%.3g residual=%.3e", state.t, it, step.step_length, r)
    return u, r


def _sample(func, grid):
    return grid.with_values(func(grid.points()))


def solve_dirichlet(H, barriers, R, h, dim=None, config=None, boundary=None, initial=None):
    """Solve on [-R, R]^n with Dirichlet data ``boundary`` (default: the lower barrier).

    Returns ``(u, report)``.  The initial iterate is the lower barrier, plus the
    discrete harmonic extension of the boundary mismatch when ``boundary`` is given.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    dim = dim or getattr(barriers.lower, "dim", 2)
    grid = GridFunction.box(R, h, dim)
    phi1 = _sample(barriers.lower, grid)
    phi2 = _sample(barriers.upper, grid)
    tol_b = config.barrier_tol_factor * h * h
    if config.check_barriers:
        check_barriers(H, phi1, phi2, tol_b)
    sl = interior(dim)
    pts = interior_points(grid)
    k = monotonization_exponent(H, grid.points(), phi1.values, phi2.values)
    report = SolverReport(k=k)

    bmask = grid.boundary_mask
    data = phi1.values.copy() if boundary is None else _sample(boundary, grid).values
    if initial is None:
        u = phi1.copy()
        if boundary is not None:
            u.values += harmonic_extension(grid.with_values(np.where(bmask, data - phi1.values, 0.0)))
    else:
        u = _sample(initial, grid) if callable(initial) else initial.copy()
    u.values[bmask] = data[bmask]
    nu_max, margin, ok = _iterate_stats(u, config.margin)
    if not ok:
        raise EllipticityError("initial iterate is not admissible on the grid")
    g0, h0 = u.derivatives()
    report.strict_convexity_lost = bool(np.any(np.linalg.eigvalsh(h0) <= 0))
    if report.strict_convexity_lost:
        log.info("initial iterate is not strictly convex at every node")
    report.nu_max, report.margin_min = nu_max, margin

    stage_tol = max(config.stage_tolerance(h), config.tol)
    last_t = None
    try:
        for t in config.schedule:
            state = ContinuationState(float(t), k, u.copy(), phi1, H)
            u, _ = newton_solve(u, state, config, stage_tol, False, report)
            last_t = float(t)
        state = ContinuationState(1.0, k, u.copy(), phi1, H)
        u, r = newton_solve(u, state, config, config.tol, True, report)
    except SolverError as exc:
        if isinstance(exc, SolverStall):
            exc.last_t = last_t
        raise
    report.residual = r
    report.converged = True
    report.all_iterates_admissible = report.margin_min > 0
    over = np.maximum(phi1.values - u.values, u.values - phi2.values)
    report.sandwich_constant = max(0.0, float(np.max(over))) / h**2
    report.sandwich_violations = int(np.sum(over > tol_b))
    report.wall_time = time.perf_counter() - t0
    return u, report


def nu_max_inner(u, R0):
    """Largest tilt factor over interior nodes with |x| <= R0."""
    grad, _ = u.derivatives()
    pts = interior_points(u)
    mask = np.linalg.norm(pts, axis=-1) <= R0 + 1e-12
    sq = np.sum(grad**2, axis=-1)[mask]
    return float(np.max(1.0 / np.sqrt(1.0 - sq)))
