"""Independent oracles and inequality batteries."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import geometry
from .errors import DomainError, HypothesisError, SolverError
from .grid import GridFunction, interior


# --- radial shooting oracle -------------------------------------------------

@dataclass
class RadialProfile:
    """Radial solution u(r) on [0, R] with principal curvatures."""

    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    dim: int
    lam_radial: np.ndarray = None
    lam_angular: np.ndarray = None

    @property
    def sigma2(self):
        n = self.dim
        return ((n - 1) * self.lam_radial * self.lam_angular
                + 0.5 * (n - 1) * (n - 2) * self.lam_angular**2)

    def __call__(self, x):
        """Profile evaluated at |x| (cubic Hermite between nodes)."""
        rho = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        if np.any(rho > self.r[-1] * (1 + 1e-12)):
            raise DomainError("point outside the radial profile")
        spline = CubicHermiteSpline(self.r, self.u, self.du)
        return spline(rho)


def _radial_rhs(H, dim):
    """ODE for (u, J) with J(r) = r^{-n} int_0^r s^{n-1} H(s, u(s)) ds.

    With g = r * lambda_angular one has (r^{n-2} g^2)' = 2 r^{n-1} sigma_2 / (n-1),
    hence g = r sqrt(2 J / (n-1)) and u' = g / sqrt(1 + g^2).  At the axis
    J(0) = H(0, u0) / n and J'(0) = 0.
    """
    def slope(r, J):
        g = r * math.sqrt(max(2.0 * J / (dim - 1), 0.0))
        return g / math.sqrt(1.0 + g * g)

    def rhs(r, y):
        u, J = y
        dJ = 0.0 if r == 0.0 else (float(H(r, u)) - dim * J) / r
        return np.array([slope(r, J), dJ])

    return rhs, slope


def _integrate(H, dim, R, u0, steps):
    rhs, slope = _radial_rhs(H, dim)
    dr = R / steps
    r = np.linspace(0.0, R, steps + 1)
    Y = np.empty((steps + 1, 2))
    Y[0] = (u0, float(H(0.0, u0)) / dim)
    y = Y[0].copy()
    for i in range(steps):
        ri = r[i]
        k1 = rhs(ri, y)
        k2 = rhs(ri + 0.5 * dr, y + 0.5 * dr * k1)
        k3 = rhs(ri + 0.5 * dr, y + 0.5 * dr * k2)
        k4 = rhs(ri + dr, y + dr * k3)
        y = y + dr / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        Y[i + 1] = y
    du = np.array([slope(ri, Ji) for ri, Ji in zip(r, Y[:, 1])])
    return r, Y[:, 0], Y[:, 1], du


def radial_shoot(H_radial, dim, R, boundary_value, steps=None, bracket=None, tol=1e-12):
    """Solve sigma_2 = H(r, u), u'(0) = 0, u(R) = boundary_value by shooting on u(0).

    ``H_radial(r, z)`` takes scalars.  Fixed-step RK4 with step <= 1e-4 R.
    """
    steps = steps or 10_000
    if R / steps > 1e-4 * R * (1 + 1e-12):
        raise DomainError("radial step must not exceed 1e-4 R")

    def end(u0):
        return _integrate(H_radial, dim, R, u0, steps)[1][-1] - boundary_value

    if bracket is None:
        lo, hi = boundary_value - R - 1.0, boundary_value
        scan = []
        for _ in range(60):
            flo, fhi = end(lo), end(hi)
            scan.append((lo, flo, hi, fhi))
            if flo <= 0 <= fhi:
                break
            lo, hi = lo - (hi - lo), hi + (hi - lo)
        else:
            raise SolverError(f"shooting bracket not found; scan={scan[-3:]}")
    else:
        lo, hi = bracket
        if not end(lo) <= 0 <= end(hi):
            raise SolverError(f"shooting bracket {bracket} does not straddle the target")
    # the end value is nearly affine in u(0); secant-safeguarded bisection
    flo, fhi = end(lo), end(hi)
    for _ in range(200):
        mid = lo - flo * (hi - lo) / (fhi - flo) if fhi != flo else 0.5 * (lo + hi)
        if not lo < mid < hi:
            mid = 0.5 * (lo + hi)
        fm = end(mid)
        if abs(fm) <= tol or hi - lo <= tol:
            lo = hi = mid
            break
        if fm < 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    u0 = 0.5 * (lo + hi)
    r, u, I, du = _integrate(H_radial, dim, R, u0, steps)
    prof = RadialProfile(r, u, du, dim)
    _fill_curvatures(prof)
    return prof


def _fill_curvatures(prof):
    r, du = prof.r, prof.du
    w = np.sqrt(1.0 - du**2)
    g = du / w
    # g' by fourth-order differences, second-order at the ends
    dr = r[1] - r[0]
    dg = np.gradient(g, dr, edge_order=2)
    dg[2:-2] = (-g[4:] + 8 * g[3:-1] - 8 * g[1:-3] + g[:-4]) / (12 * dr)
    lam_a = np.empty_like(g)
    lam_a[1:] = g[1:] / r[1:]
    lam_a[0] = dg[0]
    prof.lam_radial = dg
    prof.lam_angular = lam_a


def radial_residual(prof, H_radial, skip=4):
    """|sigma_2 - H| along the profile (nodes next to the ends excluded)."""
    target = np.array([float(H_radial(ri, ui)) for ri, ui in zip(prof.r, prof.u)])
    res = np.abs(prof.sigma2 - target)
    return res[skip:-skip]


# --- ILT inequality ---------------------------------------------------------

def ilt_check(pc, i0, eps):
    """Check eps * s_{1,i0} lam_{i0}^2 <= sum_{k != i0} s_{1,k} lam_k^2.

    Returns ``(holds, ratio)`` with ratio = rhs / (s_{1,i0} lam_{i0}^2).
    """
    lam = np.asarray(pc.lambdas if hasattr(pc, "lambdas") else pc, dtype=float)
    s1k = lam.sum() - lam
    if lam[i0] > 0:
        raise DomainError(f"lambda_{i0} = {lam[i0]} > 0: inequality hypothesis not met")
    mask = np.arange(lam.size) != i0
    rhs = float(np.sum(s1k[mask] * lam[mask] ** 2))
    denom = float(s1k[i0] * lam[i0] ** 2)
    ratio = math.inf if denom == 0 else rhs / denom
    return eps * denom <= rhs, ratio


def sample_gamma2(n, count, rng, low=-1.0, high=3.0):
    """``count`` points of Gamma_2 by rejection from the box [low, high]^n."""
    chunks, got = [], 0
    while got < count:
        lam = rng.uniform(low, high, size=(2 * (count - got) + 16, n))
        lam = lam[(lam.sum(axis=1) > 0) & (geometry.sigma_k(lam, 2) > 0)]
        chunks.append(lam)
        got += lam.shape[0]
    return np.concatenate(chunks)[:count]


def ilt_ratios(lam):
    """Ratios for every sample/index pair with lambda_{i0} <= 0 (vectorized)."""
    s1k = lam.sum(axis=1, keepdims=True) - lam
    w = s1k * lam**2
    total = w.sum(axis=1, keepdims=True)
    rows, cols = np.nonzero(lam <= 0)
    denom = w[rows, cols]
    rhs = total[rows, 0] - denom
    with np.errstate(divide="ignore"):
        ratio = np.where(denom > 0, rhs / np.where(denom > 0, denom, 1.0), np.inf)
    return ratio, rows, cols


def empirical_ilt_epsilon(n, samples=100_000, seed=0):
    """Smallest observed ILT ratio over random Gamma_2 points with a
    nonpositive entry."""
    if n < 3:
        raise DomainError("Gamma_2 has no nonpositive principal curvature for n < 3")
    rng = np.random.default_rng(seed)
    lam = sample_gamma2(n, samples, rng)
    ratio, _, _ = ilt_ratios(lam)
    if ratio.size == 0:
        raise DomainError("no qualifying sample")
    return float(np.min(ratio))


def maclaurin_violations(lam, rtol=1e-12):
    s1 = lam.sum(axis=-1)
    s2 = geometry.sigma_k(lam, 2)
    n = lam.shape[-1]
    bound = (n - 1) / (2.0 * n) * s1**2
    return int(np.sum(s2 > bound * (1 + rtol) + 1e-300))


def homogeneity_error(lam, c, k):
    """Relative error of sigma_k(c lam) = c^k sigma_k(lam)."""
    a = geometry.sigma_k(c[:, None] * lam, k)
    b = c**k * geometry.sigma_k(lam, k)
    scale = np.maximum(np.abs(b), geometry.sigma_k(np.abs(c[:, None] * lam), k))
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(a - b) / scale))


# --- comparison and uniqueness ----------------------------------------------

@dataclass
class ComparisonReport:
    min_difference: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)


def _sample_on(func, grid):
    if isinstance(func, GridFunction):
        return func.values
    return np.asarray(func(grid.points()), dtype=float)


def comparison_experiment(H, v, u, R, h, dim=2, levels=5):
    """Discrete check of the comparison principle: v <= u in the closed box.

    ``v`` (admissible, H_2[v] >= H(., v)) and ``u`` (H_2[u] <= H(., u)) are
    callables or grid functions; hypotheses are checked with tolerance 10 h^2
    and an HypothesisError names the first failing one.
    """
    grid = GridFunction.box(R, h, dim)
    tol = 10.0 * h * h
    V = grid.with_values(_sample_on(v, grid))
    U = grid.with_values(_sample_on(u, grid))
    pts = grid.points()
    lo = np.minimum(V.values, U.values)
    hi = np.maximum(V.values, U.values)
    dz = min(float(np.min(H.dH_dz(pts, lo + s * (hi - lo)))) for s in np.linspace(0, 1, levels))
    if dz < 0:
        raise HypothesisError(f"dH/dz >= 0 violated (min {dz:.3g})")
    sl = interior(dim)
    ipts = pts[sl]
    gv, hv = V.derivatives()
    if np.any(np.sum(gv**2, axis=-1) >= 1) or np.any(np.sum(U.derivatives()[0] ** 2, axis=-1) >= 1):
        raise HypothesisError("spacelikeness violated")
    s1, s2 = geometry.sigma1_sigma2(gv, hv)
    if np.any(~((s1 > 0) & (s2 > 0))):
        raise HypothesisError("v admissible violated")
    if np.min(s2 - H(ipts, V.values[sl])) < -tol:
        raise HypothesisError("H2[v] >= H(., v) violated")
    gu, hu = U.derivatives()
    if np.max(geometry.h2(gu, hu) - H(ipts, U.values[sl])) > tol:
        raise HypothesisError("H2[u] <= H(., u) violated")
    bmask = grid.boundary_mask
    if np.max(V.values[bmask] - U.values[bmask]) > tol:
        raise HypothesisError("v <= u on the boundary violated")
    diff = float(np.min(U.values - V.values))
    return ComparisonReport(diff, tol, diff >= -tol, {"min_dHdz": dz})


def random_comparison_pairs(count, rng, dim=2, R=2.0, h=1.0 / 16):
    """Perturbed-hyperboloid pairs (v, u, H) that satisfy the comparison
    hypotheses, filtered by :func:`comparison_experiment`'s own checks."""
    from .barriers import Hyperboloid, pinching_alpha
    from .curvature import constant, increasing_tanh
    pairs = []
    attempts = 0
    while len(pairs) < count:
        attempts += 1
        if attempts > 100 * count:
            raise SolverError("could not generate enough hypothesis-satisfying pairs")
        H = constant(rng.uniform(0.5, 2.0)) if rng.random() < 0.5 else increasing_tanh(rng.uniform(0.0, 0.3))
        hi, lo = H.bounds
        hv = hi * rng.uniform(1.0, 1.5)
        hu = lo * rng.uniform(0.6, 1.0)
        v = Hyperboloid(pinching_alpha(hv, dim), dim, rng.uniform(-0.5, 0.5, dim), rng.uniform(0.0, 1.0))
        u = Hyperboloid(pinching_alpha(hu, dim), dim, rng.uniform(-0.5, 0.5, dim), rng.uniform(0.0, 1.0))
        try:
            rep = comparison_experiment(H, v, u, R, h, dim)
        except HypothesisError:
            continue
        pairs.append((H, v, u, rep))
    return pairs


def uniqueness_experiment(u, v, R0):
    """sup |u - v| over the common ball B_R0 (both resampled to a common grid)."""
    h = min(u.spacing, v.spacing)
    common = GridFunction.box(R0, h, u.dim)
    pts = common.points()
    mask = np.linalg.norm(pts, axis=-1) <= R0 + 1e-12
    du = u.interpolate(pts[mask]) - v.interpolate(pts[mask])
    return float(np.max(np.abs(du)))


# --- full battery -----------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    passed: bool
    value: float
    threshold: float
    stats: dict = field(default_factory=dict)


def _stats(x):
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return {"count": 0, "min": math.nan, "max": math.nan, "mean": math.nan}
    return {"count": int(x.size), "min": float(x.min()), "max": float(x.max()),
            "mean": float(x.mean())}


def maclaurin_suite(n, samples, rng):
    lam = sample_gamma2(n, samples, rng)
    s1 = lam.sum(axis=1)
    slack = (n - 1) / (2.0 * n) * s1**2 - geometry.sigma_k(lam, 2)
    bad = maclaurin_violations(lam)
    return SuiteResult(f"maclaurin_n{n}", bad == 0, bad, 0, _stats(slack))


def ilt_suite(n, samples, rng):
    """Empirical epsilon from one sample, checked at 0.9 eps on a fresh one."""
    eps = empirical_ilt_epsilon(n, samples, int(rng.integers(2**32)))
    ratio, _, _ = ilt_ratios(sample_gamma2(n, samples, rng))
    bad = int(np.sum(ratio < 0.9 * eps))
    return SuiteResult(f"ilt_n{n}", bad == 0, bad, 0, {"epsilon": eps, **_stats(ratio)})


def homogeneity_suite(samples, rng, dims=(2, 3, 4)):
    worst = 0.0
    for n in dims:
        lam = rng.normal(size=(samples, n))
        c = rng.uniform(0.1, 10.0, size=samples)
        for k in range(1, n + 1):
            worst = max(worst, homogeneity_error(lam, c, k))
    return SuiteResult("sigma_k_homogeneity", worst <= 1e-12, worst, 1e-12)


def radial_hyperboloid_suite(cases, rng, R=2.0):
    from .barriers import hyperboloid_for_pinching
    errs = []
    for _ in range(cases):
        n = int(rng.integers(2, 4))
        h = float(rng.uniform(0.5, 2.0))
        hyp = hyperboloid_for_pinching(h, n)
        x = np.zeros(n)
        x[0] = R
        prof = radial_shoot(lambda r, z: h, n, R, float(hyp(x)))
        pts = np.zeros((prof.r.size, n))
        pts[:, 0] = prof.r
        errs.append(float(np.max(np.abs(prof.u - hyp(pts)))))
    worst = max(errs)
    return SuiteResult("radial_hyperboloids", worst <= 1e-8, worst, 1e-8, _stats(errs))


def comparison_suite(count, rng):
    pairs = random_comparison_pairs(count, rng)
    mins = [rep.min_difference for *_, rep in pairs]
    bad = sum(not rep.passed for *_, rep in pairs)
    return SuiteResult("comparison_pairs", bad == 0, bad, 0, _stats(mins))


def battery(seed=0, samples=10_000, ilt_samples=100_000, pairs=100, radial_cases=10):
    """Every suite in a fixed order; each draws from its own seeded stream."""
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(7)]
    out = [maclaurin_suite(n, samples, streams[i]) for i, n in enumerate((2, 3, 4))]
    out.append(ilt_suite(3, ilt_samples, streams[3]))
    out.append(homogeneity_suite(samples, streams[4]))
    out.append(radial_hyperboloid_suite(radial_cases, streams[5]))
    out.append(comparison_suite(pairs, streams[6]))
    return out
