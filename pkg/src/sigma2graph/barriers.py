"""Explicit sub- and supersolutions: hyperboloids, Treibergs envelopes and
their mollified auxiliary functions."""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from .errors import DomainError, InputError, SearchFailure
from .grid import GridFunction

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
M_SAFETY = 1.25
# points x samples evaluated per chunk in envelope sweeps
_CHUNK = 4_000_000


def pinching_alpha(h, dim):
    """Semi-axis of the hyperboloid whose sigma_2 equals ``h``."""
    if not h > 0:
        raise DomainError(f"pinching constant must be positive, got {h}")
    return math.sqrt(dim * (dim - 1) / (2.0 * h))


@dataclass
class Hyperboloid:
    """x -> lift + sqrt(alpha^2 + |x - shift|^2)."""

    alpha: float
    dim: int = 2
    shift: np.ndarray = None
    lift: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"hyperboloid semi-axis must be positive, got {self.alpha}")
        if self.dim < 2:
            raise DomainError("dimension must be at least 2")
        self.shift = np.zeros(self.dim) if self.shift is None else np.asarray(self.shift, float)
        if self.shift.shape != (self.dim,):
            raise DomainError("shift has wrong length")

    @property
    def sigma2(self):
        return self.dim * (self.dim - 1) / (2.0 * self.alpha**2)

    def __call__(self, x):
        d = np.asarray(x, dtype=float) - self.shift
        return self.lift + np.sqrt(self.alpha**2 + np.sum(d * d, axis=-1))

    def gradient(self, x):
        d = np.asarray(x, dtype=float) - self.shift
        w = np.sqrt(self.alpha**2 + np.sum(d * d, axis=-1))
        return d / w[..., None]

    def hessian(self, x):
        d = np.asarray(x, dtype=float) - self.shift
        w = np.sqrt(self.alpha**2 + np.sum(d * d, axis=-1))[..., None, None]
        return np.eye(self.dim) / w - d[..., :, None] * d[..., None, :] / w**3


def hyperboloid_for_pinching(h, dim=2):
    return Hyperboloid(pinching_alpha(h, dim), dim)


# --- data on the sphere -----------------------------------------------------

def sphere_samples(dim, count):
    """Uniform angles on S^1, a Fibonacci lattice on S^2."""
    if count < 1:
        raise DomainError("empty sphere sampling")
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    if dim == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = np.pi * (1.0 + 5**0.5) * i
        s = np.sqrt(1.0 - z * z)
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
    raise DomainError(f"sphere sampling implemented for n = 2, 3 only (got {dim})")


def _homogeneous_gradient(func, y, step=1e-6):
    """Gradient of the 0-homogeneous extension x -> func(x/|x|) at unit y."""
    y = np.asarray(y, dtype=float)
    g = np.empty(y.shape)
    for j in range(y.shape[-1]):
        e = np.zeros(y.shape[-1])
        e[j] = step
        up = y + e
        dn = y - e
        up /= np.linalg.norm(up, axis=-1, keepdims=True)
        dn /= np.linalg.norm(dn, axis=-1, keepdims=True)
        g[..., j] = (func(up) - func(dn)) / (2.0 * step)
    return g


@dataclass
class SphereFunction:
    """Asymptotic data f on S^{n-1} with tangential gradient and modulus M."""

    points: np.ndarray
    values: np.ndarray
    grads: np.ndarray
    curvature_modulus: float
    func: Optional[Callable] = field(default=None, repr=False)

    @property
    def dim(self):
        return self.points.shape[-1]

    @classmethod
    def from_callable(cls, func, dim=2, count=None):
        """``func`` maps unit vectors of shape (..., n) to values."""
        count = count or (720 if dim == 2 else 4000)
        pts = sphere_samples(dim, count)
        vals = np.asarray(func(pts), dtype=float)
        grads = _homogeneous_gradient(func, pts)
        M = estimate_modulus(pts, vals, grads)
        return cls(pts, vals, grads, M, func)

    @classmethod
    def from_angles(cls, theta, values):
        """Circle data given only as samples; interpolated by a periodic spline."""
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=float)
        if theta.size == 0:
            raise DomainError("empty sphere sampling")
        order = np.argsort(np.mod(theta, 2 * np.pi))
        th = np.mod(theta, 2 * np.pi)[order]
        vals = values[order]
        spline = CubicSpline(np.append(th, th[0] + 2 * np.pi), np.append(vals, vals[0]),
                             bc_type="periodic")

        def func(y):
            return spline(np.mod(np.arctan2(y[..., 1], y[..., 0]), 2 * np.pi))

        pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
        grads = _homogeneous_gradient(func, pts)
        return cls(pts, vals, grads, estimate_modulus(pts, vals, grads), func)

    def value(self, y):
        if self.func is None:
            raise DomainError("sphere function has no evaluator off the samples")
        return np.asarray(self.func(y), dtype=float)

    def gradient(self, y):
        return _homogeneous_gradient(self.func, y)

    def slopes(self, y, grads, sign):
        """p(y) = Df(y) + sign * 2M y (sign=+1 lower, -1 upper)."""
        return grads + sign * 2.0 * self.curvature_modulus * y


def estimate_modulus(points, values, grads, safety=M_SAFETY):
    """Largest |f(x)-f(y)-Df(y)(x-y)| / |x-y|^2 over sampled pairs, times ``safety``."""
    diff = points[None, :, :] - points[:, None, :]  # [y, x] -> x - y
    dist2 = np.sum(diff * diff, axis=-1)
    rem = values[None, :] - values[:, None] - np.einsum("yd,yxd->yx", grads, diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(dist2 > 1e-14, np.abs(rem) / dist2, 0.0)
    return safety * float(q.max())


# --- envelopes --------------------------------------------------------------

@dataclass
class TreibergsEnvelope:
    """sup (lower) or inf (upper) over y of f(y) + offset - p(y).y + sqrt(a^2 + |x + p(y)|^2)."""

    kind: str
    alpha: float
    sphere: SphereFunction
    offset: float = 0.0
    refine: bool = True

    def __post_init__(self):
        if self.kind not in ("lower", "upper"):
            raise DomainError(f"envelope kind must be 'lower' or 'upper', got {self.kind!r}")
        if not self.alpha > 0:
            raise DomainError("envelope semi-axis must be positive")
        if self.sphere.points.shape[0] == 0:
            raise DomainError("empty sphere sampling")

    @property
    def sign(self):
        return 1.0 if self.kind == "lower" else -1.0

    @property
    def dim(self):
        return self.sphere.dim

    def _family(self, y, values, grads):
        p = self.sphere.slopes(y, grads, self.sign)
        c0 = values + self.offset - np.sum(p * y, axis=-1)
        return p, c0

    def members(self, x, y=None):
        """z(x, y) for every sampled direction y; shape (..., n_samples)."""
        sph = self.sphere
        if y is None:
            p, c0 = self._family(sph.points, sph.values, sph.grads)
        else:
            p, c0 = self._family(y, sph.value(y), sph.gradient(y))
        x = np.asarray(x, dtype=float)
        d = x[..., None, :] + p
        return c0 + np.sqrt(self.alpha**2 + np.sum(d * d, axis=-1))

    def _pointwise(self, x, y):
        """z(x_i, y_i) paired row by row."""
        p, c0 = self._family(y, self.sphere.value(y), self.sphere.gradient(y))
        d = x + p
        return c0 + np.sqrt(self.alpha**2 + np.sum(d * d, axis=-1))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.dim)
        out = np.empty(flat.shape[0])
        ns = self.sphere.points.shape[0]
        step = max(1, _CHUNK // ns)
        for s in range(0, flat.shape[0], step):
            out[s:s + step] = self._evaluate(flat[s:s + step])
        return out.reshape(x.shape[:-1])

    def _evaluate(self, x):
        z = self.members(x)
        pick = np.argmax if self.kind == "lower" else np.argmin
        j = pick(z, axis=1)
        best = z[np.arange(x.shape[0]), j]
        if not self.refine or self.sphere.func is None:
            return best
        if self.dim == 2:
            refined = self._golden_refine(x, j)
        else:
            refined = self._patch_refine(x, j)
        return np.maximum(best, refined) if self.kind == "lower" else np.minimum(best, refined)

    def _golden_refine(self, x, j):
        pts = self.sphere.points
        th0 = np.arctan2(pts[j, 1], pts[j, 0])
        width = 2.0 * np.pi / pts.shape[0]
        a, b = th0 - width, th0 + width
        sgn = 1.0 if self.kind == "lower" else -1.0

        def obj(th):
            y = np.stack([np.cos(th), np.sin(th)], axis=-1)
            return sgn * self._pointwise(x, y)

        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc, fd = obj(c), obj(d)
        for _ in range(40):
            left = fc > fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c_new = b - GOLDEN * (b - a)
            d_new = a + GOLDEN * (b - a)
            # one new evaluation per branch, reuse the other
            c, d = np.where(left, c_new, d), np.where(left, c, d_new)
            fc_old, fd_old = fc, fd
            fc = np.where(left, obj(c), fd_old)
            fd = np.where(left, fc_old, obj(d))
        return sgn * np.maximum(fc, fd)

    def _patch_refine(self, x, j):
        pts = self.sphere.points
        y0 = pts[j]
        width = math.sqrt(4.0 * math.pi / pts.shape[0])
        # tangent frame at y0
        ref = np.where(np.abs(y0[:, :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
        t1 = np.cross(y0, ref)
        t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
        t2 = np.cross(y0, t1)
        best = None
        for s1 in np.linspace(-width, width, 7):
            for s2 in np.linspace(-width, width, 7):
                y = y0 + s1 * t1 + s2 * t2
                y /= np.linalg.norm(y, axis=-1, keepdims=True)
                val = self._pointwise(x, y)
                if best is None:
                    best = val
                elif self.kind == "lower":
                    best = np.maximum(best, val)
                else:
                    best = np.minimum(best, val)
        return best


def treibergs_envelope(f, h1, h2, kind):
    """q_1 (kind='lower', semi-axis from h1) or q_2 (kind='upper', from h2)."""
    if not (h1 >= h2 > 0):
        raise DomainError(f"pinching requires h1 >= h2 > 0 (got h1={h1}, h2={h2})")
    if f.points.shape[0] == 0:
        raise DomainError("empty sphere sampling")
    h = h1 if kind == "lower" else h2
    return TreibergsEnvelope(kind, pinching_alpha(h, f.dim), f)


@dataclass
class GridBarrier:
    """A barrier supplied as samples on a grid."""

    grid: GridFunction

    @property
    def dim(self):
        return self.grid.dim

    def __call__(self, x):
        return self.grid.interpolate(x)


@dataclass
class BarrierPair:
    lower: Callable
    upper: Callable
    pinching: Optional[tuple] = None
    label: str = ""

    @property
    def dim(self):
        return self.lower.dim


def hyperboloid_barriers(h1, h2, dim=2):
    if not (h1 >= h2 > 0):
        raise DomainError(f"pinching requires h1 >= h2 > 0 (got h1={h1}, h2={h2})")
    return BarrierPair(hyperboloid_for_pinching(h1, dim), hyperboloid_for_pinching(h2, dim),
                       (h1, h2), f"hyperboloids h1={h1} h2={h2}")


def treibergs_barriers(f, h1, h2):
    return BarrierPair(treibergs_envelope(f, h1, h2, "lower"),
                       treibergs_envelope(f, h1, h2, "upper"), (h1, h2),
                       f"treibergs h1={h1} h2={h2}")


# --- mollification ----------------------------------------------------------

def bump_kernel(beta, h, dim):
    """Discrete (1 - (|x|/beta)^2)^4 bump with unit mass."""
    m = int(math.floor(beta / h + 1e-12))
    ax = h * np.arange(-m, m + 1)
    r2 = sum(c**2 for c in np.meshgrid(*([ax] * dim), indexing="ij"))
    w = np.clip(1.0 - r2 / beta**2, 0.0, None) ** 4
    return w / w.sum(), m


def mollify(g, beta):
    """Convolve a grid function with the bump of radius ``beta``.

    The result lives on the sub-grid where the bump fits entirely.
    """
    if beta < 2.0 * g.spacing - 1e-12:
        raise DomainError(f"beta={beta} is below twice the grid spacing {g.spacing}")
    kernel, m = bump_kernel(beta, g.spacing, g.dim)
    if any(s <= 2 * m for s in g.shape):
        raise DomainError("grid too small for the mollifier support")
    out = fftconvolve(g.values, kernel, mode="valid")
    return GridFunction(out, g.spacing, g.origin + m * g.spacing)


def discrete_slope(g):
    """Largest forward-difference quotient along the grid axes and diagonals."""
    v = g.values
    h = g.spacing
    best = 0.0
    for ax in range(g.dim):
        best = max(best, float(np.max(np.abs(np.diff(v, axis=ax)))) / h)
    grad, _ = g.derivatives()
    return max(best, float(np.sqrt(np.max(np.sum(grad**2, axis=-1)))))


# --- auxiliary functions for the interior estimates -------------------------

@dataclass
class AuxiliaryFunction:
    """Mollified auxiliary function with the constants that certify it."""

    psi: GridFunction
    epsilon: float
    alpha: float
    R0: float
    R1: float
    R2: float
    delta: float = 0.0
    theta: float = 0.0
    gaps: dict = field(default_factory=dict)


def _ring_points(r, dim, count=64):
    dirs = sphere_samples(dim, count)
    return r * dirs


def _first_radius(gap, r_start, r_stop, growth=2 ** 0.25, bisections=30):
    """Smallest radius on a geometric grid from which ``gap(r) > 0`` persists,
    sharpened by bisection."""
    radii = [r_start]
    while radii[-1] < r_stop:
        radii.append(radii[-1] * growth)
    ok = np.array([gap(r) > 0 for r in radii])
    if not ok[-1]:
        raise SearchFailure("no separating radius within the search range",
                            {float(r): float(gap(r)) for r in radii[-4:]})
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return radii[0]
    lo, hi = radii[bad[-1]], radii[bad[-1] + 1]
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def _sample_box(func, R, h, dim):
    g = GridFunction.box(R, h, dim)
    g.values = np.asarray(func(g.points()), dtype=float)
    return g


def _in_ball(g, r_in, r_out):
    rad = np.linalg.norm(g.points(), axis=-1)
    return (rad >= r_in) & (rad <= r_out)


def gradient_aid(f, h1, h2, R0, delta=None, spacing=0.125, beta=None, search_max=1e4):
    """Mollified q_1^eps with psi <= q_1 - delta on B_R0 and psi > q_2 on B_R2 \\ B_R1."""
    dim = f.dim
    beta = beta or 2.0 * spacing
    alpha1 = pinching_alpha(h1, dim)
    q1 = treibergs_envelope(f, h1, h2, "lower")
    q2 = treibergs_envelope(f, h1, h2, "upper")
    p1 = f.slopes(f.points, f.grads, 1.0)
    R = R0 + float(np.max(np.linalg.norm(p1, axis=-1)))
    delta0 = math.sqrt(alpha1**2 + R**2) - R
    if delta is None:
        delta = 0.5 * delta0
    if not 0 < delta < delta0:
        raise DomainError(f"delta must lie in (0, {delta0:.6g}), got {delta}")

    def excess(e):
        return e + math.sqrt(e * e + R * R) - (math.sqrt(alpha1**2 + R * R) - delta)

    lo, hi = 0.0, alpha1
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    eps = 0.9 * lo
    qe = TreibergsEnvelope("lower", eps, f, offset=eps)

    def gap(r):
        x = _ring_points(r, dim)
        return float(np.min(qe(x) - q2(x))) - 0.5 * eps

    R1 = max(_first_radius(gap, max(R0, 1.0), search_max), R0 * 1.01)
    R2 = 1.25 * R1
    margin = beta + spacing
    raw = _sample_box(qe, math.ceil((R2 + margin) / spacing) * spacing, spacing, dim)
    psi = mollify(raw, beta)
    pts = psi.points()
    inner = _in_ball(psi, 0.0, R0)
    ring = _in_ball(psi, R1, R2)
    low_gap = float(np.min(q1(pts[inner]) - delta - psi.values[inner]))
    high_gap = float(np.min(psi.values[ring] - q2(pts[ring])))
    if low_gap < 0 or high_gap <= 0:
        raise SearchFailure("mollified gradient aid violates its separation",
                            {"inner": low_gap, "ring": high_gap})
    theta = 1.0 - discrete_slope(psi)
    return AuxiliaryFunction(psi, eps, eps, R0, R1, R2, delta, theta,
                             {"inner": low_gap, "ring": high_gap})


def convex_aid(f, h1, h2, R0, epsilon=1.0, spacing=0.25, beta=None, search_max=1e4):
    """Mollified q_1^{-eps} with psi >= q_2 + 1 on B_R0 and psi < q_1 on B_R2 \\ B_R1."""
    dim = f.dim
    beta = beta or 2.0 * spacing
    q1 = treibergs_envelope(f, h1, h2, "lower")
    q2 = treibergs_envelope(f, h1, h2, "upper")
    inner_box = _sample_box(q2, R0, min(spacing, R0 / 8), dim)
    inside = _in_ball(inner_box, 0.0, R0)
    top = float(np.max(inner_box.values[inside])) + 2.0
    p1 = f.slopes(f.points, f.grads, 1.0)
    base = f.values - epsilon - np.sum(p1 * f.points, axis=-1)
    alpha = max(top - float(np.min(base)), pinching_alpha(h1, dim))
    qm = TreibergsEnvelope("lower", alpha, f, offset=-epsilon)

    def gap(r):
        x = _ring_points(r, dim)
        return float(np.min(q1(x) - qm(x))) - 0.5 * epsilon

    R1 = max(_first_radius(gap, max(R0, 1.0), search_max), R0 * 1.01)
    R2 = 1.25 * R1
    margin = beta + spacing
    raw = _sample_box(qm, math.ceil((R2 + margin) / spacing) * spacing, spacing, dim)
    psi = mollify(raw, beta)
    pts = psi.points()
    inner = _in_ball(psi, 0.0, R0)
    ring = _in_ball(psi, R1, R2)
    low_gap = float(np.min(psi.values[inner] - q2(pts[inner]) - 1.0))
    high_gap = float(np.min(q1(pts[ring]) - psi.values[ring]))
    if low_gap < 0 or high_gap <= 0:
        raise SearchFailure("mollified convex aid violates its separation",
                            {"inner": low_gap, "ring": high_gap})
    theta = 1.0 - discrete_slope(psi)
    return AuxiliaryFunction(psi, epsilon, alpha, R0, R1, R2, 0.0, theta,
                             {"inner": low_gap, "ring": high_gap})


def epsilon_shifted_envelopes(f, h1, h2, R0, delta=None, **kwargs):
    """Both auxiliary functions: (gradient aid, convex aid)."""
    grad_kw = {k: kwargs[k] for k in ("spacing", "beta") if k in kwargs}
    conv_kw = {k[7:]: v for k, v in kwargs.items() if k.startswith("convex_")}
    return gradient_aid(f, h1, h2, R0, delta, **grad_kw), convex_aid(f, h1, h2, R0, **conv_kw)


def lightcone_aid(phi1, R0, phi2=None, search_max=1e4):
    """psi = eps + sqrt(eps^2 + |x|^2) with eps = delta/2, delta = delta0/2.

    Returns ``(psi, delta, R1)``; R1 is where psi starts to exceed ``phi2``
    (None when ``phi2`` is not given).
    """
    dim = phi1.dim
    r = np.linspace(0.0, R0, 2001)
    x = np.zeros((r.size, dim))
    x[:, 0] = r
    if isinstance(phi1, Hyperboloid) and not np.any(phi1.shift) and phi1.lift == 0:
        delta0 = float(np.min(phi1(x) - r))
    else:
        box = _sample_box(phi1, R0, R0 / 64, dim)
        mask = _in_ball(box, 0.0, R0)
        delta0 = float(np.min(box.values[mask] - np.linalg.norm(box.points()[mask], axis=-1)))
    if delta0 <= 0:
        raise DomainError("lower barrier touches the light cone on B_R0")
    delta = 0.5 * delta0
    eps = 0.5 * delta
    psi = Hyperboloid(eps, dim, lift=eps)
    R1 = None
    if phi2 is not None:
        def gap(rad):
            pts = _ring_points(rad, dim)
            return float(np.min(psi(pts) - phi2(pts)))
        R1 = _first_radius(gap, max(R0, 1.0), search_max)
    return psi, delta, R1


def nu_bound_from_aid(psi, phi2, R1, alpha=None, samples=4001, dim=2):
    """Tilt bound 1/sqrt(1 - (s/(1-alpha))^2) with s = sup |D psi| on {psi <= phi2}.

    ``psi`` must expose ``gradient``.  The sup is taken over a radial fan of
    rays inside B_R1.  ``alpha`` defaults to (1 - s)/2.
    """
    r = np.linspace(0.0, R1, samples)
    best = 0.0
    for d in sphere_samples(dim, 32 if dim == 2 else 200):
        x = r[:, None] * d
        keep = psi(x) <= phi2(x)
        if np.any(keep):
            best = max(best, float(np.max(np.linalg.norm(psi.gradient(x[keep]), axis=-1))))
    if best >= 1:
        raise DomainError("auxiliary function is not spacelike on {psi <= phi2}")
    if alpha is None:
        alpha = 0.5 * (1.0 - best)
    if not 0 < alpha < 1 - best:
        raise DomainError(f"need 0 < alpha < 1 - sup|D psi| = {1 - best:.3g}")
    return 1.0 / math.sqrt(1.0 - (best / (1.0 - alpha)) ** 2), best


# --- serialization ----------------------------------------------------------

def barrier_to_text(b):
    """Plain-text key=value serialization of a hyperboloid or envelope."""
    if isinstance(b, Hyperboloid):
        lines = ["kind=hyperboloid", f"dim={b.dim}", f"alpha={b.alpha!r}",
                 "shift=" + ",".join(repr(float(s)) for s in b.shift), f"lift={b.lift!r}"]
    elif isinstance(b, TreibergsEnvelope):
        if b.dim != 2:
            raise InputError("envelope serialization supports n = 2 only")
        th = np.arctan2(b.sphere.points[:, 1], b.sphere.points[:, 0])
        lines = [f"kind=treibergs_{b.kind}", "dim=2", f"alpha={b.alpha!r}",
                 f"offset={b.offset!r}", f"sphere.M={b.sphere.curvature_modulus!r}",
                 "sphere.theta=" + ",".join(repr(float(t)) for t in th),
                 "sphere.values=" + ",".join(repr(float(v)) for v in b.sphere.values)]
    else:
        raise InputError(f"cannot serialize barrier of type {type(b).__name__}")
    return "\n".join(lines) + "\n"


def barrier_from_text(text):
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise InputError(f"malformed barrier line: {line!r}")
        kv[key.strip()] = val.strip()
    kind = kv.get("kind")
    try:
        if kind == "hyperboloid":
            dim = int(kv["dim"])
            shift = [float(s) for s in kv["shift"].split(",")] if kv.get("shift") else None
            return Hyperboloid(float(kv["alpha"]), dim, shift, float(kv.get("lift", 0.0)))
        if kind in ("treibergs_lower", "treibergs_upper"):
            theta = [float(t) for t in kv["sphere.theta"].split(",")]
            vals = [float(v) for v in kv["sphere.values"].split(",")]
            sph = SphereFunction.from_angles(theta, vals)
            if "sphere.M" in kv:
                sph.curvature_modulus = max(sph.curvature_modulus, float(kv["sphere.M"]))
            return TreibergsEnvelope(kind.split("_")[1], float(kv["alpha"]), sph,
                                     float(kv.get("offset", 0.0)))
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed barrier definition: {exc}") from exc
    raise InputError(f"unknown barrier kind {kind!r}")
