"""Uniform Cartesian grids, centered difference stencils and the grid CSV format."""
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, InputError


@dataclass
class GridFunction:
    """Scalar field sampled on a uniform grid; axis i carries coordinate x_i."""

    values: np.ndarray
    spacing: float
    origin: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.origin = np.asarray(self.origin, dtype=float).reshape(-1)
        if self.origin.size != self.values.ndim:
            raise DomainError("origin length does not match grid dimension")
        if self.spacing <= 0:
            raise DomainError("grid spacing must be positive")

    @classmethod
    def box(cls, R, h, dim, fill=None):
        """Grid on [-R, R]^dim; ``fill`` may be a callable of points or a constant."""
        shape = box_shape(R, h, dim)
        g = cls(np.zeros(shape), h, np.full(dim, -float(R)))
        if callable(fill):
            g.values = np.asarray(fill(g.points()), dtype=float).reshape(shape)
        elif fill is not None:
            g.values[...] = fill
        return g

    @property
    def dim(self):
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    @property
    def upper(self):
        return self.origin + self.spacing * (np.array(self.shape) - 1)

    @property
    def extent(self):
        """Half-width of the box (meaningful for centered boxes)."""
        return float(np.max(np.abs(np.concatenate([self.origin, self.upper]))))

    def axes(self):
        return [self.origin[i] + self.spacing * np.arange(m) for i, m in enumerate(self.shape)]

    def points(self):
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    @property
    def boundary_mask(self):
        mask = np.ones(self.shape, dtype=bool)
        mask[interior(self.dim)] = False
        return mask

    def copy(self):
        return GridFunction(self.values.copy(), self.spacing, self.origin.copy())

    def with_values(self, values):
        return GridFunction(np.asarray(values, dtype=float).reshape(self.shape),
                            self.spacing, self.origin.copy())

    def interpolate(self, pts):
        """(Multi)linear interpolation at arbitrary points inside the grid."""
        interp = RegularGridInterpolator(self.axes(), self.values, method="linear",
                                         bounds_error=True)
        pts = np.asarray(pts, dtype=float)
        try:
            return interp(pts.reshape(-1, self.dim)).reshape(pts.shape[:-1])
        except ValueError as exc:
            raise DomainError(f"interpolation point outside grid: {exc}") from exc

    def derivatives(self):
        return derivatives(self.values, self.spacing)

    def max_slope(self):
        grad, _ = self.derivatives()
        return float(np.sqrt(np.max(np.sum(grad**2, axis=-1))))

    def restrict(self, R):
        """Sub-box [-R, R]^n of a grid containing it, resampled multilinearly."""
        target = GridFunction.box(R, self.spacing, self.dim)
        return target.with_values(self.interpolate(target.points()))


def box_shape(R, h, dim):
    if R <= 0 or h <= 0:
        raise DomainError(f"need R > 0 and h > 0, got R={R}, h={h}")
    cells = 2.0 * R / h
    m = int(round(cells))
    if abs(cells - m) > 1e-9 * max(1.0, cells) or m < 2:
        raise DomainError(f"2R/h must be an integer >= 2 (R={R}, h={h})")
    return (m + 1,) * dim


def interior(dim):
    return (slice(1, -1),) * dim


def _shifted(values, offsets):
    """View of ``values`` on the interior shifted by integer ``offsets``."""
    sl = []
    for o, m in zip(offsets, values.shape):
        sl.append(slice(1 + o, m - 1 + o))
    return values[tuple(sl)]


def derivatives(values, h):
    """Centered second-order gradient and Hessian at interior nodes.

    Returns arrays of shape ``(*interior_shape, n)`` and ``(*interior_shape, n, n)``.
    """
    values = np.asarray(values, dtype=float)
    n = values.ndim
    inner_shape = tuple(m - 2 for m in values.shape)
    grad = np.empty(inner_shape + (n,))
    hess = np.empty(inner_shape + (n, n))
    center = _shifted(values, (0,) * n)
    for i in range(n):
        e = [0] * n
        e[i] = 1
        up = _shifted(values, e)
        e[i] = -1
        down = _shifted(values, e)
        grad[..., i] = (up - down) / (2.0 * h)
        hess[..., i, i] = (up - 2.0 * center + down) / h**2
        for j in range(i + 1, n):
            def corner(si, sj):
                o = [0] * n
                o[i], o[j] = si, sj
                return _shifted(values, o)
            mixed = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * h**2)
            hess[..., i, j] = mixed
            hess[..., j, i] = mixed
    return grad, hess


# --- CSV format -------------------------------------------------------------

def write_grid_csv(path, grid, header=None):
    """Write ``grid`` with ``# key: value`` header lines, then row-major rows."""
    lines = []
    for key, val in (header or {}).items():
        lines.append(f"# {key}: {val}")
    lines.append(f"# dim: {grid.dim}")
    lines.append(f"# spacing: {grid.spacing!r}")
    lines.append("# origin: " + ",".join(repr(float(o)) for o in grid.origin))
    lines.append("# extent: " + ",".join(repr(float(o)) for o in grid.upper))
    lines.append("# shape: " + ",".join(str(m) for m in grid.shape))
    rows = grid.values.reshape(-1, grid.shape[-1])
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid_csv(path):
    """Inverse of :func:`write_grid_csv`; returns ``(grid, header_dict)``."""
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                header[key.strip()] = val.strip()
            else:
                rows.append([float(v) for v in line.split(",")])
    try:
        dim = int(header["dim"])
        spacing = float(header["spacing"])
        origin = [float(v) for v in header["origin"].split(",")]
        if "shape" in header:
            shape = tuple(int(v) for v in header["shape"].split(","))
        else:
            upper = [float(v) for v in header["extent"].split(",")]
            shape = tuple(int(round((u - o) / spacing)) + 1 for u, o in zip(upper, origin))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: malformed grid header ({exc})") from exc
    values = np.array(rows, dtype=float)
    if values.size != int(np.prod(shape)) or len(shape) != dim:
        raise InputError(f"{path}: {values.size} values do not fill shape {shape}")
    return GridFunction(values.reshape(shape), spacing, origin), header
