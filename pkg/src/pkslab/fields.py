"""Core field containers, norms, moments, and the similarity change of variables.

Two concrete geometries are supported: radially symmetric densities sampled on
a 1D node set (any dimension 2-5) and full 2D densities on a uniform periodic
square grid sized for FFT work.  Fields are immutable value objects; all
operations are pure functions.
"""

import math
from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import InvalidField, InvalidParameter
from .grids import (
    radial_grid,
    radial_interpolator,
    radial_measure_weights,
    trapezoid_weights,
)

# Negative samples no larger than this times the sup norm are treated as
# spectral ringing and clamped to zero; anything worse is a hard error.
CLAMP_RTOL = 1e-12

DEFAULT_EXTENT = 20.0
DEFAULT_SIZE = 256


def _clean_values(values, nonnegative, clamp_rtol):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidField("field contains non-finite samples")
    if nonnegative and values.size:
        low = values.min()
        if low < 0.0:
            scale = np.abs(values).max()
            if scale > 0.0 and low < -clamp_rtol * scale:
                raise InvalidField(
                    f"negative samples ({low:.3e}) exceed the clamp tolerance "
                    f"{clamp_rtol:.1e} * sup = {clamp_rtol * scale:.3e}"
                )
            values = np.maximum(values, 0.0)
    return values


@dataclass(frozen=True)
class RadialField:
    """Radially symmetric density u(r) with dimension tag n in {2,3,4,5}.

    ``grid_kind`` records how the nodes were generated ("uniform" or
    "graded"); quadrature itself only uses the node positions.  Signed
    profiles (expansion corrections, differences) set ``nonnegative=False``.
    """

    dim: int
    nodes: np.ndarray
    values: np.ndarray
    grid_kind: str = "graded"
    nonnegative: bool = True
    clamp_rtol: float = CLAMP_RTOL

    def __post_init__(self):
        if self.dim not in (2, 3, 4, 5):
            raise InvalidField(f"dimension must be in 2..5, got {self.dim}")
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 8:
            raise InvalidField("radial grid must be a 1D array of >= 8 nodes")
        if nodes[0] < 0.0 or np.any(np.diff(nodes) <= 0.0):
            raise InvalidField("radial nodes must be strictly increasing and >= 0")
        values = _clean_values(self.values, self.nonnegative, self.clamp_rtol)
        if values.shape != nodes.shape:
            raise InvalidField("values and nodes must have matching shape")
        nodes.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @property
    def r_max(self):
        return float(self.nodes[-1])

    def measure_weights(self):
        return radial_measure_weights(self.nodes, self.dim)

    def with_values(self, values, nonnegative=None):
        keep = self.nonnegative if nonnegative is None else nonnegative
        return replace(self, values=np.asarray(values, dtype=float), nonnegative=keep)

    def interpolator(self):
        return radial_interpolator(self.nodes, self.values)


@dataclass(frozen=True)
class CartesianField2D:
    """2D density on a uniform N x N grid covering [-extent, extent)^2.

    The grid uses the periodic convention x_i = -extent + i * (2 extent / N),
    which keeps FFT padding exact; fields are expected to decay well inside
    the box.  N must be a power of two.
    """

    extent: float
    values: np.ndarray
    nonnegative: bool = True
    clamp_rtol: float = CLAMP_RTOL

    def __post_init__(self):
        values = _clean_values(self.values, self.nonnegative, self.clamp_rtol)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidField("2D field values must be a square array")
        n = values.shape[0]
        if n & (n - 1) != 0:
            raise InvalidField(f"grid size must be a power of two, got {n}")
        if self.extent <= 0:
            raise InvalidField("extent must be positive")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dim(self):
        return 2

    @property
    def size(self):
        return self.values.shape[0]

    @property
    def spacing(self):
        return 2.0 * self.extent / self.size

    def axis(self):
        n = self.size
        return -self.extent + self.spacing * np.arange(n)

    def meshgrid(self):
        x = self.axis()
        return np.meshgrid(x, x, indexing="ij")

    def cell_area(self):
        return self.spacing**2

    def with_values(self, values, nonnegative=None):
        keep = self.nonnegative if nonnegative is None else nonnegative
        return replace(self, values=np.asarray(values, dtype=float), nonnegative=keep)

    def interpolator(self):
        x = self.axis()
        spline = RectBivariateSpline(x, x, self.values, kx=3, ky=3)
        lo, hi = x[0], x[-1]

        def evaluate(px, py):
            px = np.asarray(px, dtype=float)
            py = np.asarray(py, dtype=float)
            inside = (px >= lo) & (px <= hi) & (py >= lo) & (py <= hi)
            out = spline(np.clip(px, lo, hi), np.clip(py, lo, hi), grid=False)
            return np.where(inside, out, 0.0)

        return evaluate


@dataclass(frozen=True)
class SimilarityState:
    """A field in similarity variables (xi, tau) together with tau and n."""

    field: object
    tau: float
    dim: int

    def __post_init__(self):
        if not np.isfinite(self.tau):
            raise InvalidField("tau must be finite")
        if self.dim != self.field.dim:
            raise InvalidField("dimension tag must match the carried field")


@dataclass(frozen=True)
class MomentSet:
    """Mass, (unnormalised) center of mass, and second moment of a field.

    Signed profiles (expansion corrections) may carry a negative or zero
    mass; the Cauchy-Schwarz consistency check applies to nonnegative
    densities only and lives in :func:`moments`.
    """

    mass: float
    center: np.ndarray
    second_moment: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", center)
        if not (np.isfinite(self.mass) and np.isfinite(self.second_moment)
                and np.all(np.isfinite(center))):
            raise InvalidField("moments must be finite")


# ---------------------------------------------------------------------------
# quadrature-level operations
# ---------------------------------------------------------------------------

def _weights(field):
    if isinstance(field, RadialField):
        return field.measure_weights()
    if isinstance(field, CartesianField2D):
        return np.full_like(field.values, field.cell_area())
    raise InvalidParameter(f"unsupported field type {type(field)!r}")


def total_mass(field):
    """Quadrature of the field over its domain."""
    if not np.all(np.isfinite(field.values)):
        raise InvalidField("field contains non-finite samples")
    return float(np.sum(_weights(field) * field.values))


def lp_norm(field, p):
    """Standard L^p quadrature norm; p = inf gives the max sample magnitude."""
    if p == math.inf or p == "inf":
        return float(np.abs(field.values).max())
    p = float(p)
    if p < 1.0:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    w = _weights(field)
    return float(np.sum(w * np.abs(field.values) ** p) ** (1.0 / p))


def l1_distance(a, b):
    """L^1 distance between two fields living on the same grid."""
    return lp_norm(a.with_values(a.values - b.values, nonnegative=False), 1)


def moments(field):
    """Mass, center of mass B0 = int x u dx, and second moment int u |x|^2 dx."""
    w = _weights(field)
    mass = float(np.sum(w * field.values))
    if isinstance(field, RadialField):
        center = np.zeros(field.dim)
        second = float(np.sum(w * field.values * field.nodes**2))
    else:
        xx, yy = field.meshgrid()
        center = np.array(
            [np.sum(w * field.values * xx), np.sum(w * field.values * yy)]
        )
        second = float(np.sum(w * field.values * (xx**2 + yy**2)))
    if field.nonnegative and mass > 0:
        # Cauchy-Schwarz: |int x u|^2 <= mass * int |x|^2 u
        slack = second - float(center @ center) / mass
        if slack < -1e-9 * max(1.0, second):
            raise InvalidField("moments violate the Cauchy-Schwarz bound")
    return MomentSet(mass=mass, center=center, second_moment=second)


# ---------------------------------------------------------------------------
# similarity change of variables:  U(xi, tau) = t^{n/2} u(sqrt(t) xi),  tau = log t
# ---------------------------------------------------------------------------

def to_similarity(u_field, t):
    """Map a physical-variable field at time t to similarity variables."""
    if t <= 0:
        raise InvalidParameter(f"similarity time must be positive, got t={t}")
    n = u_field.dim
    scale = math.sqrt(t)
    if isinstance(u_field, RadialField):
        values = t ** (n / 2.0) * u_field.interpolator()(scale * u_field.nodes)
        out = u_field.with_values(values)
    else:
        xx, yy = u_field.meshgrid()
        values = t * u_field.interpolator()(scale * xx, scale * yy)
        out = u_field.with_values(values)
    return SimilarityState(field=out, tau=math.log(t), dim=n)


def from_similarity(state):
    """Invert :func:`to_similarity`; returns (physical field, t)."""
    t = math.exp(state.tau)
    n = state.dim
    scale = math.sqrt(t)
    f = state.field
    if isinstance(f, RadialField):
        values = t ** (-n / 2.0) * f.interpolator()(f.nodes / scale)
        out = f.with_values(values)
    else:
        xx, yy = f.meshgrid()
        values = (1.0 / t) * f.interpolator()(xx / scale, yy / scale)
        out = f.with_values(values)
    return out, t


# ---------------------------------------------------------------------------
# constructors used throughout tests and scenarios
# ---------------------------------------------------------------------------

def default_radial_field(dim, values_fn, num=None, r_max=None, kind="graded"):
    """Sample ``values_fn(r)`` on the package-default radial grid."""
    nodes = radial_grid(
        num or 4096, r_max if r_max is not None else 40.0, kind=kind
    )
    return RadialField(dim=dim, nodes=nodes, values=values_fn(nodes), grid_kind=kind)

def indicator_disk(nodes, radius=1.0, dim=2):
    """Indicator of the ball of given radius, 1/2 on a node exactly at the rim."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.where(nodes < radius, 1.0, 0.0)
    values[np.isclose(nodes, radius, rtol=0.0, atol=1e-14)] = 0.5
    return RadialField(dim=dim, nodes=nodes, values=values, grid_kind="uniform"
                       if np.allclose(np.diff(nodes), nodes[1] - nodes[0]) else "graded")


def gaussian_cartesian(mass, extent=DEFAULT_EXTENT, size=DEFAULT_SIZE,
                       center=(0.0, 0.0), t0=1.0):
    """mass * Gamma_{t0}(x - center) sampled on a 2D grid (heat kernel at t0)."""
    if t0 <= 0:
        raise InvalidParameter("t0 must be positive")
    grid = CartesianField2D(extent=extent, values=np.zeros((size, size)))
    xx, yy = grid.meshgrid()
    r2 = (xx - center[0]) ** 2 + (yy - center[1]) ** 2
    values = mass / (4.0 * math.pi * t0) * np.exp(-r2 / (4.0 * t0))
    return grid.with_values(values)


# ---------------------------------------------------------------------------
# snapshot file format
# ---------------------------------------------------------------------------

def write_snapshot(field, path, t=0.0):
    """Write a field to CSV with header ``# dim=<n> kind=<radial|cart2d> t=<t>``."""
    kind = "radial" if isinstance(field, RadialField) else "cart2d"
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# dim={field.dim} kind={kind} t={t!r}\n")
        if kind == "radial":
            for r, v in zip(field.nodes, field.values):
                fh.write(f"{r:.17g},{v:.17g}\n")
        else:
            x = field.axis()
            for i in range(field.size):
                for j in range(field.size):
                    fh.write(f"{x[i]:.17g},{x[j]:.17g},{field.values[i, j]:.17g}\n")


def read_snapshot(path):
    """Read a snapshot written by :func:`write_snapshot`; returns (field, t)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise InvalidField(f"{path}: missing snapshot header")
        meta = dict(tok.split("=", 1) for tok in header[1:].split())
        dim = int(meta["dim"])
        t = float(meta["t"])
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    if meta["kind"] == "radial":
        nodes, values = rows[:, 0], rows[:, 1]
        spacing = np.diff(nodes)
        kind = "uniform" if np.allclose(spacing, spacing[0], rtol=1e-9) else "graded"
        signed = bool(values.min() < 0)
        return (
            RadialField(dim=dim, nodes=nodes, values=values, grid_kind=kind,
                        nonnegative=not signed),
            t,
        )
    n = int(round(math.sqrt(rows.shape[0])))
    values = rows[:, 2].reshape(n, n)
    extent = -rows[0, 0]
    signed = bool(values.min() < 0)
    return CartesianField2D(extent=extent, values=values, nonnegative=not signed), t
