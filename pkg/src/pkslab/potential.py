"""Newtonian potential E_n * u and its gradient.

The potential is the only nonlocal ingredient of the chemotaxis nonlinearity.
For radial fields the gradient reduces exactly to the shell theorem,
-V'(r) = m(r) / (area(n) r^{n-1}) with m the enclosed mass, and the enclosed
mass is accumulated with the same trapezoid spacing as total_mass so the
discrete Gauss law holds to rounding.  For general 2D fields the free-space
convolution is evaluated spectrally with a truncated Green's function on an
oversampled FFT grid, which is accurate to quadrature precision for smooth
compactly supported densities (a plain sampled-kernel convolution is only
second order and cannot reach the agreement targets of the radial oracle).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import fft2, ifft2, next_fast_len
from scipy.special import j0, j1

from .errors import DomainTooSmall, InvalidParameter
from .fields import CartesianField2D, RadialField, lp_norm, total_mass
from .grids import SPHERE_AREA, cumulative_integral, cumulative_shell_mass


@dataclass(frozen=True)
class GradientField:
    """grad(E_n * u) on the same grid as the source field.

    For radial sources ``data`` holds the scalar radial derivative V'(r)
    (attraction means V' <= 0); for 2D Cartesian sources it holds the two
    components stacked as data[0] = dV/dx, data[1] = dV/dy.
    """

    kind: str
    dim: int
    data: np.ndarray

    def speed(self):
        """Pointwise magnitude |grad V|."""
        if self.kind == "radial":
            return np.abs(self.data)
        return np.hypot(self.data[0], self.data[1])

    def sup(self):
        return float(self.speed().max())


def enclosed_mass(u, order=2):
    """Mass inside radius r at every node, by cumulative quadrature.

    order=2 (default) reproduces the trapezoid total-mass weights exactly;
    order=4 is the smooth high-order variant used by the profile solver.
    """
    return cumulative_shell_mass(u.nodes, u.values, u.dim, order=order)


def radial_gradient(u, order=2):
    """V'(r) for radial u via the Gauss/shell reduction; V'(0) = 0 by symmetry."""
    if not isinstance(u, RadialField):
        raise InvalidParameter("radial_gradient expects a RadialField")
    m = enclosed_mass(u, order=order)
    area = SPHERE_AREA[u.dim]
    vprime = np.zeros_like(m)
    mask = u.nodes > 0
    vprime[mask] = -m[mask] / (area * u.nodes[mask] ** (u.dim - 1))
    return GradientField(kind="radial", dim=u.dim, data=vprime)


def radial_potential(u, gauge="canonical", order=2):
    """The potential V = E_n * u itself on the node set of u.

    gauge="canonical" uses the free-space fundamental solution directly
    (E_2 = -log|x| / 2pi, E_n = |x|^{2-n}/((n-2) area(n)) for n >= 3), which
    makes same-mass free-energy comparisons gauge-consistent.  gauge="origin"
    integrates the smooth Gauss-law gradient cumulatively from V(0) = 0, which
    is kink-free at quadrature level and is what iterative solvers should
    exponentiate.  Only the gradient is physical.
    """
    n = u.dim
    area = SPHERE_AREA[n]
    r = u.nodes
    if gauge == "origin":
        vp = radial_gradient(u, order=order).data
        return cumulative_integral(r, vp, order=order)
    if gauge != "canonical":
        raise InvalidParameter(f"unknown gauge {gauge!r}")
    m = enclosed_mass(u, order=order)
    shell = area * r ** (n - 1) * u.values
    if n == 2:
        kernel = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
    else:
        kernel = np.where(r > 0, r ** (2.0 - n), 0.0)
    f = shell * kernel  # vanishes at r = 0 because shell does
    # tail_i = integral over [r_i, r_max] of f, by per-segment trapezoids
    seg = 0.5 * (r[1:] - r[:-1]) * (f[1:] + f[:-1])
    tail = np.zeros_like(f)
    tail[:-1] = np.cumsum(seg[::-1])[::-1]
    inner = np.where(r > 0, m * kernel, 0.0)
    if n == 2:
        return -(inner + tail) / (2.0 * math.pi)
    return (inner + tail) / ((n - 2.0) * area)


# ---------------------------------------------------------------------------
# 2D free-space solve (truncated Green's function, spectrally accurate)
# ---------------------------------------------------------------------------

_KERNEL_CACHE = {}


def _green_hat_2d(extent, size):
    """Fourier samples of the truncated 2D log potential on the padded grid.

    The kernel E_2 restricted to |x| <= L_K with L_K = sqrt(2) * box width has
    the closed-form transform (1 - J0(k L_K))/k^2 - L_K log(L_K) J1(k L_K)/k;
    sampling it on a grid oversampled past 2 sqrt(2) leaves no aliased images
    within any source-target distance.
    """
    key = (extent, size)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit
    h = 2.0 * extent / size
    width = 2.0 * extent
    lk = math.sqrt(2.0) * width
    padded = next_fast_len(int(math.ceil(2.0 * math.sqrt(2.0) * size)) + 1)
    k1d = 2.0 * math.pi * np.fft.fftfreq(padded, d=h)
    kx, ky = np.meshgrid(k1d, k1d, indexing="ij")
    k = np.hypot(kx, ky)
    with np.errstate(divide="ignore", invalid="ignore"):
        ghat = (1.0 - j0(k * lk)) / k**2 - lk * math.log(lk) * j1(k * lk) / k
    ghat[0, 0] = lk**2 / 4.0 - lk**2 * math.log(lk) / 2.0
    out = (padded, kx, ky, ghat)
    _KERNEL_CACHE[key] = out
    return out


def _free_space_solve(u, mode, check_domain=True):
    if not isinstance(u, CartesianField2D):
        raise InvalidParameter("the FFT path expects a CartesianField2D")
    mass = total_mass(u) if u.nonnegative else float(np.sum(np.abs(u.values)) * u.cell_area())
    if mass > 0 and check_domain:
        # the truncated-kernel solve is exact for any source inside the box,
        # so the real requirement is decay before the boundary: check the
        # outer 5% band rather than the full outer half
        xx, yy = u.meshgrid()
        band = 0.95 * u.extent
        outside = (np.abs(xx) > band) | (np.abs(yy) > band)
        stray = float(np.sum(np.abs(u.values[outside])) * u.cell_area())
        if stray > 1e-8 * abs(mass):
            raise DomainTooSmall(
                f"mass fraction {stray / abs(mass):.2e} in the outer 5% band "
                "of the grid; enlarge the domain"
            )
    padded, kx, ky, ghat = _green_hat_2d(u.extent, u.size)
    src = np.zeros((padded, padded))
    src[: u.size, : u.size] = u.values
    spec = fft2(src) * ghat
    if mode == "potential":
        return ifft2(spec).real[: u.size, : u.size]
    gx = ifft2(1j * kx * spec).real[: u.size, : u.size]
    gy = ifft2(1j * ky * spec).real[: u.size, : u.size]
    return np.stack([gx, gy])


def cartesian_potential_2d(u, check_domain=True):
    """V = E_2 * u on the grid of u, canonical log-kernel gauge."""
    return _free_space_solve(u, "potential", check_domain)


def cartesian_gradient_2d(u, check_domain=True):
    """grad(E_2 * u) for a compactly supported 2D density.

    ``check_domain=False`` skips the boundary-decay precondition; time
    steppers verify it once on their initial data and then trust the run.
    """
    return GradientField(
        kind="cart2d", dim=2, data=_free_space_solve(u, "gradient", check_domain)
    )


def gradient(u):
    """Dispatch to the radial or Cartesian gradient path."""
    if isinstance(u, RadialField):
        return radial_gradient(u)
    return cartesian_gradient_2d(u)


def sup_gradient_bound_check(u):
    """Data for the interpolation bound sup|grad E_n * u| <= C |u|_1^{1/n} |u|_inf^{1-1/n}.

    Returns (lhs, rhs_core, ratio) with rhs_core the norm product; the
    constant C is not asserted here because only an empirical value exists.
    """
    lhs = gradient(u).sup()
    m1 = lp_norm(u, 1)
    minf = lp_norm(u, math.inf)
    n = u.dim
    rhs_core = m1 ** (1.0 / n) * minf ** (1.0 - 1.0 / n)
    ratio = 0.0 if rhs_core == 0.0 else lhs / rhs_core
    return lhs, rhs_core, ratio


def interaction_null_integral(u):
    """Quadrature of int u * d_j (E_n * u) dx, which vanishes in the continuum.

    For radial fields the integrand is odd in every coordinate so the radial
    reduction is identically zero; the 2D Cartesian path evaluates it honestly.
    Returns the vector of components.
    """
    if isinstance(u, RadialField):
        return np.zeros(u.dim)
    g = cartesian_gradient_2d(u).data
    area = u.cell_area()
    return np.array(
        [float(np.sum(u.values * g[0]) * area), float(np.sum(u.values * g[1]) * area)]
    )
