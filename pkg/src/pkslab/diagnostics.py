"""Theorem-level observables: free energies, the backward-kernel density Phi,
its monotonicity margin, virial slopes, and decay envelopes.

All functions here are pure readers of fields or trajectories.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BlowupTrajectory,
    DivergentMoment,
    InvalidParameter,
    OutOfRange,
)
from .fields import CartesianField2D, RadialField, lp_norm, moments, total_mass
from .grids import radial_measure_weights
from .potential import (
    cartesian_gradient_2d,
    cartesian_potential_2d,
    radial_gradient,
    radial_potential,
)
from .semigroup import gaussian_values, scaled_sphere_average

EIGHT_PI = 8.0 * math.pi

# Floor inside logarithms; w log w -> 0 as w -> 0 so the clipped cells are
# exactly the ones whose contribution is negligible.
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class FreeEnergyResult:
    """2D free energy split into its three terms.

    ``gauge_shift`` is the canonical potential's value at the origin, i.e. the
    additive constant an origin-gauged potential would discard; the reported
    ``value`` always uses the canonical log kernel so that same-mass
    comparisons are gauge-consistent.
    """

    value: float
    entropy_term: float
    moment_term: float
    interaction_term: float
    gauge_shift: float


@dataclass(frozen=True)
class RelativeEntropyResult:
    value: float
    entropy_part: float
    field_energy_part: float


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    mass: float
    second_moment: float
    sup_norm: float
    l1_dist_to_profile: float
    free_energy_2d: float
    relative_entropy: float
    virial_slope_running: float


def _entropy_integral(field, weights, reference=None):
    w = field.values
    if reference is None:
        integrand = np.where(w > 0.0, w * np.log(np.maximum(w, LOG_FLOOR)), 0.0)
    else:
        integrand = np.where(
            w > 0.0,
            w * np.log(np.maximum(w, LOG_FLOOR) / np.maximum(reference, LOG_FLOOR)),
            0.0,
        )
    return float(np.sum(weights * integrand))


def free_energy_2d(field):
    """The 2D similarity free energy: entropy + confinement - interaction."""
    if field.dim != 2:
        raise InvalidParameter("free_energy_2d is defined for 2D fields")
    mom = moments(field)
    if not math.isfinite(mom.second_moment):
        raise DivergentMoment("second moment is not finite on this grid")
    if isinstance(field, RadialField):
        weights = radial_measure_weights(field.nodes, 2)
        v = radial_potential(field, gauge="canonical")
        gauge_shift = float(v[0])
        r2 = field.nodes**2
    else:
        weights = np.full_like(field.values, field.cell_area())
        v = cartesian_potential_2d(field)
        center = field.size // 2
        gauge_shift = float(v[center, center])
        xx, yy = field.meshgrid()
        r2 = xx**2 + yy**2
    entropy = _entropy_integral(field, weights)
    moment_term = 0.25 * float(np.sum(weights * field.values * r2))
    interaction = 0.5 * float(np.sum(weights * field.values * v))
    return FreeEnergyResult(
        value=entropy + moment_term - interaction,
        entropy_term=entropy,
        moment_term=moment_term,
        interaction_term=interaction,
        gauge_shift=gauge_shift,
    )


def relative_entropy(field, dim=None, tau=0.0):
    """Similarity-variable free energy against the Gaussian.

    Returns the full functional (entropy against G_n plus the f_n-weighted
    field energy minus M log M) together with the entropy-only part
    int w log(w / (M G_n)), which is nonnegative and vanishes only at M G_n.
    For n = 2 the field energy carries the grid cutoff (the integrand decays
    like 1/r only); callers interested in sharp values use n >= 3.
    """
    n = dim if dim is not None else field.dim
    if n != field.dim:
        raise InvalidParameter("dimension tag does not match the field")
    mass = total_mass(field)
    if isinstance(field, RadialField):
        weights = radial_measure_weights(field.nodes, n)
        gauss = gaussian_values(n, field.nodes)
        grad = radial_gradient(field).data
        energy = float(np.sum(weights * grad**2))
    else:
        weights = np.full_like(field.values, field.cell_area())
        xx, yy = field.meshgrid()
        gauss = gaussian_values(2, np.hypot(xx, yy))
        g = cartesian_gradient_2d(field).data
        energy = float(np.sum(weights * (g[0] ** 2 + g[1] ** 2)))
    fn = math.exp((1.0 - n / 2.0) * tau)
    entropy_vs_gauss = _entropy_integral(field, weights, reference=gauss)
    value = entropy_vs_gauss + 0.5 * fn * energy - (
        mass * math.log(mass) if mass > 0 else 0.0
    )
    entropy_part = _entropy_integral(
        field, weights, reference=mass * gauss if mass > 0 else gauss
    )
    return RelativeEntropyResult(
        value=value, entropy_part=entropy_part, field_energy_part=0.5 * fn * energy
    )


# ---------------------------------------------------------------------------
# backward-heat-kernel density Phi and its monotonicity margin
# ---------------------------------------------------------------------------

def phi_density(trajectory, z1, rho):
    """(4 pi)^{-n/2} rho^{2-n} int u(y, s1 - rho^2) exp(-|y-y0|^2/(4 rho^2)) dy.

    ``z1`` is the pair (y0, s1); y0 may be a scalar radial offset for radial
    trajectories or a 2-vector for Cartesian ones.  The trajectory field is
    interpolated in log-time between records.
    """
    y0, s1 = z1
    s = s1 - rho * rho
    field = trajectory.field_at(s)  # raises OutOfRange when s is outside
    n = field.dim
    pref = (4.0 * math.pi) ** (-n / 2.0) * rho ** (2.0 - n)
    if isinstance(field, RadialField):
        d = float(np.linalg.norm(np.atleast_1d(np.asarray(y0, dtype=float))))
        w = radial_measure_weights(field.nodes, n)
        z = field.nodes * d / (2.0 * rho * rho)
        kern = np.exp(-((field.nodes - d) ** 2) / (4.0 * rho * rho))
        kern = kern * scaled_sphere_average(n, z)
        return pref * float(np.sum(w * field.values * kern))
    y0 = np.asarray(y0, dtype=float)
    xx, yy = field.meshgrid()
    kern = np.exp(-((xx - y0[0]) ** 2 + (yy - y0[1]) ** 2) / (4.0 * rho * rho))
    return pref * float(np.sum(field.values * kern) * field.cell_area())


def phi_scan(trajectory, z1, rho_grid):
    """Phi, its rho-derivative, and the monotonicity margin on a rho grid.

    The margin is dPhi/drho - (1 - M/(8 pi)) (2/rho) Phi (nonnegative in the
    continuum for subcritical 2D runs).  Derivatives are second-order central
    differences on the given, possibly nonuniform, grid.
    """
    rho = np.asarray(rho_grid, dtype=float)
    if rho.size < 3:
        raise InvalidParameter("need at least 3 rho values")
    phi = np.array([phi_density(trajectory, z1, p) for p in rho])
    mass = trajectory.records[0].moments.mass
    dphi = np.empty_like(phi)
    h_lo = rho[1:-1] - rho[:-2]
    h_hi = rho[2:] - rho[1:-1]
    dphi[1:-1] = (
        phi[2:] * h_lo / (h_hi * (h_lo + h_hi))
        - phi[:-2] * h_hi / (h_lo * (h_lo + h_hi))
        + phi[1:-1] * (h_hi - h_lo) / (h_lo * h_hi)
    )
    dphi[0] = (phi[1] - phi[0]) / (rho[1] - rho[0])
    dphi[-1] = (phi[-1] - phi[-2]) / (rho[-1] - rho[-2])
    margin = dphi - (1.0 - mass / EIGHT_PI) * 2.0 / rho * phi
    return rho, phi, margin


def phi_monotonicity_check(trajectory, z1, rho_grid):
    """Minimum monotonicity margin over the interior of the rho grid."""
    if trajectory.dim != 2:
        raise InvalidParameter("the monotonicity bound is a 2D statement")
    rho, phi, margin = phi_scan(trajectory, z1, rho_grid)
    return float(margin[1:-1].min())


def rho_grid_from_records(trajectory, s1, rho_min, rho_max):
    """rho values for which s1 - rho^2 hits record times exactly (no time
    interpolation error in the subsequent Phi scan)."""
    times = trajectory.times()
    s_vals = times[(times <= s1 - rho_min**2) & (times >= s1 - rho_max**2)]
    rho = np.sqrt(s1 - s_vals)
    return np.sort(rho)


def decay_envelope(trajectory):
    """sup over records of (1+t)^{n/2} |u|_inf  (exponent 1 for n = 2)."""
    if trajectory.blowup:
        raise BlowupTrajectory("decay envelope is defined for global runs only")
    power = 1.0 if trajectory.dim == 2 else trajectory.dim / 2.0
    t = trajectory.times()
    return float(np.max((1.0 + t) ** power * trajectory.sup_norms()))


def virial_slope(trajectory, t_window=None):
    """Least-squares slope of the second moment over a time window."""
    t = trajectory.times()
    m2 = trajectory.second_moments()
    if t_window is not None:
        lo, hi = t_window
        keep = (t >= lo) & (t <= hi)
        t, m2 = t[keep], m2[keep]
    if t.size < 2:
        raise InvalidParameter("need at least two records for a virial slope")
    coeffs = np.polyfit(t, m2, 1)
    return float(coeffs[0])


def virial_prediction_2d(mass):
    """The exact 2D law d/dt int u |x|^2 = 4 M (1 - M / (8 pi))."""
    return 4.0 * mass * (1.0 - mass / EIGHT_PI)


def trajectory_diagnostics(trajectory):
    """Per-record DiagnosticsRecord list (with running virial slope)."""
    recs = trajectory.records
    t = trajectory.times()
    m2 = trajectory.second_moments()
    out = []
    for k, rec in enumerate(recs):
        lo = max(0, k - 1)
        hi = min(len(recs) - 1, k + 1)
        slope = (
            (m2[hi] - m2[lo]) / (t[hi] - t[lo]) if t[hi] > t[lo] else math.nan
        )
        rel_ent = math.nan
        if isinstance(rec.field, RadialField):
            tau = math.log(rec.time) if trajectory.kind == "physical" and rec.time > 0 else rec.time
            rel_ent = relative_entropy(rec.field, rec.field.dim, tau).value
        out.append(
            DiagnosticsRecord(
                time=rec.time,
                mass=rec.moments.mass,
                second_moment=rec.moments.second_moment,
                sup_norm=rec.sup_norm,
                l1_dist_to_profile=rec.l1_dist_to_profile,
                free_energy_2d=rec.free_energy,
                relative_entropy=rel_ent,
                virial_slope_running=slope,
            )
        )
    return out


def diagnostics_csv(trajectory, path):
    """Write the per-record diagnostics table."""
    rows = trajectory_diagnostics(trajectory)
    with open(path, "w", newline="\n") as fh:
        fh.write(
            "t,mass,second_moment,sup_norm,l1_dist_to_profile,"
            "free_energy_2d,relative_entropy,virial_slope_running\n"
        )
        for r in rows:
            fh.write(
                f"{r.time:.17g},{r.mass:.17g},{r.second_moment:.17g},"
                f"{r.sup_norm:.17g},{r.l1_dist_to_profile:.17g},"
                f"{r.free_energy_2d:.17g},{r.relative_entropy:.17g},"
                f"{r.virial_slope_running:.17g}\n"
            )


def phi_scan_csv(trajectory, z1, rho_grid, path):
    rho, phi, margin = phi_scan(trajectory, z1, rho_grid)
    with open(path, "w", newline="\n") as fh:
        fh.write("rho,phi,margin\n")
        for a, b, c in zip(rho, phi, margin):
            fh.write(f"{a:.17g},{b:.17g},{c:.17g}\n")
