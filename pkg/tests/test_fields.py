"""Field containers, quadrature norms, moments, and the similarity map."""

import math

import numpy as np
import pytest

from pkslab import fields
from pkslab.errors import InvalidField, InvalidParameter
from pkslab.fields import (
    CartesianField2D,
    RadialField,
    from_similarity,
    l1_distance,
    lp_norm,
    moments,
    read_snapshot,
    to_similarity,
    total_mass,
    write_snapshot,
)
from pkslab.grids import radial_grid, trapezoid_weights
from pkslab.semigroup import gaussian_values

from conftest import gaussian_radial


def test_total_mass_of_gaussian(default_nodes):
    mass = 4.0 * math.pi
    f = gaussian_radial(2, mass, default_nodes)
    assert abs(total_mass(f) - mass) < 1e-8


def test_total_mass_zero_field(default_nodes):
    f = RadialField(dim=3, nodes=default_nodes, values=np.zeros_like(default_nodes))
    assert total_mass(f) == 0.0


def test_total_mass_unit_disk():
    nodes = np.linspace(0.0, 4.0, 4097)
    disk = fields.indicator_disk(nodes)
    assert abs(total_mass(disk) - math.pi) < 1e-5


def test_trapezoid_weights_integrate_constants(default_nodes):
    # the defining invariant of the weights: exact on the constant 1
    w = trapezoid_weights(default_nodes)
    assert abs(w.sum() - default_nodes[-1]) < 1e-12 * default_nodes[-1]


def test_sup_norm_peak(default_nodes):
    mass = 4.0 * math.pi
    f = gaussian_radial(3, mass, default_nodes)
    assert lp_norm(f, math.inf) == pytest.approx(mass * (4 * math.pi) ** -1.5, abs=0)


def test_l1_norm_equals_mass(default_nodes):
    f = gaussian_radial(4, 2.5, default_nodes)
    assert lp_norm(f, 1) == pytest.approx(total_mass(f), rel=1e-14)


def test_l2_norm_gaussian_closed_form(default_nodes):
    # int G_2^2 = (4 pi)^{-2} * 2 pi * int r e^{-r^2/2} dr = 1 / (8 pi)
    g2 = RadialField(dim=2, nodes=default_nodes,
                     values=gaussian_values(2, default_nodes))
    assert lp_norm(g2, 2) ** 2 == pytest.approx(1.0 / (8.0 * math.pi), rel=1e-10)


def test_lp_norm_rejects_small_p(default_nodes):
    f = gaussian_radial(2, 1.0, default_nodes)
    with pytest.raises(InvalidParameter):
        lp_norm(f, 0.5)


def test_moments_gaussian(default_nodes):
    for dim in (2, 3, 4, 5):
        g = RadialField(dim=dim, nodes=default_nodes,
                        values=gaussian_values(dim, default_nodes))
        mom = moments(g)
        assert mom.mass == pytest.approx(1.0, abs=1e-10)
        assert mom.second_moment == pytest.approx(2.0 * dim, rel=1e-10)
        assert np.all(mom.center == 0.0)


def test_moments_scaled_gaussian_4d(default_nodes):
    g = gaussian_radial(4, 2.0, default_nodes)
    mom = moments(g)
    assert mom.mass == pytest.approx(2.0, rel=1e-12)
    assert mom.second_moment == pytest.approx(16.0, rel=1e-10)


def test_moments_shifted_gaussian_cartesian():
    f = fields.gaussian_cartesian(1.0, center=(1.0, 0.0))
    mom = moments(f)
    assert mom.center[0] == pytest.approx(1.0, abs=1e-9)
    assert mom.center[1] == pytest.approx(0.0, abs=1e-12)


def test_radial_field_invariants(default_nodes):
    with pytest.raises(InvalidField):
        RadialField(dim=6, nodes=default_nodes, values=np.zeros_like(default_nodes))
    with pytest.raises(InvalidField):
        RadialField(dim=2, nodes=default_nodes[::-1],
                    values=np.zeros_like(default_nodes))
    bad = np.zeros_like(default_nodes)
    bad[3] = math.nan
    with pytest.raises(InvalidField):
        RadialField(dim=2, nodes=default_nodes, values=bad)


def test_negative_clamp_policy(default_nodes):
    values = gaussian_values(2, default_nodes)
    ringing = values.copy()
    ringing[100] = -1e-13 * values.max()
    f = RadialField(dim=2, nodes=default_nodes, values=ringing)
    assert f.values.min() == 0.0  # clamped, not raised
    too_negative = values.copy()
    too_negative[100] = -1e-6
    with pytest.raises(InvalidField):
        RadialField(dim=2, nodes=default_nodes, values=too_negative)


def test_cartesian_grid_power_of_two():
    with pytest.raises(InvalidField):
        CartesianField2D(extent=10.0, values=np.zeros((100, 100)))


def test_similarity_round_trip(default_nodes):
    u = gaussian_radial(3, 2.0, default_nodes, t0=0.7)
    for t in (0.1, 1.0, 10.0):
        state = to_similarity(u, t)
        assert state.tau == pytest.approx(math.log(t))
        back, t_back = from_similarity(state)
        assert t_back == pytest.approx(t)
        assert l1_distance(back, u) < 1e-6 * total_mass(u)
        assert abs(total_mass(state.field) - total_mass(u)) < 1e-6 * total_mass(u)


def test_similarity_of_heat_kernel_is_gaussian(default_nodes):
    # Gamma_1 in similarity variables at t = 1 is exactly G_n
    mass = 3.0
    for dim in (2, 3):
        u = gaussian_radial(dim, mass, default_nodes, t0=1.0)
        state = to_similarity(u, 1.0)
        gauss = gaussian_radial(dim, mass, default_nodes, t0=1.0)
        assert l1_distance(state.field, gauss) < 1e-10


def test_similarity_rejects_nonpositive_time(default_nodes):
    u = gaussian_radial(2, 1.0, default_nodes)
    with pytest.raises(InvalidParameter):
        to_similarity(u, 0.0)


def test_similarity_round_trip_cartesian():
    u = fields.gaussian_cartesian(2.0, center=(0.5, -0.3))
    for t in (0.5, 2.0):
        state = to_similarity(u, t)
        back, _ = from_similarity(state)
        # mass is conserved to the quadrature tolerance; the round trip
        # itself is identity up to bicubic interpolation error
        assert abs(total_mass(state.field) - total_mass(u)) < 1e-6 * total_mass(u)
        assert l1_distance(back, u) < 1e-5 * total_mass(u)


def test_snapshot_round_trip_radial(tmp_path, default_nodes):
    u = gaussian_radial(4, 1.5, default_nodes)
    path = tmp_path / "field.csv"
    write_snapshot(u, path, t=2.5)
    loaded, t = read_snapshot(path)
    assert t == 2.5
    assert loaded.dim == 4
    np.testing.assert_allclose(loaded.nodes, u.nodes, rtol=1e-15)
    np.testing.assert_allclose(loaded.values, u.values, rtol=1e-15)
    with open(path) as fh:
        assert fh.readline().startswith("# dim=4 kind=radial t=")


def test_snapshot_round_trip_cartesian(tmp_path):
    u = fields.gaussian_cartesian(1.0, size=32, extent=8.0)
    path = tmp_path / "field2d.csv"
    write_snapshot(u, path, t=1.0)
    loaded, _ = read_snapshot(path)
    assert isinstance(loaded, CartesianField2D)
    assert loaded.extent == pytest.approx(8.0)
    np.testing.assert_allclose(loaded.values, u.values, rtol=1e-15)
