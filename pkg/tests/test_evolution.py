"""Time integration: splitting steps, drivers, blow-up, Duhamel residual."""

import json
import math

import numpy as np
import pytest

from pkslab import evolution as ev, fields
from pkslab.errors import (
    BlowupTrajectory,
    InsufficientSampling,
    InvalidParameter,
    OutOfRange,
    StepRejected,
)
from pkslab.fields import l1_distance, total_mass
from pkslab.grids import radial_grid

from conftest import gaussian_radial


def test_solver_config_validation():
    with pytest.raises(InvalidParameter):
        ev.SolverConfig(dt_initial=0.0)
    with pytest.raises(InvalidParameter):
        ev.SolverConfig(cfl_safety=1.5)


def test_step_pure_diffusion_exact(default_nodes):
    mass = 4.0 * math.pi
    u0 = gaussian_radial(2, mass, default_nodes, t0=1.0)
    cfg = ev.SolverConfig(nonlinearity=False)
    out = ev.step(u0, 0.25, cfg)
    exact = gaussian_radial(2, mass, default_nodes, t0=1.25)
    assert l1_distance(out, exact) < 1e-8


def test_step_rejects_oversized_dt(default_nodes):
    u0 = gaussian_radial(2, 8.0 * math.pi, default_nodes, t0=0.2)
    with pytest.raises(StepRejected):
        ev.step(u0, 10.0, ev.SolverConfig())


def test_step_mass_conservation(default_nodes):
    u0 = gaussian_radial(2, 4.0 * math.pi, default_nodes, t0=1.0)
    cfg = ev.SolverConfig()
    field = u0
    mass0 = total_mass(field)
    for _ in range(10):
        field = ev.step(field, 1e-3, cfg)
    assert abs(total_mass(field) - mass0) < 1e-10 * mass0


def test_small_mass_tracks_pure_heat():
    nodes = radial_grid(1024, 60.0)
    mass = 1e-6
    u0 = gaussian_radial(2, mass, nodes, t0=1.0)
    cfg_on = ev.SolverConfig(t_init=1.0, t_end=10.0, reference="m_gamma_t")
    traj = ev.evolve(u0, cfg_on)
    rel = traj.l1_errors() / mass
    assert np.nanmax(rel) < 1e-6


def test_record_schedule_log_spaced():
    cfg = ev.SolverConfig(t_init=1.0, t_end=100.0, records_per_decade=32)
    times = ev._record_schedule(cfg, "physical")
    assert times[0] == 1.0 and times[-1] == pytest.approx(100.0)
    ratios = times[1:] / times[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)
    assert len(times) == 65  # 32 per decade, two decades


def test_trajectory_mass_drift_and_times(reference_run_2d):
    traj = reference_run_2d
    assert traj.mass_drift() <= 1e-7
    times = traj.times()
    assert np.all(np.diff(times) > 0.0)
    assert len(traj.records) >= 64


def test_field_at_interpolation_and_range(reference_run_2d):
    traj = reference_run_2d
    mid = traj.field_at(2.3456)
    assert mid.values.max() > 0
    with pytest.raises(OutOfRange):
        traj.field_at(0.5)
    with pytest.raises(OutOfRange):
        traj.field_at(9.0)


def test_blowup_supercritical():
    nodes = radial_grid(768, 20.0)
    mass = 10.0 * math.pi
    u0 = gaussian_radial(2, mass, nodes, t0=1.0)
    cfg = ev.SolverConfig(t_init=1.0, t_end=7.0, blowup_factor=1e3)
    traj = ev.evolve(u0, cfg)
    assert traj.blowup
    m2_0 = traj.records[0].moments.second_moment
    deadline = 1.2 * m2_0 / abs(4.0 * mass * (1.0 - mass / (8.0 * math.pi)))
    assert traj.blowup_time - 1.0 <= deadline


def test_evolve_similarity_fn_weights():
    assert ev.nonlinearity_weight(2, 1.234) == 1.0
    assert ev.nonlinearity_weight(4, 1.0) == pytest.approx(math.exp(-1.0))
    assert ev.nonlinearity_weight(3, 2.0) == pytest.approx(math.exp(-1.0))


def test_duhamel_requires_enough_records(default_nodes):
    u0 = gaussian_radial(2, math.pi, default_nodes, t0=1.0)
    cfg = ev.SolverConfig(t_init=1.0, t_end=1.5, records_per_decade=8)
    traj = ev.evolve(u0, cfg)
    with pytest.raises(InsufficientSampling):
        ev.duhamel_residual(traj)


def test_duhamel_residual_reference_run(reference_run_2d):
    assert ev.duhamel_residual(reference_run_2d) <= 5e-3


def test_duhamel_negative_control(reference_run_2d):
    zeroed = ev.duhamel_residual(reference_run_2d, zero_nonlinear=True)
    assert zeroed >= 10.0 * 5e-3


def test_duhamel_pure_heat(pure_heat_run_2d):
    assert ev.duhamel_residual(pure_heat_run_2d) <= 1e-6


def test_export_trajectory(tmp_path, phi_run_2d):
    csv_path = tmp_path / "traj.csv"
    manifest_path = tmp_path / "manifest.json"
    ev.export_trajectory(phi_run_2d, csv_path, manifest_path)
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,mass,second_moment,sup_norm,l1_err_vs_profile,free_energy"
    manifest = json.loads(manifest_path.read_text())
    assert manifest["blowup_flag"] is False
    assert manifest["config"]["advection_scheme"] == "muscl"
    # 17 significant digits in the rows
    row = csv_path.read_text().splitlines()[1].split(",")
    assert len(row[1]) >= 17


def test_route_comparison_physical_vs_similarity():
    # evolve then map to similarity variables == evolve_similarity, to 1e-3
    mass = 2.0 * math.pi
    nodes = radial_grid(1536, 60.0)
    u0 = gaussian_radial(2, mass, nodes, t0=1.0)
    traj_p = ev.evolve(u0, ev.SolverConfig(t_init=1.0, t_end=math.e**2))
    U0 = fields.to_similarity(u0, 1.0).field
    traj_s = ev.evolve_similarity(
        U0, ev.SolverConfig(t_init=0.0, t_end=2.0, advection_scheme="central")
    )
    end_p = fields.to_similarity(
        traj_p.records[-1].field, traj_p.records[-1].time
    ).field
    assert l1_distance(end_p, traj_s.records[-1].field) <= 1e-3
