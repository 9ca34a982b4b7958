"""Scenario orchestration and the ``pks`` command line.

Scenarios are flat INI files (sections of key=value pairs) naming an initial
datum, a solver configuration, and a list of named checks with tolerances.
``pks run`` executes scenarios and writes a trajectory CSV, a diagnostics CSV,
and a JSON summary {check: pass/fail, measured, expected, tolerance}; the
exit code is 0 iff every check passed, 2 for configuration errors, 3 for
numerical failures, 1 for check failures.
"""

import argparse
import configparser
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from . import asymptotics, diagnostics, evolution, fields, potential, profiles, semigroup
from .errors import PKSError, ScenarioConfigError, StiffnessFailure, UseProfileModule
from .grids import radial_grid

SCENARIO_DIR = Path(__file__).parent / "scenarios"


# ---------------------------------------------------------------------------
# scenario parsing
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    dim: int
    seed: int
    kind: str  # evolve | evolve_similarity | compute
    initial: dict
    grid: dict
    solver: dict
    checks: list = dataclass_field(default_factory=list)

    @property
    def mass(self):
        return float(self.initial.get("mass", 0.0))


def _parse_floats(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def load_scenario(path):
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ScenarioConfigError(f"cannot read scenario file {path}")
    if "scenario" not in parser:
        raise ScenarioConfigError(f"{path}: missing [scenario] section")
    base = parser["scenario"]
    try:
        dim = base.getint("dim", 2)
        seed = base.getint("seed", 1)
    except ValueError as exc:
        raise ScenarioConfigError(f"{path}: bad scenario key: {exc}") from exc
    if dim not in (2, 3, 4, 5):
        raise ScenarioConfigError(f"{path}: dim must be in 2..5, got {dim}")
    checks = []
    for section in parser.sections():
        if not section.startswith("check:"):
            continue
        name = section.split(":", 1)[1]
        params = dict(parser[section])
        if "tolerance" in params:
            try:
                tol = float(params["tolerance"])
            except ValueError as exc:
                raise ScenarioConfigError(
                    f"{path}: check {name}: bad tolerance {params['tolerance']!r}"
                ) from exc
            if tol <= 0.0:
                raise ScenarioConfigError(
                    f"{path}: check {name}: tolerance must be > 0"
                )
        checks.append((name, params))
    if not checks:
        raise ScenarioConfigError(f"{path}: a scenario needs at least one [check:*]")
    initial = dict(parser["initial"]) if "initial" in parser else {}
    if initial.get("kind") == "custom-file":
        source = initial.get("file", "")
        if not source or not Path(source).exists():
            raise ScenarioConfigError(f"{path}: initial data file {source!r} not found")
    return Scenario(
        name=base.get("name", Path(path).stem),
        dim=dim,
        seed=seed,
        kind=base.get("kind", "evolve"),
        initial=initial,
        grid=dict(parser["grid"]) if "grid" in parser else {},
        solver=dict(parser["solver"]) if "solver" in parser else {},
        checks=checks,
    )


def _build_grid(scenario):
    g = scenario.grid
    if g.get("geometry", "radial") == "cartesian":
        return ("cartesian", int(g.get("size", 256)), float(g.get("extent", 20.0)))
    return (
        "radial",
        radial_grid(
            int(g.get("nodes", 1536)),
            float(g.get("rmax", 40.0)),
            g.get("grading", "graded"),
        ),
    )


def _build_initial(scenario):
    spec = scenario.initial
    kind = spec.get("kind", "gaussian")
    mass = float(spec.get("mass", 1.0))
    t0 = float(spec.get("t0", 1.0))
    grid = _build_grid(scenario)
    if kind == "custom-file":
        field, _ = fields.read_snapshot(spec["file"])
        return field
    if grid[0] == "cartesian":
        _, size, extent = grid
        shift = _parse_floats(spec.get("shift", "0 0")) if kind == "shifted_gaussian" else (0.0, 0.0)
        return fields.gaussian_cartesian(mass, extent=extent, size=size,
                                         center=tuple(shift), t0=t0)
    _, nodes = grid
    n = scenario.dim
    if kind == "disk":
        base = fields.indicator_disk(nodes, radius=float(spec.get("radius", 1.0)), dim=n)
        scale = mass / fields.total_mass(base) if mass > 0 else 1.0
        return base.with_values(scale * base.values)
    values = mass * (4.0 * math.pi * t0) ** (-n / 2.0) * np.exp(-nodes**2 / (4.0 * t0))
    return fields.RadialField(dim=n, nodes=nodes, values=values)


def _build_solver_config(scenario):
    s = scenario.solver
    kwargs = {}
    for key, cast in [
        ("t_init", float), ("t_end", float), ("dt_max", float),
        ("clamp_tolerance", float), ("records_per_decade", int),
        ("blowup_factor", float), ("cfl_safety", float),
    ]:
        if key in s:
            kwargs[key] = cast(s[key])
    if "scheme" in s:
        kwargs["advection_scheme"] = s["scheme"]
    if "nonlinearity" in s:
        kwargs["nonlinearity"] = s["nonlinearity"].lower() in ("on", "true", "1")
    if "reference" in s:
        kwargs["reference"] = s["reference"]
    if "record_window" in s:
        lo, hi, step = _parse_floats(s["record_window"])
        kwargs["record_times"] = tuple(np.round(np.arange(lo, hi + step / 2, step), 9))
        kwargs.setdefault("t_init", lo)
        kwargs.setdefault("t_end", hi)
    return evolution.SolverConfig(**kwargs)


# ---------------------------------------------------------------------------
# named checks
# ---------------------------------------------------------------------------

class CheckContext:
    def __init__(self, scenario, out_dir):
        self.scenario = scenario
        self.out_dir = out_dir
        self.trajectory = None
        self._wstar = None
        self._gm = {}

    def wstar(self):
        if self._wstar is None:
            self._wstar = asymptotics.w_star()
        return self._wstar

    def gm(self, mass, nodes_key=(4096, 30.0)):
        key = (mass, nodes_key)
        if key not in self._gm:
            self._gm[key] = profiles.self_similar_profile_2d(
                mass, grid=radial_grid(nodes_key[0], nodes_key[1])
            )
        return self._gm[key]


def _result(name, passed, measured, expected, tolerance):
    return {
        "check": name,
        "pass": bool(passed),
        "measured": measured,
        "expected": expected,
        "tolerance": tolerance,
    }


def _check_virial_slope(ctx, params):
    mass = ctx.scenario.mass
    slope = diagnostics.virial_slope(ctx.trajectory)
    expected = diagnostics.virial_prediction_2d(mass)
    tol = float(params.get("tolerance", 0.01))
    if params.get("mode", "relative") == "absolute":
        passed = abs(slope - expected) <= tol
    else:
        passed = abs(slope - expected) <= tol * abs(expected)
    return _result("virial_slope", passed, slope, expected, tol)


def _check_threshold_slope(ctx, params):
    lo, hi = _parse_floats(params.get("window", "10 100"))
    blo, bhi = _parse_floats(params.get("bounds", "-0.5 0.1"))
    t = ctx.trajectory.times()
    sup = ctx.trajectory.sup_norms()
    mask = (t >= lo) & (t <= hi)
    slope, _, _ = asymptotics.fit_rate(t[mask], (t * sup)[mask])
    return _result("threshold_slope", blo <= slope <= bhi, slope, [blo, bhi], None)


def _check_blowup_deadline(ctx, params):
    traj = ctx.trajectory
    mass = ctx.scenario.mass
    factor = float(params.get("factor", 1.2))
    m2_0 = traj.records[0].moments.second_moment
    deadline = factor * m2_0 / abs(diagnostics.virial_prediction_2d(mass))
    elapsed = traj.blowup_time - traj.config.t_init if traj.blowup else math.inf
    return _result("blowup_deadline", traj.blowup and elapsed <= deadline,
                   elapsed, deadline, None)


def _check_sup_rate(ctx, params):
    lo, hi = _parse_floats(params.get("window", "10 200"))
    expected = float(params.get("expected", -1.5))
    tol = float(params.get("tolerance", 0.1))
    t = ctx.trajectory.times()
    sup = ctx.trajectory.sup_norms()
    mask = (t >= lo) & (t <= hi)
    slope, _, _ = asymptotics.fit_rate(t[mask], sup[mask])
    return _result("sup_rate", abs(slope - expected) <= tol, slope, expected, tol)


def _check_l1_rate_negative(ctx, params):
    lo = float(params.get("from", 10.0))
    t = ctx.trajectory.times()
    l1 = ctx.trajectory.l1_errors()
    mask = (t >= lo) & (l1 > 0)
    slope, _, _ = asymptotics.fit_rate(t[mask], l1[mask])
    bound = float(params.get("bound", 0.0))
    return _result("l1_rate_negative", slope < bound, slope, f"< {bound}", None)


def _check_weighted_sup_decreasing(ctx, params):
    lo = float(params.get("from", 20.0))
    traj = ctx.trajectory
    n = traj.dim
    mass = ctx.scenario.mass
    t = traj.times()
    dist = []
    for rec in traj.records:
        nodes = rec.field.nodes
        gamma = mass * (4 * math.pi * rec.time) ** (-n / 2.0) * np.exp(
            -nodes**2 / (4.0 * rec.time)
        )
        dist.append(float(np.abs(rec.field.values - gamma).max()))
    weighted = t ** (n / 2.0) * np.asarray(dist)
    tail = weighted[t >= lo]
    decreasing = bool(np.all(np.diff(tail) < 0.0))
    return _result("weighted_sup_decreasing", decreasing,
                   float(tail[-1] / tail[0]), "< 1 monotone", None)


def _check_mass_conservation(ctx, params):
    tol = float(params.get("tolerance", 1e-7))
    drift = ctx.trajectory.mass_drift()
    return _result("mass_conservation", drift <= tol, drift, 0.0, tol)


def _check_profile_residual(ctx, params):
    tol = float(params.get("tolerance", 1e-6))
    masses = _parse_floats(params.get("masses", str(ctx.scenario.mass)))
    worst = 0.0
    for m in masses:
        worst = max(worst, ctx.gm(m, (6144, 30.0)).residual)
    return _result("profile_residual", worst <= tol, worst, 0.0, tol)


def _check_profile_stationarity(ctx, params):
    tol = float(params.get("tolerance", 1e-3))
    mass = float(params.get("mass", ctx.scenario.mass))
    tau_end = float(params.get("tau_end", 5.0))
    grid = radial_grid(1536, 30.0)
    gm = profiles.self_similar_profile_2d(mass, grid=grid).field
    cfg = evolution.SolverConfig(
        t_init=0.0, t_end=tau_end, advection_scheme="central", reference="profile"
    )
    traj = evolution.evolve_similarity(gm, cfg, reference_field=gm)
    drift = float(np.nanmax(traj.l1_errors()))
    return _result("profile_stationarity", drift <= tol, drift, 0.0, tol)


def _check_profile_relaxation(ctx, params):
    mass = float(params.get("mass", ctx.scenario.mass))
    tau_end = float(params.get("tau_end", 6.0))
    frac = float(params.get("final_fraction", 0.05))
    grid = radial_grid(1536, 30.0)
    gm = profiles.self_similar_profile_2d(mass, grid=grid).field
    g0 = profiles.gaussian_profile(2, mass, grid=grid)
    cfg = evolution.SolverConfig(
        t_init=0.0, t_end=tau_end, advection_scheme="central", reference="profile"
    )
    traj = evolution.evolve_similarity(g0, cfg, reference_field=gm)
    errs = traj.l1_errors()
    ok = bool(np.all(np.diff(errs) < 1e-12)) and errs[-1] <= frac * mass
    return _result("profile_relaxation", ok, errs[-1] / mass, 0.0, frac)


def _check_c2_agreement(ctx, params):
    tol = float(params.get("tolerance", 1e-3))
    display = asymptotics.constant_c2(1.0)
    oracle = asymptotics.constant_c2_oracle(1.0)
    closed = asymptotics.C2_UNIT_CLOSED_FORM
    rel = max(abs(display - oracle), abs(display - closed)) / closed
    return _result("c2_agreement", rel <= tol, rel, 0.0, tol)


def _check_c1_mc_agreement(ctx, params):
    tol = float(params.get("tolerance", 5e-3))
    samples = int(float(params.get("samples", 1e7)))
    ws = ctx.wstar()
    quad = asymptotics.constant_c1(1.0, [1.0, 0.0, 0.0], ws).value
    mc = asymptotics.constant_c1_monte_carlo(
        1.0, [1.0, 0.0, 0.0], ws, samples=samples, seed=ctx.scenario.seed
    )
    rel = abs(mc - quad) / abs(quad)
    return _result("c1_mc_agreement", rel <= tol, rel, 0.0, tol)


def _check_phi_margin(ctx, params):
    tol = float(params.get("tolerance", 1e-3))
    s1 = float(params.get("s1", 2.0))
    rho_lo, rho_hi = _parse_floats(params.get("rho_range", "0.1 1.0"))
    rho = diagnostics.rho_grid_from_records(ctx.trajectory, s1, rho_lo, rho_hi)
    _, phi, margin = diagnostics.phi_scan(ctx.trajectory, (0.0, s1), rho)
    rel = float((margin[1:-1] / phi[1:-1]).min())
    return _result("phi_margin", rel >= -tol, rel, ">= 0", tol)


def _check_phi_pure_heat(ctx, params):
    tol = float(params.get("tolerance", 1e-4))
    s1 = float(params.get("s1", 2.0))
    mass = ctx.scenario.mass
    cfg = ctx.trajectory.config
    heat_cfg = evolution.SolverConfig(
        t_init=cfg.t_init, t_end=cfg.t_end, nonlinearity=False,
        record_times=cfg.record_times, records_per_decade=cfg.records_per_decade,
    )
    traj = evolution.evolve(ctx.trajectory.records[0].field, heat_cfg)
    rho = diagnostics.rho_grid_from_records(traj, s1, 0.1, 1.0)
    phi = np.array([diagnostics.phi_density(traj, (0.0, s1), p) for p in rho])
    exact = mass * rho**2 / (4.0 * math.pi * s1)
    rel = float(np.abs(phi / exact - 1.0).max())
    return _result("phi_pure_heat", rel <= tol, rel, 0.0, tol)


def _check_wstar_quadrature(ctx, params):
    ws = ctx.wstar()
    tol_mass = float(params.get("mass_tolerance", 1e-6))
    ok = ws.integrand_slope >= 0.45 and abs(ws.mass_defect()) <= tol_mass
    return _result(
        "wstar_quadrature", ok,
        {"integrand_slope": ws.integrand_slope, "mass_defect": ws.mass_defect()},
        {"integrand_slope": ">= 0.45", "mass_defect": 0.0}, tol_mass,
    )


def _check_wstar_moment_stability(ctx, params):
    tol = float(params.get("tolerance", 0.01))
    ws = ctx.wstar()
    refined = asymptotics.w_star(grid=radial_grid(1536, 28.0), s_step=0.3)
    worst = 0.0
    for k in (0, 2, 4):
        a, b = ws.moment(k), refined.moment(k)
        worst = max(worst, abs(a - b) / abs(a))
    return _result("wstar_moment_stability", worst <= tol, worst, 0.0, tol)


def _check_w_pde_residual(ctx, params):
    tol = float(params.get("tolerance", 1e-3))
    res = asymptotics.w_pde_residual(ctx.wstar())
    return _result("w_pde_residual", res <= tol, res, 0.0, tol)


def _check_w_self_similarity(ctx, params):
    tol = float(params.get("tolerance", 1e-10))
    ws = ctx.wstar()
    xi = np.linspace(0.0, 8.0, 41)
    w1 = asymptotics.w_function(ws, 1.0, nodes=xi).values
    w4 = 4.0**2 * asymptotics.w_function(ws, 4.0, nodes=2.0 * xi).values
    err = float(np.abs(w1 - w4).max() / np.abs(w1).max())
    return _result("w_self_similarity", err <= tol, err, 0.0, tol)


def _check_expansion_rate(ctx, params):
    tol = float(params.get("minimum", 0.95))
    mass = float(params.get("mass", 3.0))
    shift = float(params.get("shift", 1.2))
    u0 = fields.gaussian_cartesian(mass, extent=20.0, size=256,
                                   center=(shift, 0.0), t0=1.0)
    taus = np.linspace(2.0, 8.0, 13)
    errs = []
    for tau in taus:
        out = semigroup.similarity_semigroup(u0, tau)
        ref = semigroup.first_order_heat_expansion(u0, tau)
        diff = out.with_values(out.values - ref.values, nonnegative=False)
        errs.append(fields.lp_norm(diff, 1))
    rate = asymptotics.fit_exponential_rate(taus, np.array(errs))
    return _result("expansion_rate", rate >= tol, rate, 1.0, tol)


def _check_potential_disk(ctx, params):
    tol = float(params.get("tolerance", 1e-3))
    nodes = np.linspace(0.0, 4.0, 4097)
    disk = fields.indicator_disk(nodes, radius=1.0, dim=2)
    lhs, rhs_core, ratio = potential.sup_gradient_bound_check(disk)
    ok = abs(lhs - 0.5) <= tol and abs(rhs_core - math.sqrt(math.pi)) <= tol
    return _result("potential_disk", ok, {"lhs": lhs, "rhs_core": rhs_core,
                                          "ratio": ratio},
                   {"lhs": 0.5, "rhs_core": math.sqrt(math.pi)}, tol)


def _check_potential_sweep(ctx, params):
    bound = float(params.get("bound", 5.0))
    count = int(params.get("count", 50))
    rng = np.random.default_rng(ctx.scenario.seed)
    nodes = radial_grid(2048, 24.0)
    worst = 0.0
    scale_dev = 0.0
    for k in range(count):
        n = int(rng.integers(2, 5))
        values = np.zeros_like(nodes)
        for _ in range(int(rng.integers(1, 4))):
            c = rng.uniform(0.0, 6.0)
            wdt = rng.uniform(0.4, 2.0)
            amp = rng.uniform(0.1, 3.0)
            values += amp * np.exp(-((nodes - c) ** 2) / wdt**2)
        u = fields.RadialField(dim=n, nodes=nodes, values=values)
        _, _, ratio = potential.sup_gradient_bound_check(u)
        _, _, ratio2 = potential.sup_gradient_bound_check(
            u.with_values(3.7 * values)
        )
        worst = max(worst, ratio)
        scale_dev = max(scale_dev, abs(ratio2 - ratio))
    ok = worst <= bound and scale_dev <= 1e-10
    return _result("potential_sweep", ok,
                   {"max_ratio": worst, "scaling_deviation": scale_dev},
                   {"max_ratio": f"<= {bound}"}, 1e-10)


def _check_duhamel(ctx, params):
    tol = float(params.get("tolerance", 5e-3))
    res = evolution.duhamel_residual(ctx.trajectory)
    return _result("duhamel", res <= tol, res, 0.0, tol)


def _check_duhamel_negative_control(ctx, params):
    floor = float(params.get("floor", 5e-2))
    res = evolution.duhamel_residual(ctx.trajectory, zero_nonlinear=True)
    return _result("duhamel_negative_control", res >= floor, res,
                   f">= {floor}", None)


def _check_semigroup_law(ctx, params):
    tol = float(params.get("tolerance", 1e-7))
    nodes = radial_grid(2048, 40.0)
    mass = 4.0 * math.pi
    vals = mass * (4 * math.pi * 0.5) ** -1.0 * np.exp(-nodes**2 / 2.0)
    f = fields.RadialField(dim=2, nodes=nodes, values=vals)
    one = semigroup.similarity_semigroup(
        semigroup.similarity_semigroup(f, 0.7), 0.9
    )
    two = semigroup.similarity_semigroup(f, 1.6)
    err = fields.l1_distance(one, two)
    return _result("semigroup_law", err <= tol, err, 0.0, tol)


def _check_null_conditions(ctx, params):
    tol = float(params.get("tolerance", 1e-8))
    worst = 0.0
    for n in (2, 3, 4, 5):
        vals = asymptotics.null_structure_checks(n)
        worst = max(worst, abs(vals["div_mass_integral"]),
                    abs(vals["pair_null_mismatch"]))
    return _result("null_conditions", worst <= tol, worst, 0.0, tol)


def _check_kernel_remainder_exponent(ctx, params):
    floor = float(params.get("minimum", 1.4))
    rng = np.random.default_rng(ctx.scenario.seed)
    ss = np.linspace(2.0, 10.0, 17)
    rates = []
    for _ in range(50):
        n = int(rng.integers(2, 6))
        xi = rng.normal(size=n)
        xi *= rng.uniform(0, 1) / max(np.linalg.norm(xi), 1e-12)
        z = rng.normal(size=n)
        z *= rng.uniform(0, 1) / max(np.linalg.norm(z), 1e-12)
        rems = np.array(
            [abs(semigroup.kernel_taylor_terms(xi, z, s, n)[3]) for s in ss]
        )
        rates.append(asymptotics.fit_exponential_rate(ss, np.maximum(rems, 1e-300)))
    median = float(np.median(rates))
    return _result("kernel_remainder_exponent", median >= floor, median, 1.5, floor)


CHECKS = {
    "virial_slope": (_check_virial_slope, True),
    "threshold_slope": (_check_threshold_slope, True),
    "blowup_deadline": (_check_blowup_deadline, True),
    "sup_rate": (_check_sup_rate, True),
    "l1_rate_negative": (_check_l1_rate_negative, True),
    "weighted_sup_decreasing": (_check_weighted_sup_decreasing, True),
    "mass_conservation": (_check_mass_conservation, True),
    "profile_residual": (_check_profile_residual, False),
    "profile_stationarity": (_check_profile_stationarity, False),
    "profile_relaxation": (_check_profile_relaxation, False),
    "c2_agreement": (_check_c2_agreement, False),
    "c1_mc_agreement": (_check_c1_mc_agreement, False),
    "phi_margin": (_check_phi_margin, True),
    "phi_pure_heat": (_check_phi_pure_heat, True),
    "wstar_quadrature": (_check_wstar_quadrature, False),
    "wstar_moment_stability": (_check_wstar_moment_stability, False),
    "w_pde_residual": (_check_w_pde_residual, False),
    "w_self_similarity": (_check_w_self_similarity, False),
    "expansion_rate": (_check_expansion_rate, False),
    "potential_disk": (_check_potential_disk, False),
    "potential_sweep": (_check_potential_sweep, False),
    "duhamel": (_check_duhamel, True),
    "duhamel_negative_control": (_check_duhamel_negative_control, True),
    "semigroup_law": (_check_semigroup_law, False),
    "null_conditions": (_check_null_conditions, False),
    "kernel_remainder_exponent": (_check_kernel_remainder_exponent, False),
}


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

def run_scenario(config_path, out_dir=None, seed=None):
    """Execute one scenario file; returns the process exit code."""
    try:
        scenario = load_scenario(config_path)
        for name, _ in scenario.checks:
            if name not in CHECKS:
                raise ScenarioConfigError(f"unknown check {name!r}")
    except (ScenarioConfigError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if seed is not None:
        scenario.seed = seed
    out = Path(out_dir) if out_dir else Path.cwd() / f"pks_out_{scenario.name}"
    out.mkdir(parents=True, exist_ok=True)
    ctx = CheckContext(scenario, out)
    needs_trajectory = any(CHECKS[name][1] for name, _ in scenario.checks)
    try:
        if needs_trajectory:
            u0 = _build_initial(scenario)
            cfg = _build_solver_config(scenario)
            if scenario.kind == "evolve_similarity":
                ctx.trajectory = evolution.evolve_similarity(u0, cfg)
            else:
                ctx.trajectory = evolution.evolve(u0, cfg)
            evolution.export_trajectory(
                ctx.trajectory, out / "trajectory.csv", out / "manifest.json"
            )
            diagnostics.diagnostics_csv(ctx.trajectory, out / "diagnostics.csv")
        results = []
        for name, params in scenario.checks:
            fn, _ = CHECKS[name]
            results.append(fn(ctx, params))
    except (StiffnessFailure, PKSError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    summary = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "checks": {r["check"]: r for r in results},
        "all_pass": all(r["pass"] for r in results),
    }
    with open(out / "summary.json", "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    for r in results:
        state = "pass" if r["pass"] else "FAIL"
        print(f"[{state}] {scenario.name}:{r['check']}  measured={r['measured']}")
    return 0 if summary["all_pass"] else 1


def bundled_scenarios():
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.cfg"))


def list_scenarios():
    lines = []
    for name in bundled_scenarios():
        parser = configparser.ConfigParser()
        parser.read(SCENARIO_DIR / f"{name}.cfg")
        desc = parser["scenario"].get("description", "")
        lines.append(f"{name:24s} {desc}")
    return "\n".join(lines)


def export_constants(dim, mass, b0, samples=2_000_000, seed=1):
    """Constants report with oracle cross-checks, as a plain dict."""
    if dim == 2:
        raise UseProfileModule(
            "2D asymptotics are governed by G_M; use `pks profile`"
        )
    b0 = list(np.atleast_1d(np.asarray(b0, dtype=float)))
    report = {"n": dim, "M": mass, "B0": b0, "c1": None, "c2": None,
              "oracle_values": {}, "rel_disagreement": {}}
    if dim == 4:
        c2 = asymptotics.constant_c2(mass)
        oracle = asymptotics.constant_c2_oracle(mass)
        closed = mass**2 * asymptotics.C2_UNIT_CLOSED_FORM
        report["c2"] = c2
        report["oracle_values"]["c2_reduced_1d"] = oracle
        report["oracle_values"]["c2_closed_form"] = closed
        if closed != 0:
            report["rel_disagreement"]["c2"] = abs(c2 - oracle) / abs(closed)
    if dim == 3:
        ws = asymptotics.w_star()
        pad = [0.0] * (3 - len(b0))
        c1 = asymptotics.constant_c1(mass, b0 + pad, ws).value
        mc = asymptotics.constant_c1_monte_carlo(
            mass, b0 + pad, ws, samples=samples, seed=seed
        )
        report["c1"] = c1
        report["oracle_values"]["c1_monte_carlo"] = mc
        if c1 != 0:
            report["rel_disagreement"]["c1"] = abs(mc - c1) / abs(c1)
    return report


def main(argv=None):
    parser = argparse.ArgumentParser(prog="pks",
                                     description="chemotaxis decay laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenario config files")
    p_run.add_argument("configs", nargs="+")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--parallel", type=int, default=1)

    sub.add_parser("list", help="list bundled scenarios")

    p_const = sub.add_parser("constants", help="export c1/c2 with oracle checks")
    p_const.add_argument("--n", type=int, required=True)
    p_const.add_argument("--mass", type=float, required=True)
    p_const.add_argument("--b0", default="0")
    p_const.add_argument("--samples", type=int, default=2_000_000)
    p_const.add_argument("--seed", type=int, default=1)
    p_const.add_argument("--out", default=None)

    p_prof = sub.add_parser("profile", help="solve the 2D self-similar profile")
    p_prof.add_argument("--mass", type=float, required=True)
    p_prof.add_argument("--out", default=None)

    args = parser.parse_args(argv)

    if args.command == "list":
        print(list_scenarios())
        return 0

    if args.command == "run":
        paths = []
        for cfg in args.configs:
            p = Path(cfg)
            if not p.exists() and (SCENARIO_DIR / f"{cfg}.cfg").exists():
                p = SCENARIO_DIR / f"{cfg}.cfg"
            paths.append(p)
        out_base = Path(args.out) if args.out else None

        def out_for(p):
            return (out_base / p.stem) if out_base else None

        if args.parallel > 1 and len(paths) > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                codes = list(
                    pool.map(run_scenario, [str(p) for p in paths],
                             [out_for(p) for p in paths],
                             [args.seed] * len(paths))
                )
        else:
            codes = [run_scenario(str(p), out_for(p), args.seed) for p in paths]
        return max(codes)

    if args.command == "constants":
        try:
            report = export_constants(
                args.n, args.mass, _parse_floats(args.b0),
                samples=args.samples, seed=args.seed,
            )
        except UseProfileModule as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        text = json.dumps(report, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
        return 0

    if args.command == "profile":
        try:
            result = profiles.self_similar_profile_2d(args.mass)
        except PKSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            fields.write_snapshot(result.field, out / "profile.csv", t=1.0)
            sidecar = {"M": result.mass, "residual": result.residual,
                       "iterations": result.iterations}
            (out / "profile.json").write_text(
                json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
            )
        print(
            f"G_M mass={result.mass:.12g} residual={result.residual:.3e} "
            f"iterations={result.iterations} peak={result.field.values[0]:.12g}"
        )
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
