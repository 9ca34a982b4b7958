"""Scenario parsing, exit codes, determinism, and the console entry point."""

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from pkslab import cli
from pkslab.errors import ScenarioConfigError, UseProfileModule

FAST_SCENARIO = """\
[scenario]
name = fast_disk
dim = 2
kind = compute
seed = 1

[check:potential_disk]
tolerance = 1e-3
"""

TINY_RUN = """\
[scenario]
name = tiny_run
dim = 2
kind = evolve
seed = 1

[initial]
kind = gaussian
mass = 6.283185307179586
t0 = 1.0

[grid]
geometry = radial
nodes = 512
rmax = 40.0

[solver]
t_init = 1.0
t_end = 1.6
scheme = muscl

[check:mass_conservation]
tolerance = 1e-7
"""


def test_bundled_scenario_list():
    names = cli.bundled_scenarios()
    for required in ("virial_2d", "profile_gm", "rate_n3", "c2_constant",
                     "blowup_sweep", "phi_monotone", "wstar_moments"):
        assert required in names
    listing = cli.list_scenarios()
    assert "virial_2d" in listing


def test_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[scenario]\nname = broken\n")  # no checks
    assert cli.run_scenario(str(bad)) == 2
    err = capsys.readouterr().err
    assert "check" in err


def test_zero_tolerance_rejected_at_parse(tmp_path, capsys):
    cfg = tmp_path / "zero.cfg"
    cfg.write_text(FAST_SCENARIO.replace("tolerance = 1e-3", "tolerance = 0"))
    assert cli.run_scenario(str(cfg)) == 2
    assert "tolerance" in capsys.readouterr().err


def test_unknown_check_rejected(tmp_path, capsys):
    cfg = tmp_path / "unknown.cfg"
    cfg.write_text(FAST_SCENARIO.replace("potential_disk", "no_such_check"))
    assert cli.run_scenario(str(cfg)) == 2


def test_missing_initial_file_rejected(tmp_path):
    cfg = tmp_path / "missing.cfg"
    cfg.write_text(
        TINY_RUN + "\n"  # base
    )
    cfg.write_text(TINY_RUN.replace("kind = gaussian",
                                    "kind = custom-file\nfile = /no/such/file.csv"))
    assert cli.run_scenario(str(cfg)) == 2


def test_scenario_pass_and_summary(tmp_path):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(FAST_SCENARIO)
    out = tmp_path / "out"
    assert cli.run_scenario(str(cfg), out_dir=out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["all_pass"] is True
    assert summary["checks"]["potential_disk"]["pass"] is True


def test_evolve_scenario_writes_outputs(tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY_RUN)
    out = tmp_path / "out"
    assert cli.run_scenario(str(cfg), out_dir=out) == 0
    assert (out / "trajectory.csv").exists()
    assert (out / "diagnostics.csv").exists()
    assert (out / "manifest.json").exists()


def test_deterministic_rerun(tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY_RUN)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.run_scenario(str(cfg), out_dir=out1) == 0
    assert cli.run_scenario(str(cfg), out_dir=out2) == 0
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
    assert (out1 / "diagnostics.csv").read_bytes() == (out2 / "diagnostics.csv").read_bytes()


def test_failed_check_exits_1(tmp_path):
    cfg = tmp_path / "strict.cfg"
    cfg.write_text(TINY_RUN.replace("tolerance = 1e-7", "tolerance = 1e-30"))
    assert cli.run_scenario(str(cfg), out_dir=tmp_path / "out") == 1


def test_export_constants_n4():
    report = cli.export_constants(4, 1.0, [0.0])
    assert report["c2"] == pytest.approx(1.0 / (256.0 * math.pi**4), rel=1e-9)
    assert report["rel_disagreement"]["c2"] <= 1e-3
    assert "c2_closed_form" in report["oracle_values"]


def test_export_constants_n2_redirects():
    with pytest.raises(UseProfileModule):
        cli.export_constants(2, math.pi, [0.0])


def test_main_constants_n2_exit_1(capsys):
    code = cli.main(["constants", "--n", "2", "--mass", "3.14"])
    assert code == 1
    assert "profile" in capsys.readouterr().err


def test_main_list(capsys):
    assert cli.main(["list"]) == 0
    assert "wstar_moments" in capsys.readouterr().out


def test_main_profile(capsys, tmp_path):
    code = cli.main(["profile", "--mass", "3.14159", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "profile.csv").exists()
    sidecar = json.loads((tmp_path / "profile.json").read_text())
    assert sidecar["residual"] <= 1e-6
    assert "G_M" in capsys.readouterr().out


def test_main_profile_supercritical(capsys):
    assert cli.main(["profile", "--mass", "30.0"]) == 1


def test_console_script_help():
    proc = subprocess.run(
        [sys.executable, "-m", "pkslab.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "run" in proc.stdout and "constants" in proc.stdout


def test_parallel_run(tmp_path):
    cfg1 = tmp_path / "one.cfg"
    cfg2 = tmp_path / "two.cfg"
    cfg1.write_text(FAST_SCENARIO)
    cfg2.write_text(FAST_SCENARIO.replace("fast_disk", "fast_disk_b"))
    code = cli.main([
        "run", str(cfg1), str(cfg2), "--parallel", "2",
        "--out", str(tmp_path / "par"),
    ])
    assert code == 0
    assert (tmp_path / "par" / "one" / "summary.json").exists()
    assert (tmp_path / "par" / "two" / "summary.json").exists()
