import json
import subprocess
import sys
import textwrap

import pytest

from pdem.cli import bundled_scenarios, main
from pdem.errors import ConfigError
from pdem.runner import OUT_ENV, output_dir, run_scenario
from pdem.scenario import load, loads

SMALL = textwrap.dedent("""\
    [scenario]
    name = small
    levels = 1

    [realization]
    class = NegOmega
    k = 2

    [grid]
    L = 20
    n_points = 2001
""")


def write(tmp_path, text, name="s.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_levels_beyond_tower_rejected():
    with pytest.raises(ConfigError, match="scenario.levels"):
        loads(SMALL.replace("levels = 1", "levels = 5"))


@pytest.mark.parametrize("old,new,key", [
    ("k = 2", "k = 2\nkk = 3", "realization.kk"),
    ("[grid]", "[gird]", "gird"),
    ("class = NegOmega", "class = Negative", "realization.class"),
    ("n_points = 2001", "n_points = 2000", "grid.n_points"),
    ("n_points = 2001", "n_points = 101", "grid.n_points"),
    ("L = 20", "L = -1", "grid.L"),
    ("k = 2", "k = two", "realization.k"),
    ("name = small\n", "", "scenario.name"),
])
def test_config_errors_name_the_key(old, new, key):
    with pytest.raises(ConfigError) as info:
        loads(SMALL.replace(old, new))
    assert key in str(info.value)


def test_custom_mass_rejected():
    with pytest.raises(ConfigError, match="mass.kind"):
        loads(SMALL + "\n[mass]\nkind = custom\n")


def test_scaled_grid():
    s = loads(SMALL).scaled(2.0)
    assert s.n_points == 4001


def test_bundled_constant_scenario(tmp_path):
    s = load(bundled_scenarios() / "scarf2_constant.cfg")
    result, paths = run_scenario(s, out=tmp_path)
    assert result.passed
    report = json.loads((tmp_path / "scarf2_constant" / "report.json").read_text())
    assert report["schema"] == "pdem-report" and report["version"] == 1
    assert report["checks"]["spectrum"]["metrics"]["analytic_levels"] == [-2.25, -0.25]
    levels = report["checks"]["spectrum"]["metrics"]["numeric_levels"]
    assert levels == pytest.approx([-2.25, -0.25], abs=1e-4)
    lines = (tmp_path / "scarf2_constant" / "grid.csv").read_text().split("\n")
    assert lines[-1] == "" and len(lines) - 1 == s.n_points + 1
    assert lines[0] == "x,M,u,F,G,V_k,V_eff,psi_0,psi_1"
    assert {line.split(",")[1] for line in lines[1:-1]} == {"1"}


def test_bundled_morse_scenario_exit_zero(tmp_path):
    assert main(["run", str(bundled_scenarios() / "morse_deformed_q1.cfg"), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "morse_deformed_q1" / "report.json").read_text())
    assert all(c["passed"] for c in report["checks"].values())


def test_table_roundtrips_floats(tmp_path):
    run_scenario(loads(SMALL.replace("k = 2", "k = 2\n\n[mass]\nkind = rational\nq = 1")), out=tmp_path)
    rows = (tmp_path / "small" / "grid.csv").read_text().splitlines()[1:]
    x = [float(r.split(",")[0]) for r in rows]
    assert x[0] == -20.0 and x[-1] == 20.0
    assert len({r.split(",")[1] for r in rows}) > 100


def test_outputs_are_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(a)]) == 0
    assert main(["run", str(cfg), "--out", str(b)]) == 0
    for name in ("grid.csv", "report.json", "summary.txt"):
        assert (a / "small" / name).read_bytes() == (b / "small" / name).read_bytes()


def test_exclusive_writes(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    assert main(["run", str(cfg), "--out", str(out)]) == 2
    assert "--overwrite" in capsys.readouterr().err
    assert main(["run", str(cfg), "--out", str(out), "--overwrite"]) == 0


def test_config_error_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.replace("levels = 1", "levels = 5"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "scenario.levels" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_failing_check_names_first_failure(tmp_path, capsys):
    cfg = write(tmp_path, SMALL + "\n[tolerances]\nspectrum_abs = 1e-15\n")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 1
    assert "first failing check: spectrum" in capsys.readouterr().out
    summary = (tmp_path / "small" / "summary.txt").read_text()
    assert "first failing check: spectrum" in summary


def test_env_var_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert output_dir(loads(SMALL)) == tmp_path / "env" / "small"
    assert output_dir(loads(SMALL), tmp_path / "cli") == tmp_path / "cli" / "small"


def test_check_all_directory(tmp_path):
    d = tmp_path / "scen"
    d.mkdir()
    write(d, SMALL, "a.cfg")
    write(d, SMALL.replace("name = small", "name = strict") + "\n[tolerances]\nspectrum_abs = 1e-15\n", "b.cfg")
    assert main(["check-all", str(d), "--out", str(tmp_path / "o")]) == 1


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, SMALL)
    proc = subprocess.run([sys.executable, "-m", "pdem", "run", str(cfg), "--out", str(tmp_path),
                           "--grid-scale", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "small: PASS" in proc.stdout
