import csv
import subprocess
import sys

import pytest

from tontine_bequest import cli

SMALL_RUNS = {
    "mortality-curves": [],
    "power-optimize": ["--crra", "4", "--b", "0,3"],
    "power-optimize-truncated": ["--crra", "4", "--b", "3"],
    "power-consumption": ["--crra", "1,4", "--b", "3"],
    "sensitivity": ["--crra", "3", "--b", "2", "--market-sets", "0.05:0.085:0.2"],
    "log-policy": [],
    "log-consumption": ["--b", "1,7"],
    "bequest-path": [],
    "chini": [],
    "mc-verify": ["--n-paths", "400", "--dt", "0.1"],
}


def _run(tmp_path, *args):
    code = cli.main([*args, "--output-dir", str(tmp_path)])
    return code


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("command", sorted(SMALL_RUNS))
def test_every_subcommand_writes_csv_and_svg(tmp_path, command, capsys):
    assert _run(tmp_path, command, *SMALL_RUNS[command], "--svg") == 0
    assert (tmp_path / f"{command}.csv").stat().st_size > 0
    assert list(tmp_path.glob("*.svg"))
    out = capsys.readouterr().out.strip()
    assert len(out.splitlines()) == 1


def test_log_policy_example(tmp_path):
    assert _run(tmp_path, "log-policy", "--b", "5") == 0
    (row,) = _rows(tmp_path / "log-policy.csv")
    assert float(row["alpha_star"]) == pytest.approx(0.50, abs=0.02)
    assert float(row["omega_star"]) == 0.875


def test_bequest_path_example(tmp_path):
    assert _run(tmp_path, "bequest-path", "--alpha", "0.8", "--c", "0.09", "--r", "0.05", "--z0", "20") == 0
    z = {float(r["t"]): float(r["Z"]) for r in _rows(tmp_path / "bequest-path.csv")}
    assert z[0.0] == 20.0
    assert 12.4 <= z[20.0] <= 13.0
    assert 41 <= z[35.0] <= 45
    assert 1.6e10 <= z[55.0] <= 2.0e10


def test_power_optimize_example(tmp_path):
    assert _run(tmp_path, "power-optimize", "--crra", "4", "--b", "3") == 0
    (row,) = _rows(tmp_path / "power-optimize.csv")
    assert 0.75 <= float(row["alpha_star"]) <= 0.90
    assert row["converged"] == "1"


def test_scenario_names_outputs(tmp_path):
    assert _run(tmp_path, "log-policy", "--scenario", "fig8", "--svg") == 0
    assert (tmp_path / "fig8.csv").exists() and (tmp_path / "fig8.svg").exists()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["log-policy", "--b", "1"]) == 0
    assert (tmp_path / "env" / "log-policy.csv").exists()
    assert _run(tmp_path / "flag", "log-policy", "--b", "1") == 0
    assert (tmp_path / "flag" / "log-policy.csv").exists()


@pytest.mark.parametrize("command,args", [
    ("sensitivity", ["--crra", "3,4", "--b", "1,5", "--market-sets", "0.05:0.085:0.2;0.03:0.06:0.15"]),
    ("mc-verify", ["--n-paths", "700", "--dt", "0.05", "--keep-paths", "3"]),
    ("chini", ["--svg"]),
    ("power-consumption", ["--crra", "2,4", "--b", "3", "--svg"]),
])
def test_reruns_are_byte_identical_across_workers(tmp_path, command, args):
    outputs = []
    for i, workers in enumerate((1, 1, 3)):
        d = tmp_path / str(i)
        assert _run(d, command, *args, "--seed", "7", "--workers", str(workers)) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outputs[0] == outputs[1] == outputs[2]


def test_seed_changes_monte_carlo_output(tmp_path):
    for seed in ("1", "2"):
        assert _run(tmp_path / seed, "mc-verify", "--n-paths", "200", "--dt", "0.1", "--seed", seed) == 0
    assert (tmp_path / "1" / "mc-verify.csv").read_bytes() != (tmp_path / "2" / "mc-verify.csv").read_bytes()


def test_mc_verify_path_export(tmp_path):
    assert _run(tmp_path, "mc-verify", "--n-paths", "50", "--dt", "0.1", "--keep-paths", "2") == 0
    rows = _rows(tmp_path / "mc-verify_paths.csv")
    assert {r["path_id"] for r in rows} == {"0", "1"}
    modes = [r["mode"] for r in _rows(tmp_path / "mc-verify.csv")]
    assert modes == ["lifetime", "survival_weighted"]


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# log utility run\nb = 5\nscenario = from_config\nmakeham-c = 1.124\n")
    assert _run(tmp_path, "log-policy", "--config", str(conf)) == 0
    (row,) = _rows(tmp_path / "from_config.csv")
    assert float(row["b"]) == 5
    assert _run(tmp_path, "log-policy", "--config", str(conf), "--b", "2") == 0
    (row,) = _rows(tmp_path / "from_config.csv")
    assert float(row["b"]) == 2


@pytest.mark.parametrize("text", ["bogus = 1\n", "b 5\n", "b = five\n", "svg = maybe\n"])
def test_bad_config_is_input_error(tmp_path, text):
    conf = tmp_path / "bad.cfg"
    conf.write_text(text)
    assert _run(tmp_path, "log-policy", "--config", str(conf)) == 2


@pytest.mark.parametrize("args", [
    ["power-optimize", "--sigma", "-1"],
    ["log-policy", "--mu", "0.01"],
    ["bequest-path", "--alpha", "1.5"],
    ["chini", "--alpha", "1"],
    ["mc-verify", "--dt", "0"],
    ["power-optimize", "--crra", "x"],
    ["no-such-command"],
])
def test_invalid_input_exit_code(tmp_path, args):
    assert _run(tmp_path, *args) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    # alpha = 1 and c = 0 with 0 < gamma is the degenerate zero-value policy
    code = _run(tmp_path, "mc-verify", "--alpha", "1", "--c", "0", "--crra", "0.5", "--n-paths", "10")
    assert code == 3
    assert "InfiniteValueError" in capsys.readouterr().err
    code = _run(tmp_path, "chini", "--step", "1", "--alpha", "0.5", "--horizon", "60", "--t-max", "40")
    assert code in (0, 3)


def test_sensitivity_failures_are_logged(tmp_path):
    code = _run(tmp_path, "sensitivity", "--crra", "3", "--b", "2",
                "--market-sets", "0.05:0.085:0.2;0.05:0.04:0.2")
    assert code == 0
    log = (tmp_path / "sensitivity.log").read_text()
    assert "0.04" in log and "mu > r" in log


def test_help_lists_every_subcommand(capsys):
    assert cli.main(["--help"]) == 0
    text = capsys.readouterr().out
    for name in cli.COMMANDS:
        assert name in text


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "tontine_bequest.cli", "log-policy", "--b", "5",
                           "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "alpha_star=0.508" in proc.stdout
