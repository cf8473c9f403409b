import subprocess
import sys

import pytest

from rmmucb.cli import main

FAST = ["--means", "1.0,0.5", "--horizon", "30", "--reps", "2", "--policies", "vanilla-ucb,mars", "-q"]


def test_run_writes_files(tmp_path):
    assert main(["run", *FAST, "--out", str(tmp_path), "--workers", "1"]) == 0
    assert (tmp_path / "regret.csv").exists()
    assert (tmp_path / "manifest.txt").exists()


def test_rerun_from_manifest_is_bitwise(tmp_path):
    main(["run", *FAST, "--out", str(tmp_path / "a"), "--workers", "2", "--seed", "99"])
    main(["run", "--config", str(tmp_path / "a" / "manifest.txt"), "--out", str(tmp_path / "b"),
          "--workers", "1", "-q"])
    assert (tmp_path / "a" / "regret.csv").read_bytes() == (tmp_path / "b" / "regret.csv").read_bytes()


def test_flags_override_preset(tmp_path):
    assert main(["run", "--preset", "fig1b", "--horizon", "20", "--reps", "1",
                 "--policies", "vanilla-ucb", "--out", str(tmp_path), "-q"]) == 0
    manifest = (tmp_path / "manifest.txt").read_text()
    assert "means=1.0,0.5" in manifest
    assert "horizon=20" in manifest


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "exp.txt"
    cfg.write_text("means=1.0,0.9\nhorizon=25\nreps=1\npolicies=vanilla-ucb\n")
    assert main(["run", "--config", str(cfg), "--horizon", "12", "--out", str(tmp_path), "-q"]) == 0
    assert "horizon=12" in (tmp_path / "manifest.txt").read_text()


@pytest.mark.parametrize("argv", [
    ["run", "--means", "1.0"],
    ["run", "--means", "1,0", "--policies", "phe"],
    ["run", "--means", "1,0", "--reps", "0"],
    ["run", "--means", "1,0", "--m-max", "1"],
])
def test_configuration_errors(argv, capsys):
    assert main(argv) == 2
    assert "configuration error" in capsys.readouterr().err


def test_unknown_policy_message_lists_names(capsys):
    main(["run", "--means", "1,0", "--policies", "phe"])
    assert "rmm-ucb" in capsys.readouterr().err


def test_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", *FAST, "--out", str(blocker / "x")]) == 3
    assert str(blocker) in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.txt")]) == 3


def test_gnuplot_subcommand(tmp_path, capsys):
    main(["run", *FAST, "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["gnuplot", str(tmp_path / "regret.csv")]) == 0
    out = capsys.readouterr().out
    assert "plot for [p in policies]" in out
    assert main(["gnuplot", str(tmp_path / "regret.csv"), "-o", str(tmp_path / "p.gp"), "--no-band"]) == 0
    assert "filledcurves" not in (tmp_path / "p.gp").read_text()


def test_gnuplot_missing_csv(tmp_path):
    assert main(["gnuplot", str(tmp_path / "nope.csv")]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "rmmucb", "run", "--means", "1,0", "--policies", "bogus"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "bogus" in proc.stderr
