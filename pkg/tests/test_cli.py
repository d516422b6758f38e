import subprocess
import sys

import numpy as np
import pytest

from wavetwin.cli import main, thread_limit
from wavetwin.exceptions import ConfigError
from wavetwin.harness import read_csv

BLOWUP = """
[grid]
L = 64
[jonswap]
kp = 4
steepness = 0.6
[hos]
filter_every = 0
[enkf]
n_members = 10
[run]
t_max_tp = 1
"""


def test_unknown_flag_prints_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--bogus"])
    assert exc.value.code == 1
    assert "usage:" in capsys.readouterr().err


def test_missing_subcommand_and_bad_selector(capsys):
    for argv in ([], ["run", "--selector", "sonar"], ["run", "--seed", "-3"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1


def test_missing_config_file(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "absent.cfg" in capsys.readouterr().err


def test_invalid_config_value(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[hos]\nM = 0\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_numerical_failure_exit_code(tmp_path):
    cfg = tmp_path / "blow.cfg"
    cfg.write_text(BLOWUP)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_run_writes_outputs(small_cfg_file, tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(small_cfg_file), "--out", str(out), "--seed", "3",
                 "--selector", "heave"]) == 0
    for name in ("wave_error.csv", "ship_motion.csv", "params.csv", "kernel_t1.csv",
                 "config_used.cfg", "run.log"):
        assert (out / name).is_file()
    assert "seed = 3" in (out / "config_used.cfg").read_text()
    assert "selector=heave" in (out / "run.log").read_text()


def test_truth_and_observe(small_cfg_file, tmp_path):
    assert main(["truth", "--config", str(small_cfg_file), "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "truth_ship.csv")
    assert header[:3] == ["t_over_Tp", "S3", "S4"]
    fields = np.load(tmp_path / "truth_fields.npz")
    assert fields["eta"].shape == (data.shape[0], 64)
    assert main(["observe", "--config", str(small_cfg_file), "--out", str(tmp_path),
                 "--selector", "wave"]) == 0
    header, _ = read_csv(tmp_path / "observations.csv")
    assert header == ["t_over_Tp", "eta_x32", "psi_x32"]


def test_compare_merges_selectors(small_cfg_file, tmp_path):
    assert main(["compare", "--config", str(small_cfg_file), "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "compare.csv")
    assert header == ["t_over_Tp", "eps_noda", "eps_wave", "eps_heave", "eps_roll", "eps_all"]
    assert np.all(np.isfinite(data))
    # a second call reuses the per-selector runs
    before = (tmp_path / "all" / "wave_error.csv").stat().st_mtime_ns
    assert main(["compare", "--config", str(small_cfg_file), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "all" / "wave_error.csv").stat().st_mtime_ns == before


def test_thread_env(monkeypatch):
    monkeypatch.setenv("WAVETWIN_THREADS", "0")
    assert thread_limit() is None
    monkeypatch.setenv("WAVETWIN_THREADS", "2")
    assert thread_limit() == 2
    monkeypatch.setenv("WAVETWIN_THREADS", "many")
    with pytest.raises(ConfigError):
        thread_limit()


def test_bad_thread_env_exit_code(monkeypatch, tmp_path):
    monkeypatch.setenv("WAVETWIN_THREADS", "-1")
    assert main(["run", "--out", str(tmp_path)]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wavetwin", "--help"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0 and "compare" in proc.stdout
