import json
import shutil
import subprocess
import sys

import pytest

from irs_rotations.cli import main

QUICK = "trials = 3\nk_list = 4, 16\nschemes = zfs, dbf, rbf, no-irs\n"


@pytest.fixture
def quick_cfg(tmp_path):
    p = tmp_path / "quick.cfg"
    p.write_text(QUICK)
    return str(p)


def test_sumrate_csv(tmp_path, quick_cfg, capsys):
    assert main(["sumrate", "--config", quick_cfg, "--out", str(tmp_path / "o")]) == 0
    text = (tmp_path / "o" / "sumrate.csv").read_text()
    assert text.startswith("K,scheme,mean_rate_bpshz,stderr,theorem_bpshz\n")
    assert len(text.splitlines()) == 1 + 8


def test_sumrate_json_and_seed(tmp_path, quick_cfg):
    assert main(["sumrate", "--config", quick_cfg, "--out", str(tmp_path / "a"),
                 "--format", "json", "--seed", "11"]) == 0
    assert main(["sumrate", "--config", quick_cfg, "--out", str(tmp_path / "b"),
                 "--format", "json", "--seed", "12"]) == 0
    a = json.loads((tmp_path / "a" / "sumrate.json").read_text())
    b = json.loads((tmp_path / "b" / "sumrate.json").read_text())
    assert a != b


def test_byte_identical_reruns(tmp_path, quick_cfg):
    for d in ("x", "y"):
        assert main(["sumrate", "--config", quick_cfg, "--out", str(tmp_path / d),
                     "--threads", "1"]) == 0
    assert (tmp_path / "x" / "sumrate.csv").read_bytes() == (tmp_path / "y" / "sumrate.csv").read_bytes()


def test_ee_command(tmp_path):
    cfg = tmp_path / "ee.cfg"
    cfg.write_text("n_max = 32\nm_max = 3\n")
    assert main(["ee", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "ee.csv").read_text().splitlines()
    assert lines[0] == "pmax_db,solver,m_star,n_star,pt_star_w,ee_mbits_per_j"
    assert len(lines) == 5


def test_geometry_dump_command(tmp_path):
    assert main(["geometry-dump", "--out", str(tmp_path), "--format", "json"]) == 0
    assert len(json.loads((tmp_path / "h1.json").read_text())) == 32


def test_validate_command(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "PASS sinr_cdf_ks" in out


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown_key = 3\n")
    assert main(["sumrate", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["sumrate", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["sumrate", "--threads", "0"]) == 2
    assert main(["sumrate", "--seed", "-1"]) == 2


def test_numerical_guard_exit(tmp_path, capsys):
    cfg = tmp_path / "big.cfg"
    cfg.write_text("phase_bits = 2\nschemes = coherent\ntrials = 1\nk_list = 4\n")
    assert main(["sumrate", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    assert "budget" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


@pytest.mark.skipif(shutil.which("irs-rotations") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["irs-rotations", "geometry-dump", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert (tmp_path / "elements.csv").exists()


def test_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "irs_rotations.cli", "sumrate", "--config",
                          "/nonexistent.cfg"], capture_output=True, text=True)
    assert res.returncode == 2
