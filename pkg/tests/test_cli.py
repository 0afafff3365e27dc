import json
from pathlib import Path

import numpy as np
import pytest

from trailplan.cli import main
from trailplan.solver import read_value_dump
from trailplan.terrain import load_esri_ascii

TINY = """
box = 0 4 0 4
N = 24
M = 24
T = 1.6
x0 = 1 2
x_end = 3 2
terrain = flat
n_ext_samples = 4
n_directions = 16
seed = 3
L = 12
realizations = 2
sigma_list = 0.3 0.15 0
times = 0 0.5
stride = 6
T_lo = 1.0
T_hi = 3.0
tol_T = 0.4
"""


@pytest.fixture()
def cfgfile(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY)
    return p


def run(*argv):
    return main([str(a) for a in argv])


def read_lines(p):
    text = Path(p).read_text()
    assert text.endswith("\n")
    return text.splitlines()


class TestSolveCommand:
    def test_artifacts_and_metadata(self, cfgfile, tmp_path):
        out = tmp_path / "o"
        assert run("solve", "--config", cfgfile, "--out", out) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["time_stepper"] == "explicit"
        assert meta["scheme"] == "godunov"
        diam = np.hypot(4, 4)
        assert min(meta["u_min_per_slice"]) >= -1e-6 * diam
        header, u = read_value_dump(out / "value.bin")
        assert header["dims"] == [25, 25]
        assert u.shape[0] == meta["cfl"]["K"] + 1
        assert (out / "value.png").exists()

    def test_semi_implicit_label(self, cfgfile, tmp_path):
        text = cfgfile.read_text() + "sigma = 0.2\n"
        cfg2 = cfgfile.parent / "sig.cfg"
        cfg2.write_text(text)
        out = tmp_path / "o2"
        assert run("solve", "--config", cfg2, "--out", out) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["time_stepper"] == "semi_implicit"

    def test_missing_key_message(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text(TINY.replace("T = 1.6", ""))
        assert run("solve", "--config", bad) == 2
        assert "missing key: T" in capsys.readouterr().err

    def test_csv_dump(self, cfgfile, tmp_path):
        cfg2 = cfgfile.parent / "csv.cfg"
        cfg2.write_text(TINY.replace("T = 1.6", "T = 0.3") + "dump = csv\n")
        out = tmp_path / "o3"
        assert run("solve", "--config", cfg2, "--out", out) == 0
        slices = sorted(out.glob("value_k*.csv"))
        assert slices
        assert read_lines(slices[0])[0] == "i,j,x,y,u"


class TestPathCommand:
    def test_reaches_target(self, cfgfile, tmp_path):
        out = tmp_path / "p"
        assert run("path", "--config", cfgfile, "--out", out) == 0
        lines = read_lines(out / "path.csv")
        assert lines[0] == "t,x,y,clamped"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["terminal_distance"] <= 3 * (4 / 24)
        assert (out / "path.png").exists()


class TestEnsembleCommand:
    def test_requires_ensemble_method(self, cfgfile, tmp_path, capsys):
        assert run("ensemble", "--config", cfgfile, "--out", tmp_path / "e0") == 2
        assert "method" in capsys.readouterr().err

    def test_artifacts(self, cfgfile, tmp_path):
        cfg2 = cfgfile.parent / "ens.cfg"
        cfg2.write_text(TINY + "method = ensemble\nsigma = 0.2\n")
        out = tmp_path / "e"
        assert run("ensemble", "--config", cfg2, "--out", out) == 0
        lines = read_lines(out / "ensemble.csv")
        assert lines[0] == "t,mean_x,mean_y,std_x,std_y"
        assert (out / "realization_00.csv").exists()
        assert (out / "realization_01.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["num_trials"] == 12

    def test_sigma_zero_mean_equals_path(self, cfgfile, tmp_path):
        cfg2 = cfgfile.parent / "ens0.cfg"
        cfg2.write_text(TINY + "method = ensemble\n")
        out_e = tmp_path / "ez"
        out_p = tmp_path / "pz"
        assert run("ensemble", "--config", cfg2, "--out", out_e) == 0
        assert run("path", "--config", cfgfile, "--out", out_p) == 0
        mean = [ln.split(",")[1:3] for ln in read_lines(out_e / "ensemble.csv")[1:]]
        path = [ln.split(",")[1:3] for ln in read_lines(out_p / "path.csv")[1:]]
        assert mean == path


class TestConvergeCommand:
    def test_artifacts_and_table(self, cfgfile, tmp_path):
        out = tmp_path / "c"
        assert run("converge", "--config", cfgfile, "--out", out) == 0
        assert (out / "path_sigma_0.3.csv").exists()
        assert (out / "path_sigma_0.0.csv").exists()
        lines = read_lines(out / "convergence.csv")
        assert lines[0].startswith("sigma,")

    def test_sigma_list_must_contain_zero(self, cfgfile, tmp_path, capsys):
        cfg2 = cfgfile.parent / "nz.cfg"
        cfg2.write_text(TINY.replace("sigma_list = 0.3 0.15 0",
                                     "sigma_list = 0.3 0.15"))
        assert run("converge", "--config", cfg2, "--out", tmp_path / "x") == 2
        assert "must contain 0" in capsys.readouterr().err

    def test_sigma_list_needs_two_positive(self, cfgfile, tmp_path, capsys):
        cfg2 = cfgfile.parent / "one.cfg"
        cfg2.write_text(TINY.replace("sigma_list = 0.3 0.15 0",
                                     "sigma_list = 0.3 0"))
        assert run("converge", "--config", cfg2, "--out", tmp_path / "y") == 2
        assert "two positive" in capsys.readouterr().err


class TestControlSnapshotCommand:
    def test_artifacts(self, cfgfile, tmp_path):
        out = tmp_path / "s"
        assert run("control-snapshot", "--config", cfgfile, "--out", out) == 0
        lines = read_lines(out / "control_00.csv")
        assert lines[0] == "x,y,sx,sy,degenerate_flag"
        assert (out / "control_01.csv").exists()

    def test_time_out_of_range(self, cfgfile, tmp_path, capsys):
        cfg2 = cfgfile.parent / "t.cfg"
        cfg2.write_text(TINY.replace("times = 0 0.5", "times = 0 9"))
        assert run("control-snapshot", "--config", cfg2, "--out", tmp_path / "z") == 2
        assert "outside" in capsys.readouterr().err


class TestCriticalTimeCommand:
    def test_flat_critical_time(self, cfgfile, tmp_path):
        out = tmp_path / "ct"
        assert run("critical-time", "--config", cfgfile, "--out", out) == 0
        result = json.loads((out / "critical_time.json").read_text())
        V0 = 1.11 * np.exp(-4 / 2345)
        assert result["T_star"] == pytest.approx(2.0 / V0, abs=0.4 + 3 * (4 / 24) / V0)
        assert (out / "trace.csv").exists()

    def test_inverted_bracket_errors(self, cfgfile, tmp_path, capsys):
        cfg2 = cfgfile.parent / "ib.cfg"
        cfg2.write_text(TINY.replace("T_lo = 1.0", "T_lo = 2.8"))
        assert run("critical-time", "--config", cfg2, "--out", tmp_path / "ib") == 2


class TestGenTerrain:
    def test_asc_round_trip(self, tmp_path):
        cfg = tmp_path / "g.cfg"
        cfg.write_text(TINY.replace("terrain = flat",
                                    "terrain = gaussian_mountains\n"
                                    "mountain = 1 2 2 0.8"))
        out = tmp_path / "g"
        assert run("gen-terrain", "--config", cfg, "--out", out) == 0
        field = load_esri_ascii(out / "terrain.asc")
        assert field.dims == (25, 25)
        assert field.heights.max() == pytest.approx(1.0, abs=1e-6)


class TestReproducibility:
    def test_byte_identical_rerun(self, cfgfile, tmp_path):
        cfg2 = cfgfile.parent / "rep.cfg"
        cfg2.write_text(TINY + "method = ensemble\nsigma = 0.15\n")
        out = tmp_path / "r"
        assert run("ensemble", "--config", cfg2, "--out", out) == 0
        first = {p.name: p.read_bytes() for p in out.iterdir() if p.name != "run.log"}
        for p in out.iterdir():
            if p.name != "run.log":
                p.unlink()
        assert run("ensemble", "--config", cfg2, "--out", out) == 0
        second = {p.name: p.read_bytes() for p in out.iterdir() if p.name != "run.log"}
        assert first == second

    def test_seed_flag_changes_ensemble(self, cfgfile, tmp_path):
        cfg2 = cfgfile.parent / "sd.cfg"
        cfg2.write_text(TINY + "method = ensemble\nsigma = 0.2\n")
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert run("ensemble", "--config", cfg2, "--out", out1, "--seed", 1) == 0
        assert run("ensemble", "--config", cfg2, "--out", out2, "--seed", 2) == 0
        assert (out1 / "ensemble.csv").read_text() != (out2 / "ensemble.csv").read_text()
