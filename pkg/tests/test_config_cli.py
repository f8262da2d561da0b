import csv
import subprocess
import sys

import pytest

from emrkc import cli
from emrkc.config import RunConfig, load_config, parse_config, steps_for
from emrkc.errors import ConfigError

SMALL = """
[geometry]
extents = 2
spacing = 0.1
[time]
method = {method}
dt = 0.05
t_end = 1
[output]
dir = {out}
"""


def small_config(tmp_path, method="emrkc", name="run.ini"):
    path = tmp_path / name
    path.write_text(SMALL.format(method=method, out=tmp_path / "out"))
    return path


class TestParsing:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg == RunConfig()

    def test_full_grammar(self):
        cfg = parse_config("""
[geometry]
extents = 4, 2
spacing = 0.1, 0.05
[model]
name = HH
[conductivity]
sigma_i = 0.2, 0.02
sigma_e = 0.6, 0.2
chi = 100
cm = 0.02
[stimulus]
amplitude = 20   # volumetric
box = 0:0.5; 0:0.3
t_start = 1
t_end = 3
[time]
method = IMEX-RL
dt = 0.02
t_end = 4
epsilon = 0.1
reference_dt = 1e-4
[experiment]
dts = 0.5, 0.25
methods = emrkc, exex-rl
lambdas = 0, -5
scan_dts = 1, 2
[output]
dir = somewhere
snapshot = none
""")
        assert cfg.extents == (4.0, 2.0) and cfg.spacing == (0.1, 0.05)
        assert cfg.stim_box == ((0.0, 0.5), (0.0, 0.3)) and cfg.stim_amplitude == 20.0
        assert cfg.method == "imex-rl" and cfg.reference_dt == 1e-4
        assert cfg.methods == ("emrkc", "exex-rl") and cfg.snapshot == "none"
        cfg.validate()

    @pytest.mark.parametrize("text", ["[nowhere]\nx = 1", "[time]\nspeed = 3", "[time]\ndt = fast",
                                      "[stimulus]\nbox = 0-1", "not an ini file"])
    def test_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    @pytest.mark.parametrize("change", [{"method": "leapfrog"}, {"methods": ("emrkc", "euler")},
                                        {"snapshot": "all"}, {"threads": 0}, {"epsilon": 2.0},
                                        {"dt": 0.07}, {"model": "ttp"}, {"reference_dt": -1.0},
                                        {"extents": (1.05,)}])
    def test_validation(self, change):
        with pytest.raises(ConfigError):
            RunConfig().replace(**change).validate()

    def test_steps_for(self):
        assert steps_for(30.0, 0.25) == 120
        assert steps_for(1.0, 0.1) == 10
        with pytest.raises(ConfigError):
            steps_for(1.0, 0.3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.ini")

    def test_physical_key_ignores_method(self):
        a = RunConfig()
        assert a.physical_key() == a.replace(method="mrkc", dt=0.5).physical_key()
        assert a.physical_key() != a.replace(extents=(10.0,)).physical_key()

    @pytest.mark.parametrize("name", ["hh_1d.ini", "convergence_1d.ini", "stability_1d.ini", "rect_2d.ini",
                                      "test_eq.ini"])
    def test_shipped_configs_validate(self, name):
        from pathlib import Path
        load_config(Path(__file__).parent.parent / "configs" / name).validate()


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestCli:
    def test_simulate_outputs(self, tmp_path, capsys):
        assert cli.main(["simulate", "--config", str(small_config(tmp_path))]) == 0
        out = tmp_path / "out"
        steps = read_csv(out / "steps.csv")
        assert steps[0] == ["step", "t", "s", "m", "eta"] and len(steps) == 21
        counters = read_csv(out / "counters.csv")
        assert counters[0][:3] == ["method", "dt", "n_steps"]
        snap = read_csv(out / "snapshot.csv")
        assert snap[0] == ["node", "x", "V", "m", "h", "n"] and len(snap) == 22

    def test_floats_round_trip(self, tmp_path):
        cli.main(["simulate", "--config", str(small_config(tmp_path))])
        for row in read_csv(tmp_path / "out" / "snapshot.csv")[1:]:
            for text in row[1:]:
                assert repr(float(text)) == text

    def test_deterministic_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir()
        b.mkdir()
        for d in (a, b):
            cli.main(["simulate", "--config", str(small_config(d)), "--out", str(d / "o")])
        for name in ("steps.csv", "snapshot.csv"):
            assert (a / "o" / name).read_bytes() == (b / "o" / name).read_bytes()

    def test_overrides(self, tmp_path):
        cfg = small_config(tmp_path)
        assert cli.main(["simulate", "--config", str(cfg), "--method", "exex-rl", "--dt", "0.01",
                         "--out", str(tmp_path / "x")]) == 0
        row = read_csv(tmp_path / "x" / "counters.csv")[1]
        assert row[0] == "exex-rl" and row[1] == "0.01" and row[2] == "100"

    def test_config_error_exit(self, tmp_path, capsys):
        assert cli.main(["simulate", "--config", str(small_config(tmp_path)), "--method", "nope"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_indivisible_dt_exit(self, tmp_path):
        assert cli.main(["simulate", "--config", str(small_config(tmp_path)), "--dt", "0.3"]) == 2

    def test_numerical_abort_exit(self, tmp_path, capsys):
        cfg = tmp_path / "long.ini"
        cfg.write_text(SMALL.format(method="exex-rl", out=tmp_path).replace("t_end = 1", "t_end = 10"))
        # about twice the explicit limit: the checkerboard mode grows by 2.8 per step
        assert cli.main(["simulate", "--config", str(cfg), "--dt", "0.1"]) == 3
        assert "numerical abort" in capsys.readouterr().err

    def test_stages(self, capsys):
        assert cli.main(["stages", "--dt", "0.1", "--rho-F", "1000", "--rho-S", "193.3333"]) == 0
        assert capsys.readouterr().out.startswith("s=4 m=")

    def test_test_eq(self, tmp_path, capsys):
        ini = tmp_path / "t.ini"
        ini.write_text(f"[experiment]\nlambdas = 0, -10, -1000\nscan_dts = 1\n[output]\ndir = {tmp_path}\n")
        assert cli.main(["test-eq", "--config", str(ini)]) == 0
        rows = read_csv(tmp_path / "test_eq.csv")
        assert len(rows) == 28 and rows[0][0] == "lambda_F"

    def test_test_eq_rejects_positive_lambda(self, tmp_path):
        ini = tmp_path / "t.ini"
        ini.write_text(f"[experiment]\nlambdas = 1\n[output]\ndir = {tmp_path}\n")
        assert cli.main(["test-eq", "--config", str(ini)]) == 2

    def test_converge_and_efficiency(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text(f"""[geometry]
extents = 2
[time]
t_end = 1
reference_dt = 0.005
[experiment]
dts = 0.1, 0.05
methods = emrkc, imex-rl
[output]
dir = {tmp_path / 'o'}
""")
        assert cli.main(["converge", "--config", str(ini), "--threads", "2"]) == 0
        rows = read_csv(tmp_path / "o" / "convergence.csv")
        assert rows[0][:4] == ["dt", "rel_l2_err", "order", "stable"] and len(rows) == 3
        assert cli.main(["efficiency", "--config", str(ini)]) == 0
        assert len(read_csv(tmp_path / "o" / "efficiency.csv")) == 5
        assert list((tmp_path / "o" / "refcache").glob("ref_*.npy"))

    def test_stability_scan(self, tmp_path):
        ini = tmp_path / "s.ini"
        ini.write_text(f"""[geometry]
extents = 1
[time]
t_end = 0.5
[experiment]
scan_dts = 0.05, 0.5
[output]
dir = {tmp_path}
""")
        assert cli.main(["stability-scan", "--config", str(ini)]) == 0
        rows = read_csv(tmp_path / "stability_scan.csv")
        assert rows[0] == ["dt", "rel_norm", "stable", "s", "m", "dt_explicit"] and len(rows) == 3

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "emrkc", "stages", "--dt", "1", "--rho-F", "0",
                               "--rho-S", "0"], capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.startswith("s=1 m=1")

    def test_usage_error(self):
        with pytest.raises(SystemExit):
            cli.main(["simulate", "--dt", "-1"])
