import json
import os

import numpy as np
import pytest

from dickedrive import cli
from dickedrive.counterdiabatic import DegenerateSpectrumError


def write_conf(path, text):
    path.write_text(text)
    return str(path)


BASE = """
N = 8
n = 0
T = 2.0
omega_max = 0.3
chi_max = 1.0
steps = 300
mode = partial
K = 2
"""


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return header, np.array(rows)


class TestConfigParsing:
    def test_defaults_and_comments(self, tmp_path):
        conf = write_conf(tmp_path / "c.conf", "# comment\nN = 6  # inline\n")
        cfg = cli.parse_config(conf)
        assert cfg.n_atoms == 6
        assert cfg.steps == 5000
        assert cfg.mode == "none"
        assert cfg.resolved_omega() == 6.0  # default omega = N * chi

    def test_normalization(self, tmp_path):
        conf = write_conf(tmp_path / "c.conf", "N = 6\nT = 1.0\nchi_max = 2.0\nomega_max = 4.0\n")
        sched = cli.parse_config(conf).normalized_schedule()
        assert sched.total_time == 2.0
        assert sched.omega_max == 2.0
        assert sched.chi_max == 1.0

    @pytest.mark.parametrize(
        "body,field",
        [
            ("n = 0\n", "N"),  # no atom number at all
            ("N = 30\nn = 0.5\n", "n"),
            ("N = 30\nmode = sideways\n", "mode"),
            ("N = 30\nsteps = 10\n", "steps"),
            ("N = 30\nK = 7\n", "K"),
            ("N = 30\nK = 2\ncosts = 1\n", "costs"),
            ("N = 30\nstart = polar\n", "start"),
            ("N = 30\nbogus = 1\n", "bogus"),
            ("N = 30\nN_min = 4\nN_max = 6\n", "N"),
            ("N_min = 6\nN_max = 4\n", "N_min"),
            ("N = 30\nmode = averaged\n", "mode"),
        ],
    )
    def test_validation_errors_name_the_field(self, tmp_path, body, field):
        conf = write_conf(tmp_path / "c.conf", body)
        with pytest.raises(cli.ConfigError) as err:
            cli.parse_config(conf)
        assert field in str(err.value)

    def test_malformed_line(self, tmp_path):
        conf = write_conf(tmp_path / "c.conf", "N 30\n")
        with pytest.raises(cli.ConfigError):
            cli.parse_config(conf)


class TestRunVerb:
    def test_outputs_and_summary_echo(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        conf = write_conf(tmp_path / "c.conf", BASE)
        assert cli.main(["run", conf]) == 0
        out = tmp_path / "out"
        summary = json.loads((out / "summary.json").read_text())
        for key in ("N", "T", "omega_max", "chi_max", "steps", "mode", "K",
                    "costs", "start", "seed", "outputs", "outdir"):
            assert key in summary["settings"]
        assert summary["final_fidelity"] > 0.9
        assert len(summary["max_abs_alpha"]) == 2

        header, rows = read_csv(out / "trajectory.csv")
        assert header == ["t", "fidelity", "squeezing_db", "alpha_1", "alpha_2"]
        assert rows.shape == (301, 5)
        assert rows[0, 1] >= 1 - 1e-10

        header, hist = read_csv(out / "jz_hist.csv")
        assert header == ["m", "p_initial", "p_final"]
        assert hist[:, 1].sum() == pytest.approx(1.0, abs=1e-12)
        assert hist[:, 2].sum() == pytest.approx(1.0, abs=1e-12)

    def test_reruns_are_byte_identical(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        conf = write_conf(tmp_path / "c.conf", BASE)
        assert cli.main(["run", conf]) == 0
        first = (tmp_path / "out" / "trajectory.csv").read_bytes()
        first_summary = (tmp_path / "out" / "summary.json").read_bytes()
        assert cli.main(["run", conf]) == 0
        assert (tmp_path / "out" / "trajectory.csv").read_bytes() == first
        assert (tmp_path / "out" / "summary.json").read_bytes() == first_summary

    def test_exact_mode_summary(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        conf = write_conf(
            tmp_path / "c.conf", "N = 8\nomega_max = 0.3\nsteps = 300\nmode = exact\n"
        )
        assert cli.main(["run", conf]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert 1 - summary["final_fidelity"] <= 1e-6
        assert summary["max_abs_alpha"] is None

    def test_config_error_exit_code(self, tmp_path, capsys):
        conf = write_conf(tmp_path / "c.conf", "N = 30\nn = 0.5\n")
        assert cli.main(["run", conf]) == 2
        assert "config error" in capsys.readouterr().err

    def test_numerical_error_exit_code(self, tmp_path, monkeypatch, capsys):
        conf = write_conf(tmp_path / "c.conf", BASE)

        def boom(cfg):
            raise DegenerateSpectrumError(0.0)

        monkeypatch.setattr(cli, "run", boom)
        assert cli.main(["run", conf]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_averaged_run(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        conf = write_conf(
            tmp_path / "c.conf",
            "N_min = 6\nN_max = 8\nomega_max = 0.3\nsteps = 150\nmode = averaged\nK = 2\n",
        )
        assert cli.main(["run", conf]) == 0
        out = tmp_path / "out"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["mixed_parity_support"] is True  # N = 7 cannot reach n = 0
        assert set(summary["per_N"]) == {"6", "7", "8"}
        assert (out / "alphas.csv").exists()
        for n_atoms in (6, 7, 8):
            assert (out / f"trajectory_N{n_atoms}.csv").exists()
            assert (out / f"jz_hist_N{n_atoms}.csv").exists()


class TestSweepVerb:
    def test_axis_rows_and_points(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        conf = write_conf(tmp_path / "c.conf", BASE)
        assert cli.main(["sweep", conf, "--axis", "n", "--values", "0,1,2"]) == 0
        header, rows = read_csv(tmp_path / "out" / "sweep_n.csv")
        assert header == ["n", "final_fidelity", "final_squeezing_db"]
        assert rows.shape == (3, 3)
        assert np.allclose(rows[:, 0], [0, 1, 2])
        # fidelity decreases as the target moves off the equator
        assert rows[0, 1] > rows[1, 1] > rows[2, 1]
        assert (tmp_path / "out" / "n_1" / "summary.json").exists()

    def test_parallel_matches_serial(self, tmp_path, monkeypatch):
        conf = write_conf(tmp_path / "c.conf", BASE + "outdir = serial\n")
        monkeypatch.chdir(tmp_path)
        assert cli.main(["sweep", conf, "--axis", "K", "--values", "1,2"]) == 0
        serial = (tmp_path / "serial" / "sweep_K.csv").read_bytes()
        conf2 = write_conf(tmp_path / "c2.conf", BASE + "outdir = par\n")
        monkeypatch.setenv(cli.WORKERS_ENV, "2")
        assert cli.main(["sweep", conf2, "--axis", "K", "--values", "1,2"]) == 0
        parallel = (tmp_path / "par" / "sweep_K.csv").read_bytes()
        assert serial.replace(b"serial", b"") == parallel.replace(b"par", b"")

    def test_bad_axis_rejected(self, tmp_path):
        conf = write_conf(tmp_path / "c.conf", BASE)
        with pytest.raises(SystemExit):
            cli.main(["sweep", conf, "--axis", "zeta", "--values", "1"])


class TestFieldsVerb:
    def test_grids_written(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        conf = write_conf(
            tmp_path / "c.conf",
            "N = 8\nomega_max = 0.3\ngrid_thetas = 6\ngrid_phis = 8\nK = 2\n",
        )
        assert cli.main(["fields", conf, "--time", "0.5"]) == 0
        out = tmp_path / "out"
        header, rows = read_csv(out / "field_q.csv")
        assert header == ["theta", "phi", "value"]
        assert rows.shape == (48, 3)
        header, rows = read_csv(out / "field_hb_torque.csv")
        assert header == ["theta", "phi", "vx", "vy", "vz"]
        assert rows.shape == (48, 5)
        for name in ("hb", "hb0", "l1", "l2"):
            assert (out / f"field_{name}.csv").exists()
            assert (out / f"field_{name}_torque.csv").exists()

    def test_time_outside_schedule(self, tmp_path):
        conf = write_conf(tmp_path / "c.conf", "N = 8\n")
        assert cli.main(["fields", conf, "--time", "9.9"]) == 2


class TestSequenceVerb:
    def test_report_structure(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        conf = write_conf(tmp_path / "c.conf", "N = 6\nseq_dt = 0.01\n")
        assert cli.main(["sequence", conf]) == 0
        report = json.loads((tmp_path / "out" / "sequence_report.json").read_text())
        seqs = report["sequences"]
        assert set(seqs) == {"l1_cycle", "l1_split", "l2_triple", "l3_nested", "l4_nested"}
        assert seqs["l1_cycle"]["measured_order"] == pytest.approx(3.0, abs=0.3)
        assert seqs["l1_split"]["measured_order"] == pytest.approx(2.0, abs=0.3)
        assert seqs["l2_triple"]["measured_order"] == pytest.approx(3.0, abs=0.3)
        for entry in seqs.values():
            assert {"generator", "sign", "duration"} <= set(entry["segments"][0])
