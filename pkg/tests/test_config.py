import math

import numpy as np
import pytest

from spincat.cli import main
from spincat.config import ConfigError, build_system, echo_config, parse_config

MINIMAL = "system preset benzene12\nexperiment catdemo\n"


class TestParse:
    def test_minimal_config_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.experiment == "catdemo"
        assert cfg.preset == "benzene12"
        assert cfg.mode == "ideal"
        assert cfg.epsilon == 1.0
        assert cfg.t1 == {"1H": 1.7, "13C": 2.5}
        assert cfg.t2 == {"1H": 0.25, "13C": 0.26}
        assert cfg.dephasing == "independent"
        assert cfg.points == 4096
        assert cfg.out == "."

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("system preset benzene12\nexperimnt catdemo\n")

    def test_missing_experiment(self):
        with pytest.raises(ConfigError, match="experiment"):
            parse_config("system preset benzene12\n")

    def test_bad_experiment_name(self):
        with pytest.raises(ConfigError):
            parse_config("experiment catdem\n")

    def test_comments_ignored(self):
        cfg = parse_config("# hello\nexperiment run  # trailing\nseq delay 0.001\n")
        assert cfg.experiment == "run"
        assert cfg.sequence_lines == ["delay 0.001"]

    def test_relaxation_keys(self):
        cfg = parse_config(MINIMAL + "t1 1H 3.3\nt2 1H inf\ndephasing collective\n")
        assert cfg.t1["1H"] == 3.3
        assert math.isinf(cfg.t2["1H"])
        assert cfg.dephasing == "collective"

    def test_delays_list(self):
        cfg = parse_config(MINIMAL + "delays 0.001,0.002,0.004\n")
        assert cfg.delays == [0.001, 0.002, 0.004]

    def test_value_errors_name_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config(MINIMAL + "points many\n")

    def test_echo_roundtrip(self):
        texts = [
            MINIMAL,
            MINIMAL + "mode train\nepsilon 0.25\ntip 3.5\ndelays 0.001,0.002\n",
            "experiment spectrum\nsystem spins 2\nchannel 1H 0\nchannel 13C 50\n"
            "spin 1 13C\ncoupling 0 1 123.4\nobserve 13C\n",
        ]
        for text in texts:
            cfg = parse_config(text)
            assert parse_config(echo_config(cfg)) == cfg


class TestBuildSystem:
    def test_preset_with_offsets_and_scale(self):
        cfg = parse_config(MINIMAL + "scale 2.0\noffset 1H 75\n")
        system = build_system(cfg)
        assert system.channels[0].offset == 75.0
        base = build_system(parse_config(MINIMAL))
        np.testing.assert_allclose(system.couplings, 2.0 * base.couplings)

    def test_explicit_table(self):
        cfg = parse_config(
            "experiment run\nseq delay 0.001\nsystem spins 2\n"
            "channel 1H 0\nchannel 13C 0\nspin 1 13C\ncoupling 0 1 100\n")
        system = build_system(cfg)
        assert system.n_spins == 2
        assert system.couplings[0, 1] == 100.0
        assert system.channel_of == (0, 1)

    def test_bad_assignment(self):
        cfg = parse_config(
            "experiment run\nsystem spins 2\nchannel 1H 0\nspin 5 1H\n"
            "seq delay 0.001\n")
        with pytest.raises(ConfigError):
            build_system(cfg)


class TestCliExperiments:
    def run_cli(self, tmp_path, config_text, experiment, extra=()):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(config_text)
        out = tmp_path / "out"
        code = main([experiment, "--config", str(cfg_file), "--out", str(out)]
                    + list(extra))
        return code, out

    def test_catdemo(self, tmp_path):
        code, out = self.run_cli(tmp_path, MINIMAL, "catdemo")
        assert code == 0
        report = (out / "catdemo_report.txt").read_text()
        assert "roundtrip_fidelity" in report
        fid = float([ln for ln in report.splitlines()
                     if ln.startswith("roundtrip_fidelity")][0].split("=")[1])
        assert fid >= 0.9999
        assert (out / "profile_E.csv").exists()
        assert (out / "state_cat_spectrum.csv").exists()
        assert (out / "config_echo.txt").exists()

    def test_spectrum_one_peak(self, tmp_path):
        code, out = self.run_cli(tmp_path, "experiment spectrum\n"
                                 "system preset benzene12\n", "spectrum")
        assert code == 0
        peaks = [ln for ln in (out / "peaks.csv").read_text().splitlines()
                 if ln and not ln.startswith("#")]
        assert len(peaks) == 2  # column header + one peak

    def test_run_experiment(self, tmp_path):
        text = ("experiment run\nsystem preset benzene12\n"
                "seq pulse 1H 180 0\nseq pulse 13C 180 0\n")
        code, out = self.run_cli(tmp_path, text, "run")
        assert code == 0
        lines = [ln for ln in (out / "trajectory.csv").read_text().splitlines()
                 if ln and not ln.startswith("#")]
        assert len(lines) == 4  # column header + initial + 2 events

    def test_mqscan(self, tmp_path):
        code, out = self.run_cli(tmp_path, MINIMAL, "mqscan")
        assert code == 0
        rows = [ln for ln in (out / "mqscan.csv").read_text().splitlines()
                if ln and not ln.startswith("#") and not ln.startswith("order")]
        table = {int(r.split(",")[0]): float(r.split(",")[1]) for r in rows}
        assert table[12] == pytest.approx(0.25, abs=1e-6)
        assert table[-12] == pytest.approx(0.25, abs=1e-6)

    def test_lifetime(self, tmp_path):
        code, out = self.run_cli(
            tmp_path, MINIMAL + "delays 0.002,0.004,0.008,0.016\n", "lifetime")
        assert code == 0
        fit = (out / "fit.txt").read_text()
        tau = float([ln for ln in fit.splitlines()
                     if ln.startswith("time_constant_s")][0].split("=")[1])
        assert tau == pytest.approx(21.2e-3, rel=0.02)
        assert "measured_reference_range_s" in fit

    def test_ahtcheck(self, tmp_path):
        code, out = self.run_cli(
            tmp_path,
            "experiment ahtcheck\nsystem preset benzene6\n"
            "ahtgrid 0.0004,0.0008,0.0016\n", "ahtcheck")
        assert code == 0
        report = (out / "ahtcheck_report.txt").read_text()
        slope = float([ln for ln in report.splitlines()
                       if ln.startswith("slope_eight")][0].split("=")[1])
        assert slope >= 1.8

    def test_plotscript(self, tmp_path):
        code = main(["plotscript", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "plots.gp").exists()

    def test_flag_overrides_config(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(MINIMAL + "mode ideal\n")
        out = tmp_path / "out"
        code = main(["catdemo", "--config", str(cfg_file), "--out", str(out),
                     "--mode", "train"])
        assert code == 0
        assert "mode train" in (out / "config_echo.txt").read_text()


class TestCliErrors:
    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("experiment catdemo\nbogus line here\n")
        assert main(["catdemo", "--config", str(cfg)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["catdemo", "--config", str(tmp_path / "none.cfg")]) == 2

    def test_physics_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        # the delay sweep needs a dense matrix on 12 spins for cat_diagonal
        # with finite T1... use ahtcheck on the 12-spin system instead
        cfg.write_text("experiment ahtcheck\nsystem preset benzene12\n")
        assert main(["ahtcheck", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 3

    def test_fit_error_exit_code(self, tmp_path):
        # the cat state has no six-quantum element: every sample is zero and
        # the log fit is impossible
        cfg = tmp_path / "fit.cfg"
        cfg.write_text(MINIMAL + "observable six_q\ndelays 0.001,0.002,0.003\n")
        assert main(["lifetime", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 4


class TestDeterminism:
    def test_bit_identical_outputs(self, tmp_path):
        # identical config (same out directory) run twice: files match bitwise
        cfg_file = tmp_path / "run.cfg"
        out = tmp_path / "out"
        cfg_file.write_text(MINIMAL + "delays 0.002,0.004,0.008\n"
                            + f"out {out}\n")
        names = ("decay.csv", "fit.txt", "config_echo.txt")
        assert main(["lifetime", "--config", str(cfg_file)]) == 0
        first = {n: (out / n).read_bytes() for n in names}
        assert main(["lifetime", "--config", str(cfg_file)]) == 0
        for n in names:
            assert (out / n).read_bytes() == first[n]

    def test_header_flag(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(MINIMAL)
        out = tmp_path / "o"
        assert main(["mqscan", "--config", str(cfg_file), "--out", str(out),
                     "--no-header"]) == 0
        first = (out / "mqscan.csv").read_text().splitlines()[0]
        assert first.startswith("order,")
