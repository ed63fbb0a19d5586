"""Configuration parsing and the command-line interface.

CLI invocations go through click's CliRunner; only the fast subcommands
are exercised here (the slow pipelines have their own module tests).
"""

import json
import math

import pytest
from click.testing import CliRunner

from boutroux.cli import main
from boutroux.config import RunConfig, load_config, parse_config
from boutroux.errors import ConfigError


class TestConfig:
    def test_defaults_valid(self):
        cfg = RunConfig().validate()
        assert cfg.precision == 30

    def test_parse_round_trip(self):
        text = "precision = 40\node_tol = 1e-10\n# comment\nout_dir = /tmp\n"
        cfg = parse_config(text)
        assert cfg.precision == 40
        assert cfg.ode_tol == 1e-10
        assert cfg.out_dir == "/tmp"
        assert cfg.quad_tol == RunConfig().quad_tol  # untouched default

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("presicion = 40\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("precision = 30\nprecision = 40\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config("precision 40\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="bad value"):
            parse_config("ode_tol = tiny\n")

    def test_invalid_range_rejected(self):
        with pytest.raises(ConfigError, match="positive"):
            parse_config("ode_tol = -1e-12\n")
        with pytest.raises(ConfigError, match="at least 15"):
            parse_config("precision = 10\n")

    def test_hash_stable_and_sensitive(self):
        a = RunConfig().config_hash()
        b = RunConfig().config_hash()
        c = RunConfig(precision=31).config_hash()
        assert a == b
        assert a != c
        assert len(a) == 16

    def test_load_config(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("n_series = 64\n")
        assert load_config(p).n_series == 64


@pytest.fixture
def runner():
    return CliRunner()


class TestCli:
    def test_coeffs_json(self, runner):
        res = runner.invoke(main, ["coeffs", "--order", "12"])
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert "config_hash" in doc
        first = doc["series"][0]
        assert first["k"] == 4
        assert (first["numerator"], first["denominator"]) == ("-392", "625")
        assert all(row["numerator"] == "0"
                   for row in doc["series"] if row["k"] % 2 == 1)

    def test_sum_csv_header_and_determinism(self, runner):
        args = ["sum", "--C", "0", "--grid", "10:14:3",
                "--phi", str(math.pi / 4)]
        r1 = runner.invoke(main, args)
        r2 = runner.invoke(main, args)
        assert r1.exit_code == 0
        assert r1.output == r2.output  # byte-identical
        lines = r1.output.splitlines()
        assert lines[0].startswith("# config_hash=")
        assert lines[1] == "abs_x,h_re,h_im"
        assert len(lines) == 5

    def test_out_file(self, runner, tmp_path):
        out = tmp_path / "c.json"
        res = runner.invoke(main, ["--out", str(out),
                                   "coeffs", "--order", "10"])
        assert res.exit_code == 0
        doc = json.loads(out.read_text())
        assert doc["series"][0]["denominator"] == "625"

    def test_config_flag_changes_hash(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("precision = 25\n")
        r1 = runner.invoke(main, ["coeffs", "--order", "8"])
        r2 = runner.invoke(main, ["--config", str(cfg),
                                  "coeffs", "--order", "8"])
        assert r2.exit_code == 0
        h1 = json.loads(r1.output)["config_hash"]
        h2 = json.loads(r2.output)["config_hash"]
        assert h1 != h2

    def test_error_json_and_exit_code(self, runner):
        # phi = 0 runs the Laplace ray through the Borel singularities
        res = runner.invoke(main, ["sum", "--C", "1",
                                   "--grid", "10:14:3", "--phi", "0"])
        assert res.exit_code == 2
        doc = json.loads(res.output)
        assert doc["error"] == "StokesDirectionError"
        assert "message" in doc

    def test_bad_config_reported(self, runner, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense = 1\n")
        res = runner.invoke(main, ["--config", str(cfg),
                                   "coeffs", "--order", "8"])
        assert res.exit_code == 2
        assert json.loads(res.output)["error"] == "ConfigError"

    def test_poles_csv(self, runner):
        res = runner.invoke(main, ["poles", "--C", "1", "--n", "5"])
        assert res.exit_code == 0
        lines = res.output.splitlines()
        assert lines[1] == ("n,predicted_re,predicted_im,"
                            "detected_re,detected_im,gap")
        n, pre, pim, dre, dim, gap = lines[2].split(",")
        assert n == "5"
        assert float(gap) < 1e-2
