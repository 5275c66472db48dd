import csv
import json
import re
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rgscalelab.cli import SCHEMA_VERSION, format_float, main
from rgscalelab.config import EXPERIMENTS, emit_config, parse_config
from rgscalelab.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

CRITICAL = """
[model]
n = 1
alpha = 0.5
mu = 0
[grid]
r_min = 10
r_max = 1000
points = 6
"""

FLOAT17 = re.compile(r"^-?\d\.\d{16}e[+-]\d{2,3}$")


def run(tmp_path, experiment, text, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = tmp_path / "run.ini"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = main([experiment, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def manifest(out, experiment):
    return json.loads((out / f"{experiment}.manifest.json").read_text())


class TestConfig:
    def test_defaults_and_auto_gamma(self):
        cfg = parse_config(CRITICAL, "scale-sweep")
        assert cfg.gamma == 0.75
        assert cfg.Y == (0.0,)
        assert cfg["kernel"]["type"] == "smooth"
        assert parse_config(CRITICAL.replace("mu = 0", "mu = -1"), "scale-sweep").gamma == 0.5

    def test_round_trip(self):
        cfg = parse_config(CRITICAL + "[geometry]\ny = 0.1\ntaus = 0, 1e-3, 2\n", "dynamic-exponent")
        assert parse_config(emit_config(cfg)) == cfg

    @given(
        st.sampled_from(EXPERIMENTS),
        st.integers(1, 3),
        st.floats(0.05, 5.0),
        st.floats(-5.0, 0.0),
        st.floats(1e-3, 1e3),
    )
    def test_round_trip_any_values(self, experiment, n, alpha, mu, r_min):
        text = f"[model]\nn = {n}\nalpha = {alpha!r}\nmu = {mu!r}\n[grid]\nr_min = {r_min!r}\nr_max = {r_min * 7.3!r}\n"
        cfg = parse_config(text, experiment)
        assert parse_config(emit_config(cfg)) == cfg

    def test_every_error_is_reported(self):
        text = "[model]\nn = 4\nbeta = -1\nbogus = 1\n[grid]\nr_min = 100\nr_max = 10\n[nowhere]\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text, "scale-sweep")
        errs = "\n".join(info.value.errors)
        for fragment in ("model.n", "model.beta", "model.bogus: unknown key", "grid.r_min", "[nowhere]"):
            assert fragment in errs

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="model.n"):
            parse_config("[grid]\npoints = 5\n", "scale-sweep")

    def test_conflicting_experiment_name(self):
        with pytest.raises(ConfigError):
            parse_config("[experiment]\nname = slowdown\n" + CRITICAL, "kms-check")

    def test_geometry_dimension(self):
        with pytest.raises(ConfigError, match="geometry.y"):
            parse_config(CRITICAL + "[geometry]\ny = 1, 2\n", "scale-sweep")

    def test_wedge_only_in_one_dimension(self):
        with pytest.raises(ConfigError, match="wedge"):
            parse_config("[model]\nn = 2\n[kernel]\ntype = wedge\n", "scale-sweep")


class TestFormatting:
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_seventeen_digits_round_trip(self, x):
        s = format_float(x)
        assert FLOAT17.match(s)
        assert float(s) == x

    def test_non_finite(self):
        assert format_float(float("nan")) == "nan"
        assert format_float(float("-inf")) == "-inf"


class TestCli:
    def test_scale_sweep_csv(self, tmp_path):
        code, out = run(tmp_path, "scale-sweep", CRITICAL)
        assert code == 0
        rows = list(csv.DictReader((out / "scale-sweep.csv").open()))
        assert len(rows) == 6
        assert all(r["schema_version"] == SCHEMA_VERSION for r in rows)
        for r in rows:
            for key in ("R", "re_value", "im_value", "abs_value"):
                assert FLOAT17.match(r[key])
        m = manifest(out, "scale-sweep")
        assert m["schema_version"] == SCHEMA_VERSION and m["exit_code"] == 0
        assert parse_config(m["config_text"]) == parse_config(CRITICAL, "scale-sweep")

    def test_thread_count_does_not_change_output(self, tmp_path):
        _, a = run(tmp_path / "a", "exponent-fit", CRITICAL, "--threads", "1")
        _, b = run(tmp_path / "b", "exponent-fit", CRITICAL, "--threads", "4")
        assert (a / "exponent-fit.csv").read_bytes() == (b / "exponent-fit.csv").read_bytes()
        assert (a / "exponent-fit.summary.json").read_bytes() == (b / "exponent-fit.summary.json").read_bytes()

    def test_exponent_fit(self, tmp_path):
        code, out = run(tmp_path, "exponent-fit", CRITICAL.replace("r_max = 1000", "r_max = 10000"))
        assert code == 0
        summary = json.loads((out / "exponent-fit.summary.json").read_text())
        assert summary["schema_version"] == SCHEMA_VERSION
        assert abs(summary["fit"]["slope"] - summary["expected_slope"]) <= 0.02

    def test_json_output(self, tmp_path):
        code, out = run(tmp_path, "quasifree-check", "[model]\nn = 2\n[output]\nformat = json\n")
        assert code == 0
        doc = json.loads((out / "quasifree-check.json").read_text())
        assert doc["schema_version"] == SCHEMA_VERSION
        assert doc["columns"][0] == "row"
        summary = json.loads((out / "quasifree-check.summary.json").read_text())
        assert summary["max_round_trip_residual"] <= 1e-12
        assert summary["max_quasifree_residual"] <= 1e-10

    def test_kms_check(self, tmp_path):
        code, out = run(tmp_path, "kms-check", "[model]\nn = 1\nmu = -0.5\nac_amplitude = 0.3\n")
        assert code == 0
        summary = json.loads((out / "kms-check.summary.json").read_text())
        assert summary["max_residual"] <= 1e-12
        assert summary["max_beta_spread"] <= 1e-12

    def test_non_critical_slowdown_is_flagged(self, tmp_path):
        code, out = run(tmp_path, "slowdown", CRITICAL.replace("mu = 0", "mu = -1").replace("alpha = 0.5", "alpha = 2"))
        assert code == 0
        assert "non-critical: flatness non-decaying" in manifest(out, "slowdown")["notes"]

    def test_divergence_exit_code(self, tmp_path):
        text = CRITICAL.replace("alpha = 0.5", "alpha = 1")
        code, out = run(tmp_path, "scale-sweep", text)
        assert code == 2
        m = manifest(out, "scale-sweep")
        assert m["status"] == "partial" and m["row_failures"]
        rows = list(csv.DictReader((out / "scale-sweep.csv").open()))
        assert all(r["status"].startswith("DivergenceError") for r in rows)
        assert all(r["re_value"] == "nan" for r in rows)

    def test_config_error_exit_code(self, tmp_path, capsys):
        code, out = run(tmp_path, "scale-sweep", "[model]\nn = 7\n")
        assert code == 1
        assert "model.n" in capsys.readouterr().err
        assert not out.exists()

    def test_bad_flags(self, tmp_path):
        assert run(tmp_path, "scale-sweep", CRITICAL, "--threads", "0")[0] == 1
        assert run(tmp_path, "scale-sweep", CRITICAL, "--tol-rel", "-1")[0] == 1

    def test_missing_config_file(self, tmp_path):
        assert main(["scale-sweep", "--config", str(tmp_path / "none.ini")]) == 1

    def test_tolerances_recorded(self, tmp_path):
        _, out = run(tmp_path, "commutator-bound", "[model]\nn = 1\n[grid]\nr_max = 100\npoints = 4\n", "--tol-abs", "1e-11", "--tol-rel", "1e-9")
        tol = manifest(out, "commutator-bound")["tolerances"]
        assert tol == {"requested_abs": 1e-11, "requested_rel": 1e-9}


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs(tmp_path, path):
    experiment = parse_config(path.read_text()).experiment
    code = main([experiment, "--config", str(path), "--out", str(tmp_path)])
    assert code == 0
    for f in tmp_path.iterdir():
        if f.suffix == ".json":
            assert json.loads(f.read_text())["schema_version"] == SCHEMA_VERSION
        else:
            assert all(r["schema_version"] == SCHEMA_VERSION for r in csv.DictReader(f.open()))
