"""CLI and config checks: parsing, validation messages, CSV schema and
byte determinism, exit codes."""

import json
import math

import pytest

from cogrelay.cli import (
    CSV_HEADER,
    ConfigError,
    load_config,
    main,
    parse_config,
    run_sweep,
    run_validate,
)

MINIMAL = {
    "num_users": 2,
    "num_relays": 3,
    "nakagami_m": 2,
    "gamma_th_db": 5.0,
    "sweep": {"variable": "lambda_all", "start_db": 0.0, "stop_db": 10.0,
              "step_db": 5.0},
    "trials": 2000,
    "seed": 7,
}


def write_config(tmp_path, overrides=None, name="config.json"):
    raw = json.loads(json.dumps(MINIMAL))
    for key, value in (overrides or {}).items():
        if value is None:
            raw.pop(key, None)
        else:
            raw[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


class TestConfigParsing:
    def test_minimal_round_trip(self, tmp_path):
        config = load_config(write_config(tmp_path))
        assert config.num_users == 2
        assert config.sweep.points() == [0.0, 5.0, 10.0]
        assert config.scheme == "maxmin"
        assert config.mode == "outage"

    def test_relay_count_rejected(self, tmp_path):
        path = write_config(tmp_path, {"num_users": 4})
        with pytest.raises(ConfigError, match="num_relays must be >= num_users"):
            load_config(path)

    def test_csi_requires_rayleigh(self, tmp_path):
        path = write_config(tmp_path, {
            "csi": {"error_ratio_h1": 0.05, "error_ratio_h2": 0.05,
                    "error_ratio_f": 0.05}})
        with pytest.raises(ConfigError, match="nakagami_m == 1"):
            load_config(path)

    def test_unknown_key_named(self, tmp_path):
        path = write_config(tmp_path, {"bogus": 1})
        with pytest.raises(ConfigError, match="'bogus'"):
            load_config(path)

    def test_unknown_sweep_key_named(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["sweep"]["typo"] = 1
        with pytest.raises(ConfigError, match="'typo'"):
            parse_config(raw)

    def test_negative_gain_rejected(self, tmp_path):
        path = write_config(tmp_path, {"omega_h2": -1.0})
        with pytest.raises(ConfigError, match="mean_gain_hop2"):
            load_config(path)

    def test_lambda2_sweep_needs_fixed_levels(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["sweep"]["variable"] = "lambda2"
        with pytest.raises(ConfigError, match="lambda1_db"):
            parse_config(raw)

    def test_step_must_be_positive(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["sweep"]["step_db"] = 0
        with pytest.raises(ConfigError, match="step_db"):
            parse_config(raw)

    def test_trials_floor(self, tmp_path):
        path = write_config(tmp_path, {"trials": 10})
        with pytest.raises(ConfigError, match="trials"):
            load_config(path)

    def test_parse_error_reported(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(path)


class TestRunSweep:
    def test_csv_schema_and_determinism(self, tmp_path):
        config = load_config(write_config(tmp_path))
        out1 = run_sweep(config, tmp_path / "a.csv")
        out2 = run_sweep(config, tmp_path / "b.csv")
        data1 = out1.read_bytes()
        assert data1 == out2.read_bytes()
        lines = data1.decode().split("\n")
        assert lines[0] == CSV_HEADER
        assert b"\r" not in data1
        # 3 sweep points x 2 users (+ header + trailing newline)
        assert len([ln for ln in lines if ln]) == 1 + 3 * 2

    def test_per_user_exact_identical_under_maxmin(self, tmp_path):
        config = load_config(write_config(tmp_path))
        rows = [ln.split(",") for ln in
                run_sweep(config, tmp_path / "c.csv").read_text().splitlines()[1:]]
        by_point = {}
        for row in rows:
            by_point.setdefault(row[0], []).append(float(row[2]))
        for values in by_point.values():
            assert max(values) - min(values) <= 1e-12 * max(values)

    def test_floor_column_constant_on_lambda2_sweep(self, tmp_path):
        path = write_config(tmp_path, {
            "nakagami_m": 1,
            "lambda1_db": 25.0, "lambda3_db": 10.0,
            "sweep": {"variable": "lambda2", "start_db": 0.0,
                      "stop_db": 20.0, "step_db": 10.0}})
        rows = [ln.split(",") for ln in
                run_sweep(load_config(path),
                          tmp_path / "d.csv").read_text().splitlines()[1:]]
        floors = {row[4] for row in rows}
        assert len(floors) == 1 and "" not in floors

    def test_throughput_mode_fills_throughput_columns(self, tmp_path):
        path = write_config(tmp_path, {
            "nakagami_m": 1, "mode": "throughput",
            "lambda1_db": 25.0, "lambda3_db": 10.0,
            "sweep": {"variable": "lambda2", "start_db": 10.0,
                      "stop_db": 10.0, "step_db": 5.0}})
        rows = [ln.split(",") for ln in
                run_sweep(load_config(path),
                          tmp_path / "e.csv").read_text().splitlines()[1:]]
        for row in rows:
            assert row[2] == "" and row[5] == ""
            closed, mc = float(row[8]), float(row[9])
            assert math.isfinite(closed) and math.isfinite(mc)
            assert abs(closed - mc) / closed < 0.2

    def test_pk_mode_writes_rank_table(self, tmp_path):
        path = write_config(tmp_path, {"mode": "pk"})
        out = run_sweep(load_config(path), tmp_path / "pk.csv")
        lines = out.read_text().splitlines()
        assert lines[0] == "user,k,prob"
        assert len(lines) == 1 + 2 * 6
        total = sum(float(ln.split(",")[2]) for ln in lines[1:])
        assert total == pytest.approx(2.0, abs=1e-9)


class TestValidateMode:
    def test_default_recipe_passes(self, tmp_path):
        config = load_config(write_config(tmp_path, {"trials": 20_000}))
        report = run_validate(config)
        assert not report.failed
        statuses = {name: status for name, status, _ in report.checks}
        assert statuses["rank-probabilities-normalised"] == "PASS"
        assert statuses["worst-rank-probability"] == "PASS"

    def test_tiny_trials_mark_inconclusive_not_fail(self, tmp_path):
        # at 1000 trials the high-SNR points cannot be resolved; entries
        # must degrade to INCONCLUSIVE or PASS, never FAIL
        path = write_config(tmp_path, {
            "trials": 1000,
            "sweep": {"variable": "lambda_all", "start_db": 0.0,
                      "stop_db": 40.0, "step_db": 10.0}})
        report = run_validate(load_config(path))
        assert not report.failed
        assert "CI too wide" in report.render() or not any(
            status == "INCONCLUSIVE" for _, status, _ in report.checks)


class TestMainEntry:
    def test_success_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, {"output": str(tmp_path / "out.csv")})
        assert main(["--config", str(path)]) == 0
        assert (tmp_path / "out.csv").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, {"num_users": 9})
        assert main(["--config", str(path)]) == 1
        assert "num_relays" in capsys.readouterr().err

    def test_missing_file_exit_code(self, capsys):
        assert main(["--config", "/nonexistent/nowhere.json"]) == 1

    def test_dump_config_round_trip(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["--config", str(path), "--dump-config"]) == 0
        dumped = json.loads(capsys.readouterr().out)
        assert dumped["num_users"] == 2
        assert dumped["sweep"]["stop_db"] == 10.0

    def test_cli_overrides(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["--config", str(path), "--trials", "3000", "--seed",
                     "11", "--dump-config"]) == 0
        dumped = json.loads(capsys.readouterr().out)
        assert dumped["trials"] == 3000
        assert dumped["seed"] == 11

    def test_validate_mode_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, {"trials": 5000})
        assert main(["--config", str(path), "--mode", "validate"]) == 0
        assert "analytic-vs-mc" in capsys.readouterr().out

    def test_cancellation_exit_code(self, tmp_path, capsys, monkeypatch):
        from cogrelay.analytic import CancellationError
        import cogrelay.cli as cli_module

        def boom(config, output=None):
            raise CancellationError("synthetic loss of significance")

        monkeypatch.setattr(cli_module, "run_sweep", boom)
        path = write_config(tmp_path)
        assert main(["--config", str(path)]) == 2
        assert "numeric diagnostic" in capsys.readouterr().err


class TestRecipes:
    @pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4"])
    def test_shipped_recipes_parse(self, name):
        config = load_config(f"recipes/{name}.json")
        assert config.trials >= 1000
        assert len(config.sweep.points()) >= 2
