"""Tests for the experiment runner, CSV/JSON outputs, and the CLI."""

import json

import numpy as np
import pytest

from unlearn_lab.cli import main
from unlearn_lab.errors import ConfigError
from unlearn_lab.experiments import (
    COLUMNS,
    render_csv,
    run_experiment,
    summary_path_for,
    validate_config,
    write_outputs,
)

VERIFY_CFG = {"seeds": [0, 1], "nt_values": [1, 10, 29]}
NT_CFG = {"seeds": [0], "layout": [16, 8, 16], "nt_values": [1, 5, 15, 25, 29]}
NT_DISTINCT_CFG = {"seeds": [0], "layout": [20, 0, 20], "nt_values": [1, 15, 29]}
OVERLAP_CFG = {"seeds": [0, 1], "d": 20, "n_r": 14, "n_f": 6, "n_t": 7,
               "d_lap_values": [0, 2, 4, 8]}
DEMO_CFG = {"seeds": [0, 1], "epochs": 120,
            "task": {"per_class": 25}, "alpha": 0.5}
ALPHA_CFG = {"seeds": [0], "epochs": 120, "task": {"per_class": 25},
             "variants": ["kl-ft"], "alphas": [0.1, 0.8]}


def _strip_runtime(csv_text: str) -> str:
    lines = []
    for line in csv_text.splitlines():
        if line.startswith("#"):
            lines.append(line)
        else:
            lines.append(line.rsplit(",", 1)[0])
    return "\n".join(lines)


def _rows_by_column(result):
    cols = result.columns
    return [dict(zip(cols, row)) for row in result.rows]


class TestConfigValidation:
    def test_defaults_materialized(self):
        cfg = validate_config({"seeds": [1]}, "verify-theorems")
        assert cfg["distinct_layout"] == [20, 0, 20]
        assert cfg["overlap_layout"] == [16, 8, 16]
        assert cfg["nt_values"] == list(range(1, 30))
        assert cfg["tolerance"] == {"rel": 1e-8, "abs_floor": 1e-10}

    def test_empty_seeds_rejected(self):
        with pytest.raises(ConfigError):
            validate_config({"seeds": []}, "verify-theorems")

    def test_missing_seeds_rejected(self):
        with pytest.raises(ConfigError):
            validate_config({}, "sweep-nt")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            validate_config({"seeds": [0], "typo_key": 1}, "sweep-nt")

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigError):
            validate_config({"seeds": [0]}, "sweep-everything")

    def test_declared_experiment_must_match(self):
        with pytest.raises(ConfigError):
            validate_config({"seeds": [0], "experiment": "sweep-nt"}, "verify-theorems")

    def test_nt_range_bounds(self):
        with pytest.raises(ConfigError):
            validate_config({"seeds": [0], "nt_values": [30]}, "sweep-nt")

    def test_regime_guard(self):
        with pytest.raises(ConfigError):
            validate_config(
                {"seeds": [0], "n_r": 35, "n_f": 10, "layout": [20, 0, 20]},
                "sweep-nt",
            )

    def test_overlap_parity_guard(self):
        bad = dict(OVERLAP_CFG, d_lap_values=[1])
        with pytest.raises(ConfigError):
            validate_config(bad, "sweep-overlap")

    def test_bad_variant_rejected(self):
        with pytest.raises(ConfigError):
            validate_config(
                {"seeds": [0], "variants": ["fisher"]}, "classifier-demo"
            )


class TestSchemas:
    def test_pinned_column_sets(self):
        # Schema stability: these exact names and orders are the contract.
        assert COLUMNS["verify-theorems/v1"] == [
            "experiment", "seed", "check", "option",
            "d_r", "d_lap", "d_f", "n_r", "n_f", "n_t_min", "n_t_max",
            "rl_ft_max", "ul_ft_max", "rl_gold", "ul_gold", "ul_gold_pred",
            "ul_gold_rel_gap", "rl_edit_max", "ul_edit_max",
            "edit_rl_gap_max", "edit_ul_gap_max", "pass", "runtime_seconds",
        ]
        assert COLUMNS["sweep-nt/v1"] == [
            "experiment", "seed", "n_t", "rl_ft", "ul_ft", "rl_gold", "ul_gold",
            "rl_edit_zero", "ul_edit_zero", "rl_edit_retain", "ul_edit_retain",
            "rl_edit_discard", "ul_edit_discard", "runtime_seconds",
        ]
        assert COLUMNS["sweep-overlap/v1"] == [
            "experiment", "seed", "d_lap", "d_r", "d_f", "n_t",
            "rl_gold", "ul_gold", "rl_edit_retain", "ul_edit_retain",
            "rl_edit_discard", "ul_edit_discard", "runtime_seconds",
        ]
        assert COLUMNS["classifier/v1"] == [
            "experiment", "variant", "alpha", "seed", "ua", "ra", "ta",
            "runtime_seconds",
        ]

    def test_runtime_is_always_last(self):
        for columns in COLUMNS.values():
            assert columns[-1] == "runtime_seconds"

    def test_csv_header_lines(self):
        cfg = validate_config(dict(VERIFY_CFG, nt_values=[1]), "verify-theorems")
        result = run_experiment("verify-theorems", cfg)
        text = render_csv(result)
        lines = text.splitlines()
        assert lines[0] == "# schema: verify-theorems/v1"
        assert lines[1].startswith("# config: {")
        assert lines[2] == ",".join(COLUMNS["verify-theorems/v1"])
        # Config echo is valid canonical JSON.
        echoed = json.loads(lines[1][len("# config: "):])
        assert echoed["experiment"] == "verify-theorems"
        assert echoed["nt_values"] == [1]


class TestVerifyTheorems:
    def test_all_checks_pass(self):
        cfg = validate_config(VERIFY_CFG, "verify-theorems")
        result = run_experiment("verify-theorems", cfg)
        assert result.passed is True
        assert result.numerical_failures == 0
        # One row per (seed, check/option): 2 baselines + 3 edit options.
        assert len(result.rows) == len(cfg["seeds"]) * 5

    def test_impossible_tolerance_fails_rows(self):
        cfg = validate_config(
            dict(VERIFY_CFG, tolerance={"rel": 0.0, "abs_floor": 0.0}),
            "verify-theorems",
        )
        result = run_experiment("verify-theorems", cfg)
        assert result.passed is False

    def test_uniform_distribution_also_passes(self):
        # The closed forms are distribution-free; the uniform tag exists
        # as a robustness variant and must verify identically.
        cfg = validate_config(
            dict(VERIFY_CFG, dist="uniform", nt_values=[1, 15, 29]),
            "verify-theorems",
        )
        result = run_experiment("verify-theorems", cfg)
        assert result.passed is True


class TestSweepNt:
    def test_distinct_layout_flat_zero_ft_and_constant_golden_ul(self):
        cfg = validate_config(NT_DISTINCT_CFG, "sweep-nt")
        rows = _rows_by_column(run_experiment("sweep-nt", cfg))
        uls = {row["ul_gold"] for row in rows}
        assert len(uls) == 1  # golden UL does not depend on n_t
        for row in rows:
            assert row["rl_ft"] < 1e-9 and row["ul_ft"] < 1e-9
            assert row["rl_gold"] < 1e-9
            # Editing away the forgetting block reproduces the golden UL.
            assert abs(row["ul_edit_zero"] - row["ul_gold"]) <= 1e-8 * row["ul_gold"]
            assert row["rl_edit_zero"] < 1e-9

    def test_overlap_layout_discard_hurts_remaining_loss(self):
        cfg = validate_config(NT_CFG, "sweep-nt")
        rows = _rows_by_column(run_experiment("sweep-nt", cfg))
        # Below the span threshold (n_t < d_r + d_lap = 24) the discard
        # option pays a remaining-loss price; retain never does.
        shallow = [r for r in rows if r["n_t"] < 24]
        assert shallow and all(r["rl_edit_discard"] > 1e-10 for r in shallow)
        assert all(r["rl_edit_retain"] < 1e-9 for r in rows)
        # Zero-forget option is not defined for overlap layouts.
        assert all(np.isnan(r["rl_edit_zero"]) for r in rows)


class TestSweepOverlap:
    def test_rows_and_monotone_medians(self):
        cfg = validate_config(dict(OVERLAP_CFG, seeds=list(range(12))), "sweep-overlap")
        result = run_experiment("sweep-overlap", cfg)
        rows = _rows_by_column(result)
        assert len(rows) == 12 * 4
        medians = []
        for d_lap in cfg["d_lap_values"]:
            values = [r["rl_edit_discard"] for r in rows if r["d_lap"] == d_lap]
            medians.append(float(np.median(values)))
        assert all(b >= a - 1e-12 for a, b in zip(medians, medians[1:]))


class TestClassifierExperiments:
    def test_demo_row_count_and_aggregates(self):
        cfg = validate_config(
            dict(DEMO_CFG, variants=["naive-ft", "kl-ft", "ce-ft", "ice-ft"]),
            "classifier-demo",
        )
        result = run_experiment("classifier-demo", cfg)
        rows = _rows_by_column(result)
        per_seed = [r for r in rows if isinstance(r["seed"], int)]
        aggregates = [r for r in rows if r["seed"] in ("mean", "std")]
        assert len(per_seed) == 4 * len(cfg["seeds"])
        assert len(aggregates) == 4 * 2

    def test_demo_directional_gap(self):
        cfg = validate_config(
            dict(DEMO_CFG, variants=["retrain", "naive-ft", "kl-ft"]),
            "classifier-demo",
        )
        rows = _rows_by_column(run_experiment("classifier-demo", cfg))
        mean = {
            r["variant"]: r for r in rows if r["seed"] == "mean"
        }
        assert mean["naive-ft"]["ua"] < mean["retrain"]["ua"] - 0.3
        assert mean["kl-ft"]["ua"] >= 0.9

    def test_alpha_sweep_rows(self):
        cfg = validate_config(ALPHA_CFG, "sweep-alpha")
        rows = _rows_by_column(run_experiment("sweep-alpha", cfg))
        per_seed = [r for r in rows if isinstance(r["seed"], int)]
        assert {(r["variant"], r["alpha"]) for r in per_seed} == {
            ("kl-ft", 0.1), ("kl-ft", 0.8)
        }


class TestDeterminism:
    @pytest.mark.parametrize(
        "experiment,cfg",
        [
            ("verify-theorems", dict(VERIFY_CFG, nt_values=[1, 10])),
            ("sweep-nt", NT_DISTINCT_CFG),
            ("sweep-overlap", OVERLAP_CFG),
            ("classifier-demo", dict(DEMO_CFG, variants=["naive-ft", "retrain"])),
            ("sweep-alpha", ALPHA_CFG),
        ],
    )
    def test_rerun_is_byte_identical_modulo_runtime(self, experiment, cfg):
        validated = validate_config(cfg, experiment)
        first = render_csv(run_experiment(experiment, validated))
        second = render_csv(run_experiment(experiment, validated))
        assert _strip_runtime(first) == _strip_runtime(second)

    def test_thread_count_does_not_change_output(self, monkeypatch):
        validated = validate_config(VERIFY_CFG, "verify-theorems")
        serial = render_csv(run_experiment("verify-theorems", validated))
        monkeypatch.setenv("UNLEARN_LAB_THREADS", "4")
        threaded = render_csv(run_experiment("verify-theorems", validated))
        assert _strip_runtime(serial) == _strip_runtime(threaded)


class TestCli:
    def _write_config(self, tmp_path, payload):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def test_verify_theorems_roundtrip(self, tmp_path, capsys):
        config = self._write_config(tmp_path, dict(VERIFY_CFG, nt_values=[1, 29]))
        out = tmp_path / "run.csv"
        code = main(["verify-theorems", "--config", str(config), "--out", str(out)])
        assert code == 0
        assert out.exists()
        summary = json.loads(summary_path_for(out).read_text())
        assert summary["passed"] is True
        assert summary["config"]["seeds"] == [0, 1]
        assert "rows ->" in capsys.readouterr().out

    def test_seed_override(self, tmp_path):
        config = self._write_config(tmp_path, dict(VERIFY_CFG, nt_values=[1]))
        out = tmp_path / "run.csv"
        code = main([
            "verify-theorems", "--config", str(config),
            "--out", str(out), "--seeds", "5,6,7",
        ])
        assert code == 0
        summary = json.loads(summary_path_for(out).read_text())
        assert summary["config"]["seeds"] == [5, 6, 7]
        assert summary["rows"] == 15

    def test_zero_tolerance_exits_one(self, tmp_path):
        config = self._write_config(tmp_path, dict(VERIFY_CFG, nt_values=[1]))
        code = main([
            "verify-theorems", "--config", str(config),
            "--out", str(tmp_path / "x.csv"), "--tolerance", "0",
        ])
        assert code == 1

    def test_config_error_exits_two(self, tmp_path, capsys):
        config = self._write_config(tmp_path, {"seeds": []})
        code = main(["verify-theorems", "--config", str(config)])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_exits_two(self, tmp_path):
        code = main(["sweep-nt", "--config", str(tmp_path / "nope.json")])
        assert code == 2

    def test_malformed_json_exits_two(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["sweep-nt", "--config", str(path)]) == 2

    def test_bad_seeds_exits_two(self, tmp_path):
        config = self._write_config(tmp_path, VERIFY_CFG)
        code = main([
            "verify-theorems", "--config", str(config), "--seeds", "a,b",
        ])
        assert code == 2

    def test_negative_tolerance_exits_two(self, tmp_path):
        config = self._write_config(tmp_path, VERIFY_CFG)
        code = main([
            "verify-theorems", "--config", str(config), "--tolerance", "-1",
        ])
        assert code == 2

    def test_bad_thread_env_exits_two(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UNLEARN_LAB_THREADS", "plenty")
        config = self._write_config(tmp_path, dict(VERIFY_CFG, nt_values=[1]))
        code = main([
            "verify-theorems", "--config", str(config),
            "--out", str(tmp_path / "x.csv"),
        ])
        assert code == 2


class TestWriteOutputs:
    def test_files_written(self, tmp_path):
        cfg = validate_config(dict(NT_DISTINCT_CFG, nt_values=[1]), "sweep-nt")
        result = run_experiment("sweep-nt", cfg)
        csv_path = write_outputs(result, tmp_path / "out" / "nt.csv")
        assert csv_path.read_text().startswith("# schema: sweep-nt/v1")
        summary = json.loads(summary_path_for(csv_path).read_text())
        assert summary["experiment"] == "sweep-nt"
        assert summary["rows"] == 1
        assert summary["passed"] is None
