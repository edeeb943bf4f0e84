"""Config parsing, run harness, figure presets, CSV/SVG emission, CLI."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from ttalab import (
    ConfigError,
    ExperimentConfig,
    GaussianModel,
    Mode,
    build_benchmark_domains,
    build_figure_preset,
    gauss_upper_tail,
    grid_search,
    make_loss,
    parse_config_file,
    render_figure_svg,
    reproduce_figure,
    run_experiment,
    zero_one_loss,
)
from ttalab.cli import main
from ttalab.serialize import TRAJECTORY_HEADER, read_csv_with_meta


def write_config(path: Path, **overrides) -> Path:
    config = {
        "model.mu": [0.6567, 0.7542], "model.sigma": 0.78, "model.dim": 2,
        "loss.rule": "conj", "loss.family": "exp",
        "run.mode": "stochastic", "run.eta": 0.5, "run.batch": 8,
        "run.horizon": 12, "run.seed": 7, "init.w": [1.0, 0.0],
    }
    config.update(overrides)
    config = {k: v for k, v in config.items() if v is not None}
    path.write_text(json.dumps(config))
    return path


class TestConfigParsing:
    def test_minimal_valid_config(self, tmp_path):
        config = parse_config_file(write_config(tmp_path / "c.json"))
        assert config.mode is Mode.STOCHASTIC
        assert config.loss.name == "conj+exp"
        assert config.batch_size == 8

    def test_batch_defaults_to_32(self, tmp_path):
        path = write_config(tmp_path / "c.json")
        raw = json.loads(path.read_text())
        del raw["run.batch"]
        path.write_text(json.dumps(raw))
        assert parse_config_file(path).batch_size == 32

    def test_eta_zero_names_the_field(self, tmp_path):
        path = write_config(tmp_path / "c.json", **{"run.eta": 0})
        with pytest.raises(ConfigError, match="eta must be positive"):
            parse_config_file(path)

    def test_dim_mismatch_diagnosed(self, tmp_path):
        path = write_config(tmp_path / "c.json", **{"model.dim": 5})
        with pytest.raises(ConfigError, match="model.dim"):
            parse_config_file(path)

    def test_unknown_key_diagnosed(self, tmp_path):
        path = write_config(tmp_path / "c.json", **{"run.momentum": 0.9})
        with pytest.raises(ConfigError, match="run.momentum"):
            parse_config_file(path)

    def test_missing_key_diagnosed(self, tmp_path):
        path = write_config(tmp_path / "c.json", **{"init.w": None})
        with pytest.raises(ConfigError, match="init.w"):
            parse_config_file(path)

    def test_bad_mode_diagnosed(self, tmp_path):
        path = write_config(tmp_path / "c.json", **{"run.mode": "minibatch"})
        with pytest.raises(ConfigError, match="run.mode"):
            parse_config_file(path)

    def test_negative_seed_diagnosed(self, tmp_path):
        path = write_config(tmp_path / "c.json", **{"run.seed": -4})
        with pytest.raises(ConfigError, match="run.seed"):
            parse_config_file(path)


class TestRunExperiment:
    def test_writes_csv_and_manifest(self, tmp_path):
        path = write_config(tmp_path / "demo.json")
        manifest = run_experiment(path, tmp_path)
        csv_path = tmp_path / "demo.trajectory.csv"
        assert csv_path.exists()
        assert (tmp_path / "demo.manifest.json").exists()
        lines = csv_path.read_text().splitlines()
        assert lines[0] == TRAJECTORY_HEADER
        data_rows = [l for l in lines[1:] if not l.startswith("#")]
        assert len(data_rows) == 13  # horizon + 1
        assert manifest.config["run.seed"] == 7

    def test_reruns_are_byte_identical(self, tmp_path):
        path = write_config(tmp_path / "demo.json")
        run_experiment(path, tmp_path / "a")
        run_experiment(path, tmp_path / "b")
        assert ((tmp_path / "a" / "demo.trajectory.csv").read_bytes()
                == (tmp_path / "b" / "demo.trajectory.csv").read_bytes())

    def test_infinite_ratio_serializes_as_inf(self, tmp_path):
        # aligned start in population mode keeps b = 0, so r = inf
        path = write_config(tmp_path / "aligned.json",
                            **{"run.mode": "population", "loss.rule": "conj",
                               "loss.family": "square",
                               "init.w": [0.6567, 0.7542], "run.horizon": 3})
        run_experiment(path, tmp_path)
        body = (tmp_path / "aligned.trajectory.csv").read_text()
        data = [l for l in body.splitlines() if not l.startswith(("t,", "#"))]
        assert all(row.split(",")[3] == "inf" for row in data)

    def test_metadata_block_carries_the_config(self, tmp_path):
        path = write_config(tmp_path / "demo.json")
        run_experiment(path, tmp_path)
        _, _, meta = read_csv_with_meta(tmp_path / "demo.trajectory.csv")
        assert meta["model.sigma"] == 0.78
        assert meta["loss.family"] == "exp"
        assert meta["overflow"] is False
        assert meta["prng"] == "numpy-pcg64-seedsequence"


class TestGridSearch:
    def base(self, horizon=60):
        return ExperimentConfig(
            model=GaussianModel(mu=np.array([1.0, 0.0]), sigma=0.0),
            loss=make_loss("conj", "square"), eta=1.0, mode=Mode.STOCHASTIC,
            horizon=horizon, seed=5, w_init=np.array([0.5, 1.0]), batch_size=4)

    def test_single_element_grid(self):
        best, rows = grid_search(self.base(), [0.25])
        assert best == 0.25
        assert len(rows) == 1

    def test_overflowing_step_ranks_last(self):
        # eta = 100 on the conjugate square loss diverges; eta = 0.01 does not
        best, rows = grid_search(self.base(horizon=400), [100.0, 0.01])
        assert best == 0.01
        by_eta = {r.eta: r for r in rows}
        assert by_eta[100.0].overflow and not by_eta[0.01].overflow

    def test_grid_order_does_not_matter(self):
        best_a, rows_a = grid_search(self.base(), [0.5, 0.05, 1.0])
        best_b, rows_b = grid_search(self.base(), [1.0, 0.5, 0.05])
        assert best_a == best_b
        assert rows_a == rows_b


class TestBenchmarkDomains:
    def test_operating_point_constants(self):
        for d in (2, 10, 100):
            _, mu_t, sigma_t, w_init = build_benchmark_domains(d, seed=3)
            model = GaussianModel(mu=mu_t, sigma=sigma_t)
            assert zero_one_loss(model, w_init) == pytest.approx(0.2, abs=1e-3)
            best = gauss_upper_tail(model.mu_norm / sigma_t)
            assert best == pytest.approx(0.1, abs=1e-3)

    def test_target_mean_is_unit_norm_with_fixed_first_coordinate(self):
        _, mu_t, _, _ = build_benchmark_domains(10, seed=1)
        assert float(np.linalg.norm(mu_t)) == pytest.approx(1.0, abs=1e-12)
        assert mu_t[0] == 0.6567

    def test_deterministic_per_seed(self):
        a = build_benchmark_domains(10, seed=4)[1]
        b = build_benchmark_domains(10, seed=4)[1]
        np.testing.assert_array_equal(a, b)
        c = build_benchmark_domains(10, seed=5)[1]
        assert not np.array_equal(a, c)

    def test_rejects_one_dimension(self):
        with pytest.raises(ValueError):
            build_benchmark_domains(1)


class TestFigurePresets:
    def test_fig1a_curves(self, tmp_path):
        result = reproduce_figure("fig1a", seed=0, d=10, horizon=200,
                                  out_dir=tmp_path)
        summary = result.summary
        assert summary["no-adaptation"]["final_loss01"] == pytest.approx(0.2, abs=1e-3)
        # conjugate labels reach the best achievable error; hard labels
        # plateau visibly above it
        conj = summary["conj+square"]["final_loss01"]
        hard = summary["hard+square"]["final_loss01"]
        assert conj == pytest.approx(summary["best_error"], abs=2e-3)
        assert hard - conj >= 0.02
        assert len(result.csv_paths) == 3
        assert result.svg_path.exists()

    def test_fig1b_large_step_overflows_but_keeps_direction(self, tmp_path):
        result = reproduce_figure("fig1b", seed=0, d=10, horizon=200,
                                  out_dir=tmp_path)
        assert result.summary["conj+square"]["overflow"]
        assert result.summary["conj+square"]["final_loss01"] == pytest.approx(
            result.summary["best_error"], abs=2e-3)

    def test_fig2_outputs(self, tmp_path):
        result = reproduce_figure("fig2", out_dir=tmp_path)
        cols, rows, _ = read_csv_with_meta(result.csv_paths[0])
        assert cols[0] == "u" and len(cols) == 5
        by_col = {c: [row[i] for row in rows] for i, c in enumerate(cols)}
        # spot value: sech(0) = 1 for the conjugate exponential loss
        mid = by_col["u"].index(0.0)
        assert by_col["conj_exp"][mid] == 1.0

    def test_fig3_hard_exp_column_is_one(self, tmp_path):
        result = reproduce_figure("fig3", out_dir=tmp_path)
        cols, rows, _ = read_csv_with_meta(result.csv_paths[0])
        idx = cols.index("hard_exp")
        assert all(abs(row[idx] - 1.0) <= 1e-12 for row in rows)

    def test_fig4_grid_is_the_eleven_point_grid(self, tmp_path):
        # tiny horizon keeps this a wiring test, not a statistics test
        result = reproduce_figure("fig4-exp", seed=0, d=4, batch=4, horizon=3,
                                  out_dir=tmp_path)
        cols, rows, _ = read_csv_with_meta(result.csv_paths[0])
        etas = sorted({row[cols.index("eta")] for row in rows})
        assert etas == [1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0, 5.0, 10.0,
                        50.0, 100.0]
        assert {row[cols.index("rule")] for row in rows} == {"hard", "conj"}
        curve_cols, curve_rows, meta = read_csv_with_meta(result.csv_paths[1])
        assert curve_cols[0] == "t"
        assert len(curve_rows) == 4  # horizon + 1

    def test_unknown_figure_id(self, tmp_path):
        with pytest.raises(ValueError, match="unknown figure id"):
            reproduce_figure("fig9", out_dir=tmp_path)

    def test_preset_exposes_resolved_configs(self):
        preset = build_figure_preset("fig4-logistic", seed=1, d=6, batch=16,
                                     horizon=50)
        assert set(preset.configs) == {"hard+logistic", "conj+logistic"}
        assert preset.eta_grid == (1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1e0,
                                   5e0, 1e1, 5e1, 1e2)
        assert preset.seed_count == 10
        config = preset.configs["hard+logistic"]
        assert config.batch_size == 16 and config.model.d == 6

    def test_svg_regenerates_from_csv_alone(self, tmp_path):
        result = reproduce_figure("fig3", out_dir=tmp_path)
        first = result.svg_path.read_bytes()
        regenerated = render_figure_svg("fig3", tmp_path).read_bytes()
        assert first == regenerated

    def test_svg_is_wellformed_xml(self, tmp_path):
        import xml.etree.ElementTree as ET

        result = reproduce_figure("fig2", out_dir=tmp_path)
        root = ET.fromstring(result.svg_path.read_text())
        assert root.tag.endswith("svg")
        assert any(child.tag.endswith("polyline") for child in root.iter())


class TestCliExitCodes:
    def test_run_success(self, tmp_path, capsys):
        path = write_config(tmp_path / "ok.json")
        assert main(["run", str(path), "--out", str(tmp_path)]) == 0
        assert "ok.trajectory.csv" in capsys.readouterr().out

    def test_validation_error_is_one(self, tmp_path, capsys):
        path = write_config(tmp_path / "bad.json", **{"run.eta": 0})
        assert main(["run", str(path)]) == 1
        assert "eta must be positive" in capsys.readouterr().err

    def test_missing_file_is_one(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json")]) == 1

    def test_unsupported_mode_is_two(self, tmp_path, capsys):
        path = write_config(tmp_path / "u.json",
                            **{"run.mode": "population", "loss.rule": "hard"})
        assert main(["run", str(path)]) == 2
        assert "distributional psi''" in capsys.readouterr().err

    def test_club_command_all_four(self, capsys):
        assert main(["club"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert sum(1 for line in lines if line == "passed = True") == 4

    def test_club_command_single_loss(self, capsys):
        assert main(["club", "--loss", "hard:exp"]) == 0
        out = capsys.readouterr().out
        assert "rule = hard" in out and "family = exp" in out

    def test_club_rejects_uncertified_loss(self, capsys):
        assert main(["club", "--loss", "conj:square"]) == 1

    def test_recursion_command(self, capsys):
        assert main(["recursion", "--c", "1", "--L", "1", "--r1", "1",
                     "--T", "2000"]) == 0
        out = capsys.readouterr().out
        assert "bound_holds = True" in out

    def test_stein_command(self, capsys):
        assert main(["stein", "--loss", "conj:exp", "--m", "1", "--s", "1",
                     "--n", "50000", "--seed", "3"]) == 0
        assert "passed = True" in capsys.readouterr().out

    def test_grid_command(self, tmp_path, capsys):
        path = write_config(tmp_path / "g.json", **{"run.horizon": 30})
        assert main(["grid", str(path), "--etas", "0.05,0.5",
                     "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "best_eta" in out
        assert (tmp_path / "g.grid.csv").exists()

    def test_figure_command(self, tmp_path, capsys):
        assert main(["figure", "fig2", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "fig2.svg").exists()
