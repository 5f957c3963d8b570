"""Tests for the evaluation harness and the benchmark runner."""

import csv
import json
import math
import os

import numpy as np
import pytest

from kcoreset import (
    Coreset,
    ValidationError,
    evaluate_coreset,
    make_problem,
    quantile_grid,
    rcc_fixed_size,
    run_benchmark,
    synthetic_blobs,
    synthetic_uniform,
)
from kcoreset.harness import WORKERS_ENV_VAR, construct_coreset


def tiny_config(runs=2, algorithms=None, problems=None, **extra):
    config = {
        "seed": 0,
        "runs": runs,
        "sizes": [8],
        "datasets": [
            {"name": "blob",
             "synthetic": {"kind": "blobs", "n": 80, "features": 4, "labels": 3,
                           "seed": 1}}
        ],
        "algorithms": algorithms or [
            {"name": "rcc-kmeans", "kind": "rcc_fixed", "z": 2},
            {"name": "uniform", "kind": "uniform"},
        ],
        "problems": problems or [{"name": "meb"}, {"name": "kmedian", "k": 2}],
    }
    config.update(extra)
    return config


class TestEvaluateCoreset:
    def test_dataset_as_its_own_coreset_scores_perfectly(self):
        ps = synthetic_uniform(40, 3, 0.0, 1.0, seed=2)
        coreset = Coreset(ps.points, ps.weights, {"algorithm": "identity"})
        out = evaluate_coreset(ps, coreset, make_problem("kmedian", k=2), seed=0)
        assert out["metric"] == "normalized_cost"
        assert out["value"] == pytest.approx(1.0)
        assert out["relative_error"] == pytest.approx(0.0, abs=1e-12)
        assert out["clamped"] is False

    def test_real_coreset_reports_its_bound(self):
        ps = synthetic_uniform(60, 3, 0.0, 1.0, seed=3)
        coreset = rcc_fixed_size(ps, 10, seed=1)
        out = evaluate_coreset(ps, coreset, make_problem("meb"), seed=0)
        assert out["eps_bound"] == coreset.eps_bound
        assert out["value"] >= 1.0 - 1e-9
        assert out["coreset_points"] == 10

    def test_negative_weights_flagged_and_clamped_for_the_solver(self):
        ps = synthetic_uniform(30, 2, 0.0, 1.0, seed=4)
        pts = ps.points[:5]
        weights = np.array([10.0, 8.0, 7.0, 6.0, -1.0])
        coreset = Coreset(pts, weights, {"algorithm": "manual"})
        out = evaluate_coreset(ps, coreset, make_problem("kmeans", k=2), seed=0)
        assert out["clamped"] is True
        assert math.isfinite(out["value"])

    def test_precomputed_full_solution_short_circuits(self):
        ps = synthetic_uniform(30, 2, 0.0, 1.0, seed=5)
        coreset = rcc_fixed_size(ps, 6, seed=0)
        problem = make_problem("kmedian", k=2)
        from kcoreset import problem_cost, solve_problem

        model = solve_problem(problem, ps, seed=0)
        full_cost = problem_cost(problem, ps, model)
        out = evaluate_coreset(
            ps, coreset, problem, seed=0, full_model=model, full_cost=full_cost
        )
        assert out["value"] == pytest.approx(out["cost_full"] / full_cost)


class TestQuantileGrid:
    def test_endpoints_and_monotone(self):
        levels, values = quantile_grid([3.0, 1.0, 2.0], grid_points=5)
        assert levels[0] == 0.0 and levels[-1] == 1.0
        assert values[0] == 1.0 and values[-1] == 3.0
        assert np.all(np.diff(values) >= 0)

    def test_empty_values_give_nan(self):
        _, values = quantile_grid([], grid_points=4)
        assert np.isnan(values).all()


class TestConstructCoreset:
    def test_every_kind_builds(self):
        ps = synthetic_blobs(60, 4, 3, seed=2)
        for algo in (
            {"kind": "rcc_fixed", "z": 2},
            {"kind": "uniform"},
            {"kind": "sensitivity"},
            {"kind": "farthest"},
            {"kind": "drcc", "nodes": 3, "K": 3},
            {"kind": "cdcc", "nodes": 3, "k": 2},
        ):
            coreset = construct_coreset(algo, ps, size=10, seed=0)
            assert coreset.size >= 1

    def test_adaptive_kind_uses_eps(self):
        ps = synthetic_blobs(60, 4, 3, spread=0.01, seed=2)
        coreset = construct_coreset({"kind": "rcc", "eps": 2.0, "z": 2}, ps, None, 0)
        assert coreset.eps_bound == 2.0

    def test_unknown_kind_rejected(self):
        ps = synthetic_uniform(10, 2, 0.0, 1.0, seed=0)
        with pytest.raises(ValidationError):
            construct_coreset({"kind": "magic"}, ps, 5, 0)


class TestRunBenchmark:
    def test_record_count_and_files(self, tmp_path):
        out = str(tmp_path / "results")
        records, summary = run_benchmark(tiny_config(), out_dir=out)
        # 1 dataset x 2 algorithms x 1 size x 2 runs x 2 problems
        assert len(records) == 8
        assert all(r.error is None for r in records)
        with open(os.path.join(out, "runs.csv")) as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 9  # header + records
        with open(os.path.join(out, "cdf.csv")) as fh:
            cdf_rows = list(csv.reader(fh))
        assert len(cdf_rows) == 1 + 4 * 200  # 4 cells x 200 grid points
        with open(os.path.join(out, "summary.json")) as fh:
            loaded = json.load(fh)
        cell = loaded["blob"]["rcc-kmeans"]["meb"]["8"]
        assert cell["runs"] == 2 and cell["failed"] == 0
        assert cell["metric"] == "normalized_cost"
        assert os.path.exists(os.path.join(out, "timings.csv"))

    def test_deterministic_output_files(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        run_benchmark(tiny_config(), out_dir=a)
        run_benchmark(tiny_config(), out_dir=b)
        for name in ("runs.csv", "summary.json", "cdf.csv"):
            with open(os.path.join(a, name)) as fh:
                first = fh.read()
            with open(os.path.join(b, name)) as fh:
                second = fh.read()
            assert first == second, name

    def test_worker_count_does_not_change_records(self):
        serial, _ = run_benchmark(tiny_config())
        threaded, _ = run_benchmark(tiny_config(), workers=4)
        assert [r.to_row() for r in serial] == [r.to_row() for r in threaded]

    def test_failures_isolated_per_cell(self):
        config = tiny_config(algorithms=[
            {"name": "impossible", "kind": "rcc", "eps": 1e-9},
            {"name": "uniform", "kind": "uniform"},
        ])
        records, summary = run_benchmark(config)
        failed = [r for r in records if r.error is not None]
        fine = [r for r in records if r.error is None]
        assert failed and fine
        assert all(r.algorithm == "impossible" for r in failed)
        assert all("ThresholdNotReachedError" in r.error for r in failed)
        assert summary["blob"]["impossible"]["meb"]["8"]["failed"] == 2

    def test_svm_cells_report_accuracy(self):
        config = tiny_config(
            runs=1,
            problems=[{"name": "svm", "positive_label": "class0"}],
        )
        records, _ = run_benchmark(config)
        assert all(r.metric == "accuracy" for r in records)
        assert all(0.0 <= r.value <= 1.0 for r in records)

    def test_svm_without_positive_label_fails_cleanly(self):
        config = tiny_config(runs=1, problems=[{"name": "svm"}])
        records, _ = run_benchmark(config)
        assert all(r.error is not None for r in records)
        assert all("positive_label" in r.error for r in records)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            run_benchmark({"datasets": [], "algorithms": [], "problems": []})
        with pytest.raises(ValidationError):
            run_benchmark(tiny_config(runs=0))
        bad = tiny_config()
        bad["datasets"] = [{"name": "x", "synthetic": {"kind": "spiral"}}]
        with pytest.raises(ValidationError):
            run_benchmark(bad)

    def test_env_var_worker_override_validated(self, monkeypatch):
        monkeypatch.setenv(WORKERS_ENV_VAR, "banana")
        with pytest.raises(ValidationError):
            run_benchmark(tiny_config(runs=1))
        monkeypatch.setenv(WORKERS_ENV_VAR, "2")
        records, _ = run_benchmark(tiny_config(runs=1))
        assert records

    def test_file_dataset_entries_load(self, tmp_path):
        from kcoreset import save_pointset

        ps = synthetic_uniform(30, 3, 1.0, 9.0, seed=8)
        path = tmp_path / "data.csv"
        save_pointset(ps, str(path))
        config = tiny_config(runs=1)
        config["datasets"] = [{"name": "file", "path": str(path)}]
        records, _ = run_benchmark(config)
        assert all(r.dataset == "file" for r in records)
        assert all(r.error is None for r in records)
