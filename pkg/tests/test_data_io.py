"""CSV ingestion, blob generation, config parsing, and the CLI."""

import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from alquest.config import ConfigError, parse_run_config
from alquest.data import (
    DatasetError,
    load_csv,
    make_blobs,
    save_csv,
    train_holdout_split,
)
from alquest.models import LinearSoftmaxModel


class TestLoadCsv:
    def _write(self, tmp_path, rows, header="x0,x1,label"):
        path = tmp_path / "data.csv"
        path.write_text(header + "\n" + "\n".join(rows) + "\n")
        return path

    def test_labels_remap_in_first_occurrence_order(self, tmp_path):
        path = self._write(tmp_path, ["1,2,a", "3,4,b", "5,6,a"])
        ds = load_csv(path, "label")
        assert ds.n_classes == 2
        np.testing.assert_array_equal(ds.labels, [1, 2, 1])
        assert ds.label_names == ("a", "b")

    def test_blank_cell_error_names_the_cell(self, tmp_path):
        path = self._write(tmp_path, ["1,2,a", "3,,b"])
        with pytest.raises(DatasetError, match=r"row 3.*'x1'"):
            load_csv(path, "label")

    def test_non_numeric_cell_error_names_the_cell(self, tmp_path):
        path = self._write(tmp_path, ["1,2,a", "3,oops,b"])
        with pytest.raises(DatasetError, match=r"'oops' at row 3, column 'x1'"):
            load_csv(path, "label")

    def test_missing_label_column_rejected(self, tmp_path):
        path = self._write(tmp_path, ["1,2,a"])
        with pytest.raises(DatasetError, match="no column named 'y'"):
            load_csv(path, "y")

    def test_display_column_is_carried_not_parsed(self, tmp_path):
        path = self._write(tmp_path, ["1,2,img1.png,a", "3,4,img2.png,b"], header="x0,x1,thumb,label")
        ds = load_csv(path, "label", display_column="thumb")
        assert ds.display == ["img1.png", "img2.png"]
        assert ds.features.shape == (2, 2)

    def test_round_trip_through_save_csv(self, tmp_path):
        """Features come back bit-exact; labels up to the remap rule
        (first occurrence in file order defines the new indices)."""
        ds = make_blobs(3, 50, n_features=4, separation=5.0, seed=0)
        path = tmp_path / "blobs.csv"
        save_csv(ds, path)
        back = load_csv(path, "label")
        np.testing.assert_array_equal(back.features, ds.features)
        assert back.n_classes == 3
        mapping = {}
        for old, new in zip(ds.labels, back.labels):
            assert mapping.setdefault(old, new) == new
        assert len(set(mapping.values())) == 3


class TestMakeBlobs:
    def test_same_seed_is_bit_identical(self):
        a = make_blobs(4, 100, n_features=3, separation=6.0, seed=5)
        b = make_blobs(4, 100, n_features=3, separation=6.0, seed=5)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_one_point_per_class_at_the_boundary_size(self):
        ds = make_blobs(5, 5, seed=1)
        assert sorted(ds.labels.tolist()) == [1, 2, 3, 4, 5]

    def test_balanced_sizes_within_one(self):
        ds = make_blobs(4, 103, seed=2)
        counts = np.bincount(ds.labels)[1:]
        assert counts.max() - counts.min() <= 1

    def test_separated_blobs_are_nearly_perfectly_learnable(self):
        ds = make_blobs(4, 500, n_features=2, separation=8.0, seed=3)
        ds = train_holdout_split(ds, 0.4, seed=3)
        px, py = ds.pool()
        hx, hy = ds.holdout()
        model = LinearSoftmaxModel(4, 2).fit(px, py)
        assert model.score(hx, hy) >= 0.99

    def test_minimum_center_gap_matches_separation(self):
        ds = make_blobs(3, 90, n_features=2, separation=7.0, seed=4)
        centers = np.vstack([ds.features[ds.labels == c].mean(axis=0) for c in (1, 2, 3)])
        gaps = [np.linalg.norm(centers[i] - centers[j]) for i in range(3) for j in range(i + 1, 3)]
        assert min(gaps) > 5.0  # empirical centers wander ~1/sqrt(30) around truth


class TestSplit:
    def test_pool_and_holdout_are_disjoint_and_cover(self):
        ds = make_blobs(3, 60, seed=6)
        ds = train_holdout_split(ds, 0.25, seed=6)
        assert ds.holdout_mask.sum() == 15
        px, _ = ds.pool()
        hx, _ = ds.holdout()
        assert len(px) + len(hx) == 60

    def test_holdout_classes_must_appear_in_the_pool(self):
        from alquest.data import Dataset

        features = np.arange(20, dtype=float)[:, None]
        labels = np.array([1] * 19 + [2])
        ds = Dataset(features=features, labels=labels, n_classes=2)
        raised = False
        for seed in range(40):
            try:
                train_holdout_split(ds, 0.5, seed=seed)
            except DatasetError as exc:
                assert "absent from the pool" in str(exc)
                raised = True
                break
        assert raised


BASE_CONFIG = {
    "dataset": {"generator": "blobs", "classes": 3, "size": 120, "separation": 6.0},
    "engine": {
        "budget": 5,
        "kinds": [
            {"family": "class", "m": 1, "cost": 1.0},
            {"family": "all", "m": 2, "cost": 0.2},
        ],
        "seed": 1,
    },
}


class TestRunConfig:
    def test_defaults_are_echoed(self):
        spec = parse_run_config(BASE_CONFIG)
        assert spec.engine.rho == 0.5
        assert spec.resolved["engine"]["rho"] == 0.5
        assert spec.resolved["training"]["l2_penalty"] == 1e-4
        assert spec.resolved["acquisition"]["jitter_scale"] == 0.02

    def test_unknown_field_is_named(self):
        bad = {**BASE_CONFIG, "engine": {**BASE_CONFIG["engine"], "bugdet": 4}}
        with pytest.raises(ConfigError, match="engine.bugdet"):
            parse_run_config(bad)

    def test_bad_types_are_named(self):
        bad = {**BASE_CONFIG, "engine": {**BASE_CONFIG["engine"], "budget": "lots"}}
        with pytest.raises(ConfigError, match="engine.budget"):
            parse_run_config(bad)

    def test_dataset_requires_a_source(self):
        with pytest.raises(ConfigError, match="dataset"):
            parse_run_config({"dataset": {}})

    def test_kinds_are_validated(self):
        bad = {**BASE_CONFIG, "engine": {**BASE_CONFIG["engine"], "kinds": [{"family": "all", "m": 0, "cost": 0.2}]}}
        with pytest.raises(ConfigError, match="kinds"):
            parse_run_config(bad)

    def test_loadable_dataset_spec(self):
        spec = parse_run_config(BASE_CONFIG)
        ds = spec.dataset.load()
        assert ds.holdout() is not None
        px, _ = ds.pool()
        assert len(px) == 72  # 120 * (1 - 0.4)


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "alquest.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


class TestCli:
    def test_gen_then_run_round_trip(self, tmp_path):
        gen = run_cli(
            ["gen", "--output", "d.csv", "--classes", "3", "--size", "90", "--separation", "6", "--seed", "2"],
            tmp_path,
        )
        assert gen.returncode == 0, gen.stderr
        config = {
            "dataset": {"path": "d.csv"},
            "engine": BASE_CONFIG["engine"],
            "output_dir": "out",
        }
        (tmp_path / "c.json").write_text(json.dumps(config))
        run = run_cli(["run", "--config", "c.json"], tmp_path)
        assert run.returncode == 0, run.stderr
        assert (tmp_path / "out" / "metrics-seed1.csv").exists()
        assert (tmp_path / "out" / "run-seed1.jsonl").exists()
        with open(tmp_path / "out" / "metrics-seed1.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["budget", "accuracy", "sum_cross_entropy", "kind", "entropy", "level_s"]

    def test_run_log_echoes_the_resolved_config(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({**BASE_CONFIG, "output_dir": "out"}))
        run = run_cli(["run", "--config", "c.json"], tmp_path)
        assert run.returncode == 0, run.stderr
        first = json.loads((tmp_path / "out" / "run-seed1.jsonl").read_text().splitlines()[0])
        assert first["event"] == "config"
        assert first["resolved"]["engine"]["rho"] == 0.5

    def test_sweep_writes_aggregate_curves(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({**BASE_CONFIG, "output_dir": "out"}))
        sweep = run_cli(["sweep", "--config", "c.json", "--repeats", "3"], tmp_path)
        assert sweep.returncode == 0, sweep.stderr
        with open(tmp_path / "out" / "sweep-aggregate.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "budget",
            "accuracy_mean",
            "accuracy_stderr",
            "sum_cross_entropy_mean",
            "sum_cross_entropy_stderr",
        ]
        assert len(rows) >= 2

    def test_sweep_aggregate_matches_recomputation_from_per_run_csvs(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({**BASE_CONFIG, "output_dir": "out"}))
        assert run_cli(["sweep", "--config", "c.json", "--repeats", "3"], tmp_path).returncode == 0
        per_run = []
        for seed in (1, 2, 3):
            with open(tmp_path / "out" / f"metrics-seed{seed}.csv") as fh:
                reader = csv.DictReader(fh)
                per_run.append([(float(r["budget"]), float(r["accuracy"])) for r in reader])
        with open(tmp_path / "out" / "sweep-aggregate.csv") as fh:
            agg = {float(r["budget"]): float(r["accuracy_mean"]) for r in csv.DictReader(fh)}
        for g, mean_acc in agg.items():
            vals = []
            for rows in per_run:
                last = None
                for b, acc in rows:
                    if b <= g + 1e-9:
                        last = acc
                vals.append(last)
            assert mean_acc == pytest.approx(np.mean(vals), abs=1e-12)

    def test_sweep_runs_with_parallel_workers(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({**BASE_CONFIG, "output_dir": "out"}))
        sweep = run_cli(["sweep", "--config", "c.json", "--repeats", "2", "--workers", "2"], tmp_path)
        assert sweep.returncode == 0, sweep.stderr
        assert (tmp_path / "out" / "metrics-seed1.csv").exists()
        assert (tmp_path / "out" / "metrics-seed2.csv").exists()

    def test_theory_check_exits_zero_when_suites_pass(self, tmp_path):
        result = run_cli(["theory-check", "--trials", "150"], tmp_path)
        assert result.returncode == 0, result.stdout + result.stderr
        lines = [l for l in result.stdout.splitlines() if l.startswith("[")]
        assert len(lines) == 4
        assert all(l.startswith("[PASS]") for l in lines)

    def test_unknown_flag_exits_with_usage_error(self, tmp_path):
        result = run_cli(["run", "--nope"], tmp_path)
        assert result.returncode == 1
        assert result.stderr

    def test_bad_config_exits_with_usage_error(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"dataset": {"generator": "moons"}}))
        result = run_cli(["run", "--config", "c.json"], tmp_path)
        assert result.returncode == 1
        assert "generator" in result.stderr

    def test_missing_config_file_exits_with_usage_error(self, tmp_path):
        result = run_cli(["run", "--config", "absent.json"], tmp_path)
        assert result.returncode == 1

    def test_strategy_override(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({**BASE_CONFIG, "output_dir": "out"}))
        run = run_cli(["run", "--config", "c.json", "--strategy", "random", "--budget", "3", "--seed", "9"], tmp_path)
        assert run.returncode == 0, run.stderr
        log_lines = (tmp_path / "out" / "run-seed9.jsonl").read_text().splitlines()
        start = json.loads(log_lines[1])
        assert start["strategy"] == "random"
        assert start["budget"] == 3.0
