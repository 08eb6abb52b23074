"""End-to-end command-line tests, run in-process via main(argv)."""

import argparse
import json

import numpy as np
import pytest
from PIL import Image

from conftest import blob_arrays, fast_sim, stage_gz_archives, write_dataset_dir
from lmsnn import data as data_mod
from lmsnn.cli import DEFAULTS, build_parser, main
from lmsnn.experiment import RunConfig, sweep_rows
from lmsnn.export import RESULTS_HEADER, read_results
from lmsnn.snapshot import load_snapshot

FAST_CONFIG = {
    "n_input": 12,
    "num_classes": 3,
    "present_duration": 70.0,
    "rest_duration": 15.0,
    "rate_scale": 0.6,
    "min_spikes": 3,
}


def write_config(directory, **extra):
    path = directory / "config.json"
    path.write_text(json.dumps({**FAST_CONFIG, **extra}))
    return str(path)


@pytest.fixture(scope="module")
def cli_env(tmp_path_factory, blob_data_dir):
    """Shared config file plus a trained and a labeled snapshot."""
    root = tmp_path_factory.mktemp("cli")
    cfg = write_config(root)
    d = str(blob_data_dir)
    trained = str(root / "trained.lmsnn")
    labeled = str(root / "labeled.lmsnn")
    assert main(["train", "--config", cfg, "--data-dir", d, "--neurons", "16",
                 "--train-limit", "40", "--seed", "3", "--out", trained]) == 0
    assert main(["label", "--config", cfg, "--data-dir", d, "--snapshot", trained,
                 "--train-limit", "30", "--out", labeled]) == 0
    return {"root": root, "cfg": cfg, "data": d, "trained": trained, "labeled": labeled}


class TestParser:
    def all_help_text(self):
        parser = build_parser()
        texts = [parser.format_help()]
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                texts.extend(sub.format_help() for sub in action.choices.values())
        return "\n".join(texts)

    def test_every_documented_flag_exists(self):
        text = self.all_help_text()
        for flag in (
            "--neurons", "--inhibition", "--p-low", "--p-grow", "--c-min", "--c-max",
            "--c-inhib", "--sparsity", "--epochs", "--seed", "--trials", "--train-limit",
            "--test-limit", "--voting", "--ngram-n", "--ngram-learn-limit", "--dt",
            "--snapshot", "--out", "--data-dir", "--config",
        ):
            assert flag in text, flag

    def test_subcommands_and_choices(self):
        text = self.all_help_text()
        for name in ("train", "label", "evaluate", "sweep", "export", "fetch-data", "convergence"):
            assert name in text
        for strategy in ("constant", "increasing", "growing", "two-level"):
            assert strategy in text
        for scheme in ("all", "confidence", "distance", "ngram"):
            assert scheme in text

    def test_no_arguments_is_usage_error(self):
        assert main([]) == 1

    def test_unknown_flag_is_usage_error(self, tmp_path):
        assert main(["train", "--bogus", "--out", str(tmp_path / "x")]) == 1

    def test_default_table_matches_help_claims(self):
        assert DEFAULTS["neurons"] == 625
        assert DEFAULTS["inhibition"] == "two-level"
        assert (DEFAULTS["p_low"], DEFAULTS["c_min"], DEFAULTS["c_max"]) == (0.1, 0.1, 20.0)
        assert DEFAULTS["dt"] == 0.5


class TestTrain:
    def test_writes_resumable_snapshot(self, cli_env):
        snap = load_snapshot(cli_env["trained"])
        assert snap.examples_seen == 40
        assert snap.k == 4 and snap.n_input == 12
        assert snap.run_meta["seed"] == 3
        assert snap.run_meta["train_limit"] == 40
        assert snap.cfg.present_duration == 70.0

    def test_same_seed_same_bytes(self, tmp_path, blob_data_dir):
        cfg = write_config(tmp_path)
        outs = []
        for name in ("a.lmsnn", "b.lmsnn"):
            out = tmp_path / name
            code = main(["train", "--config", cfg, "--data-dir", str(blob_data_dir),
                         "--neurons", "16", "--train-limit", "15", "--seed", "7",
                         "--out", str(out)])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_zero_train_limit_writes_initial_network(self, tmp_path, blob_data_dir):
        cfg = write_config(tmp_path)
        out = tmp_path / "init.lmsnn"
        assert main(["train", "--config", cfg, "--data-dir", str(blob_data_dir),
                     "--neurons", "16", "--train-limit", "0", "--out", str(out)]) == 0
        assert load_snapshot(out).examples_seen == 0

    def test_curve_out_writes_csv(self, tmp_path, blob_data_dir):
        cfg = write_config(tmp_path)
        curve = tmp_path / "curve.csv"
        assert main(["train", "--config", cfg, "--data-dir", str(blob_data_dir),
                     "--neurons", "16", "--train-limit", "10", "--out",
                     str(tmp_path / "s.lmsnn"), "--curve-out", str(curve)]) == 0
        # 10 examples < 2 periods: header only
        assert curve.read_text().splitlines() == ["examples,raw_accuracy,smoothed_accuracy"]

    def test_missing_dataset_is_data_error(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", cfg, "--data-dir", str(tmp_path / "nowhere"),
                     "--neurons", "16", "--out", str(tmp_path / "x.lmsnn")]) == 2

    def test_non_square_neurons_is_usage_error(self, tmp_path, blob_data_dir):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", cfg, "--data-dir", str(blob_data_dir),
                     "--neurons", "10", "--out", str(tmp_path / "x.lmsnn")]) == 1

    def test_unstable_config_is_divergence_error(self, tmp_path, blob_data_dir):
        # astronomically strong inhibition overflows the inhibitory drive on
        # the step after the first spike lands
        cfg = write_config(tmp_path)
        assert main(["train", "--config", cfg, "--data-dir", str(blob_data_dir),
                     "--neurons", "16", "--inhibition", "constant", "--c-max", "1e300",
                     "--train-limit", "5", "--out", str(tmp_path / "x.lmsnn")]) == 3


class TestConfigPrecedence:
    def test_flag_beats_config_file(self, tmp_path, blob_data_dir):
        cfg = write_config(tmp_path, seed=5, dt=0.25)
        out = tmp_path / "s.lmsnn"
        assert main(["train", "--config", cfg, "--data-dir", str(blob_data_dir),
                     "--neurons", "16", "--train-limit", "3", "--seed", "7",
                     "--dt", "0.5", "--out", str(out)]) == 0
        snap = load_snapshot(out)
        assert snap.run_meta["seed"] == 7
        assert snap.cfg.dt == 0.5

    def test_config_file_beats_defaults(self, tmp_path, blob_data_dir):
        cfg = write_config(tmp_path, seed=5, dt=0.25)
        out = tmp_path / "s.lmsnn"
        assert main(["train", "--config", cfg, "--data-dir", str(blob_data_dir),
                     "--neurons", "16", "--train-limit", "3", "--out", str(out)]) == 0
        snap = load_snapshot(out)
        assert snap.run_meta["seed"] == 5
        assert snap.cfg.dt == 0.25

    def test_malformed_config_file(self, tmp_path, blob_data_dir):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["train", "--config", str(bad), "--data-dir", str(blob_data_dir),
                     "--out", str(tmp_path / "x")]) == 1


class TestLabel:
    def test_labeled_snapshot_carries_model(self, cli_env):
        snap = load_snapshot(cli_env["labeled"])
        model = snap.voting_model
        assert model is not None
        assert model.num_classes == 3
        assert model.assigned.sum() >= 1
        assert model.n == 2 and model.ngram_table
        # provenance survives the relabel
        assert snap.run_meta["seed"] == 3

    def test_zero_examples_is_usage_error(self, cli_env, tmp_path):
        assert main(["label", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                     "--snapshot", cli_env["trained"], "--train-limit", "0",
                     "--out", str(tmp_path / "x.lmsnn")]) == 1

    def test_missing_snapshot_is_data_error(self, cli_env, tmp_path):
        assert main(["label", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                     "--snapshot", str(tmp_path / "ghost.lmsnn"),
                     "--out", str(tmp_path / "x.lmsnn")]) == 2

    def test_labeling_is_deterministic(self, cli_env, tmp_path):
        outs = []
        for name in ("l1.lmsnn", "l2.lmsnn"):
            out = tmp_path / name
            assert main(["label", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                         "--snapshot", cli_env["trained"], "--train-limit", "20",
                         "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestEvaluate:
    def test_four_rows_sharing_metadata(self, cli_env, tmp_path):
        out = tmp_path / "results.csv"
        assert main(["evaluate", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                     "--snapshot", cli_env["labeled"], "--test-limit", "20",
                     "--out", str(out)]) == 0
        rows = read_results(out)
        assert [r["scheme"] for r in rows] == ["all", "confidence", "distance", "ngram"]
        meta_cols = [c for c in RESULTS_HEADER if c not in ("scheme", "accuracy", "stddev")]
        metas = {tuple(r[c] for c in meta_cols) for r in rows}
        assert len(metas) == 1
        assert all(0.0 <= float(r["accuracy"]) <= 1.0 for r in rows)
        assert all(r["stddev"] == "0.0000" for r in rows)

    def test_single_scheme_flag(self, cli_env, tmp_path):
        out = tmp_path / "results.csv"
        assert main(["evaluate", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                     "--snapshot", cli_env["labeled"], "--test-limit", "10",
                     "--voting", "ngram", "--out", str(out)]) == 0
        rows = read_results(out)
        assert len(rows) == 1 and rows[0]["scheme"] == "ngram"

    def test_repeat_evaluation_appends_identical_rows(self, cli_env, tmp_path):
        out = tmp_path / "results.csv"
        for _ in range(2):
            assert main(["evaluate", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                         "--snapshot", cli_env["labeled"], "--test-limit", "15",
                         "--out", str(out)]) == 0
        rows = read_results(out)
        assert len(rows) == 8
        assert rows[:4] == rows[4:]

    def test_unlabeled_snapshot_is_usage_error(self, cli_env, tmp_path):
        assert main(["evaluate", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                     "--snapshot", cli_env["trained"], "--out", str(tmp_path / "r.csv")]) == 1


class TestSweep:
    def sweep_args(self, cfg, data, out, p_low="0.1,0.5"):
        return ["sweep", "--config", cfg, "--data-dir", data, "--neurons", "16",
                "--p-low", p_low, "--c-min", "0.1", "--c-max", "15.0",
                "--trials", "2", "--train-limit", "14", "--test-limit", "10",
                "--seed", "0", "--out", out]

    def test_grid_rows_resume_and_extension(self, cli_env, tmp_path, monkeypatch):
        monkeypatch.setenv("LMSNN_WORKERS", "1")
        out = tmp_path / "sweep.csv"
        assert main(self.sweep_args(cli_env["cfg"], cli_env["data"], str(out))) == 0
        rows = read_results(out)
        assert len(rows) == 2
        assert sorted(r["p_low"] for r in rows) == ["0.1", "0.5"]
        assert all(r["scheme"] == "all" for r in rows)
        first = out.read_bytes()

        # identical invocation: everything already done, file untouched
        assert main(self.sweep_args(cli_env["cfg"], cli_env["data"], str(out))) == 0
        assert out.read_bytes() == first

        # extending the grid only runs the new point
        before = read_results(out)
        assert main(self.sweep_args(cli_env["cfg"], cli_env["data"], str(out),
                                    p_low="0.1,0.5,0.9")) == 0
        after = read_results(out)
        assert len(after) == 3
        assert after[:2] == before
        assert after[2]["p_low"] == "0.9"

    def test_voting_flag_selects_scheme(self, cli_env, tmp_path, monkeypatch):
        monkeypatch.setenv("LMSNN_WORKERS", "1")
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                     "--neurons", "16", "--p-low", "0.1", "--c-min", "0.1",
                     "--c-max", "15.0", "--trials", "2", "--train-limit", "10",
                     "--test-limit", "8", "--voting", "distance", "--out", str(out)]) == 0
        rows = read_results(out)
        assert len(rows) == 1 and rows[0]["scheme"] == "distance"

    def test_bad_grid_list_is_usage_error(self, cli_env, tmp_path):
        assert main(["sweep", "--config", cli_env["cfg"], "--data-dir", cli_env["data"],
                     "--p-low", "0.1,zebra", "--out", str(tmp_path / "s.csv")]) == 1

    def test_process_pool_matches_sequential(self, blob_data_dir):
        rc = RunConfig(
            neurons=16, n_input=12, num_classes=3, trials=2, seed=0,
            train_limit=12, test_limit=8, label_limit=12, ngram_learn_limit=12,
            voting=("all",), sim=fast_sim(seed=0),
        )
        grid = ([0.1, 0.5], [0.1], [15.0])
        seq = sweep_rows(rc, *grid, str(blob_data_dir), workers=1)
        par = sweep_rows(rc, *grid, str(blob_data_dir), workers=2)
        assert seq == par


class TestExport:
    def test_filter_map(self, cli_env, tmp_path):
        out = tmp_path / "filters.pgm"
        assert main(["export", "filters", "--snapshot", cli_env["trained"],
                     "--out", str(out)]) == 0
        with Image.open(out) as img:
            assert img.mode == "L"
            assert img.size == (4 * 12 + 3, 4 * 12 + 3)

    def test_assignment_map(self, cli_env, tmp_path):
        out = tmp_path / "assign.csv"
        assert main(["export", "assignments", "--snapshot", cli_env["labeled"],
                     "--out", str(out)]) == 0
        grid = np.array([[int(x) for x in line.split(",")]
                         for line in out.read_text().splitlines()])
        assert grid.shape == (4, 4)
        assert out.with_suffix(".ppm").exists()

    def test_assignments_need_labeled_snapshot(self, cli_env, tmp_path):
        assert main(["export", "assignments", "--snapshot", cli_env["trained"],
                     "--out", str(tmp_path / "a.csv")]) == 1


class TestFetchData:
    def test_fetch_from_file_url(self, tmp_path, monkeypatch):
        src = tmp_path / "src"
        archives = stage_gz_archives(src)
        monkeypatch.setattr(data_mod, "ARCHIVES", archives)
        dest = tmp_path / "dest"
        assert main(["fetch-data", "--data-dir", str(dest), "--url", src.as_uri() + "/"]) == 0
        for name in archives:
            assert (dest / name).exists()
        # a second run is a no-op over the existing files
        assert main(["fetch-data", "--data-dir", str(dest), "--url", src.as_uri() + "/"]) == 0

    def test_checksum_mismatch_is_data_error(self, tmp_path):
        # synthetic archives under the real names never match the pinned
        # checksums of the published dataset
        src = tmp_path / "src"
        stage_gz_archives(src)
        assert main(["fetch-data", "--data-dir", str(tmp_path / "dest"),
                     "--url", src.as_uri() + "/"]) == 2


class TestConvergenceCommand:
    def test_curve_csv_row_count(self, tmp_path):
        data_dir = write_dataset_dir(tmp_path / "bigblob", blob_arrays(750, seed=30),
                                     blob_arrays(10, seed=31))
        cfg = write_config(tmp_path)
        out = tmp_path / "curve.csv"
        assert main(["convergence", "--config", cfg, "--data-dir", str(data_dir),
                     "--neurons", "16", "--train-limit", "750", "--seed", "1",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "examples,raw_accuracy,smoothed_accuracy"
        assert len(lines) == 1 + (750 // 250 - 1)
        assert [line.split(",")[0] for line in lines[1:]] == ["500", "750"]
