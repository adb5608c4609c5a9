import json
import os

import numpy as np

from elugcn import cli

FAST_FLAGS = [
    "--seed", "0",
    "--mlp-epochs", "120", "--mlp-lr", "0.5",
    "--gcn-epochs", "60", "--gcn-hidden", "16",
    "--lpa-k", "5", "--elu-k", "3",
]

GEN_FLAGS = [
    "--n-per-class", "25", "--classes", "3", "--p-in", "0.15", "--p-out", "0.02",
    "--feat-dim", "8", "--feat-shift", "1.0", "--train-per-class", "6",
    "--val-per-class", "5",
]


def run_pipeline(base, seed="0"):
    data = str(base / "data")
    work = str(base / "work")
    flags = FAST_FLAGS.copy()
    flags[1] = seed
    steps = [
        ["gen-sbm", "--out-dir", data, *GEN_FLAGS, "--seed", seed],
        ["pretrain-mlp", "--data-dir", data, "--work-dir", work, *flags],
        ["partition", "--data-dir", data, "--work-dir", work, *flags],
        ["build-elu-graph", "--data-dir", data, "--work-dir", work, *flags],
        ["train", "--data-dir", data, "--work-dir", work, *flags],
        ["eval", "--data-dir", data, "--work-dir", work, *flags],
        ["export-heatmap", "--data-dir", data, "--work-dir", work, *flags],
    ]
    for argv in steps:
        assert cli.main(argv) == 0, f"step failed: {argv[0]}"
    return data, work


class TestPipelineFlow:
    def test_full_flow_writes_artifacts(self, tmp_path):
        _, work = run_pipeline(tmp_path)
        for name in (
            "mlp", "baseline", "baseline_epochs", "baseline_summary", "partition",
            "partition_report", "partition_png", "graph", "graph_stats",
            "graph_timings", "model", "train_epochs", "train_summary",
            "train_curves", "gap_png", "eval_summary", "heatmap_csv",
            "heatmap_png", "heatmap_report",
        ):
            assert os.path.isfile(cli.art(work, name)), f"missing artifact {name}"

    def test_eval_reproduces_train_metrics(self, tmp_path):
        _, work = run_pipeline(tmp_path)
        train_summary = json.load(open(cli.art(work, "train_summary")))
        eval_summary = json.load(open(cli.art(work, "eval_summary")))
        assert eval_summary["test_acc"] == train_summary["test_acc"]
        assert eval_summary["gap_summary"] == train_summary["gap_summary"]
        assert eval_summary["matches_train_summary"] is True

    def test_reports_embed_config(self, tmp_path):
        _, work = run_pipeline(tmp_path)
        head = open(cli.art(work, "train_epochs")).read().splitlines()[:40]
        assert any(line.startswith("# config seed=0") for line in head)
        summary = json.load(open(cli.art(work, "train_summary")))
        assert summary["config"]["elu.k"] == 3

    def test_missing_artifact_exit_code_names_producer(self, tmp_path, caplog):
        data = str(tmp_path / "data")
        work = str(tmp_path / "work")
        assert cli.main(["gen-sbm", "--out-dir", data, *GEN_FLAGS, "--seed", "0"]) == 0
        code = cli.main(["build-elu-graph", "--data-dir", data, "--work-dir", work, *FAST_FLAGS])
        assert code == 3
        assert "pretrain-mlp" in caplog.text

    def test_config_error_exit_code(self, tmp_path):
        assert cli.main(["train", "--data-dir", "x", "--work-dir", "y", "--elu-beta", "-2"]) == 2

    def test_heatmap_size_guard(self, tmp_path, monkeypatch):
        data, work = run_pipeline(tmp_path)
        monkeypatch.setattr(cli, "HEATMAP_MAX_NODES", 10)
        code = cli.main(["export-heatmap", "--data-dir", data, "--work-dir", work, *FAST_FLAGS])
        assert code == 2

    def test_degenerate_fusion_matches_baseline(self, tmp_path):
        data, work = run_pipeline(tmp_path)
        work2 = str(tmp_path / "work2")
        for name in ("mlp", "baseline", "baseline_epochs", "baseline_summary", "partition",
                     "graph", "graph_stats"):
            src = cli.art(work, name)
            os.makedirs(work2, exist_ok=True)
            with open(src, "rb") as fh:
                payload = fh.read()
            with open(cli.art(work2, name), "wb") as fh:
                fh.write(payload)
        code = cli.main([
            "train", "--data-dir", data, "--work-dir", work2, *FAST_FLAGS,
            "--eta-fuse", "0", "--lambda", "0",
        ])
        assert code == 0
        baseline = json.load(open(cli.art(work, "baseline_summary")))
        fused = json.load(open(cli.art(work2, "train_summary")))
        assert abs(fused["test_acc"] - baseline["test_acc"]) <= 0.002

    def test_bench_writes_report(self, tmp_path):
        work = str(tmp_path / "bench")
        code = cli.main([
            "bench", "--work-dir", work, "--bench-sizes", "400,800",
            "--bench-repeats", "2", "--seed", "0",
        ])
        assert code == 0
        lines = [l for l in open(cli.art(work, "bench_report")) if not l.startswith("#")]
        assert lines[0].startswith("n,")
        assert len(lines) == 3


class TestDeterminism:
    def test_rerun_is_byte_identical(self, tmp_path):
        data1, work1 = run_pipeline(tmp_path / "one", seed="5")
        data2, work2 = run_pipeline(tmp_path / "two", seed="5")
        skip = ("timings",)
        for root, base in ((data1, data2), (work1, work2)):
            for name in sorted(os.listdir(root)):
                if any(tag in name for tag in skip):
                    continue
                a = open(os.path.join(root, name), "rb").read()
                b = open(os.path.join(base, name), "rb").read()
                assert a == b, f"artifact {name} differs between reruns"


class TestConfigFile:
    def test_config_file_flag(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed=4\nelu.keep_fraction=0.2\n")
        data = str(tmp_path / "data")
        work = str(tmp_path / "work")
        assert cli.main(["gen-sbm", "--out-dir", data, *GEN_FLAGS,
                         "--config", str(cfg)]) == 0
        for step in ("pretrain-mlp", "partition", "build-elu-graph"):
            assert cli.main([step, "--data-dir", data, "--work-dir", work,
                             "--config", str(cfg), "--mlp-epochs", "50",
                             "--gcn-epochs", "30", "--gcn-hidden", "16",
                             "--elu-k", "2"]) == 0
        stats = json.load(open(cli.art(work, "graph_stats")))
        assert stats["keep_fraction"] == 0.2
        assert stats["config"]["seed"] == 4

    def test_gen_sbm_pattern_flags(self, tmp_path):
        out = str(tmp_path / "ring")
        assert cli.main(["gen-sbm", "--out-dir", out, "--n-per-class", "20",
                         "--classes", "4", "--p-in", "0.02", "--p-out", "0.3",
                         "--feat-dim", "4", "--feat-shift", "1.0",
                         "--train-per-class", "4", "--val-per-class", "4",
                         "--pattern", "ring", "--informative-fraction", "0.5",
                         "--seed", "1"]) == 0
        from elugcn.graphdata import load_dataset

        graph, _, labels = load_dataset(out)
        diff = (labels.labels[graph.src] - labels.labels[graph.dst]) % 4
        assert np.isin(diff, [1, 3]).mean() > 0.8


class TestErrorMapping:
    def test_numeric_failure_exit_code(self, monkeypatch, tmp_path):
        from elugcn.errors import NumericError

        def boom(cfg, work_dir):
            raise NumericError("synthetic numeric failure")

        monkeypatch.setattr(cli, "cmd_bench", boom)
        assert cli.main(["bench", "--work-dir", str(tmp_path)]) == 4
