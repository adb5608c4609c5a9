"""Command-line pipeline: dataset generation through evaluation and export.

Subcommands write their artifacts into a shared work directory and fail
with an actionable message (exit code 3) when a prerequisite artifact is
missing. Reports embed the effective configuration; wall-clock timings go
into separate ``*_timings.json`` / bench files so every other artifact is
byte-identical across reruns with the same seed.

Exit codes: 0 ok, 2 config/input error, 3 missing artifact, 4 numeric
failure.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import plots
from .config import PipelineConfig, load_config, sub_seed
from .contrastive import ProjectionHead
from .elugraph import build_elu_graph, load_triplets, propagation_operator, save_triplets
from .errors import ConfigError, EluGcnError, MissingArtifactError
from .gcn import forward_single, load_gcn, save_gcn
from .graphdata import gen_sbm, load_dataset, normalize
from .metrics import accuracy, generalization_gap, intra_class_mass_fraction
from .mlp import load_mlp, mlp_probs, pretrain_mlp, save_mlp
from .numerics import softmax_rows
from .partition import (
    partition,
    partition_report,
    read_partition_csv,
    write_partition_csv,
)
from .propagation import lpa, lpa_predict
from .training import dual_probs, train_dual, train_single

log = logging.getLogger("elugcn")

ART = {
    "mlp": "mlp.ckpt",
    "mlp_history": "mlp_history.csv",
    "baseline": "baseline_gcn.ckpt",
    "baseline_epochs": "baseline_epochs.csv",
    "baseline_summary": "baseline_summary.json",
    "baseline_timings": "baseline_timings.json",
    "partition": "partition.csv",
    "partition_report": "partition_report.csv",
    "partition_png": "partition_report.png",
    "graph": "elu_graph.txt",
    "graph_stats": "elu_graph_stats.json",
    "graph_timings": "elu_graph_timings.json",
    "model": "elugcn.ckpt",
    "train_epochs": "train_epochs.csv",
    "train_summary": "train_summary.json",
    "train_timings": "train_timings.json",
    "train_curves": "train_curves.png",
    "gap_png": "gap_curves.png",
    "eval_summary": "eval_summary.json",
    "bench_report": "bench_report.csv",
    "bench_png": "bench_report.png",
    "heatmap_csv": "heatmap.csv",
    "heatmap_png": "heatmap.png",
    "heatmap_report": "heatmap_report.json",
}


def art(work_dir, name):
    return os.path.join(work_dir, ART[name])


def require(path, producer):
    if not os.path.isfile(path):
        raise MissingArtifactError(path, hint=f"run `elugcn {producer}` first")
    return path


# ---------------------------------------------------------------------------
# report helpers
# ---------------------------------------------------------------------------


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _config_comments(cfg):
    return [f"# config {k}={v}" for k, v in sorted(cfg.to_flat().items())]


def _write_report_csv(path, cfg, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in _config_comments(cfg):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _write_epochs_csv(path, cfg, report, extra_cols=()):
    header = ["epoch", "train_loss", "val_loss", "gap", "train_acc", "val_acc", *extra_cols]
    rows = []
    for i, entry in enumerate(report.epochs, start=1):
        row = [i] + [_fmt(entry[col]) for col in header[1:]]
        rows.append(row)
    _write_report_csv(path, cfg, header, rows)


def _read_epoch_losses(path):
    train, val = [], []
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    for record in csv.DictReader(rows):
        train.append(float(record["train_loss"]))
        val.append(float(record["val_loss"]))
    return train, val


# ---------------------------------------------------------------------------
# subcommand bodies (also the library-level pipeline API)
# ---------------------------------------------------------------------------


def cmd_gen_sbm(cfg, args):
    seed = sub_seed(cfg.seed, "sbm")
    gen_sbm(
        args.out_dir,
        n_per_class=args.n_per_class,
        c=args.classes,
        p_in=args.p_in,
        p_out=args.p_out,
        feat_dim=args.feat_dim,
        feat_shift=args.feat_shift,
        seed=seed,
        train_per_class=args.train_per_class,
        val_per_class=args.val_per_class,
        informative_fraction=args.informative_fraction,
        pattern=args.pattern,
    )
    log.info(
        "wrote planted-partition dataset to %s (n=%d, c=%d)",
        args.out_dir,
        args.n_per_class * args.classes,
        args.classes,
    )
    return 0


def cmd_pretrain_mlp(cfg, data_dir, work_dir):
    _, features, labels = load_dataset(data_dir)
    model, history = pretrain_mlp(features.x, labels, cfg.mlp, sub_seed(cfg.seed, "mlp"))
    os.makedirs(work_dir, exist_ok=True)
    save_mlp(art(work_dir, "mlp"), model, cfg.seed)
    rows = [
        [i + 1, _fmt(loss), _fmt(acc)]
        for i, (loss, acc) in enumerate(zip(history["train_loss"], history["val_acc"]))
    ]
    _write_report_csv(art(work_dir, "mlp_history"), cfg, ["epoch", "train_loss", "val_acc"], rows)
    log.info(
        "pretrained feature model: best val acc %.4f (epoch %d)",
        history["best_val_acc"],
        history["best_epoch"],
    )
    return 0


def cmd_partition(cfg, data_dir, work_dir):
    graph, features, labels = load_dataset(data_dir)
    a_hat = normalize(graph)
    os.makedirs(work_dir, exist_ok=True)

    model, preds, report = train_single(
        a_hat, features.x, labels, cfg.gcn, sub_seed(cfg.seed, "gcn")
    )
    save_gcn(art(work_dir, "baseline"), model, cfg.seed)
    _write_epochs_csv(art(work_dir, "baseline_epochs"), cfg, report)
    summary = {
        "config": cfg.to_flat(),
        "test_acc": report.final["test_acc"],
        "val_acc": report.final["val_acc"],
        "gap_summary": report.gap_summary(),
    }
    _write_json(art(work_dir, "baseline_summary"), summary)
    _write_json(art(work_dir, "baseline_timings"), report.timings)

    state = lpa(a_hat, labels.onehot(), labels.train, cfg.lpa.k)
    part = partition(preds, lpa_predict(state), labels)
    write_partition_csv(art(work_dir, "partition"), part)
    rep = partition_report(part, labels)
    _write_report_csv(
        art(work_dir, "partition_report"),
        cfg,
        ["n_elu", "n_nelu", "n_nosig", "proportion_nelu", "proportion_nosig", "acc_elu", "acc_nelu"],
        [[rep["n_elu"], rep["n_nelu"], rep["n_nosig"],
          _fmt(rep["proportion_nelu"]), _fmt(rep["proportion_nosig"]),
          _fmt(rep["acc_elu"]), _fmt(rep["acc_nelu"])]],
    )
    plots.save_partition_bars(rep, art(work_dir, "partition_png"))
    log.info(
        "baseline test acc %.4f; partition: %d ELU / %d NELU / %d unreached",
        report.final["test_acc"],
        rep["n_elu"],
        rep["n_nelu"],
        rep["n_nosig"],
    )
    return 0


def cmd_build_elu_graph(cfg, data_dir, work_dir):
    graph, features, labels = load_dataset(data_dir)
    a_hat = normalize(graph)
    mlp_model, _ = load_mlp(require(art(work_dir, "mlp"), "pretrain-mlp"))
    baseline, _, _ = load_gcn(require(art(work_dir, "baseline"), "partition"))
    part = read_partition_csv(require(art(work_dir, "partition"), "partition"), labels.n)

    h = mlp_probs(mlp_model, features.x)
    gcn_probs = softmax_rows(forward_single(baseline, a_hat, features.x))
    result = build_elu_graph(
        h,
        labels.onehot(),
        part,
        gcn_probs,
        beta=cfg.elu.beta,
        k=cfg.elu.k,
        keep_fraction=cfg.elu.keep_fraction,
        clip_negative=cfg.elu.clip_negative,
    )
    save_triplets(art(work_dir, "graph"), result.s_sparse)

    stats = dict(result.build_stats)
    iteration_times = [it.pop("time_s") for it in stats["iterations"]]
    assembly_time = stats.pop("assembly_time_s")
    stats["config"] = cfg.to_flat()
    _write_json(art(work_dir, "graph_stats"), stats)
    _write_json(
        art(work_dir, "graph_timings"),
        {"iteration_times_s": iteration_times, "assembly_time_s": assembly_time},
    )
    log.info(
        "built graph: %d kept entries (density %.4f, threshold %.3e)",
        stats["kept_entries"],
        stats["density"],
        stats["threshold"],
    )
    return 0


def cmd_train(cfg, data_dir, work_dir):
    graph, features, labels = load_dataset(data_dir)
    a_hat = normalize(graph)
    s_star = load_triplets(require(art(work_dir, "graph"), "build-elu-graph"))
    part = read_partition_csv(require(art(work_dir, "partition"), "partition"), labels.n)

    model, head, preds, report = train_dual(
        a_hat,
        propagation_operator(s_star, cfg.elu.operator),
        features.x,
        labels,
        part,
        cfg.gcn,
        cfg.con,
        sub_seed(cfg.seed, "gcn"),
    )
    save_gcn(art(work_dir, "model"), model, cfg.seed, extra={"wp": head.wp})
    _write_epochs_csv(art(work_dir, "train_epochs"), cfg, report, extra_cols=("con_loss",))
    summary = {
        "config": cfg.to_flat(),
        "test_acc": report.final["test_acc"],
        "val_acc": report.final["val_acc"],
        "acc_elu": report.final["acc_elu"],
        "acc_nelu": report.final["acc_nelu"],
        "gap_summary": report.gap_summary(),
    }
    _write_json(art(work_dir, "train_summary"), summary)
    _write_json(art(work_dir, "train_timings"), report.timings)
    plots.save_loss_curves(report.epochs, art(work_dir, "train_curves"), title="dual-branch")

    gap_series = {"elu-gcn": [e["gap"] for e in report.epochs]}
    baseline_epochs = art(work_dir, "baseline_epochs")
    if os.path.isfile(baseline_epochs):
        btrain, bval = _read_epoch_losses(baseline_epochs)
        gap_series["gcn"] = generalization_gap(btrain, bval)[0]
    plots.save_gap_curves(gap_series, art(work_dir, "gap_png"))

    log.info(
        "trained dual model: test acc %.4f (val %.4f, gap %.4f)",
        summary["test_acc"],
        summary["val_acc"],
        summary["gap_summary"],
    )
    return 0


def cmd_eval(cfg, data_dir, work_dir):
    graph, features, labels = load_dataset(data_dir)
    a_hat = normalize(graph)
    s_star = load_triplets(require(art(work_dir, "graph"), "build-elu-graph"))
    part = read_partition_csv(require(art(work_dir, "partition"), "partition"), labels.n)
    model, _, extra = load_gcn(require(art(work_dir, "model"), "train"))
    head = ProjectionHead(wp=extra["wp"])
    train_summary = _read_json(require(art(work_dir, "train_summary"), "train"))

    # Rebuild the evaluation from the configuration embedded at train time.
    stored = PipelineConfig()
    for key, value in train_summary["config"].items():
        stored.set(key, value)
    eta = stored.con.eta_fuse

    s_op = propagation_operator(s_star, stored.elu.operator)
    probs = dual_probs(model, head, a_hat, s_op, features.x, eta)
    preds = np.argmax(probs, axis=1)
    summary = {
        "config": train_summary["config"],
        "test_acc": accuracy(preds, labels.labels, labels.test),
        "acc_elu": accuracy(preds, labels.labels, np.intersect1d(part.v_elu, labels.test)),
        "acc_nelu": accuracy(preds, labels.labels, np.intersect1d(part.v_nelu, labels.test)),
        "intra_class_mass_fraction": intra_class_mass_fraction(s_star, labels.labels),
        "matches_train_summary": None,
    }
    train_loss, val_loss = _read_epoch_losses(art(work_dir, "train_epochs"))
    summary["gap_summary"] = generalization_gap(train_loss, val_loss)[1]
    summary["matches_train_summary"] = bool(
        summary["test_acc"] == train_summary["test_acc"]
        and summary["gap_summary"] == train_summary["gap_summary"]
    )
    _write_json(art(work_dir, "eval_summary"), summary)
    log.info(
        "eval: test acc %.4f (matches train summary: %s)",
        summary["test_acc"],
        summary["matches_train_summary"],
    )
    return 0


def cmd_bench(cfg, work_dir):
    os.makedirs(work_dir, exist_ok=True)
    rows, ratios = bench_mod.run_bench(
        cfg.bench.sizes,
        cfg.bench.classes,
        cfg.elu.beta,
        cfg.bench.repeats,
        sub_seed(cfg.seed, "bench"),
    )
    _write_report_csv(
        art(work_dir, "bench_report"),
        cfg,
        ["n", "t_step_s", "t_assembly_s"],
        [[r["n"], _fmt(r["t_step_s"]), _fmt(r["t_assembly_s"])] for r in rows],
    )
    plots.save_bench_curves(rows, art(work_dir, "bench_png"))
    for ratio in ratios:
        log.info(
            "n %d -> %d (x%.1f): step time x%.2f, assembly time x%.2f",
            ratio["n_from"],
            ratio["n_to"],
            ratio["size_ratio"],
            ratio["step_time_ratio"],
            ratio["assembly_time_ratio"],
        )
    return 0


HEATMAP_MAX_NODES = 4096


def cmd_export_heatmap(cfg, data_dir, work_dir):
    _, _, labels = load_dataset(data_dir)
    s_star = load_triplets(require(art(work_dir, "graph"), "build-elu-graph"))
    n = s_star.shape[0]
    if n > HEATMAP_MAX_NODES:
        raise ConfigError(
            f"heatmap export refuses n={n} > {HEATMAP_MAX_NODES}; "
            f"use the sparse triplet export ({ART['graph']}) instead"
        )
    order = np.lexsort((np.arange(n), labels.labels))
    dense = s_star.toarray()[order][:, order]
    with open(art(work_dir, "heatmap_csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for row in dense:
            writer.writerow([repr(float(v)) for v in row])
    boundaries = np.cumsum(np.bincount(labels.labels[labels.labels >= 0]))
    plots.save_heatmap(dense, art(work_dir, "heatmap_png"), boundaries=boundaries)

    report = {
        "config": cfg.to_flat(),
        "n": int(n),
        "intra_class_mass_fraction": intra_class_mass_fraction(s_star, labels.labels),
    }
    stats_path = art(work_dir, "graph_stats")
    if os.path.isfile(stats_path):
        report["threshold"] = _read_json(stats_path)["threshold"]
    _write_json(art(work_dir, "heatmap_report"), report)
    log.info(
        "heatmap exported (n=%d, intra-class mass %.4f)",
        n,
        report["intra_class_mass_fraction"],
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _flag_for(key):
    return "--" + key.replace(".", "-").replace("_", "-")


def _dest_for(key):
    return "cfgkey__" + key.replace(".", "__")


def _add_config_flags(parser):
    parser.add_argument("--config", metavar="FILE", help="key=value config file")
    flat = PipelineConfig().to_flat()
    for key in sorted(flat):
        parser.add_argument(_flag_for(key), dest=_dest_for(key), metavar="V")
    # shorthand aliases used throughout the docs
    parser.add_argument("--eta-fuse", dest=_dest_for("con.eta_fuse"), metavar="V")
    parser.add_argument("--lambda", dest=_dest_for("con.lambda"), metavar="V")


def _add_dirs(parser, data=True, work=True):
    if data:
        parser.add_argument("--data-dir", required=True, help="dataset directory")
    if work:
        parser.add_argument("--work-dir", required=True, help="artifact directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="elugcn",
        description="Label-utilization graph learning pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sbm", help="write a planted-partition dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--p-in", type=float, default=0.1)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--feat-dim", type=int, default=16)
    p.add_argument("--feat-shift", type=float, default=1.0)
    p.add_argument("--train-per-class", type=int, default=20)
    p.add_argument("--val-per-class", type=int, default=30)
    p.add_argument("--informative-fraction", type=float, default=1.0)
    p.add_argument("--pattern", choices=("uniform", "ring"), default="uniform")
    _add_config_flags(p)

    for name, needs_data in (
        ("pretrain-mlp", True),
        ("partition", True),
        ("build-elu-graph", True),
        ("train", True),
        ("eval", True),
        ("export-heatmap", True),
    ):
        p = sub.add_parser(name)
        _add_dirs(p, data=needs_data)
        _add_config_flags(p)

    p = sub.add_parser("bench", help="time the update step and final assembly")
    _add_dirs(p, data=False)
    _add_config_flags(p)

    return parser


def _config_from_args(args):
    overrides = {}
    for key in PipelineConfig().to_flat():
        value = getattr(args, _dest_for(key), None)
        if value is not None:
            overrides[key] = value
    return load_config(getattr(args, "config", None), overrides)


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "gen-sbm":
            return cmd_gen_sbm(cfg, args)
        if args.command == "pretrain-mlp":
            return cmd_pretrain_mlp(cfg, args.data_dir, args.work_dir)
        if args.command == "partition":
            return cmd_partition(cfg, args.data_dir, args.work_dir)
        if args.command == "build-elu-graph":
            return cmd_build_elu_graph(cfg, args.data_dir, args.work_dir)
        if args.command == "train":
            return cmd_train(cfg, args.data_dir, args.work_dir)
        if args.command == "eval":
            return cmd_eval(cfg, args.data_dir, args.work_dir)
        if args.command == "bench":
            return cmd_bench(cfg, args.work_dir)
        if args.command == "export-heatmap":
            return cmd_export_heatmap(cfg, args.data_dir, args.work_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except EluGcnError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
