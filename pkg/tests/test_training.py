import numpy as np

from elugcn.config import ConConfig, GcnConfig, sub_seed
from elugcn.elugraph import build_elu_graph, propagation_operator
from elugcn.gcn import forward_single
from elugcn.graphdata import gen_sbm, normalize
from elugcn.mlp import mlp_probs, pretrain_mlp
from elugcn.numerics import softmax_rows
from elugcn.partition import partition
from elugcn.propagation import lpa, lpa_predict
from elugcn.config import MlpConfig
from elugcn.training import dual_probs, train_dual, train_single


def small_pipeline(tmp_path, seed=0, epochs=60):
    graph, feats, labels = gen_sbm(
        tmp_path / "ds", 25, 3, 0.15, 0.02, 8, 1.0, seed=sub_seed(seed, "sbm"),
        train_per_class=6, val_per_class=5,
    )
    a_hat = normalize(graph)
    mlp_model, _ = pretrain_mlp(
        feats.x, labels, MlpConfig(hidden=16, lr=0.5, epochs=150, weight_decay=1e-3),
        sub_seed(seed, "mlp"),
    )
    h = mlp_probs(mlp_model, feats.x)
    gcn_cfg = GcnConfig(hidden=16, epochs=epochs)
    baseline, preds, rep = train_single(a_hat, feats.x, labels, gcn_cfg, sub_seed(seed, "gcn"))
    state = lpa(a_hat, labels.onehot(), labels.train, 5)
    part = partition(preds, lpa_predict(state), labels)
    gcn_probs = softmax_rows(forward_single(baseline, a_hat, feats.x))
    built = build_elu_graph(h, labels.onehot(), part, gcn_probs, beta=1.0, k=3, keep_fraction=0.1)
    s_op = propagation_operator(built.s_sparse, "symnorm")
    return a_hat, s_op, feats, labels, part, gcn_cfg, rep


class TestDualTraining:
    def test_degenerate_fusion_matches_single_branch(self, tmp_path):
        a_hat, s_op, feats, labels, part, gcn_cfg, single_report = small_pipeline(tmp_path)
        con = ConConfig(eta_fuse=0.0, lambda_=0.0)
        _, _, preds, report = train_dual(
            a_hat, s_op, feats.x, labels, part, gcn_cfg, con, sub_seed(0, "gcn")
        )
        # with the fusion weight and contrastive weight at zero the second
        # branch receives no gradient and the run degenerates to the
        # single-branch baseline
        assert abs(report.final["test_acc"] - single_report.final["test_acc"]) <= 0.002

    def test_deterministic(self, tmp_path):
        a_hat, s_op, feats, labels, part, gcn_cfg, _ = small_pipeline(tmp_path)
        con = ConConfig(eta_fuse=0.5, lambda_=0.1)
        m1, h1, p1, _ = train_dual(a_hat, s_op, feats.x, labels, part, gcn_cfg, con, sub_seed(0, "gcn"))
        m2, h2, p2, _ = train_dual(a_hat, s_op, feats.x, labels, part, gcn_cfg, con, sub_seed(0, "gcn"))
        np.testing.assert_array_equal(m1.w1, m2.w1)
        np.testing.assert_array_equal(h1.wp, h2.wp)
        np.testing.assert_array_equal(p1, p2)

    def test_report_shape_and_metrics(self, tmp_path):
        a_hat, s_op, feats, labels, part, gcn_cfg, _ = small_pipeline(tmp_path)
        con = ConConfig(eta_fuse=0.5, lambda_=0.1)
        model, head, preds, report = train_dual(
            a_hat, s_op, feats.x, labels, part, gcn_cfg, con, sub_seed(0, "gcn")
        )
        assert len(report.epochs) == gcn_cfg.epochs
        assert {"train_loss", "val_loss", "gap", "con_loss"} <= set(report.epochs[0])
        assert 0.0 <= report.final["test_acc"] <= 1.0
        assert report.gap_summary() >= 0.0
        probs = dual_probs(model, head, a_hat, s_op, feats.x, 0.5)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
