"""Projection head, two-view contrastive loss, and fused training objective.

Both branch outputs pass through one shared linear-plus-rectifier head.
The contrastive term rewards high cosine similarity between the two views
of a node that uses label information effectively and penalizes it for
nodes that do not; a second term spreads the projected dimensions apart
to prevent feature collapse. Note the pair score is a *similarity*
(larger = closer), so minimizing the loss pulls matched pairs together.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .mlp import cross_entropy_probs, glorot_uniform, softmax_backward
from .numerics import softmax_rows

log = logging.getLogger(__name__)

#: Guard on row norms in the cosine similarity.
EPS_NORM = 1e-8

#: Guard on column variances in the standardization for the spread term.
EPS_STD = 1e-12


@dataclass
class ProjectionHead:
    """Single shared linear map (c -> proj_dim) followed by a rectifier."""

    wp: np.ndarray

    @property
    def proj_dim(self):
        return self.wp.shape[1]


def init_head(c, proj_dim, rng):
    return ProjectionHead(wp=glorot_uniform(rng, c, proj_dim))


def project(head, h_bar, h_tilde):
    """Map both branch outputs into the shared latent space."""
    return np.maximum(h_bar @ head.wp, 0.0), np.maximum(h_tilde @ head.wp, 0.0)


def _row_cosines(p_bar, p_tilde):
    """Guarded cosine similarity of corresponding rows plus cached factors."""
    nb = np.maximum(np.linalg.norm(p_bar, axis=1), EPS_NORM)
    nt = np.maximum(np.linalg.norm(p_tilde, axis=1), EPS_NORM)
    ub = p_bar / nb[:, None]
    ut = p_tilde / nt[:, None]
    sims = np.sum(ub * ut, axis=1)
    return sims, ub, ut, nb, nt


def pair_alignment_term(sims_elu, sims_nelu, tau):
    """Alignment part of the loss from raw pair similarities.

    Returns (value, dvalue/dsims_elu, dvalue/dsims_nelu). Empty sides use
    the convention mean(exp(empty)) = 0, which makes the term vanish when
    either side is missing.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    e_exp = np.exp(np.asarray(sims_elu) / tau)
    n_exp = np.exp(np.asarray(sims_nelu) / tau)
    e_mean = e_exp.mean() if e_exp.size else 0.0
    n_mean = n_exp.mean() if n_exp.size else 0.0
    if e_exp.size == 0:
        log.warning("alignment term skipped: no effective-label-use nodes")
        return 0.0, np.zeros(0), np.zeros(0)
    value = float(np.log(e_mean + n_mean) - np.log(e_mean))
    common = 1.0 / (e_mean + n_mean)
    d_elu = (common - 1.0 / e_mean) * e_exp / (tau * e_exp.size)
    d_nelu = (
        common * n_exp / (tau * n_exp.size) if n_exp.size else np.zeros(0)
    )
    return value, d_elu, d_nelu


def _standardize_columns(p):
    mu = p.mean(axis=0)
    centered = p - mu
    var = np.mean(centered * centered, axis=0)
    s = np.sqrt(var + EPS_STD)
    return centered / s, s


def _standardize_backward(z, s, dz):
    n = z.shape[0]
    return (dz - dz.mean(axis=0) - z * np.mean(dz * z, axis=0)) / s


def _spread_term(p_bar, p_tilde, gamma):
    """log-sum-exp of the combined standardized Gram matrices."""
    zb, sb = _standardize_columns(p_bar)
    zt, st = _standardize_columns(p_tilde)
    g = zb.T @ zb + zt.T @ zt
    top = g.max()
    w = np.exp(g - top)
    total = w.sum()
    value = gamma * float(top + np.log(total))
    dg = gamma * w / total
    sym = dg + dg.T
    db = _standardize_backward(zb, sb, zb @ sym)
    dt = _standardize_backward(zt, st, zt @ sym)
    return value, db, dt


def contrastive_loss_grad(p_bar, p_tilde, part, tau, gamma):
    """Two-view loss value plus gradients w.r.t. both projections."""
    elu = part.v_elu
    nelu = part.contrast_negatives()
    sims, ub, ut, nb, nt = _row_cosines(p_bar, p_tilde)
    term1, d_elu, d_nelu = pair_alignment_term(sims[elu], sims[nelu], tau)

    dsims = np.zeros(len(sims))
    dsims[elu] = d_elu
    if len(nelu):
        dsims[nelu] = d_nelu
    # d cos / d p_bar = (ut - cos * ub) / ||p_bar|| away from the norm guard,
    # and ut / eps inside it (the guarded norm is then constant).
    guard_b = (nb > EPS_NORM)[:, None]
    guard_t = (nt > EPS_NORM)[:, None]
    dp_bar = dsims[:, None] * np.where(guard_b, ut - sims[:, None] * ub, ut) / nb[:, None]
    dp_tilde = dsims[:, None] * np.where(guard_t, ub - sims[:, None] * ut, ub) / nt[:, None]

    term2, db, dt = _spread_term(p_bar, p_tilde, gamma)
    return term1 + term2, dp_bar + db, dp_tilde + dt


def contrastive_loss(p_bar, p_tilde, part, tau, gamma):
    """Scalar value of the two-view contrastive objective."""
    value, _, _ = contrastive_loss_grad(p_bar, p_tilde, part, tau, gamma)
    return value


def fused_ce_grad(h_bar, h_tilde, targets, idx, eta_fuse):
    """Cross entropy of the mixed branch probabilities, with gradients."""
    if not 0.0 <= eta_fuse <= 1.0:
        raise ValueError(f"eta_fuse must be in [0, 1], got {eta_fuse}")
    pb = softmax_rows(h_bar)
    pt = softmax_rows(h_tilde)
    mix = (1.0 - eta_fuse) * pb + eta_fuse * pt
    loss, dmix = cross_entropy_probs(mix, targets, idx)
    dh_bar = softmax_backward(pb, (1.0 - eta_fuse) * dmix)
    dh_tilde = softmax_backward(pt, eta_fuse * dmix)
    return loss, dh_bar, dh_tilde


def fused_loss(h_bar, h_tilde, targets, idx, eta_fuse, lam, l_con):
    """Mixture cross entropy plus the weighted contrastive value."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    ce, _, _ = fused_ce_grad(h_bar, h_tilde, targets, idx, eta_fuse)
    return ce + lam * l_con


def head_backward(head, h_bar, h_tilde, p_bar, p_tilde, dp_bar, dp_tilde):
    """Push projection gradients through the shared head.

    Returns (dwp, dh_bar, dh_tilde) where the rectifier mask comes from
    the projected outputs themselves.
    """
    mb = (p_bar > 0.0).astype(np.float64)
    mt = (p_tilde > 0.0).astype(np.float64)
    gb = dp_bar * mb
    gt = dp_tilde * mt
    dwp = h_bar.T @ gb + h_tilde.T @ gt
    return dwp, gb @ head.wp.T, gt @ head.wp.T
