"""Dual-space contrastive objective and the per-batch training step.

A batch holds one labeled graph and N unlabeled graphs. Each graph
contributes two sampled views: a diffusion view encoded in Euclidean space
(and then mapped into the ball) and a community-expansion view encoded on
the hyperbolic path. Geodesic similarities between these ball points feed
InfoNCE terms:

  labeled     -log( e^{s+/t} / (e^{s+/t} + sum_i e^{s-_i/t}) )
              s+ = sim(H^H_l, H^EH_l),  s-_i = sim(H^EH_l, H^H_u[i])
  unlabeled_i -log( e^{s+/t} / (e^{s+/t} + e^{s-/t}) )
              s+ = sim(H^H_u[i], H^EH_u[i]),  s- = sim(H^H_l, H^EH_u[i])

  total = supervised + omega * (labeled + (lambda_u / N) * sum_i unlabeled_i)

Similarities are capped near 7.07e5 (coincident points), so every term is
evaluated as a max-shifted logsumexp; the shift is grouped so that the
all-equal-scores case yields ln(N+1) exactly. The supervised loss is
binary cross-entropy summed over classes, matching the predictor's
elementwise-sigmoid output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .samplers import SamplerConfig, community_expansion_sample, diffusion_sample
from .encoders import (
    EUCLIDEAN,
    HYPERBOLIC,
    GraphEmbedding,
    encode_euclidean,
    encode_hyperbolic,
    predict,
)
from .errors import ContractError

BCE_PROB_FLOOR = 1e-15  # keeps log finite when sigmoid saturates


@dataclass(frozen=True)
class LossConfig:
    temperature: float = 1.0
    lambda_u: float = 1.0
    omega: float = 0.01

    def __post_init__(self):
        if not (self.temperature > 0):
            raise ContractError(f"temperature must be positive, got {self.temperature}")
        if self.lambda_u < 0 or self.omega < 0:
            raise ContractError("lambda_u and omega must be nonnegative")


@dataclass
class Batch:
    labeled: object                 # Graph with a label
    unlabeled: list = field(default_factory=list)

    def __post_init__(self):
        if self.labeled.label is None:
            raise ContractError("batch's labeled graph has no label")
        if len(self.unlabeled) < 1:
            raise ContractError("batch needs at least one unlabeled graph")


@dataclass
class StepMetrics:
    total: float
    supervised: float
    contrastive: float
    prediction: np.ndarray          # (K,) probabilities for the labeled graph


def _require_space(emb, space, who):
    if not isinstance(emb, GraphEmbedding) or emb.space != space:
        got = getattr(emb, "space", type(emb).__name__)
        raise ContractError(f"{who}: expected a {space} embedding, got {got!r}")


def to_hyperbolic(h, ball):
    """Map a Euclidean graph embedding into the ball (tag flips)."""
    _require_space(h, EUCLIDEAN, "to_hyperbolic")
    return GraphEmbedding(ball.expmap0(h.tensor), HYPERBOLIC)


def _nce(s_pos, s_negs, temperature):
    """-log softmax of the positive score, via a shifted logsumexp.

    Grouping the result as log(sum exp(s/t - m)) + (m - s+/t) makes the
    equal-scores case exact: m equals s+/t, the second term is exactly 0.
    """
    inv_t = 1.0 / temperature
    sp = ad.mul(s_pos, inv_t)
    row = ad.concat_cols([sp] + [ad.mul(s, inv_t) for s in s_negs])
    m = ad.amax(row)
    lse = ad.log(ad.asum(ad.exp(ad.sub(row, m))))
    return ad.add(lse, ad.sub(m, sp))


def info_nce_labeled(h_l_hyp, h_l_e2h, h_u_hyps, ball, cfg):
    """Labeled-anchor InfoNCE with the batch's unlabeled hyperbolic views as negatives."""
    _require_space(h_l_hyp, HYPERBOLIC, "info_nce_labeled")
    _require_space(h_l_e2h, HYPERBOLIC, "info_nce_labeled")
    if not h_u_hyps:
        raise ContractError("info_nce_labeled: need at least one negative")
    for h in h_u_hyps:
        _require_space(h, HYPERBOLIC, "info_nce_labeled")
    s_pos = ball.geodesic_similarity(h_l_hyp.tensor, h_l_e2h.tensor)
    s_negs = [
        ball.geodesic_similarity(h_l_e2h.tensor, h.tensor) for h in h_u_hyps
    ]
    return _nce(s_pos, s_negs, cfg.temperature)


def info_nce_unlabeled(h_u_hyp, h_u_e2h, h_l_hyp, ball, cfg):
    """One unlabeled graph's term (the lambda_u/N scaling happens in total_objective)."""
    _require_space(h_u_hyp, HYPERBOLIC, "info_nce_unlabeled")
    _require_space(h_u_e2h, HYPERBOLIC, "info_nce_unlabeled")
    _require_space(h_l_hyp, HYPERBOLIC, "info_nce_unlabeled")
    s_pos = ball.geodesic_similarity(h_u_hyp.tensor, h_u_e2h.tensor)
    s_neg = ball.geodesic_similarity(h_l_hyp.tensor, h_u_e2h.tensor)
    return _nce(s_pos, [s_neg], cfg.temperature)


def supervised_loss(p, label):
    """Binary cross-entropy summed over classes against the one-hot target."""
    k = p.shape[1]
    if not (0 <= label < k):
        raise ContractError(f"label {label} outside [0, {k})")
    y = np.zeros((1, k))
    y[0, label] = 1.0
    pos = ad.mul(y, ad.log(ad.clip_min(p, BCE_PROB_FLOOR)))
    neg = ad.mul(1.0 - y, ad.log(ad.clip_min(ad.sub(1.0, p), BCE_PROB_FLOOR)))
    return ad.neg(ad.asum(ad.add(pos, neg)))


def total_objective(sup, labeled_nce, unlabeled_nces, cfg):
    """sup + omega * (labeled + (lambda_u / N) * sum of unlabeled terms)."""
    if not unlabeled_nces:
        raise ContractError("total_objective: need at least one unlabeled term")
    if cfg.omega == 0.0:
        return sup
    acc = unlabeled_nces[0]
    for t in unlabeled_nces[1:]:
        acc = ad.add(acc, t)
    contra = ad.add(labeled_nce, ad.mul(acc, cfg.lambda_u / len(unlabeled_nces)))
    return ad.add(sup, ad.mul(contra, cfg.omega))


class ViewSampler:
    """Provides the two per-graph views used by the training step.

    The Euclidean path sees the diffusion view; the hyperbolic path sees
    the community-expansion view. Subclasses may cache or reseed.
    """

    def __init__(self, rate_euclidean, rate_hyperbolic, seed):
        self._cfg_e = SamplerConfig(rate=rate_euclidean, seed=seed)
        self._cfg_h = SamplerConfig(rate=rate_hyperbolic, seed=seed)

    def euclidean_view(self, g):
        return diffusion_sample(g, self._cfg_e)

    def hyperbolic_view(self, g):
        return community_expansion_sample(g, self._cfg_h)


@dataclass
class DsgcModel:
    """The trainable trio plus the geometry they share."""

    encoder_e: object
    encoder_h: object
    predictor: object
    ball: object

    @property
    def params(self):
        return self.encoder_e.params + self.encoder_h.params + self.predictor.params


def train_step(batch, model, views, cfg, optimizer):
    """One optimizer step on a batch; returns the step's losses and prediction.

    With omega == 0 the contrastive half (hyperbolic views and encoder) is
    skipped entirely; the objective value is identical either way.
    """
    g_l = batch.labeled
    v_e_l = views.euclidean_view(g_l)
    h_e_l = encode_euclidean(v_e_l, model.encoder_e)
    p = predict(h_e_l, model.predictor)
    sup = supervised_loss(p, g_l.label)

    if cfg.omega != 0.0:
        h_h_l = encode_hyperbolic(views.hyperbolic_view(g_l), model.encoder_h, model.ball)
        h_eh_l = to_hyperbolic(h_e_l, model.ball)
        u_hyps, u_terms = [], []
        for g_u in batch.unlabeled:
            h_h_u = encode_hyperbolic(
                views.hyperbolic_view(g_u), model.encoder_h, model.ball
            )
            h_eh_u = to_hyperbolic(
                encode_euclidean(views.euclidean_view(g_u), model.encoder_e),
                model.ball,
            )
            u_hyps.append(h_h_u)
            u_terms.append(info_nce_unlabeled(h_h_u, h_eh_u, h_h_l, model.ball, cfg))
        l_term = info_nce_labeled(h_h_l, h_eh_l, u_hyps, model.ball, cfg)
        total = total_objective(sup, l_term, u_terms, cfg)
        contrastive = l_term.item() + cfg.lambda_u / len(u_terms) * sum(
            t.item() for t in u_terms
        )
    else:
        total = sup
        contrastive = 0.0

    optimizer.zero_grad()
    ad.backward(total)
    optimizer.step()
    return StepMetrics(
        total=total.item(),
        supervised=sup.item(),
        contrastive=contrastive,
        prediction=p.values[0].copy(),
    )
