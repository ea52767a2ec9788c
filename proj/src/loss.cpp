// SPDX-License-Identifier: Apache-2.0
#include "microgext/loss.hpp"

#include "microgext/error.hpp"

#include <cmath>
#include <limits>

namespace microgext {

double cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* d_logits) {
  const Eigen::Index n = logits.rows();
  if (static_cast<std::size_t>(n) != labels.size() || n == 0) {
    throw Error(ErrorCode::ShapeMismatch, "label count does not match logits");
  }
  const Matrix probs = softmax_rows(logits);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int y = labels[r];
    if (y < 0 || y >= logits.cols()) throw Error(ErrorCode::InvalidArgument, "label out of range");
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    loss += lse - logits(r, y);
  }
  if (d_logits) {
    *d_logits = probs;
    for (Eigen::Index r = 0; r < n; ++r) (*d_logits)(r, labels[r]) -= 1.0;
    *d_logits /= static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

double contrastive_loss(const Matrix& emb, std::span<const int> labels, double kappa,
                        Matrix* d_emb, bool* active) {
  const Eigen::Index n = emb.rows();
  if (n < 2) {
    throw Error(ErrorCode::BatchTooSmallForContrastive, "contrastive loss needs >= 2 samples");
  }
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "label count does not match embeddings");
  }
  const Matrix sim = emb * emb.transpose() / kappa;
  if (d_emb) *d_emb = Matrix::Zero(n, emb.cols());

  int anchors = 0;
  double loss = 0.0;
  Matrix coeff = Matrix::Zero(n, n);  // d(sum of anchor losses)/d(sim_ij / kappa)
  for (Eigen::Index i = 0; i < n; ++i) {
    bool has_pos = false;
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      mx = std::max(mx, sim(i, j));
      has_pos = has_pos || labels[j] == labels[i];
    }
    if (!has_pos) continue;
    ++anchors;
    double denom = 0.0, numer = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double e = std::exp(sim(i, j) - mx);
      denom += e;
      if (labels[j] == labels[i]) numer += e;
    }
    loss += std::log(denom) - std::log(numer);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double e = std::exp(sim(i, j) - mx);
      coeff(i, j) = e / denom - (labels[j] == labels[i] ? e / numer : 0.0);
    }
  }
  if (active) *active = anchors > 0;
  if (anchors == 0) return 0.0;
  if (d_emb) {
    // sim_ij = e_i . e_j / kappa contributes to both rows.
    const Matrix g = coeff / (kappa * anchors);
    d_emb->noalias() = g * emb;
    d_emb->noalias() += g.transpose() * emb;
  }
  return loss / anchors;
}

LossBreakdown compute_loss(const BatchOutput& out, const BatchLabels& labels, const HyperParams& hp,
                           BatchOutput* grads) {
  LossBreakdown lb;
  Matrix d_cls, d_state, d_emb;
  lb.class_ce = cross_entropy(out.class_logits, labels.classes, grads ? &d_cls : nullptr);
  lb.state_ce = cross_entropy(out.state_logits, labels.states, grads ? &d_state : nullptr);
  if (out.embeddings.rows() >= 2) {
    lb.contrastive = contrastive_loss(out.embeddings, labels.classes, hp.contrastive_temperature,
                                      grads ? &d_emb : nullptr, &lb.contrastive_active);
  }
  if (!lb.contrastive_active) d_emb = Matrix::Zero(out.embeddings.rows(), out.embeddings.cols());
  lb.total = hp.alpha * lb.class_ce + hp.beta * lb.state_ce + hp.gamma * lb.contrastive;
  if (grads) {
    grads->class_logits = hp.alpha * d_cls;
    grads->state_logits = hp.beta * d_state;
    grads->embeddings = hp.gamma * d_emb;
  }
  return lb;
}

LossBreakdown total_loss(const BatchOutput& out, const BatchLabels& labels, const HyperParams& hp,
                         BatchOutput* grads) {
  const LossBreakdown lb = compute_loss(out, labels, hp, grads);
  if (!lb.contrastive_active) {
    warn(out.embeddings.rows() < 2 ? "BatchTooSmallForContrastive: batch of 1, contrastive term is 0"
                                   : "BatchTooSmallForContrastive: no positive pair, contrastive term is 0");
  }
  return lb;
}

ModelParams loss_gradients(const ModelParams& params, std::span<const FeatureWindow> windows,
                           const BatchLabels& labels, const HyperParams& hp,
                           LossBreakdown* breakdown) {
  ForwardCache cache;
  const BatchOutput out = forward_batch(params, windows, &cache);
  BatchOutput d;
  const LossBreakdown lb = compute_loss(out, labels, hp, &d);
  if (breakdown) *breakdown = lb;
  ModelParams grads = ModelParams::zeros_like(params);
  backward(params, cache, d.class_logits, d.state_logits, d.embeddings, grads);
  return grads;
}

}  // namespace microgext
