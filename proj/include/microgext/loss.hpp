// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "microgext/model.hpp"

#include <span>
#include <vector>

namespace microgext {

struct BatchLabels {
  std::vector<int> classes;  // B
  std::vector<int> states;   // B*T, row b*T + t
};

struct LossBreakdown {
  double total = 0.0;
  double class_ce = 0.0;
  double state_ce = 0.0;
  double contrastive = 0.0;
  bool contrastive_active = false;
};

/// Mean cross-entropy over rows. When `d_logits` is given it receives
/// d(loss)/d(logits).
double cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* d_logits = nullptr);

/// Supervised in-batch NT-Xent. For each anchor with at least one
/// same-class partner: -log(sum_pos exp(s/k) / sum_{j != i} exp(s/k)), with
/// s the dot product of unit embeddings; averaged over such anchors.
/// Returns 0 and sets `*active = false` when no anchor has a positive.
/// Throws BatchTooSmallForContrastive for batches of fewer than 2.
double contrastive_loss(const Matrix& embeddings, std::span<const int> labels, double kappa,
                        Matrix* d_embeddings = nullptr, bool* active = nullptr);

/// alpha * CE(class) + beta * CE(state, mean over frames) + gamma * contrastive,
/// on pre-temperature logits. If `grads` is non-null it receives the output
/// gradients in the same layout as `out`. Emits a warning through
/// `warn()` when the contrastive term is inactive.
LossBreakdown total_loss(const BatchOutput& out, const BatchLabels& labels, const HyperParams& hp,
                         BatchOutput* grads = nullptr);

/// Same as total_loss but silent; callers inspect `contrastive_active`.
LossBreakdown compute_loss(const BatchOutput& out, const BatchLabels& labels, const HyperParams& hp,
                           BatchOutput* grads = nullptr);

/// Full forward + loss + backward. Returns parameter gradients.
ModelParams loss_gradients(const ModelParams& params, std::span<const FeatureWindow> windows,
                           const BatchLabels& labels, const HyperParams& hp,
                           LossBreakdown* breakdown = nullptr);

}  // namespace microgext
