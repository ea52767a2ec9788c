// SPDX-License-Identifier: Apache-2.0
//
// Multi-task gesture network: shared per-joint projection, spatial and
// temporal position embeddings, single-head temporal self-attention, and
// three heads (static class, per-frame sub-state, contrastive embedding).
// Forward activations are cached so the fixed architecture can be
// differentiated in reverse mode by `backward`.
#pragma once

#include "microgext/gesture.hpp"
#include "microgext/skeleton.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace microgext {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct HyperParams {
  int window = kWindowFrames;
  int joints = kJoints;
  int feature_dim = kFeatureDim;
  int hidden = 256;
  int n_classes = kNumClasses;
  int n_states = kNumStates;
  double alpha = 0.6;  // class loss weight
  double beta = 0.2;   // sub-state loss weight
  double gamma = 0.2;  // contrastive loss weight
  double learning_rate = 1e-3;
  int batch_size = 32;
  int plateau_patience = 5;
  double plateau_factor = 0.5;
  double plateau_threshold = 1e-4;
  double min_learning_rate = 1e-5;
  int max_epochs = 60;
  double contrastive_temperature = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int windows_per_clip = 4;
  std::uint64_t master_seed = 1;

  /// Throws InvalidArgument unless the weights sum to 1 and every size,
  /// rate and temperature is positive.
  void validate() const;
};

struct ModelParams {
  int hidden = 0;
  Matrix w_in;      // D x H
  Matrix b_in;      // 1 x H
  Matrix spatial;   // J x H
  Matrix temporal;  // T x H
  Matrix w_q, w_k, w_v;  // H x H
  Matrix w_dyn;     // 2H x states
  Matrix b_dyn;     // 1 x states
  Matrix w_cls;     // H x classes
  Matrix b_cls;     // 1 x classes
  Matrix w_proj;    // H x H
  Matrix b_proj;    // 1 x H
  double tau = 1.0;

  /// Xavier-uniform weights, small embeddings, zero biases; values are
  /// rounded to float precision.
  static ModelParams init(int hidden, std::uint64_t seed);
  /// Same shapes, all zeros (used for gradient accumulators).
  static ModelParams zeros_like(const ModelParams& p);

  template <class F>
  void for_each_tensor(F&& f) {
    f(std::string_view("w_in"), w_in);
    f(std::string_view("b_in"), b_in);
    f(std::string_view("spatial"), spatial);
    f(std::string_view("temporal"), temporal);
    f(std::string_view("w_q"), w_q);
    f(std::string_view("w_k"), w_k);
    f(std::string_view("w_v"), w_v);
    f(std::string_view("w_dyn"), w_dyn);
    f(std::string_view("b_dyn"), b_dyn);
    f(std::string_view("w_cls"), w_cls);
    f(std::string_view("b_cls"), b_cls);
    f(std::string_view("w_proj"), w_proj);
    f(std::string_view("b_proj"), b_proj);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](std::string_view name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  /// Expected shape of every tensor for a given width.
  static std::vector<std::pair<std::string_view, std::array<int, 2>>> layout(int hidden);
  /// Rounds every tensor and tau to the nearest float.
  void round_to_float();
  bool all_finite() const;
};

struct ModelOutput {
  std::array<double, kNumClasses> class_logits{};  // pre-temperature
  std::array<double, kNumClasses> class_probs{};   // softmax(logits / tau)
  Matrix state_logits;                             // T x states
  Eigen::VectorXd embedding;                       // L2-normalized
};

struct BatchOutput {
  Matrix class_logits;  // B x classes
  Matrix state_logits;  // (B*T) x states, row b*T + t
  Matrix embeddings;    // B x H, unit rows
};

/// Activations retained for the backward pass.
struct ForwardCache {
  int batch = 0;
  Matrix x, pre, normed, h0, h, q, k, v, attn, a, pooled, proj;
  Eigen::VectorXd inv_std, proj_norm;
};

BatchOutput forward_batch(const ModelParams& params, std::span<const FeatureWindow> windows,
                          ForwardCache* cache = nullptr);

ModelOutput forward(const ModelParams& params, const FeatureWindow& x);

/// Accumulates parameter gradients into `grads` (which must have the
/// parameter shapes) given gradients of the loss w.r.t. the three outputs.
void backward(const ModelParams& params, const ForwardCache& cache, const Matrix& d_class_logits,
              const Matrix& d_state_logits, const Matrix& d_embeddings, ModelParams& grads);

/// Row-wise softmax of `logits / tau`.
Matrix softmax_rows(const Matrix& logits, double tau = 1.0);

}  // namespace microgext
