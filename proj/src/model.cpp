// SPDX-License-Identifier: Apache-2.0
#include "microgext/model.hpp"

#include "microgext/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace microgext {
namespace {

constexpr double kLayerNormEps = 1e-5;

void check_shape(std::string_view name, const Matrix& m, int rows, int cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
}

void check_params(const ModelParams& p) {
  for (const auto& [name, shape] : ModelParams::layout(p.hidden)) {
    bool found = false;
    p.for_each_tensor([&](std::string_view n, const Matrix& m) {
      if (n == name) {
        check_shape(n, m, shape[0], shape[1]);
        found = true;
      }
    });
    if (!found) throw Error(ErrorCode::ShapeMismatch, "missing tensor " + std::string(name));
  }
  if (!(p.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
}

}  // namespace

void HyperParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(window == kWindowFrames && joints == kJoints && feature_dim == kFeatureDim,
          "window/joint/feature sizes are fixed by the skeleton");
  require(n_classes == kNumClasses && n_states == kNumStates, "head sizes are fixed");
  require(hidden > 0 && batch_size > 0 && max_epochs > 0 && windows_per_clip > 0,
          "sizes must be positive");
  require(alpha > 0 && beta > 0 && gamma > 0, "loss weights must be positive");
  require(std::abs(alpha + beta + gamma - 1.0) < 1e-9, "loss weights must sum to 1");
  require(learning_rate > 0 && min_learning_rate > 0, "learning rates must be positive");
  require(plateau_patience > 0 && plateau_factor > 0 && plateau_factor < 1,
          "plateau schedule out of range");
  require(contrastive_temperature > 0, "contrastive temperature must be positive");
  require(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0,
          "Adam constants out of range");
}

std::vector<std::pair<std::string_view, std::array<int, 2>>> ModelParams::layout(int h) {
  return {
      {"w_in", {kFeatureDim, h}},   {"b_in", {1, h}},
      {"spatial", {kJoints, h}},    {"temporal", {kWindowFrames, h}},
      {"w_q", {h, h}},              {"w_k", {h, h}},
      {"w_v", {h, h}},              {"w_dyn", {2 * h, kNumStates}},
      {"b_dyn", {1, kNumStates}},   {"w_cls", {h, kNumClasses}},
      {"b_cls", {1, kNumClasses}},  {"w_proj", {h, h}},
      {"b_proj", {1, h}},
  };
}

ModelParams ModelParams::zeros_like(const ModelParams& p) {
  ModelParams z;
  z.hidden = p.hidden;
  z.tau = 0.0;
  const_cast<ModelParams&>(p).for_each_tensor([&](std::string_view name, Matrix& m) {
    z.for_each_tensor([&](std::string_view n, Matrix& dst) {
      if (n == name) dst = Matrix::Zero(m.rows(), m.cols());
    });
  });
  return z;
}

ModelParams ModelParams::init(int hidden, std::uint64_t seed) {
  if (hidden <= 0) throw Error(ErrorCode::InvalidArgument, "hidden width must be positive");
  ModelParams p;
  p.hidden = hidden;
  std::mt19937_64 rng(seed);
  auto xavier = [&](int rows, int cols) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  auto small = [&](int rows, int cols) {
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  p.w_in = xavier(kFeatureDim, hidden);
  p.b_in = Matrix::Zero(1, hidden);
  p.spatial = small(kJoints, hidden);
  p.temporal = small(kWindowFrames, hidden);
  p.w_q = xavier(hidden, hidden);
  p.w_k = xavier(hidden, hidden);
  p.w_v = xavier(hidden, hidden);
  p.w_dyn = xavier(2 * hidden, kNumStates);
  p.b_dyn = Matrix::Zero(1, kNumStates);
  p.w_cls = xavier(hidden, kNumClasses);
  p.b_cls = Matrix::Zero(1, kNumClasses);
  p.w_proj = xavier(hidden, hidden);
  p.b_proj = Matrix::Zero(1, hidden);
  p.tau = 1.0;
  p.round_to_float();
  return p;
}

void ModelParams::round_to_float() {
  for_each_tensor([](std::string_view, Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(m.data()[i]);
  });
  tau = static_cast<float>(tau);
}

bool ModelParams::all_finite() const {
  bool ok = std::isfinite(tau);
  for_each_tensor([&](std::string_view, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

Matrix softmax_rows(const Matrix& logits, double tau) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r) / tau;
    const double mx = row.maxCoeff();
    out.row(r) = (row.array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

BatchOutput forward_batch(const ModelParams& p, std::span<const FeatureWindow> windows,
                          ForwardCache* cache) {
  check_params(p);
  const int B = static_cast<int>(windows.size());
  if (B == 0) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  constexpr int T = kWindowFrames, J = kJoints, D = kFeatureDim;
  const int H = p.hidden;
  const int rows = B * T * J;

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.batch = B;

  c.x.resize(rows, D);
  for (int b = 0; b < B; ++b) {
    const auto src = windows[b].data();
    std::copy(src.begin(), src.end(), c.x.data() + static_cast<std::ptrdiff_t>(b) * T * J * D);
  }

  // Per-joint projection -> ReLU -> layer norm.
  c.pre.noalias() = c.x * p.w_in;
  c.pre.rowwise() += p.b_in.row(0);
  c.normed = c.pre.cwiseMax(0.0);
  c.inv_std.resize(rows);
  for (int n = 0; n < rows; ++n) {
    auto r = c.normed.row(n);
    const double mean = r.mean();
    r.array() -= mean;
    const double var = r.squaredNorm() / H;
    c.inv_std[n] = 1.0 / std::sqrt(var + kLayerNormEps);
    r *= c.inv_std[n];
  }

  // Spatial embedding, joint mean-pool, temporal embedding.
  const Eigen::RowVectorXd spatial_mean = p.spatial.colwise().mean();
  c.h0.resize(B * T, H);
  for (int bt = 0; bt < B * T; ++bt) {
    c.h0.row(bt) = c.normed.middleRows(static_cast<Eigen::Index>(bt) * J, J).colwise().mean() + spatial_mean;
  }
  c.h = c.h0;
  for (int b = 0; b < B; ++b) c.h.middleRows(b * T, T) += p.temporal;

  // Single-head scaled dot-product self-attention over frames.
  c.q.noalias() = c.h * p.w_q;
  c.k.noalias() = c.h * p.w_k;
  c.v.noalias() = c.h * p.w_v;
  const double scale = 1.0 / std::sqrt(static_cast<double>(H));
  c.attn.resize(B * T, T);
  c.a.resize(B * T, H);
  for (int b = 0; b < B; ++b) {
    Matrix scores = c.q.middleRows(b * T, T) * c.k.middleRows(b * T, T).transpose() * scale;
    c.attn.middleRows(b * T, T) = softmax_rows(scores);
    c.a.middleRows(b * T, T).noalias() = c.attn.middleRows(b * T, T) * c.v.middleRows(b * T, T);
  }

  c.pooled.resize(B, H);
  for (int b = 0; b < B; ++b) c.pooled.row(b) = c.a.middleRows(b * T, T).colwise().mean();

  BatchOutput out;
  out.class_logits.noalias() = c.pooled * p.w_cls;
  out.class_logits.rowwise() += p.b_cls.row(0);

  out.state_logits.noalias() = c.a * p.w_dyn.topRows(H);
  out.state_logits.noalias() += c.h0 * p.w_dyn.bottomRows(H);
  out.state_logits.rowwise() += p.b_dyn.row(0);

  c.proj.noalias() = c.pooled * p.w_proj;
  c.proj.rowwise() += p.b_proj.row(0);
  c.proj_norm = c.proj.rowwise().norm();
  out.embeddings = c.proj;
  for (int b = 0; b < B; ++b) {
    out.embeddings.row(b) /= std::max(c.proj_norm[b], 1e-12);
  }

  if (!out.class_logits.allFinite() || !out.state_logits.allFinite() ||
      !out.embeddings.allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "forward pass produced non-finite values");
  }
  return out;
}

ModelOutput forward(const ModelParams& params, const FeatureWindow& x) {
  const BatchOutput b = forward_batch(params, std::span<const FeatureWindow>(&x, 1));
  ModelOutput out;
  const Matrix probs = softmax_rows(b.class_logits, params.tau);
  for (int i = 0; i < kNumClasses; ++i) {
    out.class_logits[i] = b.class_logits(0, i);
    out.class_probs[i] = probs(0, i);
  }
  out.state_logits = b.state_logits;
  out.embedding = b.embeddings.row(0).transpose();
  return out;
}

void backward(const ModelParams& p, const ForwardCache& c, const Matrix& d_class_logits,
              const Matrix& d_state_logits, const Matrix& d_embeddings, ModelParams& g) {
  constexpr int T = kWindowFrames, J = kJoints;
  const int B = c.batch;
  const int H = p.hidden;

  // Static head.
  g.w_cls.noalias() += c.pooled.transpose() * d_class_logits;
  g.b_cls += d_class_logits.colwise().sum();
  Matrix d_pooled = d_class_logits * p.w_cls.transpose();

  // Contrastive projection through the L2 normalization.
  Matrix d_proj(B, H);
  for (int b = 0; b < B; ++b) {
    const double n = std::max(c.proj_norm[b], 1e-12);
    const Eigen::RowVectorXd e = c.proj.row(b) / n;
    d_proj.row(b) = (d_embeddings.row(b) - e * e.dot(d_embeddings.row(b))) / n;
  }
  g.w_proj.noalias() += c.pooled.transpose() * d_proj;
  g.b_proj += d_proj.colwise().sum();
  d_pooled.noalias() += d_proj * p.w_proj.transpose();

  // Per-frame dynamic head on [attention output | pooled projection].
  g.w_dyn.topRows(H).noalias() += c.a.transpose() * d_state_logits;
  g.w_dyn.bottomRows(H).noalias() += c.h0.transpose() * d_state_logits;
  g.b_dyn += d_state_logits.colwise().sum();
  Matrix d_a = d_state_logits * p.w_dyn.topRows(H).transpose();
  Matrix d_h0 = d_state_logits * p.w_dyn.bottomRows(H).transpose();

  for (int b = 0; b < B; ++b) d_a.middleRows(b * T, T).rowwise() += d_pooled.row(b) / T;

  // Attention.
  const double scale = 1.0 / std::sqrt(static_cast<double>(H));
  Matrix d_q(B * T, H), d_k(B * T, H), d_v(B * T, H);
  for (int b = 0; b < B; ++b) {
    const auto attn = c.attn.middleRows(b * T, T);
    const auto da = d_a.middleRows(b * T, T);
    Matrix d_attn = da * c.v.middleRows(b * T, T).transpose();
    d_v.middleRows(b * T, T).noalias() = attn.transpose() * da;
    Matrix d_scores(T, T);
    for (int r = 0; r < T; ++r) {
      const double dot = d_attn.row(r).dot(attn.row(r));
      d_scores.row(r) = attn.row(r).array() * (d_attn.row(r).array() - dot);
    }
    d_scores *= scale;
    d_q.middleRows(b * T, T).noalias() = d_scores * c.k.middleRows(b * T, T);
    d_k.middleRows(b * T, T).noalias() = d_scores.transpose() * c.q.middleRows(b * T, T);
  }
  g.w_q.noalias() += c.h.transpose() * d_q;
  g.w_k.noalias() += c.h.transpose() * d_k;
  g.w_v.noalias() += c.h.transpose() * d_v;
  Matrix d_h = d_q * p.w_q.transpose();
  d_h.noalias() += d_k * p.w_k.transpose();
  d_h.noalias() += d_v * p.w_v.transpose();

  for (int b = 0; b < B; ++b) g.temporal += d_h.middleRows(b * T, T);
  d_h0 += d_h;

  // Joint pooling and spatial embedding.
  const Eigen::RowVectorXd d_h0_total = d_h0.colwise().sum() / J;
  g.spatial.rowwise() += d_h0_total;

  // Layer norm and ReLU, per joint row. Every joint row of a frame receives
  // d_h0 / J.
  Matrix d_pre(static_cast<Eigen::Index>(B) * T * J, H);
  for (int bt = 0; bt < B * T; ++bt) {
    const Eigen::RowVectorXd dn = d_h0.row(bt) / J;
    const double dn_mean = dn.mean();
    for (int j = 0; j < J; ++j) {
      const Eigen::Index n = static_cast<Eigen::Index>(bt) * J + j;
      const auto nr = c.normed.row(n);
      const double proj = dn.dot(nr) / H;
      auto out = d_pre.row(n);
      out = c.inv_std[n] * (dn.array() - dn_mean - nr.array() * proj).matrix();
      out.array() *= (c.pre.row(n).array() > 0.0).cast<double>();
    }
  }
  g.w_in.noalias() += c.x.transpose() * d_pre;
  g.b_in += d_pre.colwise().sum();
}

}  // namespace microgext
