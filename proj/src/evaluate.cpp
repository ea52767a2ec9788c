// SPDX-License-Identifier: Apache-2.0
#include "microgext/evaluate.hpp"

#include "microgext/error.hpp"
#include "microgext/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace microgext {

namespace {

int argmax_row(const Matrix& m, Eigen::Index r) {
  Eigen::Index k = 0;
  m.row(r).maxCoeff(&k);
  return static_cast<int>(k);
}

}  // namespace

double nll(const Matrix& logits, std::span<const int> labels, double tau) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Eigen::RowVectorXd z = logits.row(r) / tau;
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    sum += lse - z(labels[static_cast<std::size_t>(r)]);
  }
  return sum / static_cast<double>(logits.rows());
}

double expected_calibration_error(const Matrix& probs, std::span<const int> labels, int bins) {
  std::vector<double> conf(static_cast<std::size_t>(bins), 0.0), hits(conf.size(), 0.0);
  std::vector<std::size_t> count(conf.size(), 0);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index k = 0;
    const double c = probs.row(r).maxCoeff(&k);
    const int b = std::clamp(static_cast<int>(std::ceil(c * bins)) - 1, 0, bins - 1);
    conf[b] += c;
    hits[b] += (k == labels[static_cast<std::size_t>(r)]) ? 1.0 : 0.0;
    ++count[b];
  }
  double ece = 0.0;
  for (std::size_t b = 0; b < conf.size(); ++b) {
    if (count[b] == 0) continue;
    ece += std::abs(hits[b] - conf[b]);
  }
  return ece / static_cast<double>(probs.rows());
}

double fit_temperature(const Matrix& logits, std::span<const int> labels, double lo, double hi) {
  if (logits.rows() == 0) throw Error(ErrorCode::EmptyValidation, "no validation windows");
  if (!(lo > 0.0 && hi > lo)) throw Error(ErrorCode::InvalidArgument, "bad temperature bracket");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = nll(logits, labels, c), fd = nll(logits, labels, d);
  while (b - a > 1e-6) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = nll(logits, labels, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = nll(logits, labels, d);
    }
  }
  double best = 0.5 * (a + b);
  // The interior search cannot land exactly on the bracket ends.
  for (double edge : {lo, hi}) {
    if (nll(logits, labels, edge) < nll(logits, labels, best)) best = edge;
  }
  return best;
}

CalibrationResult calibrate(ModelParams& params, const WindowSet& validation) {
  if (validation.size() == 0) throw Error(ErrorCode::EmptyValidation, "no validation windows");
  const Matrix logits = forward_batch(params, validation.windows).class_logits;
  const auto& y = validation.labels.classes;
  CalibrationResult r;
  r.windows = validation.size();
  r.tau = static_cast<double>(static_cast<float>(fit_temperature(logits, y)));
  const Matrix before = softmax_rows(logits, 1.0);
  const Matrix after = softmax_rows(logits, r.tau);
  r.nll_before = nll(logits, y, 1.0);
  r.nll_after = nll(logits, y, r.tau);
  r.ece_before = expected_calibration_error(before, y);
  r.ece_after = expected_calibration_error(after, y);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (argmax_row(before, i) != argmax_row(after, i)) ++r.argmax_changed;
  }
  params.tau = r.tau;
  return r;
}

double EvalReport::off_tridiagonal_mass() const {
  std::int64_t total = 0, far = 0;
  for (int t = 0; t < 4; ++t) {
    for (int p = 0; p < 4; ++p) {
      total += state_confusion[t][p];
      if (std::abs(p - t) > 1) far += state_confusion[t][p];
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(far) / static_cast<double>(total);
}

EvalReport summarize(const Predictions& pred, double tau) {
  EvalReport rep;
  rep.tau = tau;
  rep.windows = pred.classes.size();
  rep.frames = pred.states.size();
  for (std::size_t i = 0; i < pred.classes.size(); ++i) {
    ++rep.class_confusion[pred.classes[i]][argmax_row(pred.class_logits, static_cast<Eigen::Index>(i))];
  }
  for (std::size_t i = 0; i < pred.states.size(); ++i) {
    ++rep.state_confusion[pred.states[i]][argmax_row(pred.state_logits, static_cast<Eigen::Index>(i))];
  }
  double macro = 0.0;
  int supported = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    std::int64_t n = 0;
    for (auto c : rep.class_confusion[k]) n += c;
    rep.class_accuracy[k] = n == 0 ? std::numeric_limits<double>::quiet_NaN()
                                   : static_cast<double>(rep.class_confusion[k][k]) / n;
    if (n > 0) {
      macro += rep.class_accuracy[k];
      ++supported;
    }
  }
  rep.macro_accuracy = supported == 0 ? 0.0 : macro / supported;
  for (int s = 0; s < kNumStates; ++s) {
    std::int64_t n = 0;
    for (auto c : rep.state_confusion[s]) n += c;
    rep.state_accuracy[s] = n == 0 ? std::numeric_limits<double>::quiet_NaN()
                                   : static_cast<double>(rep.state_confusion[s][s]) / n;
  }
  if (rep.windows > 0) {
    rep.ece_before = expected_calibration_error(softmax_rows(pred.class_logits, 1.0), pred.classes);
    rep.ece_after = expected_calibration_error(softmax_rows(pred.class_logits, tau), pred.classes);
  }
  return rep;
}

Predictions predict(const ModelParams& params, const Dataset& ds,
                    std::span<const std::size_t> clips) {
  Predictions pred;
  WindowSet centers;
  WindowSet tiles;
  std::vector<std::pair<int, int>> keep;  // frame range [from, T) kept per tile
  for (std::size_t i : clips) {
    const auto& clip = ds.clips[i];
    const Matrix f = clip_features(clip);
    const int n = static_cast<int>(clip.frames.size());
    centers.add(f, clip, i, center_start(clip.frames.size()));
    int covered = 0;
    while (covered < n) {
      const int start = std::min(covered, n - kWindowFrames);
      tiles.add(f, clip, i, start);
      keep.emplace_back(covered - start, kWindowFrames);
      covered = start + kWindowFrames;
    }
  }
  pred.classes = centers.labels.classes;
  pred.class_logits = centers.size() ? forward_batch(params, centers.windows).class_logits
                                     : Matrix(0, kNumClasses);
  std::size_t n_frames = 0;
  for (const auto& [from, to] : keep) n_frames += static_cast<std::size_t>(to - from);
  pred.state_logits.resize(static_cast<Eigen::Index>(n_frames), kNumStates);
  Eigen::Index row = 0;
  constexpr std::size_t kChunk = 256;
  std::vector<BatchOutput> outs((tiles.size() + kChunk - 1) / kChunk);
  parallel_for(outs.size(), [&](std::size_t c) {
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(tiles.size(), lo + kChunk);
    outs[c] = forward_batch(params, std::span(tiles.windows.data() + lo, hi - lo));
  });
  for (std::size_t c = 0; c < outs.size(); ++c) {
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(tiles.size(), lo + kChunk);
    const BatchOutput& out = outs[c];
    for (std::size_t w = lo; w < hi; ++w) {
      for (int t = keep[w].first; t < keep[w].second; ++t) {
        const auto src = static_cast<Eigen::Index>((w - lo) * kWindowFrames + t);
        pred.state_logits.row(row++) = out.state_logits.row(src);
        pred.states.push_back(tiles.labels.states[w * kWindowFrames + t]);
      }
    }
  }
  return pred;
}

EvalReport evaluate(const ModelParams& params, const Dataset& ds,
                    std::span<const std::size_t> clips) {
  return summarize(predict(params, ds, clips), params.tau);
}

}  // namespace microgext
