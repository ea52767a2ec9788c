// SPDX-License-Identifier: Apache-2.0
#include "microgext/train.hpp"

#include "microgext/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace microgext {

namespace {

constexpr int kRow = kJoints * kFeatureDim;

std::vector<int> sorted_subjects(const Dataset& ds) {
  std::set<int> s;
  for (const auto& c : ds.clips) s.insert(c.subject_id);
  return {s.begin(), s.end()};
}

}  // namespace

FoldSplit split_fold(const Dataset& ds, int fold_subject, std::uint64_t seed) {
  const std::vector<int> subjects = sorted_subjects(ds);
  const auto it = std::find(subjects.begin(), subjects.end(), fold_subject);
  if (it == subjects.end()) {
    throw Error(ErrorCode::EmptyFold, "no clips for subject " + std::to_string(fold_subject));
  }
  std::array<bool, kNumClasses> seen{};
  for (const auto& c : ds.clips) seen[class_index(c.gesture)] = true;
  for (int k = 0; k < kNumClasses; ++k) {
    if (!seen[k]) {
      throw Error(ErrorCode::MissingClass,
                  "dataset has no clips of class " + std::string(class_names()[k]));
    }
  }

  FoldSplit split;
  split.test_subject = fold_subject;
  if (subjects.size() >= 3) {
    const std::size_t pos = static_cast<std::size_t>(it - subjects.begin());
    split.validation_subject = subjects[(pos + 1) % subjects.size()];
  }
  std::array<std::vector<std::size_t>, kNumClasses> pool;
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    const int s = ds.clips[i].subject_id;
    if (s == fold_subject) {
      split.test.push_back(i);
    } else if (s == split.validation_subject) {
      split.validation.push_back(i);
    } else if (split.validation_subject >= 0) {
      split.train.push_back(i);
    } else {
      pool[class_index(ds.clips[i].gesture)].push_back(i);
    }
  }
  if (split.validation_subject < 0) {
    std::mt19937_64 rng(derive_seed(seed, 0x7a11d));
    for (auto& members : pool) {
      std::shuffle(members.begin(), members.end(), rng);
      const std::size_t n_val =
          members.empty() ? 0 : std::max<std::size_t>(1, (members.size() * 15 + 50) / 100);
      for (std::size_t i = 0; i < members.size(); ++i) {
        (i < n_val && members.size() > 1 ? split.validation : split.train).push_back(members[i]);
      }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
  }
  if (split.train.empty()) throw Error(ErrorCode::EmptyFold, "no training clips left");
  if (split.validation.empty()) throw Error(ErrorCode::EmptyValidation, "no validation clips");
  return split;
}

Matrix clip_features(const LabeledClip& clip) {
  if (clip.frames.size() < static_cast<std::size_t>(kWindowFrames)) {
    throw Error(ErrorCode::TooFewFrames, "clip shorter than one window");
  }
  Matrix f(static_cast<Eigen::Index>(clip.frames.size()), kRow);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    frame_features(clip.frames[i],
                   std::span<double, kRow>(f.data() + static_cast<std::ptrdiff_t>(i) * kRow, kRow));
  }
  return f;
}

void WindowSet::add(const Matrix& features, const LabeledClip& clip, std::size_t clip_index,
                    int start) {
  FeatureWindow w;
  std::copy_n(features.data() + static_cast<std::ptrdiff_t>(start) * kRow, kWindowFrames * kRow,
              w.data().data());
  windows.push_back(w);
  labels.classes.push_back(class_index(clip.gesture));
  for (int t = 0; t < kWindowFrames; ++t) labels.states.push_back(clip.substates[start + t]);
  clip_of.push_back(clip_index);
  start_of.push_back(start);
}

int center_start(std::size_t n_frames) noexcept {
  return static_cast<int>((n_frames - kWindowFrames) / 2);
}

WindowSet center_windows(const Dataset& ds, std::span<const std::size_t> clips) {
  WindowSet set;
  for (std::size_t i : clips) {
    const auto& clip = ds.clips[i];
    set.add(clip_features(clip), clip, i, center_start(clip.frames.size()));
  }
  return set;
}

WindowSet validation_windows(const Dataset& ds, std::span<const std::size_t> clips) {
  WindowSet set;
  for (std::size_t i : clips) {
    const auto& clip = ds.clips[i];
    const Matrix f = clip_features(clip);
    const int span = static_cast<int>(clip.frames.size()) - kWindowFrames;
    for (int q = 1; q <= 3; ++q) set.add(f, clip, i, span * q / 4);
  }
  return set;
}

WindowSet tiling_windows(const Dataset& ds, std::span<const std::size_t> clips) {
  WindowSet set;
  for (std::size_t i : clips) {
    const auto& clip = ds.clips[i];
    const Matrix f = clip_features(clip);
    const int n = static_cast<int>(clip.frames.size());
    for (int covered = 0; covered < n;) {
      const int start = std::min(covered, n - kWindowFrames);
      set.add(f, clip, i, start);
      covered = start + kWindowFrames;
    }
  }
  return set;
}

double mean_loss(const ModelParams& params, const WindowSet& set, const HyperParams& hp) {
  if (set.size() == 0) throw Error(ErrorCode::EmptyValidation, "no windows to score");
  double sum = 0.0;
  std::size_t n = 0;
  const auto bs = static_cast<std::size_t>(hp.batch_size);
  for (std::size_t lo = 0; lo < set.size(); lo += bs) {
    const std::size_t hi = std::min(set.size(), lo + bs);
    BatchLabels labels;
    labels.classes.assign(set.labels.classes.begin() + lo, set.labels.classes.begin() + hi);
    labels.states.assign(set.labels.states.begin() + lo * kWindowFrames,
                         set.labels.states.begin() + hi * kWindowFrames);
    const BatchOutput out =
        forward_batch(params, std::span(set.windows.data() + lo, hi - lo));
    sum += compute_loss(out, labels, hp).total * static_cast<double>(hi - lo);
    n += hi - lo;
  }
  return sum / static_cast<double>(n);
}

AdamOptimizer::AdamOptimizer(const ModelParams& like, const HyperParams& hp)
    : m_(ModelParams::zeros_like(like)),
      v_(ModelParams::zeros_like(like)),
      beta1_(hp.adam_beta1),
      beta2_(hp.adam_beta2),
      eps_(hp.adam_eps) {}

void AdamOptimizer::step(ModelParams& params, const ModelParams& grads, double learning_rate) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  std::vector<Matrix*> p, m, v;
  std::vector<const Matrix*> g;
  params.for_each_tensor([&](std::string_view, Matrix& t) { p.push_back(&t); });
  m_.for_each_tensor([&](std::string_view, Matrix& t) { m.push_back(&t); });
  v_.for_each_tensor([&](std::string_view, Matrix& t) { v.push_back(&t); });
  grads.for_each_tensor([&](std::string_view, const Matrix& t) { g.push_back(&t); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i]->array() = beta1_ * m[i]->array() + (1.0 - beta1_) * g[i]->array();
    v[i]->array() = beta2_ * v[i]->array() + (1.0 - beta2_) * g[i]->array().square();
    p[i]->array() -= learning_rate * (m[i]->array() / c1) /
                     ((v[i]->array() / c2).sqrt() + eps_);
  }
}

TrainResult train(const Dataset& ds, int fold_subject, const HyperParams& hp,
                  const EpochCallback& on_epoch) {
  hp.validate();
  TrainResult result;
  result.split = split_fold(ds, fold_subject, hp.master_seed);
  const FoldSplit& split = result.split;

  std::vector<Matrix> features(ds.clips.size());
  for (std::size_t i : split.train) features[i] = clip_features(ds.clips[i]);
  const WindowSet val = validation_windows(ds, split.validation);

  ModelParams params = ModelParams::init(hp.hidden, derive_seed(hp.master_seed, 0x1417));
  AdamOptimizer adam(params, hp);
  std::mt19937_64 rng(derive_seed(hp.master_seed, 0x5a3b, static_cast<std::uint64_t>(fold_subject)));

  double lr = hp.learning_rate;
  double plateau_best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  double best_val = std::numeric_limits<double>::infinity();
  result.params = params;

  struct Crop {
    std::size_t clip;
    int start;
  };
  std::vector<Crop> crops;
  const auto bs = static_cast<std::size_t>(hp.batch_size);

  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    crops.clear();
    for (std::size_t i : split.train) {
      const int span = static_cast<int>(ds.clips[i].frames.size()) - kWindowFrames;
      std::uniform_int_distribution<int> pick(0, span);
      for (int w = 0; w < hp.windows_per_clip; ++w) crops.push_back({i, pick(rng)});
    }
    std::shuffle(crops.begin(), crops.end(), rng);

    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = lr;
    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < crops.size(); lo += bs) {
      const std::size_t hi = std::min(crops.size(), lo + bs);
      WindowSet batch;
      for (std::size_t k = lo; k < hi; ++k) {
        batch.add(features[crops[k].clip], ds.clips[crops[k].clip], crops[k].clip, crops[k].start);
      }
      LossBreakdown br;
      const ModelParams grads = loss_gradients(params, batch.windows, batch.labels, hp, &br);
      if (!br.contrastive_active) ++log.inactive_contrastive_batches;
      loss_sum += br.total * static_cast<double>(hi - lo);
      adam.step(params, grads, lr);
    }
    if (!params.all_finite()) {
      throw Error(ErrorCode::NonFiniteActivation, "parameters diverged at epoch " +
                                                      std::to_string(epoch));
    }
    log.train_loss = loss_sum / static_cast<double>(crops.size());
    log.val_loss = mean_loss(params, val, hp);

    if (log.val_loss < best_val) {
      best_val = log.val_loss;
      result.params = params;
      result.best_epoch = epoch;
    }
    if (log.val_loss < plateau_best - hp.plateau_threshold) {
      plateau_best = log.val_loss;
      bad_epochs = 0;
    } else if (++bad_epochs > hp.plateau_patience) {
      lr = std::max(hp.min_learning_rate, lr * hp.plateau_factor);
      bad_epochs = 0;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.params.round_to_float();
  return result;
}

}  // namespace microgext
