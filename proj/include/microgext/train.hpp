// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "microgext/loss.hpp"
#include "microgext/model.hpp"
#include "microgext/synth.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace microgext {

/// Leave-one-subject-out partition of clip indices.
struct FoldSplit {
  int test_subject = 0;
  int validation_subject = -1;  // -1 when validation is a held-out slice of training clips
  std::vector<std::size_t> train, validation, test;
};

/// Test = every clip of `fold_subject`. Validation = all clips of the next
/// subject (cyclically) when at least 3 subjects exist, otherwise a seeded
/// class-stratified 15% of the remaining clips.
FoldSplit split_fold(const Dataset& ds, int fold_subject, std::uint64_t seed);

/// Per-frame feature rows of one clip, (frames) x (J*D).
Matrix clip_features(const LabeledClip& clip);

struct WindowSet {
  std::vector<FeatureWindow> windows;
  BatchLabels labels;
  std::vector<std::size_t> clip_of;  // source clip index per window
  std::vector<int> start_of;         // first frame per window

  std::size_t size() const noexcept { return windows.size(); }
  void add(const Matrix& features, const LabeledClip& clip, std::size_t clip_index, int start);
};

/// Start frame of the centered window of an n-frame clip.
int center_start(std::size_t n_frames) noexcept;

/// One centered window per clip.
WindowSet center_windows(const Dataset& ds, std::span<const std::size_t> clips);
/// Windows at 1/4, 1/2 and 3/4 of each clip (deterministic validation set).
WindowSet validation_windows(const Dataset& ds, std::span<const std::size_t> clips);
/// Back-to-back windows covering every frame of each clip, the last one
/// aligned to the clip end. Onsets and releases included, as in streaming.
WindowSet tiling_windows(const Dataset& ds, std::span<const std::size_t> clips);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  int inactive_contrastive_batches = 0;
};

struct TrainResult {
  ModelParams params;  // best validation epoch, rounded to float
  std::vector<EpochLog> log;
  int best_epoch = 0;
  FoldSplit split;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch Adam on random contiguous crops with a reduce-on-plateau
/// schedule driven by validation loss. Deterministic given hp.master_seed.
TrainResult train(const Dataset& ds, int fold_subject, const HyperParams& hp,
                  const EpochCallback& on_epoch = {});

/// Mean total loss over `set`, evaluated in consecutive batches of
/// `batch_size` windows.
double mean_loss(const ModelParams& params, const WindowSet& set, const HyperParams& hp);

/// Adam state for every tensor of ModelParams.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& like, const HyperParams& hp);
  void step(ModelParams& params, const ModelParams& grads, double learning_rate);

 private:
  ModelParams m_, v_;
  double beta1_, beta2_, eps_;
  long steps_ = 0;
};

}  // namespace microgext
