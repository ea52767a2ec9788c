// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "microgext/model.hpp"
#include "microgext/train.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace microgext {

inline constexpr int kEceBins = 15;

/// Mean negative log-likelihood of `labels` under softmax(logits / tau).
double nll(const Matrix& logits, std::span<const int> labels, double tau);

/// Expected calibration error over equal-width confidence bins: the
/// support-weighted mean of |accuracy - mean confidence| per bin.
double expected_calibration_error(const Matrix& probs, std::span<const int> labels,
                                  int bins = kEceBins);

/// Temperature in [lo, hi] minimizing nll, by golden-section search.
/// Throws EmptyValidation when there are no rows.
double fit_temperature(const Matrix& logits, std::span<const int> labels, double lo = 0.05,
                       double hi = 10.0);

struct CalibrationResult {
  double tau = 1.0;
  double nll_before = 0.0, nll_after = 0.0;
  double ece_before = 0.0, ece_after = 0.0;
  std::size_t windows = 0;
  std::size_t argmax_changed = 0;
};

/// Fits params.tau on the class logits of `validation`; other tensors are untouched.
CalibrationResult calibrate(ModelParams& params, const WindowSet& validation);

struct EvalReport {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> class_confusion{};  // [true][pred]
  std::array<std::array<std::int64_t, kNumStates>, kNumStates> state_confusion{};
  std::array<double, kNumClasses> class_accuracy{};  // NaN when a class has no support
  std::array<double, kNumStates> state_accuracy{};
  double macro_accuracy = 0.0;
  double ece_before = 0.0;
  double ece_after = 0.0;
  double tau = 1.0;
  std::size_t windows = 0;
  std::size_t frames = 0;

  /// Share of the states 0-3 block of the state confusion lying more than
  /// one sub-state off the diagonal.
  double off_tridiagonal_mass() const;
};

/// Per-window class logits plus per-frame state logits for a set of test
/// frames, with their ground truth. The frame arrays are independent of the
/// window arrays.
struct Predictions {
  Matrix class_logits;  // windows x classes
  std::vector<int> classes;
  Matrix state_logits;  // frames x states
  std::vector<int> states;
};

/// Tallies a report from precomputed predictions.
EvalReport summarize(const Predictions& pred, double tau);

/// Class predictions from one centered window per clip; state predictions
/// from windows tiling each clip, every frame counted once.
Predictions predict(const ModelParams& params, const Dataset& ds,
                    std::span<const std::size_t> clips);

EvalReport evaluate(const ModelParams& params, const Dataset& ds,
                    std::span<const std::size_t> clips);

}  // namespace microgext
