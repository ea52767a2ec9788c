// SPDX-License-Identifier: Apache-2.0
//
// Hand-skeleton data model and the wrist-relative feature transform that
// feeds the recognizer.
#pragma once

#include <Eigen/Geometry>

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace microgext {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

inline constexpr int kWindowFrames = 20;  // T
inline constexpr int kJoints = 11;        // J
inline constexpr int kFeatureDim = 7;     // D: xyz + wxyz
inline constexpr double kNativeRate = 72.0;

enum class Joint : int {
  Wrist = 0,
  ThumbTip,
  ThumbBelowTip,
  IndexTip,
  IndexBelowTip,
  MiddleTip,
  MiddleBelowTip,
  RingTip,
  RingBelowTip,
  PinkyTip,
  PinkyBelowTip,
};

constexpr int idx(Joint j) noexcept { return static_cast<int>(j); }

/// Canonical joint names, in storage order. Files carry this list in their
/// headers and readers reject any other ordering.
const std::array<std::string_view, kJoints>& joint_names() noexcept;

enum class Handedness : int { Left = 0, Right = 1 };

struct JointPose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  JointPose() = default;
  /// Normalizes `q`; throws InvalidArgument on non-finite input or a
  /// zero-norm quaternion.
  JointPose(const Vec3& p, const Quat& q);
};

struct HandFrame {
  double timestamp = 0.0;
  Handedness handedness = Handedness::Right;
  std::array<JointPose, kJoints> joints{};

  const JointPose& operator[](Joint j) const { return joints[idx(j)]; }
  JointPose& operator[](Joint j) { return joints[idx(j)]; }
};

/// T x J x D feature tensor, row-major in (frame, joint, feature).
class FeatureWindow {
 public:
  static constexpr int kSize = kWindowFrames * kJoints * kFeatureDim;

  double operator()(int t, int j, int d) const { return data_[offset(t, j, d)]; }
  double& operator()(int t, int j, int d) { return data_[offset(t, j, d)]; }

  std::span<const double, kSize> data() const noexcept { return data_; }
  std::span<double, kSize> data() noexcept { return data_; }

  bool operator==(const FeatureWindow&) const = default;

 private:
  static constexpr int offset(int t, int j, int d) noexcept {
    return (t * kJoints + j) * kFeatureDim + d;
  }
  std::array<double, kSize> data_{};
};

/// Flips the sign of `q` so that w >= 0 (first nonzero component positive
/// when w == 0).
Quat canonical_sign(const Quat& q);

/// Wrist-relative pose of joint `j`: position and orientation expressed in
/// the wrist frame, quaternion sign-normalized.
JointPose relative_to_wrist(const HandFrame& frame, int j);

FeatureWindow extract_features(std::span<const HandFrame> frames);

/// The J x D feature block of a single frame (one window row), written to
/// `out` in (joint, feature) order.
void frame_features(const HandFrame& frame, std::span<double, kJoints * kFeatureDim> out);

/// Reflects a left hand across the x=0 plane of its wrist frame, producing
/// the equivalent right hand. Applying the reflection twice is the identity.
HandFrame mirror_to_right(const HandFrame& frame);

/// Same reflection without the handedness precondition; flips handedness.
HandFrame mirror_hand(const HandFrame& frame);

/// Resamples to uniform `target_rate` spacing starting at the first frame's
/// timestamp: lerp for positions, slerp for orientations.
std::vector<HandFrame> resample_clip(std::span<const HandFrame> frames, double target_rate);

}  // namespace microgext
