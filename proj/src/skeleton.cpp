// SPDX-License-Identifier: Apache-2.0
#include "microgext/skeleton.hpp"

#include "microgext/error.hpp"

#include <algorithm>
#include <cmath>

namespace microgext {

const std::array<std::string_view, kJoints>& joint_names() noexcept {
  static constexpr std::array<std::string_view, kJoints> names = {
      "Wrist",       "ThumbTip",       "ThumbBelowTip", "IndexTip",
      "IndexBelowTip", "MiddleTip",    "MiddleBelowTip", "RingTip",
      "RingBelowTip", "PinkyTip",      "PinkyBelowTip"};
  return names;
}

JointPose::JointPose(const Vec3& p, const Quat& q) : position(p), orientation(q) {
  if (!p.allFinite() || !q.coeffs().allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "joint pose has non-finite components");
  }
  const double n = q.norm();
  if (n < 1e-12) throw Error(ErrorCode::InvalidArgument, "zero-norm orientation");
  orientation.coeffs() /= n;
}

Quat canonical_sign(const Quat& q) {
  // Order matches the (w, x, y, z) layout used in features.
  const std::array<double, 4> c = {q.w(), q.x(), q.y(), q.z()};
  for (double v : c) {
    if (v > 0.0) return q;
    if (v < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

JointPose relative_to_wrist(const HandFrame& frame, int j) {
  JointPose out;
  if (j == idx(Joint::Wrist)) return out;
  const JointPose& wrist = frame.joints[idx(Joint::Wrist)];
  const JointPose& joint = frame.joints[j];
  const Quat inv = wrist.orientation.conjugate();
  out.position = inv * (joint.position - wrist.position);
  Quat rel = inv * joint.orientation;
  rel.normalize();
  out.orientation = canonical_sign(rel);
  return out;
}

FeatureWindow extract_features(std::span<const HandFrame> frames) {
  if (frames.size() != static_cast<std::size_t>(kWindowFrames)) {
    throw Error(ErrorCode::WrongFrameCount, "expected " + std::to_string(kWindowFrames) +
                                                " frames, got " + std::to_string(frames.size()));
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].handedness != frames[0].handedness) {
      throw Error(ErrorCode::MixedHandedness, "frame " + std::to_string(i));
    }
    if (!(frames[i].timestamp > frames[i - 1].timestamp)) {
      throw Error(ErrorCode::NonMonotoneTimestamps, "frame " + std::to_string(i));
    }
  }
  FeatureWindow w;
  constexpr int kRow = kJoints * kFeatureDim;
  for (int t = 0; t < kWindowFrames; ++t) {
    frame_features(frames[t], std::span<double, kRow>(w.data().data() + t * kRow, kRow));
  }
  return w;
}

void frame_features(const HandFrame& frame, std::span<double, kJoints * kFeatureDim> out) {
  for (int j = 0; j < kJoints; ++j) {
    const JointPose rel = relative_to_wrist(frame, j);
    double* row = out.data() + j * kFeatureDim;
    row[0] = rel.position.x();
    row[1] = rel.position.y();
    row[2] = rel.position.z();
    row[3] = rel.orientation.w();
    row[4] = rel.orientation.x();
    row[5] = rel.orientation.y();
    row[6] = rel.orientation.z();
  }
}

HandFrame mirror_hand(const HandFrame& frame) {
  // World reflection F = R_w M R_w^T with M = diag(-1, 1, 1). Joint
  // orientations map to F R_j M, which keeps them proper rotations and
  // leaves the wrist orientation unchanged.
  const JointPose& wrist = frame.joints[idx(Joint::Wrist)];
  const Quat qw = wrist.orientation;
  HandFrame out = frame;
  out.handedness = frame.handedness == Handedness::Left ? Handedness::Right : Handedness::Left;
  for (int j = 1; j < kJoints; ++j) {
    const JointPose& src = frame.joints[j];
    Vec3 local = qw.conjugate() * (src.position - wrist.position);
    local.x() = -local.x();
    const Quat rel = qw.conjugate() * src.orientation;
    const Quat mirrored(rel.w(), rel.x(), -rel.y(), -rel.z());
    out.joints[j].position = wrist.position + qw * local;
    out.joints[j].orientation = (qw * mirrored).normalized();
  }
  return out;
}

HandFrame mirror_to_right(const HandFrame& frame) {
  if (frame.handedness == Handedness::Right) {
    throw Error(ErrorCode::AlreadyRight, "frame is already right-handed");
  }
  return mirror_hand(frame);
}

std::vector<HandFrame> resample_clip(std::span<const HandFrame> frames, double target_rate) {
  if (frames.size() < 2) throw Error(ErrorCode::TooFewFrames, "need at least 2 frames");
  if (!(target_rate > 0.0) || !std::isfinite(target_rate)) {
    throw Error(ErrorCode::NonPositiveRate, "target rate must be positive");
  }
  const double t0 = frames.front().timestamp;
  const double span = frames.back().timestamp - t0;
  const auto count = static_cast<std::size_t>(std::floor(span * target_rate + 1e-9)) + 1;

  std::vector<HandFrame> out;
  out.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t0 + static_cast<double>(k) / target_rate;
    while (seg + 2 < frames.size() && frames[seg + 1].timestamp <= t) ++seg;
    const HandFrame& a = frames[seg];
    const HandFrame& b = frames[seg + 1];
    const double dt = b.timestamp - a.timestamp;
    const double alpha = dt > 0.0 ? std::clamp((t - a.timestamp) / dt, 0.0, 1.0) : 0.0;

    HandFrame f;
    f.timestamp = t;
    f.handedness = a.handedness;
    for (int j = 0; j < kJoints; ++j) {
      const JointPose& pa = a.joints[j];
      const JointPose& pb = b.joints[j];
      f.joints[j].position = (1.0 - alpha) * pa.position + alpha * pb.position;
      f.joints[j].orientation = pa.orientation.slerp(alpha, pb.orientation).normalized();
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace microgext
