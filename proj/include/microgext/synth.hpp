// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic hand-gesture generator. A small forward-kinematic
// hand model is driven by pose keyframes; every output is a pure function of
// its arguments and seeds.
#pragma once

#include "microgext/gesture.hpp"
#include "microgext/skeleton.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace microgext {

struct SubjectParams {
  int subject_id = 0;
  double finger_length_scale = 1.0;
  double pose_jitter_std = 0.0015;  // meters
  double tempo_scale = 1.0;
  std::uint64_t rng_seed = 0;
};

/// Draws a plausible subject (hand size, jitter, tempo) from `master_seed`.
SubjectParams make_subject(int subject_id, std::uint64_t master_seed);

struct LabeledClip {
  GestureClass gesture = GestureClass::Null;
  int subject_id = 0;
  std::vector<HandFrame> frames;
  std::vector<SubState> substates;
  double duration = 0.0;
};

struct Dataset {
  std::uint64_t seed = 0;
  double frame_rate = kNativeRate;
  std::vector<LabeledClip> clips;
};

inline constexpr double kStaticClipSeconds = 2.0;
inline constexpr double kSwipeClipSeconds = 5.0;
inline constexpr double kPinchThreshold = 0.015;  // meters, thumb tip to index tip

/// splitmix64-based mixing of a master seed with up to three coordinates.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

LabeledClip synth_clip(GestureClass gesture, const SubjectParams& subject, std::uint64_t seed);

enum class NullVariant { Rest, Drift, Pinch };

/// Null clip whose variant is drawn 50/30/20 (rest/drift/pinch) from `seed`.
LabeledClip synth_null(const SubjectParams& subject, std::uint64_t seed);
LabeledClip synth_null(const SubjectParams& subject, std::uint64_t seed, NullVariant variant);
NullVariant null_variant_for_seed(std::uint64_t seed) noexcept;

/// Normalized thumb-tip position along IndexTip -> IndexBelowTip, in [0, 1].
double thumb_progress(const HandFrame& frame);
/// Quarter bins, half-open, with u = 1 mapped to 3.
SubState substate_from_progress(double u) noexcept;
std::vector<SubState> label_substates(const LabeledClip& clip);

Dataset make_dataset(int n_subjects = 10, int reps_per_gesture = 20, int null_reps = 20,
                     std::uint64_t seed = 7);

// --- motion model -----------------------------------------------------------

enum class ThumbTarget : int {
  Rest = 0,
  Abducted,
  Adducted,
  IndexTipContact,
  SwipeContact,
  OverMiddle,
  OverRing,
  Up,
  IndexTipPress,  // firmer tip contact used by pinches
};
inline constexpr int kThumbTargets = 9;

/// Blendable hand posture. Thumb placement is a convex mix of named targets
/// so transitions interpolate in Cartesian space.
struct HandPose {
  std::array<double, 4> curl{};          // index, middle, ring, pinky; 0 straight, 1 fist
  std::array<double, 4> spread_deg{};    // abduction about the palm normal
  std::array<double, kThumbTargets> thumb{};
  double swipe_u = 0.0;                  // for SwipeContact
  double scissor_amp_deg = 0.0;          // index/middle open-close oscillation
  double roll_rad = 0.0;                 // wrist roll about the forearm axis

  static HandPose blend(const HandPose& a, const HandPose& b, double w);
};

HandPose rest_pose();
HandPose canonical_pose(GestureClass gesture);  // Null yields the rest pose
HandPose pinch_pose();
HandPose thumb_up_pose();
HandPose spread_pose();

struct Keyframe {
  double time = 0.0;
  HandPose pose;
  bool linear = false;  // easing from the previous keyframe; smoothstep otherwise
};

/// Piecewise pose timeline; holds the first/last pose outside its span.
class MotionTrack {
 public:
  void add(double time, const HandPose& pose, bool linear = false);
  void hold_until(double time);
  HandPose at(double t) const;
  double end_time() const;
  bool empty() const noexcept { return keys_.empty(); }

 private:
  std::vector<Keyframe> keys_;
};

/// Turns poses into tracked frames for one subject: forward kinematics,
/// per-clip posture offsets, a drifting wrist placement in world space and
/// per-frame jitter. Output values are rounded to float precision so that
/// the 32-bit file formats round-trip exactly.
class FrameSynthesizer {
 public:
  FrameSynthesizer(const SubjectParams& subject, std::uint64_t seed, bool jitter = true);

  HandFrame frame(const HandPose& pose, double t, Handedness hand = Handedness::Right);
  std::vector<HandFrame> render(const MotionTrack& track, int frame_count,
                                Handedness hand = Handedness::Right);

 private:
  SubjectParams subject_;
  std::mt19937_64 rng_;
  bool jitter_;
  std::array<double, 4> curl_offset_{};
  std::array<double, 4> spread_offset_{};
  Vec3 thumb_offset_ = Vec3::Zero();
  Quat base_orientation_ = Quat::Identity();
  Vec3 base_position_ = Vec3::Zero();
  double drift_phase_ = 0.0;
};

/// Right-hand joint positions/orientations in the wrist frame for `pose`,
/// without noise; exposed for tests and geometric detectors.
HandFrame local_hand(const HandPose& pose, double finger_scale = 1.0, double t = 0.0);

}  // namespace microgext
