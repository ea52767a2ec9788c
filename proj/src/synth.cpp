// SPDX-License-Identifier: Apache-2.0
#include "microgext/synth.hpp"

#include "microgext/error.hpp"
#include "microgext/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace microgext {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct FingerGeometry {
  Vec3 base;
  std::array<double, 3> length;  // proximal, middle, distal
};

// Unscaled right-hand geometry in the wrist frame: +x radial (thumb side),
// +y dorsal, +z toward the fingertips.
const std::array<FingerGeometry, 4>& fingers() {
  static const std::array<FingerGeometry, 4> f = {{
      {Vec3(0.024, 0.000, 0.088), {0.043, 0.025, 0.021}},
      {Vec3(0.003, 0.002, 0.092), {0.047, 0.029, 0.022}},
      {Vec3(-0.016, 0.000, 0.087), {0.044, 0.027, 0.021}},
      {Vec3(-0.032, -0.004, 0.077), {0.035, 0.020, 0.019}},
  }};
  return f;
}

// Flexion split across MCP / PIP / DIP at full curl.
constexpr std::array<double, 3> kFlexDeg = {85.0, 100.0, 65.0};
const Vec3 kThumbCmc(0.022, -0.012, 0.022);
constexpr double kThumbMetacarpal = 0.040;
constexpr double kThumbDistal = 0.027;

Quat finger_rotation(double spread_deg, double flex_deg) {
  return Quat(Eigen::AngleAxisd(spread_deg * kDeg, Vec3::UnitY())) *
         Quat(Eigen::AngleAxisd(flex_deg * kDeg, Vec3::UnitX()));
}

Quat aim_z(const Vec3& dir) { return Quat::FromTwoVectors(Vec3::UnitZ(), dir.normalized()); }

float to_f32(double v) { return static_cast<float>(v); }

void round_to_float(HandFrame& f) {
  for (auto& j : f.joints) {
    for (int k = 0; k < 3; ++k) j.position[k] = to_f32(j.position[k]);
    auto& c = j.orientation.coeffs();
    for (int k = 0; k < 4; ++k) c[k] = to_f32(c[k]);
  }
}

std::array<double, 4> rest_curl() { return {0.3, 0.35, 0.4, 0.45}; }
std::array<double, 4> rest_spread() { return {8.0, 0.0, -6.0, -14.0}; }

HandPose make_pose(std::array<double, 4> curl, std::array<double, 4> spread, ThumbTarget thumb) {
  HandPose p;
  p.curl = curl;
  p.spread_deg = spread;
  p.thumb[static_cast<int>(thumb)] = 1.0;
  return p;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

int frames_for(double seconds) { return static_cast<int>(std::lround(seconds * kNativeRate)); }

std::uint64_t splitmix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

LabeledClip finish_clip(GestureClass g, const SubjectParams& subject, std::vector<HandFrame> frames) {
  LabeledClip clip;
  clip.gesture = g;
  clip.subject_id = subject.subject_id;
  clip.frames = std::move(frames);
  clip.duration = static_cast<double>(clip.frames.size()) / kNativeRate;
  clip.substates = label_substates(clip);
  return clip;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) noexcept {
  std::uint64_t h = splitmix(master);
  h = splitmix(h ^ a);
  h = splitmix(h ^ (b + 0x51ed27ULL));
  h = splitmix(h ^ (c + 0x2545f491ULL));
  return h;
}

SubjectParams make_subject(int subject_id, std::uint64_t master_seed) {
  std::mt19937_64 rng(derive_seed(master_seed, 0x5b, static_cast<std::uint64_t>(subject_id)));
  std::normal_distribution<double> scale(1.0, 0.05);
  std::uniform_real_distribution<double> jitter(0.0010, 0.0020);
  std::uniform_real_distribution<double> tempo(0.8, 1.2);
  SubjectParams s;
  s.subject_id = subject_id;
  s.finger_length_scale = std::clamp(scale(rng), 0.85, 1.15);
  s.pose_jitter_std = jitter(rng);
  s.tempo_scale = tempo(rng);
  s.rng_seed = rng();
  return s;
}

// --- poses ------------------------------------------------------------------

HandPose HandPose::blend(const HandPose& a, const HandPose& b, double w) {
  HandPose out;
  const double v = 1.0 - w;
  for (int i = 0; i < 4; ++i) {
    out.curl[i] = v * a.curl[i] + w * b.curl[i];
    out.spread_deg[i] = v * a.spread_deg[i] + w * b.spread_deg[i];
  }
  for (int i = 0; i < kThumbTargets; ++i) out.thumb[i] = v * a.thumb[i] + w * b.thumb[i];
  out.swipe_u = v * a.swipe_u + w * b.swipe_u;
  out.scissor_amp_deg = v * a.scissor_amp_deg + w * b.scissor_amp_deg;
  out.roll_rad = v * a.roll_rad + w * b.roll_rad;
  return out;
}

HandPose rest_pose() { return make_pose(rest_curl(), rest_spread(), ThumbTarget::Rest); }

HandPose pinch_pose() { return make_pose(rest_curl(), rest_spread(), ThumbTarget::IndexTipPress); }

HandPose thumb_up_pose() { return make_pose({1.0, 1.0, 1.0, 1.0}, {4, 0, -4, -8}, ThumbTarget::Up); }

HandPose spread_pose() { return make_pose({0.0, 0.0, 0.0, 0.0}, {22, 3, -15, -32}, ThumbTarget::Abducted); }

HandPose canonical_pose(GestureClass gesture) {
  switch (gesture) {
    case GestureClass::Scissor: {
      HandPose p = make_pose({0.0, 0.0, 0.95, 0.95}, {14, -6, -6, -14}, ThumbTarget::OverRing);
      p.scissor_amp_deg = 8.0;
      return p;
    }
    case GestureClass::Ring:
      return make_pose({0.5, 0.05, 0.05, 0.08}, {8, 0, -8, -16}, ThumbTarget::IndexTipContact);
    case GestureClass::Swipe:
      return make_pose({0.3, 0.75, 0.85, 0.9}, rest_spread(), ThumbTarget::SwipeContact);
    case GestureClass::Open:
      return make_pose({0.0, 0.0, 0.0, 0.0}, {20, 3, -14, -30}, ThumbTarget::Abducted);
    case GestureClass::Fist:
      return make_pose({1.0, 1.0, 1.0, 1.0}, {4, 0, -4, -8}, ThumbTarget::OverMiddle);
    case GestureClass::Vertical:
      return make_pose({0.0, 0.0, 0.0, 0.0}, {2, 0, -2, -4}, ThumbTarget::Adducted);
    case GestureClass::Pinky:
      return make_pose({1.0, 1.0, 1.0, 0.0}, {4, 0, -4, -14}, ThumbTarget::OverMiddle);
    case GestureClass::Null:
      break;
  }
  return rest_pose();
}

HandFrame local_hand(const HandPose& pose, double finger_scale, double t) {
  HandFrame f;
  f.timestamp = t;
  f.joints[idx(Joint::Wrist)] = JointPose();

  const double osc = pose.scissor_amp_deg * std::sin(2.0 * std::numbers::pi * 2.0 * t);
  std::array<Vec3, 4> tips{}, dips{};
  std::array<Quat, 4> distal{};
  for (int k = 0; k < 4; ++k) {
    const FingerGeometry& g = fingers()[k];
    double spread = pose.spread_deg[k];
    if (k == 0) spread += osc;
    if (k == 1) spread -= osc;
    const double c = pose.curl[k];
    const double f1 = c * kFlexDeg[0];
    const double f2 = f1 + c * kFlexDeg[1];
    const double f3 = f2 + c * kFlexDeg[2];
    const Quat r1 = finger_rotation(spread, f1);
    const Quat r2 = finger_rotation(spread, f2);
    const Quat r3 = finger_rotation(spread, f3);
    const Vec3 base = g.base * finger_scale;
    const Vec3 pip = base + r1 * Vec3(0, 0, g.length[0] * finger_scale);
    const Vec3 dip = pip + r2 * Vec3(0, 0, g.length[1] * finger_scale);
    const Vec3 tip = dip + r3 * Vec3(0, 0, g.length[2] * finger_scale);
    tips[k] = tip;
    dips[k] = dip;
    distal[k] = r3;
    const int tip_joint = idx(Joint::IndexTip) + 2 * k;
    f.joints[tip_joint] = JointPose(tip, r3);
    f.joints[tip_joint + 1] = JointPose(dip, r2);
  }

  const Vec3 cmc = kThumbCmc * finger_scale;
  const Vec3 mcp = cmc + kThumbMetacarpal * finger_scale * Vec3(0.6, -0.35, 0.75).normalized();
  std::array<Vec3, kThumbTargets> targets;
  targets[static_cast<int>(ThumbTarget::Rest)] = Vec3(0.050, -0.040, 0.110) * finger_scale;
  targets[static_cast<int>(ThumbTarget::Abducted)] = Vec3(0.085, -0.020, 0.090) * finger_scale;
  targets[static_cast<int>(ThumbTarget::Adducted)] = Vec3(0.040, -0.012, 0.125) * finger_scale;
  // Contact offsets are expressed in the distal phalanx frame so they stay
  // perpendicular to the tip -> below-tip segment.
  targets[static_cast<int>(ThumbTarget::IndexTipContact)] = tips[0] + distal[0] * Vec3(0.006, -0.006, 0.0);
  targets[static_cast<int>(ThumbTarget::SwipeContact)] = (1.0 - pose.swipe_u) * tips[0] +
                                                         pose.swipe_u * dips[0] +
                                                         distal[0] * Vec3(0.009, -0.006, 0.0);
  targets[static_cast<int>(ThumbTarget::OverMiddle)] = dips[1] + Vec3(0.0, -0.012, 0.0);
  targets[static_cast<int>(ThumbTarget::OverRing)] = dips[2] + Vec3(0.0, -0.012, 0.0);
  targets[static_cast<int>(ThumbTarget::Up)] = Vec3(0.075, 0.020, 0.075) * finger_scale;
  targets[static_cast<int>(ThumbTarget::IndexTipPress)] = tips[0] + distal[0] * Vec3(0.003, -0.003, 0.0);

  Vec3 tip = Vec3::Zero();
  double wsum = 0.0;
  for (int i = 0; i < kThumbTargets; ++i) {
    tip += pose.thumb[i] * targets[i];
    wsum += pose.thumb[i];
  }
  tip = wsum > 0.0 ? Vec3(tip / wsum) : targets[0];
  const Vec3 dir = (tip - mcp).normalized();
  const Vec3 ip = tip - kThumbDistal * finger_scale * dir;
  f.joints[idx(Joint::ThumbTip)] = JointPose(tip, aim_z(dir));
  f.joints[idx(Joint::ThumbBelowTip)] = JointPose(ip, aim_z(ip - mcp));
  return f;
}

// --- timeline ---------------------------------------------------------------

void MotionTrack::add(double time, const HandPose& pose, bool linear) {
  if (!keys_.empty() && time < keys_.back().time) {
    throw Error(ErrorCode::InvalidArgument, "keyframes must be added in time order");
  }
  keys_.push_back({time, pose, linear});
}

void MotionTrack::hold_until(double time) {
  if (keys_.empty()) throw Error(ErrorCode::InvalidArgument, "empty track");
  if (time > keys_.back().time) keys_.push_back({time, keys_.back().pose, true});
}

double MotionTrack::end_time() const { return keys_.empty() ? 0.0 : keys_.back().time; }

HandPose MotionTrack::at(double t) const {
  if (keys_.empty()) return rest_pose();
  if (t <= keys_.front().time) return keys_.front().pose;
  if (t >= keys_.back().time) return keys_.back().pose;
  const auto it = std::upper_bound(keys_.begin(), keys_.end(), t,
                                   [](double v, const Keyframe& k) { return v < k.time; });
  const Keyframe& b = *it;
  const Keyframe& a = *(it - 1);
  const double span = b.time - a.time;
  const double x = span > 0.0 ? (t - a.time) / span : 1.0;
  return HandPose::blend(a.pose, b.pose, b.linear ? x : smoothstep(x));
}

FrameSynthesizer::FrameSynthesizer(const SubjectParams& subject, std::uint64_t seed, bool jitter)
    : subject_(subject), rng_(derive_seed(subject.rng_seed, seed)), jitter_(jitter) {
  if (jitter_) {
    std::normal_distribution<double> curl(0.0, 0.04);
    std::normal_distribution<double> spread(0.0, 2.0);
    std::normal_distribution<double> thumb(0.0, 0.0015);
    for (auto& c : curl_offset_) c = curl(rng_);
    for (auto& s : spread_offset_) s = spread(rng_);
    thumb_offset_ = Vec3(thumb(rng_), thumb(rng_), thumb(rng_));
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  // Arbitrary placement of the hand in tracking space; features must not
  // depend on it.
  base_orientation_ = Quat(Eigen::AngleAxisd(0.6 * unit(rng_), Vec3::UnitY())) *
                      Quat(Eigen::AngleAxisd(0.4 * unit(rng_), Vec3::UnitX())) *
                      Quat(Eigen::AngleAxisd(0.3 * unit(rng_), Vec3::UnitZ()));
  base_position_ = Vec3(0.2 * unit(rng_), 1.1 + 0.1 * unit(rng_), 0.35 + 0.05 * unit(rng_));
  drift_phase_ = std::numbers::pi * unit(rng_);
}

HandFrame FrameSynthesizer::frame(const HandPose& pose_in, double t, Handedness hand) {
  HandPose pose = pose_in;
  for (int k = 0; k < 4; ++k) {
    pose.curl[k] = std::clamp(pose.curl[k] + curl_offset_[k], 0.0, 1.05);
    pose.spread_deg[k] += spread_offset_[k];
  }
  HandFrame local = local_hand(pose, subject_.finger_length_scale, t);
  local[Joint::ThumbTip].position += thumb_offset_;
  local[Joint::ThumbBelowTip].position += thumb_offset_;

  if (jitter_) {
    std::normal_distribution<double> pos(0.0, subject_.pose_jitter_std);
    std::normal_distribution<double> ang(0.0, 0.02);
    for (int j = 1; j < kJoints; ++j) {
      local.joints[j].position += Vec3(pos(rng_), pos(rng_), pos(rng_));
      const Vec3 axis = Vec3(ang(rng_), ang(rng_), ang(rng_));
      const double a = axis.norm();
      if (a > 0.0) {
        local.joints[j].orientation =
            (local.joints[j].orientation * Quat(Eigen::AngleAxisd(a, axis / a))).normalized();
      }
    }
  }

  // Slow wrist drift in tracking space plus the commanded roll about the
  // forearm (+z) axis.
  const double s = std::sin(0.7 * t + drift_phase_);
  const Quat drift(Eigen::AngleAxisd(0.05 * s, Vec3(0.3, 1.0, 0.2).normalized()));
  const Quat wrist_q = (base_orientation_ * drift * Quat(Eigen::AngleAxisd(pose.roll_rad, Vec3::UnitZ())))
                           .normalized();
  const Vec3 wrist_p = base_position_ + Vec3(0.01 * s, 0.005 * std::cos(0.9 * t), 0.0);

  HandFrame out;
  out.timestamp = t;
  out.handedness = Handedness::Right;
  for (int j = 0; j < kJoints; ++j) {
    out.joints[j].position = wrist_p + wrist_q * local.joints[j].position;
    out.joints[j].orientation = (wrist_q * local.joints[j].orientation).normalized();
  }
  if (hand == Handedness::Left) out = mirror_hand(out);
  round_to_float(out);
  return out;
}

std::vector<HandFrame> FrameSynthesizer::render(const MotionTrack& track, int frame_count,
                                                Handedness hand) {
  std::vector<HandFrame> frames;
  frames.reserve(static_cast<std::size_t>(frame_count));
  for (int k = 0; k < frame_count; ++k) {
    const double t = static_cast<double>(k) / kNativeRate;
    frames.push_back(frame(track.at(t), t, hand));
  }
  return frames;
}

// --- clips ------------------------------------------------------------------

LabeledClip synth_clip(GestureClass gesture, const SubjectParams& subject, std::uint64_t seed) {
  if (gesture == GestureClass::Null) {
    throw Error(ErrorCode::NullNotSupportedHere, "use synth_null for the Null class");
  }
  FrameSynthesizer synth(subject, seed);
  MotionTrack track;
  const HandPose rest = rest_pose();
  HandPose target = canonical_pose(gesture);

  if (gesture == GestureClass::Swipe) {
    // Posture transition during the lead-in, then a clock-synchronized sweep
    // 0 -> 1 -> 0 peaking at the middle frame.
    const int n = frames_for(kSwipeClipSeconds);
    const double peak = static_cast<double>(n / 2) / kNativeRate;
    const double end = static_cast<double>(n - 1) / kNativeRate;
    target.swipe_u = 0.0;
    HandPose far = target;
    far.swipe_u = 1.0;
    track.add(0.0, rest);
    track.add(0.08 * subject.tempo_scale, rest);
    track.add(0.25, target);
    track.add(peak, far, true);
    track.add(end, target, true);
    return finish_clip(gesture, subject, synth.render(track, n));
  }

  const int n = frames_for(kStaticClipSeconds);
  const double lead = 0.2 * subject.tempo_scale;
  const double transition = 0.3 * subject.tempo_scale;
  track.add(0.0, rest);
  track.add(lead, rest);
  track.add(lead + transition, target);
  // Small postural wobble during the hold.
  std::mt19937_64 rng(derive_seed(seed, 0x77));
  std::normal_distribution<double> wobble(0.0, 0.02);
  for (double t = lead + transition + 0.4; t < kStaticClipSeconds; t += 0.4) {
    HandPose p = target;
    for (auto& c : p.curl) c = std::clamp(c + wobble(rng), 0.0, 1.0);
    track.add(t, p);
  }
  return finish_clip(gesture, subject, synth.render(track, n));
}

NullVariant null_variant_for_seed(std::uint64_t seed) noexcept {
  const std::uint64_t r = derive_seed(seed, 0x4e55) % 10;
  if (r < 5) return NullVariant::Rest;
  if (r < 8) return NullVariant::Drift;
  return NullVariant::Pinch;
}

LabeledClip synth_null(const SubjectParams& subject, std::uint64_t seed) {
  return synth_null(subject, seed, null_variant_for_seed(seed));
}

LabeledClip synth_null(const SubjectParams& subject, std::uint64_t seed, NullVariant variant) {
  FrameSynthesizer synth(subject, seed);
  std::mt19937_64 rng(derive_seed(seed, 0x9a11));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = frames_for(kStaticClipSeconds);
  MotionTrack track;
  const HandPose rest = rest_pose();

  switch (variant) {
    case NullVariant::Rest: {
      track.add(0.0, rest);
      for (double t = 0.5; t < kStaticClipSeconds + 0.5; t += 0.5) {
        HandPose p = rest;
        for (auto& c : p.curl) c += 0.05 * (u01(rng) - 0.5);
        track.add(t, p);
      }
      break;
    }
    case NullVariant::Drift: {
      track.add(0.0, rest);
      for (double t = 0.4; t < kStaticClipSeconds + 0.4; t += 0.4) {
        HandPose p = rest;
        for (auto& c : p.curl) c = 0.15 + 0.45 * u01(rng);
        for (auto& s : p.spread_deg) s += 6.0 * (u01(rng) - 0.5);
        const double mix = 0.3 * u01(rng);
        p.thumb[static_cast<int>(ThumbTarget::Rest)] = 1.0 - mix;
        p.thumb[static_cast<int>(ThumbTarget::Adducted)] = mix;
        track.add(t, p);
      }
      break;
    }
    case NullVariant::Pinch: {
      // Incidental pinch: contact held for less than 140 ms.
      const double start = 0.2 + 1.3 * u01(rng);
      const double approach = 0.06 + 0.03 * u01(rng);
      const double hold = 0.02 + 0.03 * u01(rng);
      track.add(0.0, rest);
      track.add(start, rest);
      track.add(start + approach, pinch_pose());
      track.add(start + approach + hold, pinch_pose());
      track.add(start + 2.0 * approach + hold, rest);
      break;
    }
  }
  return finish_clip(GestureClass::Null, subject, synth.render(track, n));
}

// --- labeling ---------------------------------------------------------------

double thumb_progress(const HandFrame& frame) {
  const Vec3 a = frame[Joint::IndexTip].position;
  const Vec3 b = frame[Joint::IndexBelowTip].position;
  const Vec3 seg = b - a;
  const double len2 = seg.squaredNorm();
  if (len2 <= 0.0) return 0.0;
  return std::clamp((frame[Joint::ThumbTip].position - a).dot(seg) / len2, 0.0, 1.0);
}

SubState substate_from_progress(double u) noexcept {
  if (!(u > 0.0)) return 0;
  if (u >= 1.0) return 3;
  return static_cast<SubState>(std::min(3, static_cast<int>(std::floor(u * 4.0))));
}

std::vector<SubState> label_substates(const LabeledClip& clip) {
  std::vector<SubState> labels(clip.frames.size(), kNoSwipeState);
  if (clip.gesture != GestureClass::Swipe) return labels;
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    labels[i] = substate_from_progress(thumb_progress(clip.frames[i]));
  }
  return labels;
}

Dataset make_dataset(int n_subjects, int reps_per_gesture, int null_reps, std::uint64_t seed) {
  if (n_subjects < 1 || reps_per_gesture < 1 || null_reps < 1) {
    throw Error(ErrorCode::InvalidArgument, "dataset counts must be >= 1");
  }
  Dataset ds;
  ds.seed = seed;
  struct Job {
    int subject;
    GestureClass gesture;
    int rep;
  };
  std::vector<Job> jobs;
  for (int s = 0; s < n_subjects; ++s) {
    for (GestureClass g : kCommandGestures) {
      for (int r = 0; r < reps_per_gesture; ++r) jobs.push_back({s, g, r});
    }
    for (int r = 0; r < null_reps; ++r) jobs.push_back({s, GestureClass::Null, r});
  }
  ds.clips.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& j = jobs[i];
    const SubjectParams subject = make_subject(j.subject, seed);
    const std::uint64_t clip_seed = derive_seed(seed, j.subject, class_index(j.gesture), j.rep);
    ds.clips[i] = j.gesture == GestureClass::Null ? synth_null(subject, clip_seed)
                                                  : synth_clip(j.gesture, subject, clip_seed);
  });
  return ds;
}

}  // namespace microgext
