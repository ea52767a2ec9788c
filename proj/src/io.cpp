// SPDX-License-Identifier: Apache-2.0
#include "microgext/io.hpp"

#include "microgext/config.hpp"
#include "microgext/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace microgext {

namespace {

constexpr char kDatasetMagic[4] = {'M', 'G', 'X', 'D'};
constexpr char kCheckpointMagic[4] = {'M', 'G', 'X', 'C'};
constexpr std::uint32_t kClipTag = 0x50494c43;  // "CLIP" little-endian
constexpr std::size_t kHashBytes = 32;

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const char*>(p);
    buf_.append(b, n);
  }
  template <class T>
  void le(T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void f32(double v) { le(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::string& str() { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context) : data_(data), context_(std::move(context)) {}

  void set_context(std::string c) { context_ = std::move(c); }
  std::string_view take(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorCode::CorruptRecord, context_ + ": unexpected end of file");
    }
    const std::string_view v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  template <class T>
  T le() {
    const std::string_view b = take(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return static_cast<T>(v);
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(le<std::uint32_t>())); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  bool done() const noexcept { return pos_ == data_.size(); }
  const std::string& context() const noexcept { return context_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string context_;
};

nlohmann::ordered_json joint_order_json() {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (auto n : joint_names()) a.push_back(std::string(n));
  return a;
}

nlohmann::ordered_json class_names_json() {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (auto n : class_names()) a.push_back(std::string(n));
  return a;
}

void check_joint_order(const nlohmann::json& order, const std::string& what) {
  if (!order.is_array() || order.size() != static_cast<std::size_t>(kJoints)) {
    throw Error(ErrorCode::JointOrderMismatch, what + ": joint order has the wrong length");
  }
  for (int j = 0; j < kJoints; ++j) {
    if (!order[j].is_string() || order[j].get<std::string>() != joint_names()[j]) {
      throw Error(ErrorCode::JointOrderMismatch,
                  what + ": joint " + std::to_string(j) + " is not " + std::string(joint_names()[j]));
    }
  }
}

void check_version(const nlohmann::json& header, int expected, const std::string& what) {
  const int v = header.value("version", -1);
  if (v != expected) {
    throw Error(ErrorCode::VersionMismatch,
                what + ": format version " + std::to_string(v) + ", expected " + std::to_string(expected));
  }
}

nlohmann::json parse_header(ByteReader& r, const std::string& what) {
  const auto len = r.le<std::uint32_t>();
  const std::string_view text = r.take(len);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::CorruptRecord, what + ": header is not valid JSON");
  }
}

void write_header(ByteWriter& w, const char (&magic)[4], int version, const nlohmann::ordered_json& header) {
  w.raw(magic, 4);
  w.le(static_cast<std::uint32_t>(version));
  const std::string text = header.dump();
  w.le(static_cast<std::uint32_t>(text.size()));
  w.raw(text.data(), text.size());
}

void read_magic(ByteReader& r, const char (&magic)[4], int expected_version, const std::string& what) {
  if (r.take(4) != std::string_view(magic, 4)) {
    throw Error(ErrorCode::CorruptRecord, what + ": bad magic");
  }
  const auto v = r.le<std::uint32_t>();
  if (v != static_cast<std::uint32_t>(expected_version)) {
    throw Error(ErrorCode::VersionMismatch,
                what + ": format version " + std::to_string(v) + ", expected " + std::to_string(expected_version));
  }
}

void put_frame(ByteWriter& w, const HandFrame& f) {
  w.f64(f.timestamp);
  w.le(static_cast<std::uint8_t>(f.handedness));
  for (const auto& j : f.joints) {
    w.f32(j.position.x());
    w.f32(j.position.y());
    w.f32(j.position.z());
    w.f32(j.orientation.w());
    w.f32(j.orientation.x());
    w.f32(j.orientation.y());
    w.f32(j.orientation.z());
  }
}

HandFrame get_frame(ByteReader& r) {
  HandFrame f;
  f.timestamp = r.f64();
  const auto hand = r.le<std::uint8_t>();
  if (hand > 1) throw Error(ErrorCode::CorruptRecord, r.context() + ": bad handedness");
  f.handedness = static_cast<Handedness>(hand);
  for (auto& j : f.joints) {
    // Stored values are taken verbatim; no renormalization.
    const double px = r.f32(), py = r.f32(), pz = r.f32();
    const double qw = r.f32(), qx = r.f32(), qy = r.f32(), qz = r.f32();
    j.position = Vec3(px, py, pz);
    j.orientation = Quat(qw, qx, qy, qz);
  }
  return f;
}

std::string hex(const unsigned char* p, std::size_t n) {
  std::ostringstream os;
  for (std::size_t i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(p[i]);
  return os.str();
}

std::array<unsigned char, kHashBytes> sha256(std::string_view data) {
  std::array<unsigned char, kHashBytes> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != kHashBytes) {
    throw Error(ErrorCode::IoError, "SHA-256 computation failed");
  }
  return out;
}


std::string fmt_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double parse_double(std::string_view s, const std::string& where) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw Error(ErrorCode::CorruptRecord, where + ": bad number '" + tmp + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = line.find(sep, start);
    out.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

nlohmann::ordered_json nan_to_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

double null_to_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_sha256(const std::filesystem::path& path) {
  const auto h = sha256(read_file(path));
  return hex(h.data(), h.size());
}

// --- dataset ------------------------------------------------------------------

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["format"] = "mgd";
  header["version"] = kDatasetVersion;
  header["frame_rate"] = ds.frame_rate;
  header["joint_order"] = joint_order_json();
  header["class_names"] = class_names_json();
  header["seed"] = ds.seed;
  header["clips"] = ds.clips.size();
  ByteWriter w;
  write_header(w, kDatasetMagic, kDatasetVersion, header);
  for (const auto& c : ds.clips) {
    if (c.substates.size() != c.frames.size()) {
      throw Error(ErrorCode::ShapeMismatch, "clip has mismatched frame and sub-state counts");
    }
    w.le(kClipTag);
    w.le(static_cast<std::int32_t>(c.subject_id));
    w.le(static_cast<std::uint8_t>(class_index(c.gesture)));
    w.f64(c.duration);
    w.le(static_cast<std::uint32_t>(c.frames.size()));
    for (const auto& f : c.frames) put_frame(w, f);
    for (SubState s : c.substates) w.le(static_cast<std::uint8_t>(s));
  }
  write_file_atomic(path, w.str());
}

Dataset read_dataset(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const std::string what = path.string();
  ByteReader r(data, what + " header");
  read_magic(r, kDatasetMagic, kDatasetVersion, what);
  const nlohmann::json header = parse_header(r, what);
  check_version(header, kDatasetVersion, what);
  check_joint_order(header.value("joint_order", nlohmann::json()), what);
  Dataset ds;
  ds.seed = header.value("seed", std::uint64_t{0});
  ds.frame_rate = header.value("frame_rate", kNativeRate);
  const auto n = header.value("clips", std::size_t{0});
  ds.clips.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.set_context(what + ": record " + std::to_string(i));
    if (r.le<std::uint32_t>() != kClipTag) throw Error(ErrorCode::CorruptRecord, r.context() + ": bad record tag");
    LabeledClip c;
    c.subject_id = r.le<std::int32_t>();
    const auto g = r.le<std::uint8_t>();
    if (g >= kNumClasses) throw Error(ErrorCode::CorruptRecord, r.context() + ": bad class");
    c.gesture = static_cast<GestureClass>(g);
    c.duration = r.f64();
    const auto frames = r.le<std::uint32_t>();
    c.frames.reserve(frames);
    for (std::uint32_t k = 0; k < frames; ++k) c.frames.push_back(get_frame(r));
    c.substates.reserve(frames);
    for (std::uint32_t k = 0; k < frames; ++k) {
      const auto s = r.le<std::uint8_t>();
      if (s >= kNumStates) throw Error(ErrorCode::CorruptRecord, r.context() + ": bad sub-state");
      c.substates.push_back(s);
    }
    ds.clips.push_back(std::move(c));
  }
  r.set_context(what + ": record " + std::to_string(n));
  if (!r.done()) throw Error(ErrorCode::CorruptRecord, what + ": trailing bytes after the last record");
  return ds;
}

// --- checkpoint ---------------------------------------------------------------

void save_checkpoint(const ModelParams& params, const HyperParams& hp, const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["format"] = "mgc";
  header["version"] = kCheckpointVersion;
  header["hidden"] = params.hidden;
  header["hyperparams"] = to_json(hp);
  header["joint_order"] = joint_order_json();
  header["class_names"] = class_names_json();
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  params.for_each_tensor([&](std::string_view name, const Matrix& m) {
    tensors.push_back({{"name", std::string(name)}, {"shape", {m.rows(), m.cols()}}});
  });
  tensors.push_back({{"name", "tau"}, {"shape", {1, 1}}});
  header["tensors"] = tensors;

  ByteWriter w;
  write_header(w, kCheckpointMagic, kCheckpointVersion, header);
  const auto put = [&w](std::string_view name, const Matrix& m) {
    w.le(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
    w.le(static_cast<std::uint32_t>(m.rows()));
    w.le(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
  };
  params.for_each_tensor(put);
  put("tau", Matrix::Constant(1, 1, params.tau));
  const auto h = sha256(w.str());
  w.raw(h.data(), h.size());
  write_file_atomic(path, w.str());
}

ModelParams load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_hidden, HyperParams* hp) {
  const std::string data = read_file(path);
  const std::string what = path.string();
  if (data.size() < kHashBytes + 12) throw Error(ErrorCode::CorruptRecord, what + ": file too short");
  const std::string_view body(data.data(), data.size() - kHashBytes);
  const auto h = sha256(body);
  if (std::memcmp(h.data(), data.data() + body.size(), kHashBytes) != 0) {
    throw Error(ErrorCode::HashMismatch, what + ": content hash does not match");
  }
  ByteReader r(body, what + " header");
  read_magic(r, kCheckpointMagic, kCheckpointVersion, what);
  const nlohmann::json header = parse_header(r, what);
  check_version(header, kCheckpointVersion, what);
  check_joint_order(header.value("joint_order", nlohmann::json()), what);
  const int hidden = header.value("hidden", 0);
  if (hidden <= 0) throw Error(ErrorCode::CorruptRecord, what + ": missing hidden width");
  if (expected_hidden && *expected_hidden != hidden) {
    throw Error(ErrorCode::ShapeMismatch, what + ": hidden width " + std::to_string(hidden) + ", expected " +
                                              std::to_string(*expected_hidden));
  }
  if (hp) {
    try {
      *hp = hyperparams_from_json(header.at("hyperparams"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CorruptRecord, what + ": hyperparams: " + e.what());
    }
  }

  ModelParams p = ModelParams::zeros_like(ModelParams::init(hidden, 0));
  p.hidden = hidden;
  const auto read_tensor = [&](std::string_view want, Matrix& m) {
    r.set_context(what + ": tensor " + std::string(want));
    const auto len = r.le<std::uint16_t>();
    const std::string_view name = r.take(len);
    if (name != want) {
      throw Error(ErrorCode::ShapeMismatch, what + ": expected tensor " + std::string(want) + ", found " + std::string(name));
    }
    const auto rows = r.le<std::uint32_t>();
    const auto cols = r.le<std::uint32_t>();
    if (rows != static_cast<std::uint32_t>(m.rows()) || cols != static_cast<std::uint32_t>(m.cols())) {
      throw Error(ErrorCode::ShapeMismatch, what + ": tensor " + std::string(want) + " is " + std::to_string(rows) +
                                                "x" + std::to_string(cols) + ", expected " +
                                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
  };
  p.for_each_tensor(read_tensor);
  Matrix tau(1, 1);
  read_tensor("tau", tau);
  p.tau = tau(0, 0);
  if (!r.done()) throw Error(ErrorCode::CorruptRecord, what + ": trailing bytes");
  if (!(p.tau > 0.0) || !p.all_finite()) throw Error(ErrorCode::CorruptRecord, what + ": non-finite parameters");
  return p;
}

// --- session recordings ---------------------------------------------------------

void write_session(const SessionRecording& rec, const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["format"] = "mgs";
  header["version"] = kSessionVersion;
  header["frame_rate"] = kNativeRate;
  header["joint_order"] = joint_order_json();
  std::string out = header.dump() + "\n";
  for (const auto& f : rec.frames) {
    out += "F " + fmt_double(f.timestamp, 17) + (f.handedness == Handedness::Right ? " R" : " L");
    for (const auto& j : f.joints) {
      for (double v : {j.position.x(), j.position.y(), j.position.z(), j.orientation.w(), j.orientation.x(),
                       j.orientation.y(), j.orientation.z()}) {
        out += ' ';
        out += fmt_double(static_cast<float>(v), 9);
      }
    }
    out += '\n';
  }
  for (const auto& e : rec.events) {
    out += "E " + fmt_double(e.fired_at, 17) + ' ' + std::string(to_string(e.gesture)) + ' ' +
           fmt_double(e.mean_confidence, 17) + ' ';
    if (e.swipe_substate_trace.empty()) {
      out += '-';
    } else {
      for (SubState s : e.swipe_substate_trace) out += static_cast<char>('0' + s);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

SessionRecording read_session(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  const std::string what = path.string();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::CorruptRecord, what + ": line 1: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::CorruptRecord, what + ": line 1: header is not valid JSON");
  }
  check_version(header, kSessionVersion, what);
  check_joint_order(header.value("joint_order", nlohmann::json()), what);

  SessionRecording rec;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = what + ": line " + std::to_string(line_no);
    const auto parts = split(line, ' ');
    if (parts[0] == "F") {
      if (parts.size() != 3 + kJoints * kFeatureDim || (parts[2] != "R" && parts[2] != "L")) {
        throw Error(ErrorCode::CorruptRecord, where + ": malformed frame record");
      }
      HandFrame f;
      f.timestamp = parse_double(parts[1], where);
      f.handedness = parts[2] == "R" ? Handedness::Right : Handedness::Left;
      std::size_t k = 3;
      for (auto& j : f.joints) {
        double v[7];
        for (double& x : v) x = static_cast<float>(parse_double(parts[k++], where));
        j.position = Vec3(v[0], v[1], v[2]);
        j.orientation = Quat(v[3], v[4], v[5], v[6]);
      }
      rec.frames.push_back(f);
    } else if (parts[0] == "E") {
      if (parts.size() != 5) throw Error(ErrorCode::CorruptRecord, where + ": malformed event record");
      GestureEvent e;
      e.fired_at = parse_double(parts[1], where);
      const auto g = parse_gesture(parts[2]);
      if (!g) throw Error(ErrorCode::CorruptRecord, where + ": unknown gesture");
      e.gesture = *g;
      e.mean_confidence = parse_double(parts[3], where);
      if (parts[4] != "-") {
        for (char c : parts[4]) {
          if (c < '0' || c > '4') throw Error(ErrorCode::CorruptRecord, where + ": bad swipe trace");
          e.swipe_substate_trace.push_back(static_cast<SubState>(c - '0'));
        }
      }
      rec.events.push_back(std::move(e));
    } else {
      throw Error(ErrorCode::CorruptRecord, where + ": unknown record type");
    }
  }
  return rec;
}

// --- command log ------------------------------------------------------------------

void write_command_log(const std::vector<CommandRecord>& log, const std::filesystem::path& path) {
  std::string out = "# microgext command log v1\n";
  for (const auto& c : log) {
    out += fmt_double(c.timestamp, 17) + '\t' + std::string(to_string(c.source)) + '\t' + to_string(c.command) +
           '\t' + (c.error ? std::string(to_string(*c.error)) : std::string("ok")) + '\n';
  }
  write_file_atomic(path, out);
}

std::vector<CommandRecord> read_command_log(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  const std::string what = path.string();
  std::string line;
  if (!std::getline(in, line) || line != "# microgext command log v1") {
    throw Error(ErrorCode::VersionMismatch, what + ": not a v1 command log");
  }
  std::vector<CommandRecord> log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = what + ": line " + std::to_string(line_no);
    const auto parts = split(line, '\t');
    if (parts.size() != 4) throw Error(ErrorCode::CorruptRecord, where + ": expected 4 fields");
    CommandRecord c;
    c.timestamp = parse_double(parts[0], where);
    bool found = false;
    for (auto s : {CommandSource::Gesture, CommandSource::SwipeTracking, CommandSource::PinchHold,
                   CommandSource::ModeSwitch, CommandSource::Script}) {
      if (to_string(s) == parts[1]) {
        c.source = s;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::CorruptRecord, where + ": unknown source");
    try {
      c.command = parse_command(parts[2]);
    } catch (const Error&) {
      throw Error(ErrorCode::CorruptRecord, where + ": bad command");
    }
    if (parts[3] != "ok") {
      for (int k = 0; k <= static_cast<int>(ErrorCode::IoError); ++k) {
        if (to_string(static_cast<ErrorCode>(k)) == parts[3]) c.error = static_cast<ErrorCode>(k);
      }
      if (!c.error) throw Error(ErrorCode::CorruptRecord, where + ": unknown outcome");
    }
    log.push_back(c);
  }
  return log;
}

nlohmann::ordered_json document_to_json(const Document& doc, bool with_history) {
  nlohmann::ordered_json j;
  j["text"] = doc.text;
  j["caret"] = doc.caret;
  if (doc.selection) {
    j["selection"] = {{"anchor", doc.selection->anchor}, {"head", doc.selection->head}};
  } else {
    j["selection"] = nullptr;
  }
  j["granularity"] = std::string(to_string(doc.granularity));
  j["clipboard"] = doc.clipboard;
  if (with_history) j["undo_depth"] = doc.undo_stack.size();
  return j;
}

// --- reports --------------------------------------------------------------------

nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  const EvalReport& e = r.eval;
  nlohmann::ordered_json j;
  j["format"] = "mgr";
  j["version"] = kReportVersion;
  j["fold"] = r.fold;
  j["seed"] = r.seed;
  j["hidden"] = r.hidden;
  j["checkpoint_sha256"] = r.checkpoint_sha256;
  j["dataset_sha256"] = r.dataset_sha256;
  j["class_names"] = class_names_json();
  j["windows"] = e.windows;
  j["frames"] = e.frames;
  j["class_confusion"] = e.class_confusion;
  j["state_confusion"] = e.state_confusion;
  nlohmann::ordered_json ca = nlohmann::ordered_json::array(), sa = nlohmann::ordered_json::array();
  for (double v : e.class_accuracy) ca.push_back(nan_to_null(v));
  for (double v : e.state_accuracy) sa.push_back(nan_to_null(v));
  j["class_accuracy"] = ca;
  j["state_accuracy"] = sa;
  j["macro_accuracy"] = e.macro_accuracy;
  j["off_tridiagonal_state_mass"] = e.off_tridiagonal_mass();
  j["tau"] = e.tau;
  j["ece_before"] = e.ece_before;
  j["ece_after"] = e.ece_after;
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
  check_version(j, kReportVersion, "report");
  MetricsReport r;
  try {
    r.fold = j.at("fold").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.hidden = j.at("hidden").get<int>();
    r.checkpoint_sha256 = j.at("checkpoint_sha256").get<std::string>();
    r.dataset_sha256 = j.at("dataset_sha256").get<std::string>();
    EvalReport& e = r.eval;
    e.windows = j.at("windows").get<std::size_t>();
    e.frames = j.at("frames").get<std::size_t>();
    e.class_confusion = j.at("class_confusion").get<decltype(e.class_confusion)>();
    e.state_confusion = j.at("state_confusion").get<decltype(e.state_confusion)>();
    for (int k = 0; k < kNumClasses; ++k) e.class_accuracy[k] = null_to_nan(j.at("class_accuracy").at(k));
    for (int k = 0; k < kNumStates; ++k) e.state_accuracy[k] = null_to_nan(j.at("state_accuracy").at(k));
    e.macro_accuracy = j.at("macro_accuracy").get<double>();
    e.tau = j.at("tau").get<double>();
    e.ece_before = j.at("ece_before").get<double>();
    e.ece_after = j.at("ece_after").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::CorruptRecord, std::string("report: ") + ex.what());
  }
  for (const auto& row : r.eval.class_confusion) {
    for (auto v : row) {
      if (v < 0) throw Error(ErrorCode::CorruptRecord, "report: negative confusion count");
    }
  }
  return r;
}

std::string report_table(const MetricsReport& r) {
  const EvalReport& e = r.eval;
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "fold " << r.fold << "  seed " << r.seed << "  hidden " << r.hidden << "  windows " << e.windows
     << "  frames " << e.frames << "\n\n";
  os << "class confusion (row-normalized, true x predicted)\n" << std::setw(10) << "";
  for (auto n : class_names()) os << std::setw(9) << n;
  os << "   acc\n";
  for (int a = 0; a < kNumClasses; ++a) {
    std::int64_t n = 0;
    for (auto v : e.class_confusion[a]) n += v;
    os << std::setw(10) << class_names()[a];
    for (int b = 0; b < kNumClasses; ++b) {
      os << std::setw(9) << (n ? static_cast<double>(e.class_confusion[a][b]) / n : 0.0);
    }
    os << std::setw(8) << e.class_accuracy[a] << "\n";
  }
  os << "\nstate confusion (row-normalized)\n" << std::setw(10) << "";
  for (int s = 0; s < kNumStates; ++s) os << std::setw(9) << s;
  os << "   acc\n";
  for (int a = 0; a < kNumStates; ++a) {
    std::int64_t n = 0;
    for (auto v : e.state_confusion[a]) n += v;
    os << std::setw(10) << a;
    for (int b = 0; b < kNumStates; ++b) {
      os << std::setw(9) << (n ? static_cast<double>(e.state_confusion[a][b]) / n : 0.0);
    }
    os << std::setw(8) << e.state_accuracy[a] << "\n";
  }
  os << "\nmacro accuracy " << e.macro_accuracy << "\n";
  os << "off-tridiagonal state mass " << e.off_tridiagonal_mass() << "\n";
  os << std::setprecision(4) << "tau " << e.tau << "  ECE before " << e.ece_before << "  after " << e.ece_after
     << "\n";
  return os.str();
}

void emit_report(const MetricsReport& r, const std::filesystem::path& path, const std::filesystem::path& table_path) {
  write_file_atomic(path, report_to_json(r).dump(2) + "\n");
  if (!table_path.empty()) write_file_atomic(table_path, report_table(r));
}

MetricsReport read_report(const std::filesystem::path& path) {
  try {
    return report_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::CorruptRecord, path.string() + ": not valid JSON");
  }
}

}  // namespace microgext
