// Copyright 2026 The vtsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vtsim/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "vtsim/error.hpp"

namespace vtsim {

namespace {

constexpr char kFrameMagic[4] = {'U', 'V', 'T', 'C'};
constexpr char kActionMagic[4] = {'U', 'V', 'A', 'L'};
constexpr std::uint32_t kMaxDim = 1u << 14;
constexpr std::uint32_t kMaxMarkers = 1u << 16;

// ----- little-endian encoding -----

class ByteSink {
 public:
  ByteSink(std::ostream& out, Sha256* hash) : out_(out), hash_(hash) {}

  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (hash_) hash_->update(data, n);
    count_ += n;
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 24)};
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<std::uint8_t>(v >> (8 * k));
    raw(b, 8);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32s(const std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(v.data(), v.size() * sizeof(float));
    } else {
      for (float x : v) f32(x);
    }
  }
  std::uint64_t count() const { return count_; }

 private:
  std::ostream& out_;
  Sha256* hash_;
  std::uint64_t count_ = 0;
};

class ByteSource {
 public:
  explicit ByteSource(std::istream& in) : in_(in) {}

  // Reads exactly n bytes or throws kTruncatedFile naming `where`.
  void raw(void* data, std::size_t n, const std::string& where) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCode::kTruncatedFile, "truncated file: " + where);
    }
  }
  std::size_t try_raw(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in_.gcount());
  }
  std::uint8_t u8(const std::string& where) {
    std::uint8_t v;
    raw(&v, 1, where);
    return v;
  }
  std::uint32_t u32(const std::string& where) {
    std::uint8_t b[4];
    raw(b, 4, where);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64(const std::string& where) {
    std::uint8_t b[8];
    raw(b, 8, where);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
  }
  float f32(const std::string& where) { return std::bit_cast<float>(u32(where)); }
  double f64(const std::string& where) { return std::bit_cast<double>(u64(where)); }
  void f32s(std::vector<float>& v, const std::string& where) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(v.data(), v.size() * sizeof(float), where);
    } else {
      for (float& x : v) x = f32(where);
    }
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

std::string frame_label(std::size_t k) { return "frame " + std::to_string(k); }

[[noreturn]] void invariant(const std::string& what) {
  throw Error(ErrorCode::kInvariantViolation, "episode invariant: " + what);
}

void write_frame(ByteSink& out, const Sample& s) {
  const FrameDims dims{static_cast<std::uint32_t>(s.i_marked.width),
                       static_cast<std::uint32_t>(s.i_marked.height),
                       static_cast<std::uint32_t>(s.marker_count())};
  out.raw(kFrameMagic, 4);
  out.u32(kFormatVersion);
  out.u32(dims.width);
  out.u32(dims.height);
  out.u32(dims.n_markers);
  out.u32(0);
  out.raw(s.i_marked.pixels.data(), s.i_marked.pixels.size());
  out.raw(s.i_pure.pixels.data(), s.i_pure.pixels.size());
  out.f32s(s.depth);
  out.f32s(s.markers_px);
  for (float v : s.pose) out.f32(v);
  out.f64(s.time);
}

void write_actions(ByteSink& out, const std::vector<ActionRecord>& actions) {
  out.raw(kActionMagic, 4);
  out.u32(static_cast<std::uint32_t>(actions.size()));
  for (const auto& a : actions) {
    out.u8(static_cast<std::uint8_t>(a.kind));
    out.u32(static_cast<std::uint32_t>(a.params.size() + 2));
    out.f64(a.t_start);
    out.f64(a.t_end);
    for (double p : a.params) out.f64(p);
  }
}

}  // namespace

// ----- sizes and validation -----

bool Sample::operator==(const Sample& o) const {
  const auto bits = [](const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  };
  return i_marked == o.i_marked && i_pure == o.i_pure && bits(depth, o.depth) &&
         bits(markers_px, o.markers_px) &&
         std::memcmp(pose.data(), o.pose.data(), sizeof(pose)) == 0 &&
         std::bit_cast<std::uint64_t>(time) == std::bit_cast<std::uint64_t>(o.time);
}

FrameDims FrameDims::of(const SensorProfile& profile) {
  return FrameDims{static_cast<std::uint32_t>(profile.image_width),
                   static_cast<std::uint32_t>(profile.image_height),
                   static_cast<std::uint32_t>(profile.marker_count())};
}

std::uint64_t frame_bytes(const FrameDims& d) {
  const std::uint64_t px = static_cast<std::uint64_t>(d.width) * d.height;
  return 24 + 2 * px * 3 + 4 * px + 8ull * d.n_markers + 28 + 8;
}

std::uint64_t action_bytes(const ActionRecord& a) { return 1 + 4 + 8 * (a.params.size() + 2); }

std::uint64_t episode_bytes(const FrameDims& dims, std::size_t frames,
                            const std::vector<ActionRecord>& actions) {
  std::uint64_t n = frames * frame_bytes(dims) + 8;
  for (const auto& a : actions) n += action_bytes(a);
  return n;
}

void validate_episode(const Episode& e) {
  if (e.samples.empty()) invariant("an episode needs at least one sample");
  const Sample& first = e.samples.front();
  const int w = first.i_marked.width;
  const int h = first.i_marked.height;
  const std::size_t n = first.marker_count();
  if (w <= 0 || h <= 0 || static_cast<std::uint32_t>(w) > kMaxDim ||
      static_cast<std::uint32_t>(h) > kMaxDim) {
    invariant("image dimensions out of range");
  }
  const std::size_t px = static_cast<std::size_t>(w) * h;
  double last_time = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < e.samples.size(); ++k) {
    const Sample& s = e.samples[k];
    const std::string where = " (" + frame_label(k) + ")";
    if (s.i_marked.width != w || s.i_marked.height != h || s.i_pure.width != w ||
        s.i_pure.height != h) {
      invariant("image dimensions differ between frames" + where);
    }
    if (s.i_marked.pixels.size() != px * 3 || s.i_pure.pixels.size() != px * 3) {
      invariant("pixel buffer size" + where);
    }
    if (s.depth.size() != px) invariant("depth size" + where);
    if (s.markers_px.size() % 2 != 0 || s.marker_count() != n) {
      invariant("marker count differs between frames" + where);
    }
    for (float d : s.depth) {
      if (!std::isfinite(d) || d < 0.0f) invariant("depth must be finite and >= 0" + where);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const float x = s.markers_px[2 * i];
      const float y = s.markers_px[2 * i + 1];
      if (!(x >= 0.0f && x <= static_cast<float>(w) && y >= 0.0f && y <= static_cast<float>(h))) {
        invariant("marker outside the image" + where);
      }
    }
    double qn = 0.0;
    for (int c = 0; c < 7; ++c) {
      if (!std::isfinite(s.pose[c])) invariant("pose must be finite" + where);
      if (c >= 3) qn += static_cast<double>(s.pose[c]) * s.pose[c];
    }
    if (std::abs(std::sqrt(qn) - 1.0) > 1e-5) {
      invariant("pose quaternion must be unit" + where);
    }
    if (!(s.time > last_time) || !std::isfinite(s.time)) {
      invariant("timestamps must increase strictly" + where);
    }
    last_time = s.time;
  }
  for (const auto& a : e.actions) {
    if (a.params.size() != action_param_count(a.kind)) invariant("action parameter count");
    if (!(a.t_end >= a.t_start)) invariant("action ends before it starts");
  }
}

// ----- write -----

void write_episode(std::ostream& out, const Episode& episode) {
  validate_episode(episode);
  ByteSink sink(out, nullptr);
  for (const auto& s : episode.samples) write_frame(sink, s);
  write_actions(sink, episode.actions);
}

WriteResult write_episode(const std::filesystem::path& path, const Episode& episode) {
  validate_episode(episode);
  const Sample& first = episode.samples.front();
  const FrameDims dims{static_cast<std::uint32_t>(first.i_marked.width),
                       static_cast<std::uint32_t>(first.i_marked.height),
                       static_cast<std::uint32_t>(first.marker_count())};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create '" + path.string() + "'");
  Sha256 hash;
  ByteSink sink(out, &hash);
  for (const auto& s : episode.samples) write_frame(sink, s);
  write_actions(sink, episode.actions);
  out.flush();
  if (!out) {
    out.close();
    std::error_code ec;
    std::filesystem::remove(path, ec);
    throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
  }
  const std::uint64_t expected = episode_bytes(dims, episode.samples.size(), episode.actions);
  if (sink.count() != expected) {
    throw Error(ErrorCode::kInvariantViolation, "episode byte length disagrees with layout");
  }
  return WriteResult{sink.count(), to_hex(hash.finish())};
}

// ----- read -----

EpisodeReader::EpisodeReader(std::istream& in, std::optional<FrameDims> expected)
    : in_(in), dims_(expected) {}

bool EpisodeReader::next(Sample& s) {
  if (done_) return false;
  ByteSource src(in_);
  const std::string where = frame_label(frames_);
  char magic[4];
  const std::size_t got = src.try_raw(magic, 4);
  if (got != 4) {
    throw Error(ErrorCode::kTruncatedFile,
                "truncated file: " + where + (got == 0 ? " or action log missing" : ""));
  }
  if (std::memcmp(magic, kActionMagic, 4) == 0) {
    read_actions();
    done_ = true;
    return false;
  }
  if (std::memcmp(magic, kFrameMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "bad magic at " + where);
  }
  const std::uint32_t version = src.u32(where);
  const std::uint32_t width = src.u32(where);
  const std::uint32_t height = src.u32(where);
  const std::uint32_t n_markers = src.u32(where);
  const std::uint32_t flags = src.u32(where);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported version " + std::to_string(version) + " at " + where);
  }
  if (flags != 0) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported flags " + std::to_string(flags) + " at " + where);
  }
  const FrameDims dims{width, height, n_markers};
  if (dims_) {
    if (!(dims == *dims_)) {
      throw Error(ErrorCode::kDimMismatch,
                  "dimension mismatch at " + where + ": " + std::to_string(width) + "x" +
                      std::to_string(height) + " with " + std::to_string(n_markers) + " markers");
    }
  } else {
    if (width == 0 || height == 0 || width > kMaxDim || height > kMaxDim ||
        n_markers > kMaxMarkers) {
      throw Error(ErrorCode::kDimMismatch, "implausible dimensions at " + where);
    }
    dims_ = dims;
  }
  const std::size_t px = static_cast<std::size_t>(width) * height;
  s.i_marked.width = s.i_pure.width = static_cast<int>(width);
  s.i_marked.height = s.i_pure.height = static_cast<int>(height);
  s.i_marked.pixels.resize(px * 3);
  s.i_pure.pixels.resize(px * 3);
  s.depth.resize(px);
  s.markers_px.resize(2 * static_cast<std::size_t>(n_markers));
  src.raw(s.i_marked.pixels.data(), px * 3, where);
  src.raw(s.i_pure.pixels.data(), px * 3, where);
  src.f32s(s.depth, where);
  src.f32s(s.markers_px, where);
  for (float& v : s.pose) v = src.f32(where);
  s.time = src.f64(where);
  s.frame_id = static_cast<std::uint32_t>(frames_);
  ++frames_;
  return true;
}

void EpisodeReader::read_actions() {
  ByteSource src(in_);
  const std::string where = "action log";
  const std::uint32_t count = src.u32(where);
  actions_.clear();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string at = "action " + std::to_string(k);
    const std::uint8_t kind = src.u8(at);
    if (kind > static_cast<std::uint8_t>(ActionKind::kRotate)) {
      throw Error(ErrorCode::kCorruptRecord, "unknown action kind " + std::to_string(kind) +
                                                 " at " + at);
    }
    const auto ak = static_cast<ActionKind>(kind);
    const std::uint32_t n = src.u32(at);
    if (n != action_param_count(ak) + 2) {
      throw Error(ErrorCode::kCorruptRecord,
                  "parameter count " + std::to_string(n) + " does not fit kind at " + at);
    }
    ActionRecord a;
    a.kind = ak;
    a.t_start = src.f64(at);
    a.t_end = src.f64(at);
    a.params.resize(n - 2);
    for (double& p : a.params) p = src.f64(at);
    actions_.push_back(std::move(a));
  }
  if (!src.at_end()) throw Error(ErrorCode::kTrailingData, "trailing bytes after action log");
}

Episode read_episode(std::istream& in, std::optional<FrameDims> expected) {
  EpisodeReader reader(in, expected);
  Episode e;
  Sample s;
  while (reader.next(s)) e.samples.push_back(s);
  e.actions = reader.actions();
  return e;
}

Episode read_episode(const std::filesystem::path& path, std::optional<FrameDims> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return read_episode(in, expected);
}

// ----- json -----

namespace {

using nlohmann::json;

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::kConfig, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kConfig, std::string("field '") + key + "': " + ex.what());
  }
}

}  // namespace

json profile_to_json(const SensorProfile& p) {
  json lights = json::array();
  json colors = json::array();
  for (int k = 0; k < 3; ++k) {
    lights.push_back(vec3_json(p.light_dirs[k]));
    colors.push_back(json::array({p.light_colors[k][0], p.light_colors[k][1],
                                  p.light_colors[k][2]}));
  }
  return json{{"name", p.name},
              {"image_width", p.image_width},
              {"image_height", p.image_height},
              {"gel_width", p.gel_width},
              {"gel_height", p.gel_height},
              {"gel_thickness", p.gel_thickness},
              {"max_indent", p.max_indent},
              {"elastic_sigma", p.elastic_sigma},
              {"marker_rows", p.marker_rows},
              {"marker_cols", p.marker_cols},
              {"marker_radius_px", p.marker_radius_px},
              {"marker_darkness", p.marker_darkness},
              {"friction_mu", p.friction_mu},
              {"light_dirs", lights},
              {"light_colors", colors},
              {"ambient", json::array({p.ambient[0], p.ambient[1], p.ambient[2]})},
              {"d_max", p.d_max}};
}

SensorProfile profile_from_json(const json& j) {
  SensorProfile p;
  p.name = get_field<std::string>(j, "name");
  p.image_width = get_field<int>(j, "image_width");
  p.image_height = get_field<int>(j, "image_height");
  p.gel_width = get_field<double>(j, "gel_width");
  p.gel_height = get_field<double>(j, "gel_height");
  p.gel_thickness = get_field<double>(j, "gel_thickness");
  p.max_indent = get_field<double>(j, "max_indent");
  p.elastic_sigma = get_field<double>(j, "elastic_sigma");
  p.marker_rows = get_field<int>(j, "marker_rows");
  p.marker_cols = get_field<int>(j, "marker_cols");
  p.marker_radius_px = get_field<double>(j, "marker_radius_px");
  p.marker_darkness = get_field<double>(j, "marker_darkness");
  p.friction_mu = get_field<double>(j, "friction_mu");
  const auto lights = get_field<std::vector<std::array<double, 3>>>(j, "light_dirs");
  const auto colors = get_field<std::vector<std::array<double, 3>>>(j, "light_colors");
  if (lights.size() != 3 || colors.size() != 3) {
    throw Error(ErrorCode::kConfig, "profile needs exactly three lights");
  }
  for (int k = 0; k < 3; ++k) {
    p.light_dirs[k] = Vec3(lights[k][0], lights[k][1], lights[k][2]);
    p.light_colors[k] = colors[k];
  }
  p.ambient = get_field<std::array<double, 3>>(j, "ambient");
  p.d_max = get_field<double>(j, "d_max");
  return p;
}

json manifest_to_json(const Manifest& m) {
  json shapes = json::array();
  for (const auto& s : m.shape_list) {
    json base = nullptr;
    if (s.base) base = json{{"width", s.base->width}, {"depth", s.base->depth}, {"height", s.base->height}};
    shapes.push_back(json{{"label", s.label}, {"kind", s.kind}, {"params", s.params}, {"base", base}});
  }
  json episodes = json::array();
  for (const auto& e : m.episode_index) {
    json offsets = json::array();
    for (const auto& o : e.remaining_offsets) offsets.push_back(json::array({o.x(), o.y()}));
    episodes.push_back(json{{"file", e.file},
                            {"shape", e.shape},
                            {"shape_index", e.shape_index},
                            {"episode_index", e.episode_index},
                            {"samples", e.samples},
                            {"bytes", e.bytes},
                            {"sha256", e.sha256},
                            {"seed", e.seed},
                            {"mode", e.mode},
                            {"budget_exhausted", e.budget_exhausted},
                            {"remaining_offsets", offsets}});
  }
  json discarded = json::array();
  for (const auto& d : m.discarded) {
    discarded.push_back(json{{"shape", d.shape},
                             {"shape_index", d.shape_index},
                             {"episode_index", d.episode_index},
                             {"seed", d.seed},
                             {"reason", d.reason}});
  }
  return json{{"format_version", m.format_version},
              {"created_utc", m.created_utc},
              {"global_seed", m.global_seed},
              {"prng_id", m.prng_id},
              {"sensor_profile", profile_to_json(m.sensor_profile)},
              {"shape_list", shapes},
              {"episode_index", episodes},
              {"total_samples", m.total_samples},
              {"config_digest", m.config_digest},
              {"discarded", discarded},
              {"generator", m.generator.is_null() ? json::object() : m.generator}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.format_version = get_field<std::uint32_t>(j, "format_version");
  m.created_utc = get_field<std::string>(j, "created_utc");
  m.global_seed = get_field<std::uint64_t>(j, "global_seed");
  m.prng_id = get_field<std::string>(j, "prng_id");
  m.sensor_profile = profile_from_json(get_field<json>(j, "sensor_profile"));
  for (const auto& s : get_field<json>(j, "shape_list")) {
    ShapeEntry e;
    e.label = get_field<std::string>(s, "label");
    e.kind = get_field<std::string>(s, "kind");
    e.params = get_field<std::vector<double>>(s, "params");
    const json base = get_field<json>(s, "base");
    if (!base.is_null()) {
      e.base = BaseDims{get_field<double>(base, "width"), get_field<double>(base, "depth"),
                        get_field<double>(base, "height")};
    }
    m.shape_list.push_back(std::move(e));
  }
  for (const auto& x : get_field<json>(j, "episode_index")) {
    EpisodeEntry e;
    e.file = get_field<std::string>(x, "file");
    e.shape = get_field<std::string>(x, "shape");
    e.shape_index = get_field<std::uint32_t>(x, "shape_index");
    e.episode_index = get_field<std::uint32_t>(x, "episode_index");
    e.samples = get_field<std::uint64_t>(x, "samples");
    e.bytes = get_field<std::uint64_t>(x, "bytes");
    e.sha256 = get_field<std::string>(x, "sha256");
    e.seed = get_field<std::uint64_t>(x, "seed");
    e.mode = get_field<std::string>(x, "mode");
    e.budget_exhausted = get_field<bool>(x, "budget_exhausted");
    for (const auto& o : get_field<std::vector<std::array<double, 2>>>(x, "remaining_offsets")) {
      e.remaining_offsets.emplace_back(o[0], o[1]);
    }
    m.episode_index.push_back(std::move(e));
  }
  m.total_samples = get_field<std::uint64_t>(j, "total_samples");
  m.config_digest = get_field<std::string>(j, "config_digest");
  for (const auto& x : get_field<json>(j, "discarded")) {
    DiscardedEntry d;
    d.shape = get_field<std::string>(x, "shape");
    d.shape_index = get_field<std::uint32_t>(x, "shape_index");
    d.episode_index = get_field<std::uint32_t>(x, "episode_index");
    d.seed = get_field<std::uint64_t>(x, "seed");
    d.reason = get_field<std::string>(x, "reason");
    m.discarded.push_back(std::move(d));
  }
  m.generator = j.contains("generator") ? j.at("generator") : json::object();
  return m;
}

std::string manifest_text(const Manifest& m) { return manifest_to_json(m).dump(2) + "\n"; }

std::filesystem::path manifest_path(const std::filesystem::path& dir) {
  return dir / "manifest.json";
}

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
  const auto path = manifest_path(dir);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create '" + path.string() + "'");
  out << manifest_text(m);
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

Manifest read_manifest(const std::filesystem::path& dir) {
  const auto path = manifest_path(dir);
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kMissingManifest, "no manifest at '" + path.string() + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kCorruptRecord, std::string("manifest is not valid JSON: ") + ex.what());
  }
  try {
    return manifest_from_json(j);
  } catch (const Error& ex) {
    throw Error(ErrorCode::kCorruptRecord, std::string("manifest schema: ") + ex.what());
  }
}

// ----- verification -----

std::string_view discrepancy_name(Discrepancy::Kind kind) {
  switch (kind) {
    case Discrepancy::Kind::kMissingFile: return "missing_file";
    case Discrepancy::Kind::kLength: return "length";
    case Discrepancy::Kind::kHash: return "hash";
    case Discrepancy::Kind::kCount: return "count";
  }
  return "unknown";
}

VerifyReport verify_dataset(const std::filesystem::path& dir) {
  const Manifest m = read_manifest(dir);
  const FrameDims dims = FrameDims::of(m.sensor_profile);
  VerifyReport report;
  std::uint64_t listed = 0;
  for (const auto& e : m.episode_index) {
    listed += e.samples;
    ++report.episodes_checked;
    const auto path = dir / e.file;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      report.discrepancies.push_back({Discrepancy::Kind::kMissingFile, e.file, "file not found"});
      continue;
    }
    const auto size = std::filesystem::file_size(path, ec);
    if (ec || size != e.bytes) {
      report.discrepancies.push_back({Discrepancy::Kind::kLength, e.file,
                                      "expected " + std::to_string(e.bytes) + " bytes, found " +
                                          std::to_string(size)});
      continue;
    }
    const std::string hash = to_hex(sha256_file(path));
    if (hash != e.sha256) {
      report.discrepancies.push_back({Discrepancy::Kind::kHash, e.file,
                                      "expected " + e.sha256 + ", found " + hash});
      continue;
    }
    std::ifstream in(path, std::ios::binary);
    EpisodeReader reader(in, dims);
    Sample s;
    std::uint64_t count = 0;
    try {
      while (reader.next(s)) ++count;
    } catch (const Error& ex) {
      report.discrepancies.push_back({Discrepancy::Kind::kCount, e.file,
                                      std::string("unreadable: ") + ex.what()});
      continue;
    }
    report.samples_counted += count;
    if (count != e.samples) {
      report.discrepancies.push_back({Discrepancy::Kind::kCount, e.file,
                                      "expected " + std::to_string(e.samples) + " samples, found " +
                                          std::to_string(count)});
    }
  }
  if (listed != m.total_samples) {
    report.discrepancies.push_back({Discrepancy::Kind::kCount, "manifest.json",
                                    "total_samples " + std::to_string(m.total_samples) +
                                        " but episodes list " + std::to_string(listed)});
  }
  return report;
}

}  // namespace vtsim
