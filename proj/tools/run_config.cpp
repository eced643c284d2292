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

#include "run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "vtsim/dataset.hpp"
#include "vtsim/error.hpp"

namespace vtsim::cli {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

class Section {
 public:
  Section(const toml::table* table, std::string name) : t_(table), name_(std::move(name)) {}

  bool present() const { return t_ != nullptr; }
  const toml::table* table() const { return t_; }

  void allow(std::initializer_list<std::string_view> keys) const {
    if (!t_) return;
    const std::set<std::string_view> ok(keys);
    for (const auto& [k, v] : *t_) {
      if (!ok.count(k.str())) fail("unknown key '" + where(k.str()) + "'");
    }
  }

  template <typename T>
  void get(std::string_view key, T& out) const {
    const toml::node* n = node(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, bool>) {
      out = want(n->value_exact<bool>(), key, "a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      out = want(n->value_exact<std::string>(), key, "a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!n->is_number()) fail("'" + where(key) + "' must be a number");
      out = static_cast<T>(*n->value<double>());
    } else {
      const auto v = want(n->value_exact<std::int64_t>(), key, "an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v < 0) fail("'" + where(key) + "' must be non-negative");
      }
      if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
          static_cast<std::uint64_t>(v) > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
        fail("'" + where(key) + "' is out of range");
      }
      out = static_cast<T>(v);
    }
  }

  std::vector<double> numbers(std::string_view key) const {
    std::vector<double> out;
    const toml::array* a = array(key);
    for (const auto& e : *a) {
      if (!e.is_number()) fail("'" + where(key) + "' must hold numbers");
      out.push_back(*e.value<double>());
    }
    return out;
  }

  std::vector<std::string> strings(std::string_view key) const {
    std::vector<std::string> out;
    for (const auto& e : *array(key)) {
      const auto s = e.value_exact<std::string>();
      if (!s) fail("'" + where(key) + "' must hold strings");
      out.push_back(*s);
    }
    return out;
  }

  const toml::node* node(std::string_view key) const { return t_ ? t_->get(key) : nullptr; }
  std::string where(std::string_view key) const { return name_ + "." + std::string(key); }

 private:
  template <typename V>
  V want(std::optional<V> v, std::string_view key, const char* what) const {
    if (!v) fail("'" + where(key) + "' must be " + what);
    return *v;
  }
  const toml::array* array(std::string_view key) const {
    const toml::node* n = node(key);
    if (!n || !n->is_array()) fail("'" + where(key) + "' must be an array");
    return n->as_array();
  }

  const toml::table* t_;
  std::string name_;
};

Section section(const toml::table& root, std::string_view name) {
  const toml::node* n = root.get(name);
  if (n && !n->is_table()) fail("'" + std::string(name) + "' must be a table");
  return Section(n ? n->as_table() : nullptr, std::string(name));
}

SensorProfile parse_sensor(const Section& s) {
  std::string name = "gelsight_mini";
  s.get("profile", name);
  SensorProfile p;
  try {
    p = default_profile(name);
  } catch (const Error& e) {
    fail("sensor.profile: " + std::string(e.what()));
  }
  if (!s.present()) return p;
  nlohmann::json j = profile_to_json(p);
  static const std::set<std::string_view> kInts = {"image_width", "image_height", "marker_rows",
                                                   "marker_cols"};
  static const std::set<std::string_view> kReals = {
      "gel_width",       "gel_height",       "gel_thickness", "max_indent", "elastic_sigma",
      "marker_radius_px", "marker_darkness", "friction_mu",   "d_max"};
  for (const auto& [k, v] : *s.table()) {
    const std::string_view key = k.str();
    if (key == "profile") continue;
    if (kInts.count(key)) {
      int x = 0;
      s.get(key, x);
      j[std::string(key)] = x;
    } else if (kReals.count(key)) {
      double x = 0.0;
      s.get(key, x);
      j[std::string(key)] = x;
    } else {
      fail("unknown key '" + s.where(key) + "'");
    }
  }
  try {
    p = profile_from_json(j);
    p.validate();
  } catch (const Error& e) {
    fail("sensor: " + std::string(e.what()));
  }
  return p;
}

std::vector<ShapeSpec> parse_shapes(const Section& g) {
  std::vector<ShapeSpec> out;
  if (g.node("shapes")) {
    const std::vector<ShapeSpec> catalog = standard_shapes();
    for (const std::string& name : g.strings("shapes")) {
      const auto it = std::find_if(catalog.begin(), catalog.end(),
                                   [&](const ShapeSpec& s) { return s.label == name; });
      if (it == catalog.end()) fail("generate.shapes: unknown shape '" + name + "'");
      out.push_back(*it);
    }
  } else {
    out = standard_shapes();
  }
  if (const toml::node* n = g.node("custom_shapes")) {
    const toml::array* arr = n->as_array();
    if (!arr) fail("'generate.custom_shapes' must be an array of tables");
    for (const auto& e : *arr) {
      if (!e.is_table()) fail("'generate.custom_shapes' must be an array of tables");
      const Section c(e.as_table(), "generate.custom_shapes[]");
      c.allow({"label", "kind", "params", "base"});
      std::string label, kind;
      c.get("label", label);
      c.get("kind", kind);
      if (label.empty() || kind.empty()) fail("custom shapes need 'label' and 'kind'");
      std::optional<BaseDims> base = BaseDims{};
      if (c.node("base")) {
        const auto b = c.numbers("base");
        if (b.size() == 0) {
          base.reset();
        } else if (b.size() == 3) {
          base = BaseDims{b[0], b[1], b[2]};
        } else {
          fail("'generate.custom_shapes[].base' must be [] or [width, depth, height]");
        }
      }
      try {
        out.push_back(ShapeSpec{label, IndenterShape::from_name(kind, c.numbers("params"), base)});
      } catch (const Error& e) {
        fail("custom shape '" + label + "': " + e.what());
      }
    }
  }
  return out;
}

}  // namespace

ValidityConfig RunConfig::validity(const SensorProfile& profile) const {
  ValidityConfig v = ValidityConfig::for_profile(profile);
  if (max_penetration_mm) v.max_penetration_mm = *max_penetration_mm;
  v.max_slip_mm = max_slip_mm;
  v.min_frames = min_frames;
  v.validate();
  return v;
}

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    fail(msg.str());
  }
  const Section top(&root, "");
  top.allow({"schema_version", "generate", "sensor", "contact", "gripper", "learn", "eval"});
  const toml::node* sv = root.get("schema_version");
  if (!sv) fail("missing schema_version");
  const auto version = sv->value_exact<std::int64_t>();
  if (!version || *version != kSchemaVersion) {
    fail("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }

  RunConfig rc;
  GenConfig& g = rc.generate;
  g.profile = parse_sensor(section(root, "sensor"));

  const Section gen = section(root, "generate");
  gen.allow({"seed", "mode", "shapes", "custom_shapes", "episodes_per_shape",
             "frames_per_episode", "delta_th_range", "rotation_range", "translation_range",
             "correction_cap", "correction_tol", "correction_budget", "approach_distance",
             "approach_steps", "gap", "clearance", "v_fast", "v_slow", "dt", "created_utc",
             "threads"});
  gen.get("seed", g.seed);
  if (gen.node("mode")) {
    std::string mode;
    gen.get("mode", mode);
    g.mode = gen_mode_from_name(mode);
  }
  g.shapes = parse_shapes(gen);
  gen.get("episodes_per_shape", g.episodes_per_shape);
  gen.get("frames_per_episode", g.frames_per_episode);
  if (gen.node("delta_th_range")) {
    const auto r = gen.numbers("delta_th_range");
    if (r.size() != 2) fail("'generate.delta_th_range' must be [lo, hi]");
    g.delta_th_range = std::pair{r[0], r[1]};
  }
  gen.get("rotation_range", g.rotation_range);
  gen.get("translation_range", g.translation_range);
  gen.get("correction_cap", g.correction_cap);
  gen.get("correction_tol", g.correction_tol);
  gen.get("correction_budget", g.correction_budget);
  gen.get("approach_distance", g.approach_distance);
  gen.get("approach_steps", g.approach_steps);
  gen.get("gap", g.gap);
  gen.get("clearance", g.clearance);
  gen.get("v_fast", g.v_fast);
  gen.get("v_slow", g.v_slow);
  gen.get("dt", g.dt);
  gen.get("created_utc", g.created_utc);
  gen.get("threads", g.threads);

  const Section contact = section(root, "contact");
  contact.allow({"k_bulge", "k_press", "decay_length", "max_marker_disp", "raymarch_tol",
                 "raymarch_min_step", "raymarch_margin", "raymarch_max_steps"});
  contact.get("k_bulge", g.contact.k_bulge);
  contact.get("k_press", g.contact.k_press);
  contact.get("decay_length", g.contact.decay_length);
  contact.get("max_marker_disp", g.contact.max_marker_disp);
  contact.get("raymarch_tol", g.contact.raymarch_tol);
  contact.get("raymarch_min_step", g.contact.raymarch_min_step);
  contact.get("raymarch_margin", g.contact.raymarch_margin);
  contact.get("raymarch_max_steps", g.contact.raymarch_max_steps);

  const Section gripper = section(root, "gripper");
  gripper.allow({"aperture_max", "max_steps", "settle_tol"});
  gripper.get("aperture_max", g.gripper.aperture_max);
  gripper.get("max_steps", g.gripper.max_steps);
  if (gripper.node("settle_tol")) {
    double tol = 0.0;
    gripper.get("settle_tol", tol);
    g.gripper.settle_tol = tol;
  }

  const Section learn = section(root, "learn");
  LearnerConfig& l = rc.learn;
  learn.allow({"input_w", "input_h", "latent_dim", "channels", "marker_hidden", "pose_hidden",
               "lambda_s", "lambda_c", "lambda_p", "lr", "momentum", "batch", "epochs", "seed",
               "max_examples"});
  learn.get("input_w", l.input_w);
  learn.get("input_h", l.input_h);
  learn.get("latent_dim", l.latent_dim);
  if (learn.node("channels")) {
    const auto c = learn.numbers("channels");
    if (c.size() != 3) fail("'learn.channels' must hold three widths");
    for (int k = 0; k < 3; ++k) {
      if (c[k] != std::floor(c[k])) fail("'learn.channels' must hold integers");
      l.channels[k] = static_cast<int>(c[k]);
    }
  }
  learn.get("marker_hidden", l.marker_hidden);
  learn.get("pose_hidden", l.pose_hidden);
  learn.get("lambda_s", l.lambda_s);
  learn.get("lambda_c", l.lambda_c);
  learn.get("lambda_p", l.lambda_p);
  learn.get("lr", l.lr);
  learn.get("momentum", l.momentum);
  learn.get("batch", l.batch);
  learn.get("epochs", l.epochs);
  learn.get("seed", l.seed);
  learn.get("max_examples", rc.max_examples);

  const Section ev = section(root, "eval");
  ev.allow({"max_penetration_mm", "max_slip_mm", "min_frames"});
  if (ev.node("max_penetration_mm")) {
    double v = 0.0;
    ev.get("max_penetration_mm", v);
    rc.max_penetration_mm = v;
  }
  ev.get("max_slip_mm", rc.max_slip_mm);
  ev.get("min_frames", rc.min_frames);

  try {
    g.validate();
    l.validate();
    (void)rc.validity(g.profile);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(e.what());
  }
  if (rc.max_examples < 1) fail("'learn.max_examples' must be >= 1");
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

}  // namespace vtsim::cli
