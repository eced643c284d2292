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

#include "vtsim/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <set>
#include <thread>
#include <variant>

#include "vtsim/error.hpp"
#include "vtsim/render.hpp"

namespace vtsim {

using nlohmann::json;

std::string_view gen_mode_name(GenMode mode) {
  return mode == GenMode::kSweep ? "sweep" : "correct";
}

GenMode gen_mode_from_name(std::string_view name) {
  if (name == "sweep") return GenMode::kSweep;
  if (name == "correct") return GenMode::kCorrect;
  throw Error(ErrorCode::kConfig, "unknown mode '" + std::string(name) + "'");
}

std::vector<ShapeSpec> standard_shapes() {
  std::vector<ShapeSpec> out;
  for (ShapeKind kind : all_shape_kinds()) {
    out.push_back(ShapeSpec{std::string(shape_kind_name(kind)), IndenterShape::standard(kind)});
  }
  return out;
}

// ----- configuration -----

std::pair<double, double> GenConfig::resolved_delta_th_range() const {
  if (delta_th_range) return *delta_th_range;
  return {profile.d_max - 0.7 * profile.max_indent, profile.d_max - 0.2 * profile.max_indent};
}

ControlGains GenConfig::gains() const {
  ControlGains g = ControlGains::for_profile(profile);
  g.v_fast = v_fast;
  g.v_slow = v_slow;
  g.dt = dt;
  return g;
}

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::kConfig, "generation config: " + what);
}

bool label_ok(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-';
  });
}

// Aperture that leaves `gap` in front of the tip and `gap + clearance`
// behind the base.
double open_aperture(const GenConfig& c, const IndenterShape& shape) {
  const auto box = shape.local_bounds();
  return box.max().z() - box.min().z() + 2.0 * c.gap + c.clearance;
}

}  // namespace

void GenConfig::validate() const {
  try {
    profile.validate();
    contact.validate();
    gripper.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (shapes.empty()) config_error("shapes must not be empty");
  std::set<std::string> labels;
  for (const auto& s : shapes) {
    if (!label_ok(s.label)) config_error("shape label '" + s.label + "' must match [A-Za-z0-9-]+");
    if (!labels.insert(s.label).second) config_error("duplicate shape label '" + s.label + "'");
  }
  if (episodes_per_shape < 1) config_error("episodes_per_shape must be >= 1");
  if (frames_per_episode < 1) config_error("frames_per_episode must be >= 1");
  const auto [lo, hi] = resolved_delta_th_range();
  if (!(lo > 0.0 && lo <= hi && hi < profile.d_max)) {
    config_error("delta_th_range must satisfy 0 < lo <= hi < d_max");
  }
  if (!(rotation_range >= 0.0 && std::isfinite(rotation_range))) {
    config_error("rotation_range must be >= 0");
  }
  if (!(translation_range >= 0.0 && std::isfinite(translation_range))) {
    config_error("translation_range must be >= 0");
  }
  if (!(correction_cap > 0.0)) config_error("correction_cap must be positive");
  if (!(correction_tol > 0.0)) config_error("correction_tol must be positive");
  if (correction_budget < 0) config_error("correction_budget must be >= 0");
  if (!(approach_distance >= 0.0)) config_error("approach_distance must be >= 0");
  if (approach_steps < 1) config_error("approach_steps must be >= 1");
  if (!(gap > 0.0)) config_error("gap must be positive");
  if (!(clearance >= 0.0)) config_error("clearance must be >= 0");
  if (threads < 1) config_error("threads must be >= 1");
  try {
    ControlGains g = gains();
    g.delta_th = lo;
    g.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  for (const auto& s : shapes) {
    if (open_aperture(*this, s.shape) > gripper.aperture_max) {
      config_error("shape '" + s.label + "' does not fit inside aperture_max");
    }
  }
}

GenConfig desk_scale_config() { return GenConfig{}; }

GenConfig full_scale_config() {
  GenConfig c;
  c.episodes_per_shape = 280;
  c.frames_per_episode = 50;
  return c;
}

json gen_config_to_json(const GenConfig& c) {
  json shapes = json::array();
  for (const auto& s : c.shapes) {
    json base = nullptr;
    if (s.shape.base()) {
      base = json{{"width", s.shape.base()->width},
                  {"depth", s.shape.base()->depth},
                  {"height", s.shape.base()->height}};
    }
    shapes.push_back(json{{"label", s.label},
                          {"kind", std::string(shape_kind_name(s.shape.kind()))},
                          {"params", s.shape.params()},
                          {"base", base}});
  }
  const auto [lo, hi] = c.resolved_delta_th_range();
  json settle = nullptr;
  if (c.gripper.settle_tol) settle = *c.gripper.settle_tol;
  return json{
      {"seed", c.seed},
      {"shapes", shapes},
      {"episodes_per_shape", c.episodes_per_shape},
      {"frames_per_episode", c.frames_per_episode},
      {"delta_th_range", json::array({lo, hi})},
      {"rotation_range", c.rotation_range},
      {"translation_range", c.translation_range},
      {"sensor", profile_to_json(c.profile)},
      {"mode", std::string(gen_mode_name(c.mode))},
      {"correction",
       {{"cap", c.correction_cap}, {"tol", c.correction_tol}, {"budget", c.correction_budget}}},
      {"scene",
       {{"approach_distance", c.approach_distance},
        {"approach_steps", c.approach_steps},
        {"gap", c.gap},
        {"clearance", c.clearance}}},
      {"contact",
       {{"k_bulge", c.contact.k_bulge},
        {"k_press", c.contact.k_press},
        {"decay_length", c.contact.decay_length},
        {"max_marker_disp", c.contact.max_marker_disp},
        {"raymarch_tol", c.contact.raymarch_tol},
        {"raymarch_min_step", c.contact.raymarch_min_step},
        {"raymarch_margin", c.contact.raymarch_margin},
        {"raymarch_max_steps", c.contact.raymarch_max_steps}}},
      {"gripper",
       {{"aperture_max", c.gripper.aperture_max},
        {"max_steps", c.gripper.max_steps},
        {"settle_tol", settle}}},
      {"control", {{"v_fast", c.v_fast}, {"v_slow", c.v_slow}, {"dt", c.dt}}},
      {"created_utc", c.created_utc},
      {"threads", c.threads},
  };
}

namespace {

json digest_view(const GenConfig& c) {
  json j = gen_config_to_json(c);
  j.erase("seed");
  j.erase("threads");
  j.erase("created_utc");
  return j;
}

}  // namespace

Digest config_digest(const GenConfig& config) { return sha256(digest_view(config).dump()); }

// ----- scenes and samples -----

Scene make_scene(const GenConfig& c, const ShapeSpec& spec) {
  const auto box = spec.shape.local_bounds();
  const double tip = box.max().z();
  const double a0 = open_aperture(c, spec.shape);
  // Shape +z faces finger 0 (world +y); shape +y points down.
  const Quat tilt(Eigen::AngleAxisd(-std::numbers::pi / 2, Vec3::UnitX()));
  const double zc = box.max().y();
  Scene scene{SceneObject{spec.shape, Pose(Vec3(0.0, 0.5 * a0 - c.gap - tip, zc), tilt)},
              GripperState{}};
  scene.start.aperture = a0;
  scene.start.wrist_pose = Pose::from_translation(Vec3(0.0, 0.0, zc));
  return scene;
}

Sample capture_sample(const GripperSim& sim, double time) {
  const SensorProfile& p = sim.profile();
  const ContactState& c = sim.contact(0);
  const PixelGrid grid = PixelGrid::from_profile(p);
  Sample s;
  s.time = time;
  s.i_pure = shade(p, c.depth);
  const float w = static_cast<float>(grid.width);
  const float h = static_cast<float>(grid.height);
  std::vector<Vec2> centers;
  centers.reserve(c.markers.size());
  s.markers_px.reserve(2 * c.markers.size());
  for (const Vec2& m : c.markers.displaced) {
    const Vec2 px = grid.to_pixel_unchecked(m);
    const float x = std::clamp(static_cast<float>(px.x()), 0.0f, w);
    const float y = std::clamp(static_cast<float>(px.y()), 0.0f, h);
    s.markers_px.push_back(x);
    s.markers_px.push_back(y);
    centers.emplace_back(x, y);
  }
  s.i_marked = stamp_markers_px(s.i_pure, centers, p.marker_radius_px, p.marker_darkness);
  s.depth.resize(c.depth.values.size());
  std::transform(c.depth.values.begin(), c.depth.values.end(), s.depth.begin(),
                 [](double v) { return static_cast<float>(v); });
  if (!sim.object()) throw Error(ErrorCode::kInvariantViolation, "capture without an object");
  const Pose rel = relative_pose(sim.sensor_pose(0), sim.object()->pose);
  const auto q = rel.quaternion_wxyz();
  s.pose = {static_cast<float>(rel.translation().x()), static_cast<float>(rel.translation().y()),
            static_cast<float>(rel.translation().z()), static_cast<float>(q[0]),
            static_cast<float>(q[1]), static_cast<float>(q[2]), static_cast<float>(q[3])};
  return s;
}

namespace {

GripperSim make_sim(const GenConfig& c, const Scene& scene) {
  GripperSim sim(c.profile, c.contact, c.gains(), c.gripper, scene.start);
  sim.set_object(scene.object, /*anchored=*/true);
  return sim;
}

Vec3 random_axis(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(r * std::cos(phi), r * std::sin(phi), z).normalized();
}

void push_sample(Episode& e, const GripperSim& sim) {
  Sample s = capture_sample(sim, sim.state().time);
  s.frame_id = static_cast<std::uint32_t>(e.samples.size());
  e.samples.push_back(std::move(s));
}

// Gel center minus the contact centroid, world x/z; nullopt without contact.
std::optional<Vec2> misalignment(const GripperSim& sim) {
  const auto& centroid = sim.contact(0).centroid;
  if (!centroid) return std::nullopt;
  const Pose sensor = sim.sensor_pose(0);
  const Vec3 world = transform_point(sensor, Vec3(centroid->x(), centroid->y(), 0.0));
  const Vec3& center = sensor.translation();
  return Vec2(center.x() - world.x(), center.z() - world.z());
}

}  // namespace

Episode generate_sweep_episode(const GenConfig& c, const ShapeSpec& shape, std::uint64_t seed) {
  c.validate();
  Rng rng(seed);
  const auto [lo, hi] = c.resolved_delta_th_range();
  const double delta_th = rng.uniform(lo, hi);

  Scene scene = make_scene(c, shape);
  scene.start.wrist_pose = Pose::from_translation(scene.start.wrist_pose.translation() +
                                                  Vec3(0.0, 0.0, c.approach_distance));
  GripperSim sim = make_sim(c, scene);
  sim.move(Vec3(0.0, 0.0, -c.approach_distance), c.approach_steps);
  sim.run_grasp(delta_th);

  Episode e;
  e.seed = seed;
  e.config_digest = config_digest(c);
  push_sample(e, sim);
  for (int f = 1; f < c.frames_per_episode; ++f) {
    if (f % 2 == 1) {
      const double dx = rng.uniform(-c.translation_range, c.translation_range);
      const double dz = rng.uniform(-c.translation_range, c.translation_range);
      sim.move(Vec3(dx, 0.0, dz), 1);
    } else {
      const Vec3 axis = random_axis(rng);
      const double angle = rng.uniform(-c.rotation_range, c.rotation_range);
      sim.rotate(axis, angle, 1);
    }
    push_sample(e, sim);
  }
  e.actions = sim.actions();
  return e;
}

Episode generate_correction_episode(const GenConfig& c, const ShapeSpec& shape,
                                    std::uint64_t seed, std::optional<Vec2> offset) {
  c.validate();
  Rng rng(seed);
  const auto [lo, hi] = c.resolved_delta_th_range();
  const double delta_th = rng.uniform(lo, hi);
  Vec2 injected;
  injected.x() = rng.uniform(-c.translation_range, c.translation_range);
  injected.y() = rng.uniform(-c.translation_range, c.translation_range);
  if (offset) injected = *offset;

  Scene scene = make_scene(c, shape);
  scene.start.wrist_pose = Pose::from_translation(scene.start.wrist_pose.translation() +
                                                  Vec3(injected.x(), 0.0, injected.y()));
  GripperSim sim = make_sim(c, scene);
  sim.probe(Vec3(0.0, -1.0, 0.0), delta_th);

  Episode e;
  e.seed = seed;
  e.config_digest = config_digest(c);
  push_sample(e, sim);
  std::optional<Vec2> err = misalignment(sim);
  e.remaining_offsets.push_back(err.value_or(Vec2::Zero()));
  int steps = 0;
  bool converged = false;
  while (err) {
    if (err->norm() < c.correction_tol) {
      converged = true;
      break;
    }
    if (steps >= c.correction_budget) break;
    Vec2 step = -*err;
    if (step.norm() > c.correction_cap) step *= c.correction_cap / step.norm();
    sim.move(Vec3(step.x(), 0.0, step.y()), 1);
    ++steps;
    push_sample(e, sim);
    err = misalignment(sim);
    e.remaining_offsets.push_back(err.value_or(Vec2::Zero()));
  }
  e.budget_exhausted = !converged;
  e.actions = sim.actions();
  return e;
}

// ----- dataset -----

std::string episode_file_name(const std::string& label, std::uint32_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04u", index);
  return "ep_" + label + "_" + buf + ".uvtc";
}

namespace {

struct Job {
  std::uint32_t shape_index;
  std::uint32_t episode_index;
  std::uint64_t seed;
};

struct JobResult {
  std::variant<std::monostate, EpisodeEntry, DiscardedEntry> outcome;
  std::exception_ptr error;
  bool wrote_file = false;
};

}  // namespace

GenReport generate_dataset(const GenConfig& c, const std::filesystem::path& out_dir) {
  c.validate();
  namespace fs = std::filesystem;
  const fs::path episodes_dir = out_dir / "episodes";
  std::error_code ec;
  fs::create_directories(episodes_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create '" + episodes_dir.string() + "': " + ec.message());
  }

  std::vector<Job> jobs;
  for (std::uint32_t s = 0; s < c.shapes.size(); ++s) {
    for (std::uint32_t k = 0; k < static_cast<std::uint32_t>(c.episodes_per_shape); ++k) {
      jobs.push_back(Job{s, k, derive_seed(c.seed, s, k)});
    }
  }
  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  const auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    const ShapeSpec& spec = c.shapes[job.shape_index];
    JobResult& r = results[i];
    try {
      Episode ep;
      try {
        ep = c.mode == GenMode::kSweep ? generate_sweep_episode(c, spec, job.seed)
                                       : generate_correction_episode(c, spec, job.seed);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNoContactTimeout) throw;
        r.outcome = DiscardedEntry{spec.label, job.shape_index, job.episode_index, job.seed,
                                   std::string(error_code_name(err.code())) + ": " + err.what()};
        return;
      }
      for (auto& s : ep.samples) {
        s.shape_id = job.shape_index;
        s.episode_id = job.episode_index;
      }
      const std::string rel = "episodes/" + episode_file_name(spec.label, job.episode_index);
      r.wrote_file = true;
      const WriteResult w = write_episode(out_dir / rel, ep);
      EpisodeEntry entry;
      entry.file = rel;
      entry.shape = spec.label;
      entry.shape_index = job.shape_index;
      entry.episode_index = job.episode_index;
      entry.samples = ep.samples.size();
      entry.bytes = w.bytes;
      entry.sha256 = w.sha256;
      entry.seed = job.seed;
      entry.mode = std::string(gen_mode_name(c.mode));
      entry.budget_exhausted = ep.budget_exhausted;
      entry.remaining_offsets = ep.remaining_offsets;
      r.outcome = std::move(entry);
    } catch (...) {
      r.error = std::current_exception();
      failed = true;
    }
  };
  const auto worker = [&] {
    for (;;) {
      if (failed) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      run_job(i);
    }
  };
  const int n_threads = std::min<int>(c.threads, static_cast<int>(jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const auto cleanup = [&] {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (!results[i].wrote_file) continue;
      const auto& spec = c.shapes[jobs[i].shape_index];
      fs::remove(episodes_dir / episode_file_name(spec.label, jobs[i].episode_index), ec);
    }
    fs::remove(manifest_path(out_dir), ec);
  };
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!results[i].error) continue;
    cleanup();
    const std::string where = "episode " + c.shapes[jobs[i].shape_index].label + "/" +
                              std::to_string(jobs[i].episode_index) + ": ";
    try {
      std::rethrow_exception(results[i].error);
    } catch (const Error& err) {
      throw Error(err.code(), where + err.what());
    } catch (const std::exception& err) {
      throw Error(ErrorCode::kIo, where + err.what());
    }
  }

  GenReport report;
  Manifest& m = report.manifest;
  m.created_utc = c.created_utc;
  m.global_seed = c.seed;
  m.prng_id = std::string(kPrngId);
  m.sensor_profile = c.profile;
  for (const auto& s : c.shapes) {
    m.shape_list.push_back(ShapeEntry{s.label, std::string(shape_kind_name(s.shape.kind())),
                                      s.shape.params(), s.shape.base()});
  }
  for (auto& r : results) {
    if (auto* e = std::get_if<EpisodeEntry>(&r.outcome)) {
      m.total_samples += e->samples;
      m.episode_index.push_back(std::move(*e));
      ++report.episodes_written;
    } else if (auto* d = std::get_if<DiscardedEntry>(&r.outcome)) {
      m.discarded.push_back(std::move(*d));
      ++report.episodes_discarded;
    }
  }
  m.config_digest = to_hex(config_digest(c));
  m.generator = digest_view(c);
  try {
    write_manifest(out_dir, m);
  } catch (...) {
    cleanup();
    throw;
  }
  return report;
}

}  // namespace vtsim
