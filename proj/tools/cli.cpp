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

#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "png.hpp"
#include "run_config.hpp"
#include "vtsim/datagen.hpp"
#include "vtsim/dataset.hpp"
#include "vtsim/eval.hpp"
#include "vtsim/hash.hpp"
#include "vtsim/learn.hpp"
#include "vtsim/rng.hpp"

#ifndef VTSIM_VERSION
#define VTSIM_VERSION "0.0.0"
#endif

namespace vtsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownShape:
    case ErrorCode::kUnknownSensor:
      return kExitConfig;
    case ErrorCode::kIo:
    case ErrorCode::kMissingManifest:
      return kExitIo;
    case ErrorCode::kBadMagic:
    case ErrorCode::kUnsupportedVersion:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kDimMismatch:
    case ErrorCode::kCorruptRecord:
    case ErrorCode::kTrailingData:
    case ErrorCode::kInvariantViolation:
    case ErrorCode::kMarkerCountMismatch:
      return kExitIntegrity;
    case ErrorCode::kNonconvergentRaymarch:
    case ErrorCode::kDomain:
    case ErrorCode::kNonfiniteGradient:
    case ErrorCode::kDivergence:
      return kExitNumeric;
    default:
      return kExitOther;
  }
}

std::string_view exit_kind_name(int exit_code) {
  switch (exit_code) {
    case kExitConfig:
      return "config";
    case kExitIo:
      return "io";
    case kExitIntegrity:
      return "integrity";
    case kExitNumeric:
      return "numeric";
    default:
      return "other";
  }
}

std::string error_line(std::string_view code, int exit_code, std::string_view message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') {
      escaped += '\\';
      escaped += c;
    } else if (c == '\n') {
      escaped += "\\n";
    } else {
      escaped += c;
    }
  }
  return "error: code=" + std::string(code) + " kind=" + std::string(exit_kind_name(exit_code)) +
         " message=\"" + escaped + "\"";
}

namespace {

// Raised for manifest discrepancies found by verify_dataset.
struct IntegrityFailure : std::runtime_error {
  IntegrityFailure(std::string code, const std::string& msg)
      : std::runtime_error(msg), code(std::move(code)) {}
  std::string code;
};

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::string curve;
  std::string episode;
  std::size_t frame = 0;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

RunConfig config_or_default(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.threads) {
    if (*o.threads < 1) throw Error(ErrorCode::kConfig, "--threads must be >= 1");
    rc.generate.threads = *o.threads;
  }
  return rc;
}

void require_clean(const fs::path& dir) {
  const VerifyReport r = verify_dataset(dir);
  if (!r.clean()) {
    const Discrepancy& d = r.discrepancies.front();
    throw IntegrityFailure(std::string(discrepancy_name(d.kind)),
                           std::to_string(r.discrepancies.size()) + " discrepancies; first: " +
                               d.file + ": " + d.detail);
  }
}

json learner_config_json(const LearnerConfig& c) {
  return json{{"input_w", c.input_w},       {"input_h", c.input_h},
              {"latent_dim", c.latent_dim}, {"channels", c.channels},
              {"marker_hidden", c.marker_hidden}, {"pose_hidden", c.pose_hidden},
              {"lambda_s", c.lambda_s},     {"lambda_c", c.lambda_c},
              {"lambda_p", c.lambda_p},     {"lr", c.lr},
              {"momentum", c.momentum},     {"batch", c.batch},
              {"epochs", c.epochs},         {"seed", c.seed}};
}

int cmd_generate(const Options& o, std::ostream& out) {
  RunConfig rc = config_or_default(o);
  if (o.seed) rc.generate.seed = *o.seed;
  const GenReport r = generate_dataset(rc.generate, o.out);
  out << "dataset " << o.out << "\n"
      << "episodes_written " << r.episodes_written << "\n"
      << "episodes_discarded " << r.episodes_discarded << "\n"
      << "total_samples " << r.manifest.total_samples << "\n"
      << "global_seed " << r.manifest.global_seed << "\n"
      << "config_digest " << r.manifest.config_digest << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig rc = config_or_default(o);
  if (o.seed) rc.learn.seed = *o.seed;
  require_clean(o.data);
  Normalizer norm;
  int n_markers = 0;
  const std::vector<Example> data =
      load_examples(o.data, rc.learn, rc.max_examples, &norm, &n_markers);
  const TrainResult r = train(rc.learn, data, n_markers);
  const Manifest m = read_manifest(o.data);
  write_params(o.out, r.params, norm,
               json{{"learner", learner_config_json(rc.learn)},
                    {"examples", data.size()},
                    {"dataset_config_digest", m.config_digest},
                    {"epoch_loss", r.epoch_loss}});
  const fs::path curve = o.curve.empty() ? fs::path(o.out + ".loss.csv") : fs::path(o.curve);
  std::ofstream csv(curve, std::ios::trunc);
  if (!csv) throw Error(ErrorCode::kIo, "cannot create '" + curve.string() + "'");
  csv << "epoch,loss\n";
  char buf[64];
  for (std::size_t k = 0; k < r.epoch_loss.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", k + 1, r.epoch_loss[k]);
    csv << buf;
  }
  if (!csv) throw Error(ErrorCode::kIo, "write failed for '" + curve.string() + "'");
  out << "examples " << data.size() << "\n"
      << "params " << r.params.w.size() << "\n"
      << "first_loss " << r.epoch_loss.front() << "\n"
      << "final_loss " << r.epoch_loss.back() << "\n"
      << "params_file " << o.out << "\n"
      << "loss_curve " << curve.string() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunConfig rc = config_or_default(o);
  const fs::path dir = o.data;
  const VerifyReport integrity = verify_dataset(dir);
  if (!integrity.clean()) {
    const Discrepancy& d = integrity.discrepancies.front();
    throw IntegrityFailure(std::string(discrepancy_name(d.kind)),
                           std::to_string(integrity.discrepancies.size()) +
                               " discrepancies; first: " + d.file + ": " + d.detail);
  }
  const Manifest m = read_manifest(dir);
  const ValidityConfig vc = rc.validity(m.sensor_profile);
  const FrameDims dims = FrameDims::of(m.sensor_profile);
  json trials = json::array();
  std::uint64_t valid = 0, frames = 0;
  for (const EpisodeEntry& e : m.episode_index) {
    const Episode ep = read_episode(dir / e.file, dims);
    const TrialVerdict v = judge_trial(ep, m.sensor_profile, vc);
    json t = verdict_to_json(v);
    t["file"] = e.file;
    t["shape"] = e.shape;
    t["episode_index"] = e.episode_index;
    t["frames"] = ep.samples.size();
    trials.push_back(std::move(t));
    valid += v.valid ? 1 : 0;
    frames += ep.samples.size();
  }
  const json report{
      {"dataset", dir.string()},
      {"validity",
       {{"max_penetration_mm", vc.max_penetration_mm},
        {"max_slip_mm", vc.max_slip_mm},
        {"min_frames", vc.min_frames}}},
      {"integrity",
       {{"clean", true},
        {"episodes_checked", integrity.episodes_checked},
        {"samples_counted", integrity.samples_counted}}},
      {"trials", trials},
      {"summary",
       {{"trials", m.episode_index.size()},
        {"valid", valid},
        {"invalid", m.episode_index.size() - valid},
        {"frames", frames}}}};
  if (o.out.empty()) {
    out << report.dump(2) << "\n";
  } else {
    std::ofstream f(o.out, std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot create '" + o.out + "'");
    f << report.dump(2) << "\n";
    out << "trials " << m.episode_index.size() << "\nvalid " << valid << "\nreport " << o.out
        << "\n";
  }
  return kExitOk;
}

const EpisodeEntry& select_episode(const Manifest& m, const std::string& key) {
  if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos) {
    const std::size_t k = std::stoull(key);
    if (k >= m.episode_index.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "episode " + key + " out of range (dataset has " +
                      std::to_string(m.episode_index.size()) + ")");
    }
    return m.episode_index[k];
  }
  for (const EpisodeEntry& e : m.episode_index) {
    if (e.file == key || fs::path(e.file).filename() == key) return e;
  }
  throw Error(ErrorCode::kInvalidArgument, "no episode named '" + key + "'");
}

int cmd_render(const Options& o, std::ostream& out) {
  const fs::path dir = o.data;
  const Manifest m = read_manifest(dir);
  const EpisodeEntry& e = select_episode(m, o.episode);
  const Episode ep = read_episode(dir / e.file, FrameDims::of(m.sensor_profile));
  if (o.frame >= ep.samples.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "frame " + std::to_string(o.frame) + " out of range (episode has " +
                    std::to_string(ep.samples.size()) + ")");
  }
  const Sample& s = ep.samples[o.frame];
  const std::array<std::pair<std::string, TactileImage>, 3> images = {{
      {"marked", s.i_marked},
      {"pure", s.i_pure},
      {"depth", depth_colormap(s.depth, s.i_marked.width, s.i_marked.height,
                               m.sensor_profile.max_indent)},
  }};
  for (const auto& [name, img] : images) {
    const fs::path path = o.out + "_" + name + ".png";
    write_png(path, img);
    out << name << " " << path.string() << "\n";
  }
  return kExitOk;
}

std::string version_text() {
  return std::string("vtsim ") + VTSIM_VERSION + "\nformat_version " +
         std::to_string(kFormatVersion) + "\nprng " + std::string(kPrngId);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visuo-tactile dataset generator, learner and evaluator", "vtsim"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_text());
  Options o;
  app.add_option("--seed", o.seed, "Override the configured seed");
  app.add_option("--threads", o.threads, "Worker cap; outputs do not depend on it");

  CLI::App* gen = app.add_subcommand("generate", "Generate a dataset");
  gen->add_option("--config", o.config, "TOML run configuration")->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output dataset directory")->required();

  CLI::App* tr = app.add_subcommand("train", "Train the learner on a dataset");
  tr->add_option("--config", o.config, "TOML run configuration")->check(CLI::ExistingFile);
  tr->add_option("--data", o.data, "Dataset directory")->required();
  tr->add_option("--out", o.out, "Parameter file to write")->required();
  tr->add_option("--curve", o.curve, "Loss-curve CSV (default <out>.loss.csv)");

  CLI::App* ev = app.add_subcommand("eval", "Judge every episode of a dataset");
  ev->add_option("--config", o.config, "TOML run configuration")->check(CLI::ExistingFile);
  ev->add_option("--data", o.data, "Dataset directory")->required();
  ev->add_option("--out", o.out, "JSON report path (default stdout)");

  CLI::App* rd = app.add_subcommand("render", "Write PNG previews of one frame");
  rd->add_option("--data", o.data, "Dataset directory")->required();
  rd->add_option("--episode", o.episode, "Manifest index or episode file name")->required();
  rd->add_option("--frame", o.frame, "Frame index")->required();
  rd->add_option("--out", o.out, "Output prefix; writes <out>_{marked,pure,depth}.png")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << error_line("usage", kExitConfig, e.what()) << "\n";
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    return cmd_render(o, out);
  } catch (const IntegrityFailure& e) {
    err << error_line(e.code, kExitIntegrity, e.what()) << "\n";
    return kExitIntegrity;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    err << error_line(error_code_name(e.code()), code, e.what()) << "\n";
    return code;
  } catch (const fs::filesystem_error& e) {
    err << error_line("io", kExitIo, e.what()) << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << error_line("internal", kExitOther, e.what()) << "\n";
    return kExitOther;
  }
}

}  // namespace vtsim::cli
