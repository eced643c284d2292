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


#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "png.hpp"
#include "run_config.hpp"
#include "test_support.hpp"
#include "vtsim/dataset.hpp"
#include "vtsim/learn.hpp"

namespace vtsim::cli {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

constexpr const char* kTinyConfig = R"(schema_version = 1

[sensor]
profile = "gelsight_mini"
image_width = 40
image_height = 30
marker_radius_px = 1.5

[generate]
seed = 3
shapes = ["sphere", "cube"]
episodes_per_shape = 1
frames_per_episode = 4

[learn]
input_w = 16
input_h = 8
latent_dim = 8
channels = [2, 3, 4]
marker_hidden = 4
pose_hidden = 4
batch = 3
epochs = 3
)";

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

class CliDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<TempDir>("cli");
    spit(config(), kTinyConfig);
    const Result r = cli({"generate", "--config", config().string(), "--out", data().string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { dir_.reset(); }

  static fs::path config() { return dir_->path() / "run.toml"; }
  static fs::path data() { return dir_->path() / "data"; }
  static fs::path scratch(const std::string& name) { return dir_->path() / name; }

  static std::unique_ptr<TempDir> dir_;
};

std::unique_ptr<TempDir> CliDataset::dir_;

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::kConfig), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::kMissingManifest), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorCode::kTruncatedFile), kExitIntegrity);
  EXPECT_EQ(exit_code_for(ErrorCode::kDivergence), kExitNumeric);
  EXPECT_EQ(error_line("io", kExitIo, "a \"b\"\nc"),
            "error: code=io kind=io message=\"a \\\"b\\\"\\nc\"");
}

TEST(Cli, VersionAndUsage) {
  const Result v = cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("format_version 1"), std::string::npos);
  EXPECT_NE(v.out.find(kPrngId), std::string::npos);
  const Result none = cli({});
  EXPECT_EQ(none.code, kExitConfig);
  EXPECT_EQ(none.err.rfind("error: code=usage kind=config", 0), 0u) << none.err;
  EXPECT_EQ(cli({"generate"}).code, kExitConfig);
}

TEST(Cli, MalformedConfigsExitWithConfigCode) {
  TempDir dir("cfg");
  const std::vector<std::string> bad = {
      "schema_version = 1\n[generate\n",
      "schema_version = 2\n",
      "[generate]\nseed = 1\n",
      "schema_version = 1\n[generate]\nbogus = 1\n",
      "schema_version = 1\n[generate]\nepisodes_per_shape = \"two\"\n",
      "schema_version = 1\n[generate]\nshapes = [\"blob\"]\n",
      "schema_version = 1\n[sensor]\nmax_indent = -1.0\n",
      "schema_version = 1\n[learn]\ninput_w = 20\n",
  };
  for (std::size_t k = 0; k < bad.size(); ++k) {
    const fs::path p = dir / ("bad" + std::to_string(k) + ".toml");
    spit(p, bad[k]);
    const Result r = cli({"generate", "--config", p.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, kExitConfig) << bad[k];
    EXPECT_EQ(r.err.rfind("error: code=config kind=config", 0), 0u) << r.err;
    EXPECT_FALSE(fs::exists(dir / "o"));
  }
}

TEST(Cli, ParsedConfigCarriesValues) {
  const RunConfig rc = parse_run_config(kTinyConfig);
  EXPECT_EQ(rc.generate.seed, 3u);
  EXPECT_EQ(rc.generate.shapes.size(), 2u);
  EXPECT_EQ(rc.generate.profile.image_width, 40);
  EXPECT_EQ(rc.learn.channels, (std::array<int, 3>{2, 3, 4}));
  EXPECT_EQ(rc.validity(rc.generate.profile).max_penetration_mm,
            rc.generate.profile.max_indent);
}

TEST_F(CliDataset, GenerateWritesAVerifiedDataset) {
  const VerifyReport v = verify_dataset(data());
  EXPECT_TRUE(v.clean());
  const Manifest m = read_manifest(data());
  EXPECT_EQ(m.global_seed, 3u);
  EXPECT_EQ(m.episode_index.size(), 2u);
  EXPECT_EQ(m.total_samples, 8u);
  EXPECT_EQ(m.episode_index[0].file, "episodes/ep_sphere_0000.uvtc");
}

TEST_F(CliDataset, SeedFlagOverridesConfig) {
  const fs::path out = scratch("seeded");
  const Result r = cli({"--seed", "9", "generate", "--config", config().string(), "--out",
                        out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_manifest(out).global_seed, 9u);
  EXPECT_NE(r.out.find("global_seed 9"), std::string::npos);
  EXPECT_NE(read_manifest(out).episode_index[0].sha256,
            read_manifest(data()).episode_index[0].sha256);
}

TEST_F(CliDataset, TrainIsDeterministicAndWritesCurve) {
  const fs::path a = scratch("a.params"), b = scratch("b.params");
  for (const fs::path& p : {a, b}) {
    const Result r =
        cli({"train", "--config", config().string(), "--data", data().string(), "--out", p.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(a), slurp(b));
  const std::string csv = slurp(a.string() + ".loss.csv");
  EXPECT_EQ(csv, slurp(b.string() + ".loss.csv"));
  EXPECT_EQ(csv.rfind("epoch,loss\n1,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const LearnerParams params = read_params(a);
  EXPECT_EQ(params.arch.latent_dim, 8);
  EXPECT_EQ(params.arch.n_markers, 63);
}

TEST_F(CliDataset, TrainWithoutDataFails) {
  const Result r = cli({"train", "--config", config().string(), "--data",
                        scratch("nowhere").string(), "--out", scratch("x.params").string()});
  EXPECT_EQ(r.code, kExitIo);
  EXPECT_NE(r.err.find("code=missing_manifest"), std::string::npos) << r.err;
}

TEST_F(CliDataset, EvalReportMatchesRecount) {
  const fs::path report = scratch("report.json");
  const Result r = cli({"eval", "--data", data().string(), "--out", report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = nlohmann::json::parse(slurp(report));
  const Manifest m = read_manifest(data());
  ASSERT_EQ(j["trials"].size(), m.episode_index.size());
  std::uint64_t valid = 0, frames = 0;
  for (const auto& t : j["trials"]) {
    valid += t["valid"].get<bool>() ? 1 : 0;
    frames += t["frames"].get<std::uint64_t>();
  }
  EXPECT_EQ(j["summary"]["valid"], valid);
  EXPECT_EQ(j["summary"]["invalid"], m.episode_index.size() - valid);
  EXPECT_EQ(frames, m.total_samples);
  EXPECT_EQ(j["integrity"]["samples_counted"], m.total_samples);
}

TEST_F(CliDataset, EvalRejectsCorruptedEpisode) {
  const fs::path copy = scratch("corrupt");
  fs::copy(data(), copy, fs::copy_options::recursive);
  const fs::path ep = copy / read_manifest(copy).episode_index[1].file;
  std::string bytes = slurp(ep);
  bytes[bytes.size() / 2] ^= 0x5a;
  spit(ep, bytes);
  const Result r = cli({"eval", "--data", copy.string()});
  EXPECT_EQ(r.code, kExitIntegrity);
  EXPECT_EQ(r.err.rfind("error: code=hash kind=integrity", 0), 0u) << r.err;
}

TEST_F(CliDataset, RenderWritesThreeImages) {
  const fs::path prefix = scratch("frame");
  const Result r = cli({"render", "--data", data().string(), "--episode", "ep_cube_0000.uvtc",
                        "--frame", "2", "--out", prefix.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Episode ep = read_episode(data() / "episodes/ep_cube_0000.uvtc");
  for (const char* name : {"marked", "pure", "depth"}) {
    const TactileImage img = read_png(prefix.string() + "_" + name + ".png");
    EXPECT_EQ(img.width, 40);
    EXPECT_EQ(img.height, 30);
  }
  EXPECT_EQ(read_png(prefix.string() + "_marked.png").pixels, ep.samples[2].i_marked.pixels);
  EXPECT_EQ(read_png(prefix.string() + "_pure.png").pixels, ep.samples[2].i_pure.pixels);
}

TEST_F(CliDataset, RenderRejectsOutOfRangeSelections) {
  const std::string prefix = scratch("oob").string();
  EXPECT_EQ(cli({"render", "--data", data().string(), "--episode", "0", "--frame", "4", "--out",
                 prefix})
                .code,
            kExitConfig);
  EXPECT_EQ(cli({"render", "--data", data().string(), "--episode", "7", "--frame", "0", "--out",
                 prefix})
                .code,
            kExitConfig);
  EXPECT_FALSE(fs::exists(prefix + "_marked.png"));
}

TEST(CliBinary, ExitStatusReachesTheShell) {
  const std::string bin = VTSIM_BINARY;
  int status = std::system((bin + " --version > /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  status = std::system((bin + " frobnicate > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitConfig);
}

}  // namespace
}  // namespace vtsim::cli
