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


#include <sstream>

#include <benchmark/benchmark.h>

#include "test_support.hpp"
#include "vtsim/dataset.hpp"

namespace vtsim {
namespace {

Episode bench_episode(int frames) {
  const SensorProfile p = default_profile("gelsight_mini");
  Rng rng(1);
  return testing::random_episode(rng, p.image_width, p.image_height, p.marker_count(), frames, 8);
}

void BM_WriteEpisode(benchmark::State& state) {
  const Episode e = bench_episode(static_cast<int>(state.range(0)));
  std::int64_t bytes = 0;
  for (auto _ : state) {
    std::ostringstream out;
    write_episode(out, e);
    bytes += static_cast<std::int64_t>(out.tellp());
  }
  state.SetBytesProcessed(bytes);
}
BENCHMARK(BM_WriteEpisode)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_ReadEpisode(benchmark::State& state) {
  const Episode e = bench_episode(static_cast<int>(state.range(0)));
  std::ostringstream out;
  write_episode(out, e);
  const std::string bytes = out.str();
  for (auto _ : state) {
    std::istringstream in(bytes);
    benchmark::DoNotOptimize(read_episode(in));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_ReadEpisode)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace vtsim
