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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vtsim/render.hpp"

namespace vtsim::cli {

// 8-bit RGB PNG. Throws Error(kIo).
void write_png(const std::filesystem::path& path, const TactileImage& image);

// Reads an 8-bit RGB PNG written by write_png.
TactileImage read_png(const std::filesystem::path& path);

// Maps depth in [0, max_depth] through a dark-to-bright colormap.
TactileImage depth_colormap(const std::vector<float>& depth, int width, int height,
                            double max_depth);

}  // namespace vtsim::cli
