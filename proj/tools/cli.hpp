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

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "vtsim/error.hpp"

namespace vtsim::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitIntegrity = 4,
  kExitNumeric = 5,
};

int exit_code_for(ErrorCode code);
// "config", "io", "integrity", "numeric" or "other".
std::string_view exit_kind_name(int exit_code);

// One line: error: code=<code> kind=<kind> message="<escaped>"
std::string error_line(std::string_view code, int exit_code, std::string_view message);

// Entry point shared by the binary and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vtsim::cli
