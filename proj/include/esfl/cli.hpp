/*
 * Copyright 2026 The ESFL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace esfl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitRuntimeError = 2;

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "ESFL_OUTPUT_DIR";

// Runs the command line (args excludes the program name) and returns the
// exit status. Report files are written only after all work succeeded.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace esfl
