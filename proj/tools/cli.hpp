/*
 * Copyright 2026 The InfoAttr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: explain, fit-sampler, evaluate, sanity, serve and
// rerun. Exit codes: 0 ok, 1 internal, 2 invalid flags or arguments, 3 I/O or
// data, 4 wire protocol.

#pragma once

#include <string>
#include <vector>

namespace infoattr::cli {

inline constexpr char kToolVersion[] = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitProtocol = 4,
};

// args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace infoattr::cli
