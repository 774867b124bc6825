/* Copyright 2026 The DIDAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DIDAN_TOOLS_CLI_H_
#define DIDAN_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace didan::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumerical = 3,
};

// Runs one subcommand. `args` excludes the program name. Machine output goes
// to `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Worker cap from DIDAN_THREADS; 1 when unset. Throws std::invalid_argument
// on a value that is not a positive integer.
std::size_t thread_limit();

}  // namespace didan::cli

#endif  // DIDAN_TOOLS_CLI_H_
