// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cbct {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitValidation = 3 };

/// Entry point of the `cbct` tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cbct
