// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal subprocess launching for external fixers and metric plugins.

#pragma once

#include <string>
#include <vector>

namespace aerosplat {

struct ProcessResult {
  int exit_code = -1;     // -1 when the child was killed by a signal
  std::string captured;   // stdout, when requested
};

// Runs argv[0] (looked up on PATH when it has no '/') with the given
// arguments and waits for it. No shell is involved. Throws FixerError when
// the process cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, bool capture_stdout = false);

}  // namespace aerosplat
