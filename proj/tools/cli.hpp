// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <iosfwd>

namespace convsearch::cli {

/// Entry point of the `convsearch` tool. Returns the process exit code:
/// 0 success, 1 validation error (bad arguments, config or inputs),
/// 2 runtime error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace convsearch::cli
