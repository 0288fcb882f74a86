// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace symscreen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs the `symscreen` command line. `args[0]` is the program name.
/// Returns 0 on success, 1 on usage or validation errors, 2 on runtime or
/// backend failures.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace symscreen::cli
