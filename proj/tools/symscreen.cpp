// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include <iostream>
#include <string>
#include <vector>

#include "symscreen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return symscreen::cli::dispatch(args, std::cout, std::cerr);
}
