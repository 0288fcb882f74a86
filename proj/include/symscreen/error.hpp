// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <stdexcept>
#include <string>

namespace symscreen {

/// Input violates a documented contract (bad record, bad argument, unknown id).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced entity does not exist.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation is not valid in the entity's current state.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A remote backend or the filesystem failed at runtime.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace symscreen
