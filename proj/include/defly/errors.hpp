// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace defly {

/// Input violates a documented contract (dimensions, ranges, formats).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace defly
