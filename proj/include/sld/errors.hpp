// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sld {

/// Dimension disagreement between tensors that must be aligned.
class shape_error : public std::runtime_error {
public:
  explicit shape_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed on-disk artifact (checkpoint, IDX, CSV). Carries the byte
/// offset at which parsing failed, -1 if not applicable.
class format_error : public std::runtime_error {
public:
  format_error(const std::string& msg, std::ptrdiff_t offset = -1)
      : std::runtime_error(offset >= 0 ? msg + " (offset " + std::to_string(offset) + ")"
                                       : msg),
        offset_(offset) {}
  std::ptrdiff_t offset() const noexcept { return offset_; }

private:
  std::ptrdiff_t offset_;
};

/// Invalid or inconsistent run configuration. The message names the
/// offending field; the CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training aborted (non-finite loss, etc.); maps to exit code 1.
class training_error : public std::runtime_error {
public:
  explicit training_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sld
