#pragma once

#include <stdexcept>
#include <string>

namespace rldialog {

// Bad arguments, malformed records, violated preconditions. Maps to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem and format failures: missing files, truncated checkpoints. Exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rldialog
