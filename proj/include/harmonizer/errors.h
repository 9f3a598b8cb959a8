#pragma once

#include <stdexcept>
#include <string>

namespace harmonizer {

/// File could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is structurally invalid (bad WAV chunk, malformed token stream,
/// corrupt model table, ...).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace harmonizer
