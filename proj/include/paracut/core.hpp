#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace paracut {

using index_t = std::uint32_t;

/// Binary labeling; one byte per node, values 0 or 1.
using Labeling = std::vector<std::uint8_t>;

/// Input violates a documented precondition of the model or an operation.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, parsed or written.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw invalid_input(what);
}

inline void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw invalid_input(std::string(what) + ": length " + std::to_string(got) +
                        " does not match node count " + std::to_string(want));
  }
}

}  // namespace detail
}  // namespace paracut
