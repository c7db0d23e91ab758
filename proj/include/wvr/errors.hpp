#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wvr {

/// A computation produced non-finite values. Where the failure happened inside
/// a time-stepping loop, node() reports the grid node.
class numeric_error : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit numeric_error(const std::string& what, std::size_t node = npos)
      : std::runtime_error(what), node_(node) {}

  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

/// The request is outside the supported parameter range (e.g. quadrature
/// dimension too large), as opposed to being malformed.
class unsupported_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wvr
