#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>

namespace wvr {

inline constexpr const char* kArtifactVersion = "wvr 0.1.0";

/// Every stochastic quantity travels with its uncertainty and provenance.
/// std_error is 0 only for deterministic methods (quadrature, closed form).
struct EstimatorReport {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::string method;
};

/// Both sides of the variational formula plus their difference.
/// gap = lhs.value - rhs.value; gap_se combines the standard errors in
/// quadrature (conservative under common random numbers).
struct GapReport {
  EstimatorReport lhs;
  EstimatorReport rhs;
  double gap = 0.0;
  double gap_se = 0.0;
};

inline GapReport make_gap_report(EstimatorReport lhs, EstimatorReport rhs) {
  GapReport g;
  g.gap = lhs.value - rhs.value;
  g.gap_se = std::sqrt(lhs.std_error * lhs.std_error +
                       rhs.std_error * rhs.std_error);
  g.lhs = std::move(lhs);
  g.rhs = std::move(rhs);
  return g;
}

}  // namespace wvr
