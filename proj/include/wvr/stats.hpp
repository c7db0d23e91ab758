#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "wvr/errors.hpp"

namespace wvr {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

/// Two-pass mean / sample standard deviation / standard error. Serial
/// accumulation keeps the result independent of how the data was produced.
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.n = xs.size();
  if (r.n == 0) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double x : xs) {
      const double d = x - r.mean;
      ss += d * d;
    }
    r.sd = std::sqrt(ss / static_cast<double>(r.n - 1));
    r.se = r.sd / std::sqrt(static_cast<double>(r.n));
  }
  return r;
}

inline double sample_variance(std::span<const double> xs) {
  const MeanSe m = mean_se(xs);
  return m.sd * m.sd;
}

struct LogMeanExp {
  double value = 0.0;  // log(mean exp(x))
  double se = 0.0;     // delta-method standard error of `value`
  double max = 0.0;
};

/// Numerically stable log-mean-exp with a delta-method standard error:
/// se = sd(exp(x - max)) / (mean(exp(x - max)) * sqrt(n)). Everything happens
/// in the max-shifted domain, so inputs may span hundreds of e-folds.
inline LogMeanExp log_mean_exp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("log_mean_exp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    if (std::isnan(x)) throw numeric_error("log_mean_exp: NaN input value");
    m = std::max(m, x);
  }
  if (!std::isfinite(m))
    throw numeric_error("log_mean_exp: all inputs are -inf");
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - m);
  const double n = static_cast<double>(xs.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) {
    const double d = std::exp(x - m) - mean;
    ss += d * d;
  }
  const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  LogMeanExp r;
  r.value = m + std::log(mean);
  r.se = sd / (mean * std::sqrt(n));
  r.max = m;
  return r;
}

/// Streaming log(sum exp(a_i)) that rescales on the fly; used by quadrature
/// loops that do not want to materialize their terms.
class StreamingLogSum {
 public:
  void add(double a) {
    if (std::isnan(a)) throw numeric_error("StreamingLogSum: NaN term");
    if (a == -std::numeric_limits<double>::infinity()) return;
    if (a <= max_) {
      sum_ += std::exp(a - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - a) + 1.0;
      max_ = a;
    }
  }

  double log_sum() const {
    if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

/// Streaming Sum w_i s_i / Sum w_i with w_i = exp(a_i), computed in the
/// max-shifted domain. The shift cancels in the ratio.
class StreamingTiltedMean {
 public:
  explicit StreamingTiltedMean(std::size_t dim) : num_(dim, 0.0) {}

  void add(double a, std::span<const double> s) {
    if (std::isnan(a)) throw numeric_error("StreamingTiltedMean: NaN weight");
    if (a == -std::numeric_limits<double>::infinity()) return;
    if (a <= max_) {
      const double w = std::exp(a - max_);
      den_ += w;
      for (std::size_t j = 0; j < num_.size(); ++j) num_[j] += w * s[j];
    } else {
      const double r = std::exp(max_ - a);
      den_ = den_ * r + 1.0;
      for (std::size_t j = 0; j < num_.size(); ++j) num_[j] = num_[j] * r + s[j];
      max_ = a;
    }
  }

  void result(std::span<double> out) const {
    if (den_ <= 0.0 || !std::isfinite(den_))
      throw numeric_error("StreamingTiltedMean: degenerate normalization");
    for (std::size_t j = 0; j < num_.size(); ++j) out[j] = num_[j] / den_;
  }

  double log_den() const { return max_ + std::log(den_); }

 private:
  std::vector<double> num_;
  double den_ = 0.0;
  double max_ = -std::numeric_limits<double>::infinity();
};

/// In-place Cholesky of a small dense SPD matrix (row-major); keeps the lower
/// triangle. Sizes here never exceed a handful of mark times.
inline void cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (s <= 0.0)
          throw numeric_error("cholesky: matrix not positive definite");
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  }
}

/// Solves L L^T x = b in place given the Cholesky factor L.
inline void chol_solve(const std::vector<double>& L, std::size_t n,
                       std::span<double> x) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * x[k];
    x[i] = s / L[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * x[k];
    x[ii] = s / L[ii * n + ii];
  }
}

inline double chol_logdet(const std::vector<double>& L, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::log(L[i * n + i]);
  return 2.0 * s;
}

/// A finite-dimensional Gaussian law, mean + row-major covariance.
struct Gaussian {
  std::vector<double> mean;
  std::vector<double> cov;
  std::size_t dim() const { return mean.size(); }
};

/// KL(p || q) between Gaussians in closed form.
inline double gaussian_kl(const Gaussian& p, const Gaussian& q) {
  const std::size_t n = p.dim();
  if (q.dim() != n) throw std::invalid_argument("gaussian_kl: dimension mismatch");
  std::vector<double> Lq = q.cov;
  cholesky(Lq, n);
  std::vector<double> Lp = p.cov;
  cholesky(Lp, n);

  double trace = 0.0;
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = p.cov[i * n + j];
    chol_solve(Lq, n, col);
    trace += col[j];
  }
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) delta[i] = q.mean[i] - p.mean[i];
  std::vector<double> sol = delta;
  chol_solve(Lq, n, sol);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) quad += delta[i] * sol[i];

  return 0.5 * (trace + quad - static_cast<double>(n) + chol_logdet(Lq, n) -
                chol_logdet(Lp, n));
}

struct KsResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Two-sample Kolmogorov-Smirnov test at level alpha (asymptotic threshold).
inline KsResult two_sample_ks(std::vector<double> a, std::vector<double> b,
                              double alpha = 0.01) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("two_sample_ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  r.threshold = c * std::sqrt((na + nb) / (na * nb));
  r.pass = d <= r.threshold;
  return r;
}

}  // namespace wvr
