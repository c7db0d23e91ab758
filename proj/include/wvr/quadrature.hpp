#pragma once

// Gauss-Hermite rules and Gaussian expectation helpers. Everything is
// deterministic; these rules back the "exact at quadrature precision" side of
// every estimator pair in the library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "wvr/errors.hpp"
#include "wvr/stats.hpp"

namespace wvr {

/// Nodes/weights for ∫ f(x) e^{-x^2} dx (physicists' convention), ascending.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Newton iteration on the orthonormal Hermite recurrence with the classic
/// asymptotic initial guesses. Stable well past order 128.
inline HermiteRule hermite_rule(std::size_t n) {
  if (n < 1) throw std::invalid_argument("hermite_rule: order must be >= 1");
  HermiteRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const std::size_t half = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[n - 1];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[n - 2];
    } else {
      z = 2.0 * z - rule.nodes[n - i + 1];
    }
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jj = static_cast<double>(j + 1);
        p1 = z * std::sqrt(2.0 / jj) * p2 - std::sqrt((jj - 1.0) / jj) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[n - 1 - i] = z;
    rule.nodes[i] = -z;
    const double w = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Tensor rule for E[f(Z)], Z ~ N(0, I_dim). Weights are normalized against
/// the Gaussian measure and sum to 1 (checked by tests, not renormalized).
struct GaussianQuadrature {
  std::size_t dim = 1;
  std::size_t order = 64;
  std::vector<double> nodes;        // count * dim, point-major
  std::vector<double> weights;      // count
  std::vector<double> log_weights;  // count

  std::size_t count() const { return weights.size(); }

  std::span<const double> point(std::size_t i) const {
    return {nodes.data() + i * dim, dim};
  }

  static GaussianQuadrature make(std::size_t dim, std::size_t order) {
    if (dim < 1 || dim > 3)
      throw unsupported_error("GaussianQuadrature: dim must be in 1..3");
    const HermiteRule h = hermite_rule(order);
    const double sqrt2 = std::numbers::sqrt2;
    const double log_sqrt_pi = 0.5 * std::log(std::numbers::pi);
    std::vector<double> axis_nodes(order), axis_logw(order), axis_w(order);
    for (std::size_t i = 0; i < order; ++i) {
      axis_nodes[i] = sqrt2 * h.nodes[i];
      axis_w[i] = h.weights[i] / std::sqrt(std::numbers::pi);
      axis_logw[i] = std::log(h.weights[i]) - log_sqrt_pi;
    }
    GaussianQuadrature q;
    q.dim = dim;
    q.order = order;
    std::size_t count = 1;
    for (std::size_t k = 0; k < dim; ++k) count *= order;
    q.nodes.resize(count * dim);
    q.weights.resize(count);
    q.log_weights.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t rem = i;
      double w = 1.0, lw = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const std::size_t idx = rem % order;
        rem /= order;
        q.nodes[i * dim + k] = axis_nodes[idx];
        w *= axis_w[idx];
        lw += axis_logw[idx];
      }
      q.weights[i] = w;
      q.log_weights[i] = lw;
    }
    return q;
  }
};

inline std::size_t default_quad_order(std::size_t dim) {
  return dim == 1 ? 64 : 32;
}

/// E[h(Z)] by direct weighted sum.
template <class H>
double gauss_expect(const GaussianQuadrature& q, H&& h) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.count(); ++i) s += q.weights[i] * h(q.point(i));
  return s;
}

namespace detail {

/// Maximizes psi(x) = phi(x) - |x|^2/2 by damped Newton with finite-difference
/// derivatives. Used to recenter quadrature under strong exponential tilts;
/// failure falls back to the origin, which only costs accuracy.
template <class Phi>
std::vector<double> gaussian_mode(Phi&& phi, std::size_t dim) {
  const double h = 1e-5;
  std::vector<double> x(dim, 0.0), g(dim), step(dim), xp(dim), xm(dim);
  std::vector<double> hess(dim * dim);
  auto psi = [&](const std::vector<double>& p) {
    double v = phi(std::span<const double>(p.data(), dim));
    for (std::size_t k = 0; k < dim; ++k) v -= 0.5 * p[k] * p[k];
    return v;
  };
  double fx = psi(x);
  if (!std::isfinite(fx)) return std::vector<double>(dim, 0.0);
  for (int it = 0; it < 80; ++it) {
    // gradient and Hessian of psi by central differences
    double gnorm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      xp = x;
      xm = x;
      xp[k] += h;
      xm[k] -= h;
      g[k] = (psi(xp) - psi(xm)) / (2.0 * h);
      gnorm = std::max(gnorm, std::abs(g[k]));
    }
    if (gnorm < 1e-11) break;
    for (std::size_t k = 0; k < dim; ++k) {
      for (std::size_t l = k; l < dim; ++l) {
        xp = x;
        xp[k] += h;
        xp[l] += h;
        const double fpp = psi(xp);
        xp = x;
        xp[k] += h;
        xp[l] -= h;
        const double fpm = psi(xp);
        xp = x;
        xp[k] -= h;
        xp[l] += h;
        const double fmp = psi(xp);
        xp = x;
        xp[k] -= h;
        xp[l] -= h;
        const double fmm = psi(xp);
        hess[k * dim + l] = hess[l * dim + k] =
            (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      }
    }
    // Newton step on -hess (should be PD near the max); gradient ascent if not
    std::vector<double> neg = hess;
    for (auto& v : neg) v = -v;
    bool newton_ok = true;
    step = g;
    try {
      cholesky(neg, dim);
      chol_solve(neg, dim, step);
    } catch (const numeric_error&) {
      newton_ok = false;
      step = g;
    }
    double lambda = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 30; ++bt) {
      xp = x;
      for (std::size_t k = 0; k < dim; ++k) xp[k] += lambda * step[k];
      const double fn = psi(xp);
      if (std::isfinite(fn) && fn > fx) {
        x = xp;
        fx = fn;
        moved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!moved) break;
    double xnorm = 0.0;
    for (double v : x) xnorm = std::max(xnorm, std::abs(v));
    if (!newton_ok && xnorm > 1e3) break;
    if (xnorm > 1e6) return std::vector<double>(dim, 0.0);
  }
  for (double v : x)
    if (!std::isfinite(v)) return std::vector<double>(dim, 0.0);
  return x;
}

}  // namespace detail

/// log E[exp(phi(Z))], Z ~ N(0, I_dim). With recenter=true the rule is shifted
/// to the mode of the integrand first: exp(tilted) integrands whose mass sits
/// far from the origin (large-exponent norms, strongly tilted functionals) are
/// then integrated at full quadrature accuracy. The identity used is
///   E[e^{phi(Z)}] = E[e^{phi(mu+Z) - mu.Z - |mu|^2/2}].
template <class Phi>
double log_gauss_exp(const GaussianQuadrature& q, Phi&& phi,
                     bool recenter = false) {
  StreamingLogSum acc;
  if (!recenter) {
    std::vector<double> buf(q.dim);
    for (std::size_t i = 0; i < q.count(); ++i) {
      acc.add(q.log_weights[i] + phi(q.point(i)));
    }
    return acc.log_sum();
  }
  const std::vector<double> mu = detail::gaussian_mode(phi, q.dim);
  double mu2 = 0.0;
  for (double v : mu) mu2 += v * v;
  std::vector<double> pt(q.dim);
  for (std::size_t i = 0; i < q.count(); ++i) {
    const auto z = q.point(i);
    double dot = 0.0;
    for (std::size_t k = 0; k < q.dim; ++k) {
      pt[k] = mu[k] + z[k];
      dot += mu[k] * z[k];
    }
    acc.add(q.log_weights[i] +
            phi(std::span<const double>(pt.data(), q.dim)) - dot - 0.5 * mu2);
  }
  return acc.log_sum();
}

}  // namespace wvr
