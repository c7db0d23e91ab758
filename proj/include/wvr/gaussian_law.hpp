#pragma once

// Exact Gaussian mark laws for affine drift policies and the relative
// entropies that come with them. The propagation follows the sampled Euler
// chain itself, so the entropies are exact for the discrete process that the
// Monte Carlo estimators actually simulate.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "wvr/paths.hpp"
#include "wvr/stats.hpp"

namespace wvr {

/// Relative entropy with the route it was obtained by. bound_only values are
/// upper bounds, not identities.
struct RelEntropyResult {
  enum class Method { gaussian_closed_form, action_identity, bound_only };
  double value = 0.0;
  Method method = Method::gaussian_closed_form;
};

inline const char* to_string(RelEntropyResult::Method m) {
  switch (m) {
    case RelEntropyResult::Method::gaussian_closed_form:
      return "gaussian_closed_form";
    case RelEntropyResult::Method::action_identity:
      return "action_identity";
    case RelEntropyResult::Method::bound_only:
      return "bound_only";
  }
  return "?";
}

/// Joint law of (B_{t_1},...,B_{t_m}) in R^{m*d}: blocks min(t_i, t_l) I_d.
inline Gaussian brownian_marks_law(std::span<const double> mark_times,
                                   std::size_t dim) {
  const std::size_t m = mark_times.size();
  const std::size_t n = m * dim;
  Gaussian g;
  g.mean.assign(n, 0.0);
  g.cov.assign(n * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < m; ++l) {
      const double c = std::min(mark_times[i], mark_times[l]);
      for (std::size_t j = 0; j < dim; ++j)
        g.cov[(i * dim + j) * n + (l * dim + j)] = c;
    }
  return g;
}

/// Joint law of (X_{t_1},...,X_{t_m}) for the Euler chain
/// X_{k+1} = X_k + (A(t_k) X_k + b(t_k)) dt_k + dB_k, X_0 = 0,
/// propagated exactly: mean, per-mark covariances and all cross-covariances.
inline Gaussian policy_marks_law(const GaussianFamilyPolicy& policy,
                                 const TimeGrid& grid,
                                 std::span<const double> mark_times,
                                 std::size_t dim) {
  const std::size_t m = mark_times.size();
  const std::size_t d = dim;
  const std::size_t n = m * d;
  std::vector<std::size_t> mark_nodes(m);
  for (std::size_t i = 0; i < m; ++i)
    mark_nodes[i] = grid.node_index(mark_times[i]);

  std::vector<double> mu(d, 0.0);
  std::vector<double> P(d * d, 0.0);
  std::vector<double> A(d * d), b(d), M(d * d);
  std::vector<double> tmp(d * d), tmp2(d * d), nmu(d);

  Gaussian out;
  out.mean.assign(n, 0.0);
  out.cov.assign(n * n, 0.0);

  // cross[r] = Cov(X_{t_r}, X_current), d x d
  std::vector<std::vector<double>> cross;
  std::vector<std::size_t> snapped;

  auto maybe_snapshot = [&](std::size_t node) {
    for (std::size_t r = 0; r < m; ++r) {
      if (mark_nodes[r] != node) continue;
      for (std::size_t j = 0; j < d; ++j) out.mean[r * d + j] = mu[j];
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          out.cov[(r * d + i) * n + (r * d + j)] = P[i * d + j];
      for (std::size_t s = 0; s < snapped.size(); ++s) {
        const std::size_t rs = snapped[s];
        // cross[s] = Cov(X_{t_rs}, X_{t_r})
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            out.cov[(rs * d + i) * n + (r * d + j)] = cross[s][i * d + j];
            out.cov[(r * d + j) * n + (rs * d + i)] = cross[s][i * d + j];
          }
      }
      snapped.push_back(r);
      cross.push_back(P);  // Cov(X_{t_r}, X_current) starts at P
    }
  };

  maybe_snapshot(0);
  const std::size_t K = grid.steps();
  for (std::size_t k = 0; k < K; ++k) {
    const double t = grid.nodes[k];
    const double dt = grid.dt(k);
    policy.affine_coefficients(t, A, b);
    // M = I + dt A
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        M[i * d + j] = (i == j ? 1.0 : 0.0) + dt * A[i * d + j];
    // mu <- M mu + dt b
    for (std::size_t i = 0; i < d; ++i) {
      double s = dt * b[i];
      for (std::size_t j = 0; j < d; ++j) s += M[i * d + j] * mu[j];
      nmu[i] = s;
    }
    mu = nmu;
    // P <- M P M^T + dt I
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < d; ++l) s += M[i * d + l] * P[l * d + j];
        tmp[i * d + j] = s;
      }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double s = (i == j) ? dt : 0.0;
        for (std::size_t l = 0; l < d; ++l) s += tmp[i * d + l] * M[j * d + l];
        tmp2[i * d + j] = s;
      }
    P = tmp2;
    // cross[r] <- cross[r] M^T
    for (auto& c : cross) {
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          double s = 0.0;
          for (std::size_t l = 0; l < d; ++l) s += c[i * d + l] * M[j * d + l];
          tmp[i * d + j] = s;
        }
      c = tmp;
    }
    maybe_snapshot(k + 1);
  }
  return out;
}

/// Exact KL of the policy's mark marginal against the Brownian mark marginal.
/// A marginal entropy is a lower bound on the path-space relative entropy, so
/// it is always a valid left side of the entropy bound H <= action/2.
inline RelEntropyResult policy_marks_relative_entropy(
    const GaussianFamilyPolicy& policy, const TimeGrid& grid,
    std::span<const double> mark_times, std::size_t dim) {
  const Gaussian p = policy_marks_law(policy, grid, mark_times, dim);
  const Gaussian w = brownian_marks_law(mark_times, dim);
  RelEntropyResult r;
  r.value = gaussian_kl(p, w);
  r.method = RelEntropyResult::Method::gaussian_closed_form;
  return r;
}

}  // namespace wvr
