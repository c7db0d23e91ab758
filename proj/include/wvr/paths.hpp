#pragma once

// Time grids, Brownian path batches, drifted paths via explicit Euler,
// action-norm and Girsanov-weight evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wvr/errors.hpp"
#include "wvr/parallel.hpp"
#include "wvr/report.hpp"
#include "wvr/rng.hpp"
#include "wvr/stats.hpp"

namespace wvr {

/// Finite discretization of [0, horizon]. mark_indices locate the functional
/// mark times, which are always exact nodes.
struct TimeGrid {
  double horizon = 1.0;
  std::vector<double> nodes;               // t0 = 0 < ... < tK = horizon
  std::vector<std::size_t> mark_indices;   // sorted

  std::size_t steps() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  double dt(std::size_t k) const { return nodes[k + 1] - nodes[k]; }

  bool has_node(double t, double tol = 1e-12) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t - tol);
    return it != nodes.end() && std::abs(*it - t) <= tol;
  }

  std::size_t node_index(double t, double tol = 1e-12) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t - tol);
    if (it == nodes.end() || std::abs(*it - t) > tol)
      throw std::invalid_argument("TimeGrid: time " + std::to_string(t) +
                                  " is not a grid node");
    return static_cast<std::size_t>(it - nodes.begin());
  }
};

/// Uniform grid with `steps` intervals, refined so every mark is a node.
inline TimeGrid make_grid(double horizon, std::size_t steps,
                          std::span<const double> marks = {}) {
  if (!(horizon > 0.0))
    throw std::invalid_argument("make_grid: horizon must be positive");
  if (steps < 1) throw std::invalid_argument("make_grid: steps must be >= 1");
  const double tol = 1e-12 * std::max(1.0, horizon);
  double prev = -std::numeric_limits<double>::infinity();
  for (double m : marks) {
    if (!(m >= -tol && m <= horizon + tol))
      throw std::invalid_argument("make_grid: mark outside [0, horizon]");
    if (!(m > prev))
      throw std::invalid_argument("make_grid: marks must be strictly increasing");
    prev = m;
  }
  TimeGrid g;
  g.horizon = horizon;
  g.nodes.resize(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i)
    g.nodes[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
  g.nodes.front() = 0.0;
  g.nodes.back() = horizon;
  for (double m : marks) {
    auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), m - tol);
    if (it != g.nodes.end() && std::abs(*it - m) <= tol) continue;
    g.nodes.insert(it, m);
  }
  g.mark_indices.reserve(marks.size());
  for (double m : marks) g.mark_indices.push_back(g.node_index(m, tol));
  return g;
}

enum class PathKind { brownian, drifted };

/// A seeded batch of d-dimensional paths sampled at grid nodes. Immutable
/// after construction; safe to share across threads.
struct PathBatch {
  TimeGrid grid;
  std::size_t batch = 0;
  std::size_t dim = 1;
  PathKind kind = PathKind::brownian;
  std::uint64_t seed = 0;
  std::vector<double> values;  // batch * nodes * dim, node-major per path

  std::size_t node_count() const { return grid.nodes.size(); }

  double value(std::size_t p, std::size_t k, std::size_t j) const {
    return values[(p * node_count() + k) * dim + j];
  }
  double& value(std::size_t p, std::size_t k, std::size_t j) {
    return values[(p * node_count() + k) * dim + j];
  }
  std::span<const double> path(std::size_t p) const {
    return {values.data() + p * node_count() * dim, node_count() * dim};
  }
};

/// Adapted feedback rule v(t_k, path values at nodes 0..k). Adaptedness is
/// structural: eval() only ever receives the history up to its node argument.
class DriftPolicy {
 public:
  virtual ~DriftPolicy() = default;

  /// history holds (node+1)*dim values of the path being driven, node-major.
  /// Writes v(t_node, history) into out (size dim).
  virtual void eval(const TimeGrid& grid, std::size_t node,
                    std::span<const double> history,
                    std::span<double> out) const = 0;

  /// Finite bound on |v_t| when the policy is bounded by construction.
  virtual std::optional<double> sup_bound() const { return std::nullopt; }

  /// Time K with v_t = 0 for t >= K. Policies without an explicit cutoff are
  /// zero beyond the horizon of whatever grid they run on.
  virtual std::optional<double> cutoff() const { return std::nullopt; }
};

using DriftPolicyPtr = std::shared_ptr<const DriftPolicy>;

/// Policies whose drifted law stays Gaussian: v(t, x) = A(t) x + b(t).
/// Exposes the coefficients so mark laws and relative entropies can be
/// computed in closed form.
class GaussianFamilyPolicy : public DriftPolicy {
 public:
  /// Writes A(t) (dim*dim row-major) and b(t) (dim).
  virtual void affine_coefficients(double t, std::span<double> A,
                                   std::span<double> b) const = 0;
};

class ZeroPolicy final : public GaussianFamilyPolicy {
 public:
  void eval(const TimeGrid&, std::size_t, std::span<const double>,
            std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }
  std::optional<double> sup_bound() const override { return 0.0; }
  std::optional<double> cutoff() const override { return 0.0; }
  void affine_coefficients(double, std::span<double> A,
                           std::span<double> b) const override {
    std::fill(A.begin(), A.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
  }
};

class ConstantPolicy final : public GaussianFamilyPolicy {
 public:
  explicit ConstantPolicy(std::vector<double> v,
                          std::optional<double> until = std::nullopt)
      : v_(std::move(v)), until_(until) {}

  void eval(const TimeGrid& grid, std::size_t node, std::span<const double>,
            std::span<double> out) const override {
    const double t = grid.nodes[node];
    if (until_ && t >= *until_ - 1e-15) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    std::copy(v_.begin(), v_.end(), out.begin());
  }
  std::optional<double> sup_bound() const override {
    double s = 0.0;
    for (double x : v_) s += x * x;
    return std::sqrt(s);
  }
  std::optional<double> cutoff() const override { return until_; }
  void affine_coefficients(double t, std::span<double> A,
                           std::span<double> b) const override {
    std::fill(A.begin(), A.end(), 0.0);
    const bool off = until_ && t >= *until_ - 1e-15;
    for (std::size_t j = 0; j < v_.size(); ++j) b[j] = off ? 0.0 : v_[j];
  }

 private:
  std::vector<double> v_;
  std::optional<double> until_;
};

/// Deterministic open-loop drift, piecewise constant on [edges[i], edges[i+1]).
class OpenLoopStepPolicy final : public GaussianFamilyPolicy {
 public:
  OpenLoopStepPolicy(std::vector<double> edges, std::vector<double> values,
                     std::size_t dim)
      : edges_(std::move(edges)), values_(std::move(values)), dim_(dim) {
    if (edges_.size() < 2 || values_.size() != (edges_.size() - 1) * dim_)
      throw std::invalid_argument("OpenLoopStepPolicy: inconsistent sizes");
  }

  void eval(const TimeGrid& grid, std::size_t node, std::span<const double>,
            std::span<double> out) const override {
    value_at(grid.nodes[node], out);
  }
  std::optional<double> sup_bound() const override {
    double best = 0.0;
    const std::size_t bins = edges_.size() - 1;
    for (std::size_t i = 0; i < bins; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim_; ++j)
        s += values_[i * dim_ + j] * values_[i * dim_ + j];
      best = std::max(best, s);
    }
    return std::sqrt(best);
  }
  std::optional<double> cutoff() const override { return edges_.back(); }
  void affine_coefficients(double t, std::span<double> A,
                           std::span<double> b) const override {
    std::fill(A.begin(), A.end(), 0.0);
    value_at(t, b);
  }

 private:
  void value_at(double t, std::span<double> out) const {
    if (t < edges_.front() - 1e-15 || t >= edges_.back() - 1e-15) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
    std::size_t bin = static_cast<std::size_t>(it - edges_.begin());
    bin = bin == 0 ? 0 : bin - 1;
    bin = std::min(bin, edges_.size() - 2);
    for (std::size_t j = 0; j < dim_; ++j) out[j] = values_[bin * dim_ + j];
  }

  std::vector<double> edges_;
  std::vector<double> values_;  // bins * dim
  std::size_t dim_;
};

/// Linear state feedback v(t, x) = A(t) x + b(t) with callable coefficients.
class LinearFeedbackPolicy final : public GaussianFamilyPolicy {
 public:
  using MatrixFn = std::function<void(double, std::span<double>)>;
  using VectorFn = std::function<void(double, std::span<double>)>;

  LinearFeedbackPolicy(std::size_t dim, MatrixFn A, VectorFn b,
                       std::optional<double> until = std::nullopt)
      : dim_(dim), A_(std::move(A)), b_(std::move(b)), until_(until) {}

  /// Scalar convenience: v(t, x) = gain(t) * x + offset(t).
  static std::shared_ptr<LinearFeedbackPolicy> scalar(
      std::function<double(double)> gain, std::function<double(double)> offset,
      std::optional<double> until = std::nullopt) {
    auto g = std::make_shared<std::function<double(double)>>(std::move(gain));
    auto o = std::make_shared<std::function<double(double)>>(std::move(offset));
    return std::make_shared<LinearFeedbackPolicy>(
        1,
        [g](double t, std::span<double> A) { A[0] = (*g)(t); },
        [o](double t, std::span<double> b) { b[0] = (*o)(t); }, until);
  }

  void eval(const TimeGrid& grid, std::size_t node,
            std::span<const double> history,
            std::span<double> out) const override {
    const double t = grid.nodes[node];
    if (until_ && t >= *until_ - 1e-15) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    std::vector<double> A(dim_ * dim_), b(dim_);
    A_(t, A);
    b_(t, b);
    const std::span<const double> x = history.last(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      double s = b[i];
      for (std::size_t j = 0; j < dim_; ++j) s += A[i * dim_ + j] * x[j];
      out[i] = s;
    }
  }
  std::optional<double> cutoff() const override { return until_; }
  void affine_coefficients(double t, std::span<double> A,
                           std::span<double> b) const override {
    if (until_ && t >= *until_ - 1e-15) {
      std::fill(A.begin(), A.end(), 0.0);
      std::fill(b.begin(), b.end(), 0.0);
      return;
    }
    A_(t, A);
    b_(t, b);
  }

 private:
  std::size_t dim_;
  MatrixFn A_;
  VectorFn b_;
  std::optional<double> until_;
};

/// General nonlinear feedback on the current state only.
class StateFeedbackPolicy final : public DriftPolicy {
 public:
  using Fn = std::function<void(double, std::span<const double>, std::span<double>)>;

  StateFeedbackPolicy(Fn fn, std::optional<double> bound = std::nullopt,
                      std::optional<double> until = std::nullopt)
      : fn_(std::move(fn)), bound_(bound), until_(until) {}

  void eval(const TimeGrid& grid, std::size_t node,
            std::span<const double> history,
            std::span<double> out) const override {
    const double t = grid.nodes[node];
    if (until_ && t >= *until_ - 1e-15) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    fn_(t, history.last(out.size()), out);
  }
  std::optional<double> sup_bound() const override { return bound_; }
  std::optional<double> cutoff() const override { return until_; }

 private:
  Fn fn_;
  std::optional<double> bound_;
  std::optional<double> until_;
};

/// Hard projection of another policy onto the ball |v| <= bound.
class NormClampPolicy final : public DriftPolicy {
 public:
  NormClampPolicy(DriftPolicyPtr inner, double bound)
      : inner_(std::move(inner)), bound_(bound) {
    if (!(bound > 0.0))
      throw std::invalid_argument("NormClampPolicy: bound must be positive");
  }

  void eval(const TimeGrid& grid, std::size_t node,
            std::span<const double> history,
            std::span<double> out) const override {
    inner_->eval(grid, node, history, out);
    double s = 0.0;
    for (double v : out) s += v * v;
    s = std::sqrt(s);
    if (s > bound_) {
      const double scale = bound_ / s;
      for (double& v : out) v *= scale;
    }
  }
  std::optional<double> sup_bound() const override { return bound_; }
  std::optional<double> cutoff() const override { return inner_->cutoff(); }

 private:
  DriftPolicyPtr inner_;
  double bound_;
};

/// Cutoff beyond the horizon without a zero tail would silently truncate the
/// action integral, so it is rejected outright.
inline void check_policy_horizon(const DriftPolicy& policy,
                                 const TimeGrid& grid) {
  if (auto k = policy.cutoff(); k && *k > grid.horizon + 1e-12)
    throw std::logic_error(
        "policy cutoff lies beyond the grid horizon; declare a zero tail or "
        "extend the grid");
}

/// Independent Gaussian increments with variance dt per coordinate; path p is
/// driven by substream_seed(seed, p), so the batch is reproducible bitwise for
/// any thread count and any batching of p.
inline PathBatch sample_brownian(const TimeGrid& grid, std::size_t batch,
                                 std::size_t dim, std::uint64_t seed) {
  if (batch < 1) throw std::invalid_argument("sample_brownian: batch must be >= 1");
  if (dim < 1) throw std::invalid_argument("sample_brownian: dim must be >= 1");
  PathBatch out;
  out.grid = grid;
  out.batch = batch;
  out.dim = dim;
  out.kind = PathKind::brownian;
  out.seed = seed;
  const std::size_t nodes = grid.nodes.size();
  out.values.assign(batch * nodes * dim, 0.0);
  const std::size_t K = grid.steps();
  parallel_for(batch, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      NormalStream gen(substream_seed(seed, p));
      for (std::size_t k = 0; k < K; ++k) {
        const double s = std::sqrt(grid.dt(k));
        for (std::size_t j = 0; j < dim; ++j)
          out.value(p, k + 1, j) = out.value(p, k, j) + s * gen.normal();
      }
    }
  });
  return out;
}

inline PathBatch sample_brownian(const TimeGrid& grid, std::size_t batch,
                                 std::uint64_t seed) {
  return sample_brownian(grid, batch, 1, seed);
}

/// Euler output of apply_drift together with the per-path Girsanov log-weight
/// and squared action. The drift is evaluated along the drifted trajectory,
/// dB along the base; exp(log_weight) then satisfies the exact discrete
/// martingale identity and e^{F(X)} exp(log_weight) is the importance-sampling
/// estimator of E[e^{F(B)}].
struct DriftDetail {
  PathBatch paths;                 // kind = drifted
  std::vector<double> log_weight;  // -sum v.dB - 1/2 sum |v|^2 dt
  std::vector<double> action_sq;   // sum |v|^2 dt
};

inline DriftDetail drift_detail(const PathBatch& base,
                                const DriftPolicy& policy) {
  if (base.kind != PathKind::brownian)
    throw std::invalid_argument("drift_detail: base batch must be brownian");
  check_policy_horizon(policy, base.grid);
  DriftDetail out;
  out.paths.grid = base.grid;
  out.paths.batch = base.batch;
  out.paths.dim = base.dim;
  out.paths.kind = PathKind::drifted;
  out.paths.seed = base.seed;
  out.paths.values.assign(base.values.size(), 0.0);
  out.log_weight.assign(base.batch, 0.0);
  out.action_sq.assign(base.batch, 0.0);
  const std::size_t K = base.grid.steps();
  const std::size_t d = base.dim;
  const std::size_t stride = base.node_count() * d;
  parallel_for(base.batch, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> disp(d), v(d);
    for (std::size_t p = lo; p < hi; ++p) {
      std::fill(disp.begin(), disp.end(), 0.0);
      double lw = 0.0, act = 0.0;
      double* xp = out.paths.values.data() + p * stride;
      for (std::size_t j = 0; j < d; ++j) xp[j] = base.value(p, 0, j);
      for (std::size_t k = 0; k < K; ++k) {
        policy.eval(base.grid, k, std::span<const double>(xp, (k + 1) * d), v);
        const double dtk = base.grid.dt(k);
        for (std::size_t j = 0; j < d; ++j) {
          if (!std::isfinite(v[j]))
            throw numeric_error("drift policy returned a non-finite value", k);
          // X = B + displacement, with the displacement accumulated apart so
          // the zero policy reproduces the base values bitwise.
          disp[j] += v[j] * dtk;
          const double db = base.value(p, k + 1, j) - base.value(p, k, j);
          xp[(k + 1) * d + j] = base.value(p, k + 1, j) + disp[j];
          lw -= v[j] * db;
          act += v[j] * v[j] * dtk;
        }
      }
      out.log_weight[p] = lw - 0.5 * act;
      out.action_sq[p] = act;
    }
  });
  return out;
}

/// X_{k+1} = X_k + v(t_k, X_{0..k}) dt_k + (B_{k+1} - B_k); the zero policy
/// returns values bitwise equal to the base batch.
inline PathBatch apply_drift(const PathBatch& base, const DriftPolicy& policy) {
  return std::move(drift_detail(base, policy).paths);
}

/// Per-path -sum_k v_k.(B_{k+1}-B_k) - 1/2 sum_k |v_k|^2 dt_k.
inline std::vector<double> girsanov_log_weight(const DriftPolicy& policy,
                                               const PathBatch& base) {
  return std::move(drift_detail(base, policy).log_weight);
}

/// Mean over paths of sum_k |v_k|^2 dt_k, i.e. the squared action norm
/// truncated at the grid horizon, with its standard error.
inline EstimatorReport action_norm_sq(const DriftPolicy& policy,
                                      const PathBatch& base) {
  const DriftDetail d = drift_detail(base, policy);
  const MeanSe m = mean_se(d.action_sq);
  EstimatorReport r;
  r.value = m.mean;
  r.std_error = m.se;
  r.n_samples = m.n;
  r.seed = base.seed;
  r.method = "mc_action";
  return r;
}

}  // namespace wvr
