#pragma once

// Parametric drift families and a stochastic ascent loop maximizing
// E[F(B^v) - 1/2 ∫|v|^2 dt], which operationalizes the supremum over bounded
// drifts with a cutoff. Gradients are pathwise (reparameterized) through the
// Euler recursion under common random numbers; a simultaneous-perturbation
// fallback covers functionals without gradients.

#include <array>
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

#include "wvr/functionals.hpp"
#include "wvr/paths.hpp"
#include "wvr/report.hpp"
#include "wvr/rng.hpp"
#include "wvr/variational.hpp"

namespace wvr {

enum class FamilyKind {
  constant,
  piecewise_open_loop,
  linear_feedback,  // v = A(t) x + b(t), piecewise-constant coefficients
  grid_feedback,    // dim 1, bilinear interpolation on a (t, x) table
};

struct PolicyFamily {
  FamilyKind kind = FamilyKind::constant;
  std::size_t dim = 1;
  std::size_t time_bins = 8;
  std::size_t x_bins = 9;  // grid_feedback only
  double x_min = -3.0;
  double x_max = 3.0;
  std::optional<double> clamp;  // smooth norm bound c tanh(|v|/c)

  std::size_t param_count() const {
    switch (kind) {
      case FamilyKind::constant:
        return dim;
      case FamilyKind::piecewise_open_loop:
        return time_bins * dim;
      case FamilyKind::linear_feedback:
        return time_bins * (dim * dim + dim);
      case FamilyKind::grid_feedback:
        return time_bins * x_bins;
    }
    return 0;
  }
};

namespace detail {

inline std::size_t time_bin(double t, double horizon, std::size_t bins) {
  if (bins <= 1) return 0;
  double u = t / horizon * static_cast<double>(bins);
  long i = static_cast<long>(std::floor(u));
  if (i < 0) i = 0;
  if (i >= static_cast<long>(bins)) i = static_cast<long>(bins) - 1;
  return static_cast<std::size_t>(i);
}

struct ClampState {
  double scale = 1.0;
  double kappa = 0.0;
  std::array<double, 3> v_raw{};
};

/// Smooth norm clamp v -> v * c tanh(|v|/c) / |v|; near the origin it is the
/// identity, and the image always has norm < c.
inline void apply_clamp(const std::optional<double>& clamp,
                        std::span<double> v, ClampState& cs) {
  const std::size_t d = v.size();
  for (std::size_t j = 0; j < d; ++j) cs.v_raw[j] = v[j];
  cs.scale = 1.0;
  cs.kappa = 0.0;
  if (!clamp) return;
  double s2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) s2 += v[j] * v[j];
  const double s = std::sqrt(s2);
  if (s < 1e-12) return;
  const double c = *clamp;
  const double th = std::tanh(s / c);
  const double scale = c * th / s;
  const double gprime = 1.0 - th * th;
  cs.scale = scale;
  cs.kappa = (gprime - scale) / s2;
  for (std::size_t j = 0; j < d; ++j) v[j] *= scale;
}

/// Adjoint of the clamp Jacobian: wt = scale w + kappa v_raw (v_raw . w).
inline void clamp_pullback(const ClampState& cs, std::span<const double> w,
                           std::span<double> wt) {
  const std::size_t d = w.size();
  if (cs.kappa == 0.0 && cs.scale == 1.0) {
    for (std::size_t j = 0; j < d; ++j) wt[j] = w[j];
    return;
  }
  double dot = 0.0;
  for (std::size_t j = 0; j < d; ++j) dot += cs.v_raw[j] * w[j];
  for (std::size_t j = 0; j < d; ++j)
    wt[j] = cs.scale * w[j] + cs.kappa * cs.v_raw[j] * dot;
}

/// Raw (pre-clamp) family evaluation plus the Jacobians the adjoint needs.
struct FamilyEval {
  const PolicyFamily* fam = nullptr;
  const double* theta = nullptr;
  double horizon = 1.0;

  void raw_value(double t, std::span<const double> x,
                 std::span<double> out) const {
    const std::size_t d = fam->dim;
    switch (fam->kind) {
      case FamilyKind::constant:
        for (std::size_t j = 0; j < d; ++j) out[j] = theta[j];
        return;
      case FamilyKind::piecewise_open_loop: {
        const std::size_t b = time_bin(t, horizon, fam->time_bins);
        for (std::size_t j = 0; j < d; ++j) out[j] = theta[b * d + j];
        return;
      }
      case FamilyKind::linear_feedback: {
        const std::size_t b = time_bin(t, horizon, fam->time_bins);
        const double* A = theta + b * (d * d + d);
        const double* bias = A + d * d;
        for (std::size_t i = 0; i < d; ++i) {
          double s = bias[i];
          for (std::size_t j = 0; j < d; ++j) s += A[i * d + j] * x[j];
          out[i] = s;
        }
        return;
      }
      case FamilyKind::grid_feedback: {
        double wt0, wx0;
        std::size_t i0, j0;
        locate(t, x[0], i0, j0, wt0, wx0);
        const std::size_t xb = fam->x_bins;
        out[0] = wt0 * (wx0 * theta[i0 * xb + j0] +
                        (1.0 - wx0) * theta[i0 * xb + j0 + 1]) +
                 (1.0 - wt0) * (wx0 * theta[(i0 + 1) * xb + j0] +
                                (1.0 - wx0) * theta[(i0 + 1) * xb + j0 + 1]);
        return;
      }
    }
  }

  /// Jacobian of the raw value in the current state, row-major d x d.
  void raw_dvdx(double t, std::span<const double> x,
                std::span<double> J) const {
    const std::size_t d = fam->dim;
    std::fill(J.begin(), J.end(), 0.0);
    switch (fam->kind) {
      case FamilyKind::constant:
      case FamilyKind::piecewise_open_loop:
        return;
      case FamilyKind::linear_feedback: {
        const std::size_t b = time_bin(t, horizon, fam->time_bins);
        const double* A = theta + b * (d * d + d);
        for (std::size_t i = 0; i < d * d; ++i) J[i] = A[i];
        return;
      }
      case FamilyKind::grid_feedback: {
        const double xr = fam->x_max - fam->x_min;
        if (x[0] <= fam->x_min || x[0] >= fam->x_max) return;  // pinned edge
        double wt0, wx0;
        std::size_t i0, j0;
        locate(t, x[0], i0, j0, wt0, wx0);
        const std::size_t xb = fam->x_bins;
        const double hx = xr / static_cast<double>(xb - 1);
        J[0] = (wt0 * (theta[i0 * xb + j0 + 1] - theta[i0 * xb + j0]) +
                (1.0 - wt0) * (theta[(i0 + 1) * xb + j0 + 1] -
                               theta[(i0 + 1) * xb + j0])) /
               hx;
        return;
      }
    }
  }

  /// g += (d v_raw / d theta)^T w, the sparse scatter of the adjoint weight.
  void accumulate_dtheta(double t, std::span<const double> x,
                         std::span<const double> w, std::span<double> g) const {
    const std::size_t d = fam->dim;
    switch (fam->kind) {
      case FamilyKind::constant:
        for (std::size_t j = 0; j < d; ++j) g[j] += w[j];
        return;
      case FamilyKind::piecewise_open_loop: {
        const std::size_t b = time_bin(t, horizon, fam->time_bins);
        for (std::size_t j = 0; j < d; ++j) g[b * d + j] += w[j];
        return;
      }
      case FamilyKind::linear_feedback: {
        const std::size_t b = time_bin(t, horizon, fam->time_bins);
        const std::size_t base = b * (d * d + d);
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = 0; j < d; ++j)
            g[base + i * d + j] += w[i] * x[j];
          g[base + d * d + i] += w[i];
        }
        return;
      }
      case FamilyKind::grid_feedback: {
        double wt0, wx0;
        std::size_t i0, j0;
        locate(t, x[0], i0, j0, wt0, wx0);
        const std::size_t xb = fam->x_bins;
        g[i0 * xb + j0] += w[0] * wt0 * wx0;
        g[i0 * xb + j0 + 1] += w[0] * wt0 * (1.0 - wx0);
        g[(i0 + 1) * xb + j0] += w[0] * (1.0 - wt0) * wx0;
        g[(i0 + 1) * xb + j0 + 1] += w[0] * (1.0 - wt0) * (1.0 - wx0);
        return;
      }
    }
  }

 private:
  void locate(double t, double xv, std::size_t& i0, std::size_t& j0,
              double& wt0, double& wx0) const {
    const std::size_t tb = fam->time_bins;
    const std::size_t xb = fam->x_bins;
    if (tb <= 1) {
      i0 = 0;
      wt0 = 1.0;
    } else {
      double u = t / horizon * static_cast<double>(tb - 1);
      u = std::min(std::max(u, 0.0), static_cast<double>(tb - 1));
      i0 = std::min<std::size_t>(static_cast<std::size_t>(u), tb - 2);
      wt0 = 1.0 - (u - static_cast<double>(i0));
    }
    double xc = std::min(std::max(xv, fam->x_min), fam->x_max);
    double u = (xc - fam->x_min) / (fam->x_max - fam->x_min) *
               static_cast<double>(xb - 1);
    j0 = std::min<std::size_t>(static_cast<std::size_t>(u), xb - 2);
    wx0 = 1.0 - (u - static_cast<double>(j0));
  }
};

}  // namespace detail

/// Instantiates a family member as a DriftPolicy. Unclamped affine kinds map
/// onto the Gaussian-family policies so entropy checks stay available.
inline DriftPolicyPtr family_policy(const PolicyFamily& fam,
                                    std::vector<double> theta, double horizon) {
  if (theta.size() != fam.param_count())
    throw std::invalid_argument("family_policy: wrong parameter count");
  if (fam.kind == FamilyKind::grid_feedback && fam.dim != 1)
    throw std::invalid_argument("family_policy: grid_feedback needs dim 1");
  const std::size_t d = fam.dim;
  if (!fam.clamp) {
    if (fam.kind == FamilyKind::constant)
      return std::make_shared<ConstantPolicy>(theta, horizon);
    if (fam.kind == FamilyKind::piecewise_open_loop) {
      std::vector<double> edges(fam.time_bins + 1);
      for (std::size_t i = 0; i <= fam.time_bins; ++i)
        edges[i] = horizon * static_cast<double>(i) /
                   static_cast<double>(fam.time_bins);
      return std::make_shared<OpenLoopStepPolicy>(std::move(edges),
                                                  std::move(theta), d);
    }
    if (fam.kind == FamilyKind::linear_feedback) {
      auto th = std::make_shared<std::vector<double>>(std::move(theta));
      auto famc = fam;
      return std::make_shared<LinearFeedbackPolicy>(
          d,
          [th, famc, horizon, d](double t, std::span<double> A) {
            const std::size_t b = detail::time_bin(t, horizon, famc.time_bins);
            const double* src = th->data() + b * (d * d + d);
            for (std::size_t i = 0; i < d * d; ++i) A[i] = src[i];
          },
          [th, famc, horizon, d](double t, std::span<double> bv) {
            const std::size_t b = detail::time_bin(t, horizon, famc.time_bins);
            const double* src = th->data() + b * (d * d + d) + d * d;
            for (std::size_t i = 0; i < d; ++i) bv[i] = src[i];
          },
          horizon);
    }
  }
  // clamped or grid feedback: evaluate through the family machinery
  struct FamilyPolicy final : DriftPolicy {
    PolicyFamily fam;
    std::vector<double> theta;
    double horizon;
    void eval(const TimeGrid& grid, std::size_t node,
              std::span<const double> history,
              std::span<double> out) const override {
      detail::FamilyEval fe{&fam, theta.data(), horizon};
      fe.raw_value(grid.nodes[node], history.last(fam.dim), out);
      detail::ClampState cs;
      detail::apply_clamp(fam.clamp, out, cs);
    }
    std::optional<double> sup_bound() const override { return fam.clamp; }
    std::optional<double> cutoff() const override { return horizon; }
  };
  auto p = std::make_shared<FamilyPolicy>();
  p->fam = fam;
  p->theta = std::move(theta);
  p->horizon = horizon;
  return p;
}

struct OptConfig {
  std::size_t iters = 400;
  std::size_t batch = 2048;
  std::size_t holdout_batch = 1 << 15;
  std::size_t eval_every = 10;
  double step0 = 0.25;
  double decay = 0.98;
  double rms_beta = 0.9;
  double spsa_c = 0.05;
  std::uint64_t seed = 1;
  bool force_spsa = false;
};

struct OptIterate {
  double objective = 0.0;
  double step = 0.0;
  double grad_norm = 0.0;
};

struct OptTrace {
  std::vector<OptIterate> iterations;
  std::vector<double> theta;  // best-seen parameters
  std::uint64_t seed = 0;
  std::size_t param_count = 0;
  std::string gradient = "pathwise";
  double initial_holdout = 0.0;
  double holdout_objective = 0.0;  // best theta on a fresh evaluation batch
  double holdout_se = 0.0;
};

struct OptResult {
  DriftPolicyPtr policy;
  OptTrace trace;
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

/// Objective mean over the batch, simulated with the clamped family member.
inline double family_objective(const CylinderFunctional& F,
                               const PolicyFamily& fam,
                               std::span<const double> theta,
                               const TimeGrid& grid, const PathBatch& base,
                               double* se = nullptr) {
  const auto marks = mark_nodes(F, grid);
  const std::size_t K = grid.steps();
  const std::size_t d = fam.dim;
  std::vector<double> per_path(base.batch);
  parallel_for(base.batch, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> x((K + 1) * d), v(d), fx(marks.size() * d);
    FamilyEval fe{&fam, theta.data(), grid.horizon};
    for (std::size_t p = lo; p < hi; ++p) {
      for (std::size_t j = 0; j < d; ++j) x[j] = 0.0;
      double act = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        fe.raw_value(grid.nodes[k],
                     std::span<const double>(x.data() + k * d, d), v);
        ClampState cs;
        apply_clamp(fam.clamp, v, cs);
        const double dt = grid.dt(k);
        for (std::size_t j = 0; j < d; ++j) {
          const double db = base.value(p, k + 1, j) - base.value(p, k, j);
          x[(k + 1) * d + j] = x[k * d + j] + v[j] * dt + db;
          act += v[j] * v[j] * dt;
        }
      }
      for (std::size_t i = 0; i < marks.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
          fx[i * d + j] = x[marks[i] * d + j];
      per_path[p] = F.f(fx) - 0.5 * act;
    }
  });
  const MeanSe m = mean_se(per_path);
  if (se) *se = m.se;
  return m.mean;
}

/// Pathwise objective gradient: forward Euler, then the adjoint recursion
///   lambda_k = lambda_{k+1} + (dv/dx)^T w_k + mark gradient at k,
///   w_k = (lambda_{k+1} - v_k) dt,  dJ/dtheta = sum_k (dv/dtheta)^T w_k.
inline double family_objective_grad(const CylinderFunctional& F,
                                    const PolicyFamily& fam,
                                    std::span<const double> theta,
                                    const TimeGrid& grid,
                                    const PathBatch& base,
                                    std::span<double> grad_out) {
  const auto marks = mark_nodes(F, grid);
  const std::size_t K = grid.steps();
  const std::size_t d = fam.dim;
  const std::size_t P = fam.param_count();
  std::vector<double> per_path(base.batch);
  std::vector<double> per_grad(base.batch * P, 0.0);
  parallel_for(base.batch, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> x((K + 1) * d), v(d), fx(marks.size() * d),
        gm(marks.size() * d), lambda(d), w(d), wt(d), J(d * d), nl(d);
    FamilyEval fe{&fam, theta.data(), grid.horizon};
    for (std::size_t p = lo; p < hi; ++p) {
      for (std::size_t j = 0; j < d; ++j) x[j] = 0.0;
      double act = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        fe.raw_value(grid.nodes[k],
                     std::span<const double>(x.data() + k * d, d), v);
        ClampState cs;
        apply_clamp(fam.clamp, v, cs);
        const double dt = grid.dt(k);
        for (std::size_t j = 0; j < d; ++j) {
          const double db = base.value(p, k + 1, j) - base.value(p, k, j);
          x[(k + 1) * d + j] = x[k * d + j] + v[j] * dt + db;
          act += v[j] * v[j] * dt;
        }
      }
      for (std::size_t i = 0; i < marks.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
          fx[i * d + j] = x[marks[i] * d + j];
      per_path[p] = F.f(fx) - 0.5 * act;
      F.grad(fx, gm);

      std::fill(lambda.begin(), lambda.end(), 0.0);
      double* g = per_grad.data() + p * P;
      for (std::size_t k = K; k-- > 0;) {
        for (std::size_t i = 0; i < marks.size(); ++i)
          if (marks[i] == k + 1)
            for (std::size_t j = 0; j < d; ++j) lambda[j] += gm[i * d + j];
        const double t = grid.nodes[k];
        const double dt = grid.dt(k);
        const std::span<const double> xk(x.data() + k * d, d);
        fe.raw_value(t, xk, v);
        ClampState cs;
        apply_clamp(fam.clamp, v, cs);
        for (std::size_t j = 0; j < d; ++j) w[j] = (lambda[j] - v[j]) * dt;
        clamp_pullback(cs, w, wt);
        fe.accumulate_dtheta(t, xk, wt, std::span<double>(g, P));
        fe.raw_dvdx(t, xk, J);
        for (std::size_t j = 0; j < d; ++j) {
          double s = lambda[j];
          for (std::size_t i = 0; i < d; ++i) s += J[i * d + j] * wt[i];
          nl[j] = s;
        }
        lambda = nl;
      }
    }
  });
  double obj = 0.0;
  for (double v : per_path) obj += v;
  obj /= static_cast<double>(base.batch);
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  for (std::size_t p = 0; p < base.batch; ++p)
    for (std::size_t i = 0; i < P; ++i)
      grad_out[i] += per_grad[p * P + i];
  for (double& v : grad_out) v /= static_cast<double>(base.batch);
  return obj;
}

}  // namespace detail

/// Stochastic ascent over the family parameters starting from theta = 0.
/// Returns the best-seen parameters by held-out objective, evaluated on a
/// fresh seed disjoint from the training seeds.
inline OptResult optimize(const CylinderFunctional& F, const PolicyFamily& fam,
                          const TimeGrid& grid, const OptConfig& cfg = {}) {
  if (fam.kind == FamilyKind::grid_feedback && fam.dim != 1)
    throw std::invalid_argument("optimize: grid_feedback needs dim 1");
  if (F.dim != fam.dim)
    throw std::invalid_argument("optimize: functional/family dimension mismatch");
  mark_nodes(F, grid);  // validates the marks against the grid
  const std::size_t P = fam.param_count();
  const bool pathwise = static_cast<bool>(F.grad) && !cfg.force_spsa;

  OptResult res;
  res.trace.seed = cfg.seed;
  res.trace.param_count = P;
  res.trace.gradient = pathwise ? "pathwise" : "spsa";
  std::vector<double> theta(P, 0.0), best_theta(P, 0.0);
  std::vector<double> g(P, 0.0), s2(P, 0.0);

  const PathBatch holdout = sample_brownian(
      grid, cfg.holdout_batch, fam.dim, substream_seed(cfg.seed, 7));
  double best = detail::family_objective(F, fam, theta, grid, holdout);
  res.trace.initial_holdout = best;
  if (!std::isfinite(best)) {
    res.aborted = true;
    res.abort_reason = "objective not finite at theta = 0";
    res.policy = family_policy(fam, theta, grid.horizon);
    return res;
  }

  for (std::size_t it = 0; it < cfg.iters; ++it) {
    const PathBatch base = sample_brownian(grid, cfg.batch, fam.dim,
                                           substream_seed(cfg.seed, 1000 + it));
    double obj;
    if (pathwise) {
      obj = detail::family_objective_grad(F, fam, theta, grid, base, g);
    } else {
      NormalStream coin(substream_seed(cfg.seed, 5000 + it));
      std::vector<double> delta(P), tp(theta), tm(theta);
      for (std::size_t i = 0; i < P; ++i)
        delta[i] = coin.uniform() < 0.5 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < P; ++i) {
        tp[i] += cfg.spsa_c * delta[i];
        tm[i] -= cfg.spsa_c * delta[i];
      }
      const double jp = detail::family_objective(F, fam, tp, grid, base);
      const double jm = detail::family_objective(F, fam, tm, grid, base);
      obj = 0.5 * (jp + jm);
      const double diff = (jp - jm) / (2.0 * cfg.spsa_c);
      for (std::size_t i = 0; i < P; ++i) g[i] = diff * delta[i];
    }
    double gnorm = 0.0;
    bool finite = std::isfinite(obj);
    for (double v : g) {
      finite = finite && std::isfinite(v);
      gnorm += v * v;
    }
    gnorm = std::sqrt(gnorm);
    const double step = cfg.step0 * std::pow(cfg.decay, static_cast<double>(it));
    res.trace.iterations.push_back({obj, step, gnorm});
    if (!finite) {
      res.aborted = true;
      res.abort_reason = "objective or gradient diverged at iteration " +
                         std::to_string(it);
      break;
    }
    for (std::size_t i = 0; i < P; ++i) {
      s2[i] = cfg.rms_beta * s2[i] + (1.0 - cfg.rms_beta) * g[i] * g[i];
      theta[i] += step * g[i] / (std::sqrt(s2[i]) + 1e-8);
    }
    if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iters) {
      const double ho = detail::family_objective(F, fam, theta, grid, holdout);
      if (std::isfinite(ho) && ho > best) {
        best = ho;
        best_theta = theta;
      }
    }
  }

  res.trace.theta = best_theta;
  const PathBatch fresh = sample_brownian(
      grid, cfg.holdout_batch, fam.dim, substream_seed(cfg.seed, 9));
  double se = 0.0;
  res.trace.holdout_objective =
      detail::family_objective(F, fam, best_theta, grid, fresh, &se);
  res.trace.holdout_se = se;
  res.policy = family_policy(fam, best_theta, grid.horizon);
  return res;
}

struct OracleComparison {
  GapReport optimized;
  std::optional<GapReport> oracle;  // gap of F's oracle policy, same base
};

/// Gap of the optimized policy against an exact lhs (closed form when the
/// functional carries one, tensor quadrature otherwise); when the functional
/// also names an optimal policy its gap under the same base batch is reported
/// alongside.
inline OracleComparison compare_to_oracle(const CylinderFunctional& F,
                                          const DriftPolicy& policy,
                                          const PathBatch& base) {
  EstimatorReport lhs;
  if (F.oracle.log_mgf) {
    lhs.value = *F.oracle.log_mgf;
    lhs.method = "oracle";
  } else {
    lhs = estimate_lhs_quadrature(F);
  }
  OracleComparison out;
  out.optimized = duality_gap(F, policy, base, lhs);
  if (F.oracle.optimal_policy) {
    const DriftPolicyPtr op = F.oracle.optimal_policy(base.grid);
    out.oracle = duality_gap(F, *op, base, lhs);
  }
  return out;
}

/// Deterministic generator of bounded test policies (constant, piecewise
/// open-loop or affine feedback, hard-clamped); the weak-duality property
/// suite draws from it.
inline DriftPolicyPtr random_clamped_policy(std::size_t dim, double horizon,
                                            double clamp, std::uint64_t seed) {
  NormalStream gen(substream_seed(seed, 1));
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * gen.uniform(); };
  const int kind = static_cast<int>(substream_seed(seed, 0) % 3);
  DriftPolicyPtr inner;
  if (kind == 0) {
    std::vector<double> v(dim);
    for (double& x : v) x = u(-1.5, 1.5);
    inner = std::make_shared<ConstantPolicy>(std::move(v), horizon);
  } else if (kind == 1) {
    const std::size_t bins = 4;
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
      edges[i] = horizon * static_cast<double>(i) / static_cast<double>(bins);
    std::vector<double> vals(bins * dim);
    for (double& x : vals) x = u(-1.5, 1.5);
    inner = std::make_shared<OpenLoopStepPolicy>(std::move(edges),
                                                 std::move(vals), dim);
  } else {
    auto A = std::make_shared<std::vector<double>>(dim * dim);
    auto b = std::make_shared<std::vector<double>>(dim);
    for (double& x : *A) x = u(-1.0, 1.0) / static_cast<double>(dim);
    for (double& x : *b) x = u(-1.5, 1.5);
    inner = std::make_shared<LinearFeedbackPolicy>(
        dim,
        [A](double, std::span<double> out) {
          std::copy(A->begin(), A->end(), out.begin());
        },
        [b](double, std::span<double> out) {
          std::copy(b->begin(), b->end(), out.begin());
        },
        horizon);
  }
  return std::make_shared<NormClampPolicy>(std::move(inner), clamp);
}

}  // namespace wvr
