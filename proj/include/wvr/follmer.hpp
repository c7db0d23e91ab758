#pragma once

// The explicit Föllmer drift for cylinder functionals,
//   u(t, x | past marks) = ∇_x log E[ e^{f(past, x + future increments)} ],
// the entropy identity H(mu|W) = 1/2 ||u||_A^2, the general entropy upper
// bound, and the zero-variance importance-sampling construction.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "wvr/functionals.hpp"
#include "wvr/gaussian_law.hpp"
#include "wvr/paths.hpp"
#include "wvr/quadrature.hpp"
#include "wvr/rng.hpp"
#include "wvr/variational.hpp"

namespace wvr {

enum class DriftForm {
  automatic,  // ratio when a gradient is available, else score
  ratio,      // E[e^f ∇f] / E[e^f]
  score,      // E[e^f C^{-1}G . 1] / E[e^f], Gaussian integration by parts
};

struct FollmerSettings {
  std::size_t order_1d = 64;      // inner Gauss-Hermite order, one dimension
  std::size_t order_tensor = 32;  // per axis for 2-3 inner dimensions
  std::size_t inner_mc = 10000;   // fallback beyond quadrature range
  std::uint64_t inner_seed = 0x51bf0a2d9c3ull;
  double terminal_eps = 1e-8;     // below this remaining variance, use ∇f
  DriftForm form = DriftForm::automatic;
};

namespace detail {

inline GaussianQuadrature follmer_rule(std::size_t nf,
                                       const FollmerSettings& s) {
  if (nf == 1) return GaussianQuadrature::make(1, s.order_1d);
  if (nf <= 3) return GaussianQuadrature::make(nf, s.order_tensor);
  GaussianQuadrature mc;
  mc.dim = nf;
  mc.order = 0;
  mc.nodes.resize(s.inner_mc * nf);
  mc.weights.assign(s.inner_mc, 1.0 / static_cast<double>(s.inner_mc));
  mc.log_weights.assign(s.inner_mc,
                        -std::log(static_cast<double>(s.inner_mc)));
  NormalStream gen(s.inner_seed);
  for (double& v : mc.nodes) v = gen.normal();
  return mc;
}

/// Central finite differences of f, used when no gradient is provided.
inline void fd_gradient(const CylinderFunctional& F, std::span<const double> x,
                        std::span<double> g) {
  std::vector<double> p(x.begin(), x.end());
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x0 = p[i];
    p[i] = x0 + h;
    const double fp = F.f(p);
    p[i] = x0 - h;
    const double fm = F.f(p);
    p[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
}

struct FollmerNode {
  std::size_t fut_begin = 0;       // index of the first future mark
  std::vector<double> chol;        // m_f x m_f time covariance Cholesky
  std::vector<double> score_coef;  // C^{-1} 1, size m_f
  const GaussianQuadrature* rule = nullptr;
  bool terminal_shortcut = false;  // all future variance below terminal_eps
};

/// One drift evaluation. `past` holds the mark values already realized
/// (fut_begin marks, mark-major); x is the current position.
inline void follmer_eval_node(const CylinderFunctional& F,
                              const FollmerNode& nd, DriftForm form,
                              std::span<const double> x,
                              std::span<const double> past,
                              std::span<double> out, std::size_t grid_node) {
  const std::size_t d = F.dim;
  const std::size_t m = F.marks.size();
  const std::size_t mf = m - nd.fut_begin;
  if (mf == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  std::array<double, 16> pt{};
  for (std::size_t i = 0; i < nd.fut_begin * d; ++i) pt[i] = past[i];
  const std::span<double> ptv(pt.data(), m * d);

  const bool want_ratio =
      form == DriftForm::ratio ||
      (form == DriftForm::automatic && static_cast<bool>(F.grad));
  if (nd.terminal_shortcut) {
    for (std::size_t i = nd.fut_begin; i < m; ++i)
      for (std::size_t j = 0; j < d; ++j) pt[i * d + j] = x[j];
    std::array<double, 16> gb{};
    const std::span<double> gbv(gb.data(), m * d);
    if (F.grad)
      F.grad(ptv, gbv);
    else
      fd_gradient(F, ptv, gbv);
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = nd.fut_begin; i < m; ++i) s += gb[i * d + j];
      out[j] = s;
    }
    return;
  }

  const GaussianQuadrature& q = *nd.rule;
  const std::size_t nf = mf * d;
  double wmax = -std::numeric_limits<double>::infinity();
  double den = 0.0;
  std::array<double, 3> num{};
  std::array<double, 16> gvec{};
  std::array<double, 3> svec{};
  for (std::size_t i = 0; i < q.count(); ++i) {
    const double* z = q.nodes.data() + i * nf;
    // future mark l, coordinate j: G_{l,j} = sum_{c<=l} L[l,c] z[c*d+j]
    for (std::size_t l = 0; l < mf; ++l)
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c <= l; ++c)
          s += nd.chol[l * mf + c] * z[c * d + j];
        gvec[l * d + j] = s;
        pt[(nd.fut_begin + l) * d + j] = x[j] + s;
      }
    const double g = F.f(ptv);
    if (std::isnan(g))
      throw numeric_error("follmer drift: functional returned NaN", grid_node);
    const double a = q.log_weights[i] + g;
    if (want_ratio) {
      std::array<double, 16> gb{};
      const std::span<double> gbv(gb.data(), m * d);
      F.grad(ptv, gbv);
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < mf; ++l)
          s += gb[(nd.fut_begin + l) * d + j];
        svec[j] = s;
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < mf; ++l)
          s += nd.score_coef[l] * gvec[l * d + j];
        svec[j] = s;
      }
    }
    if (a == -std::numeric_limits<double>::infinity()) continue;
    if (a <= wmax) {
      const double w = std::exp(a - wmax);
      den += w;
      for (std::size_t j = 0; j < d; ++j) num[j] += w * svec[j];
    } else {
      const double r = std::exp(wmax - a);
      den = den * r + 1.0;
      for (std::size_t j = 0; j < d; ++j) num[j] = num[j] * r + svec[j];
      wmax = a;
    }
  }
  if (!(den > 0.0) || !std::isfinite(den))
    throw numeric_error(
        "follmer drift: inner expectation degenerated (check (A1))",
        grid_node);
  for (std::size_t j = 0; j < d; ++j) {
    out[j] = num[j] / den;
    if (!std::isfinite(out[j]))
      throw numeric_error("follmer drift: non-finite value (check (A1))",
                          grid_node);
  }
}

inline FollmerNode build_follmer_node(const CylinderFunctional& F, double t,
                                      const FollmerSettings& s,
                                      const GaussianQuadrature* rule_for_nf) {
  FollmerNode nd;
  const std::size_t m = F.marks.size();
  nd.fut_begin = m;
  for (std::size_t i = 0; i < m; ++i) {
    if (F.marks[i] > t + 1e-15) {
      nd.fut_begin = i;
      break;
    }
  }
  const std::size_t mf = m - nd.fut_begin;
  if (mf == 0) return nd;
  if (F.marks.back() - t < s.terminal_eps) {
    nd.terminal_shortcut = true;
    return nd;
  }
  nd.chol.assign(mf * mf, 0.0);
  for (std::size_t i = 0; i < mf; ++i)
    for (std::size_t l = 0; l < mf; ++l)
      nd.chol[i * mf + l] = std::min(F.marks[nd.fut_begin + i] - t,
                                     F.marks[nd.fut_begin + l] - t);
  std::vector<double> cov = nd.chol;
  cholesky(nd.chol, mf);
  nd.score_coef.assign(mf, 1.0);
  {
    std::span<double> sc(nd.score_coef);
    chol_solve(nd.chol, mf, sc);
  }
  (void)cov;
  nd.rule = rule_for_nf;
  return nd;
}

}  // namespace detail

/// Föllmer drift for a single-mark functional: u(t,x) = ∇_x log E[e^{f(x+σZ)}]
/// with σ^2 = t_m - t. Returns zero at and past the mark (the A_{b,0} cutoff),
/// and ∇f(x) within terminal_eps of it. The ratio and score forms agree for
/// smooth f at quadrature accuracy.
inline std::vector<double> follmer_drift(const CylinderFunctional& F, double t,
                                         std::span<const double> x,
                                         const FollmerSettings& settings = {},
                                         DriftForm form = DriftForm::automatic) {
  if (F.marks.size() != 1)
    throw unsupported_error(
        "follmer_drift: single-mark functionals only; build a follmer_policy "
        "for multi-mark drift");
  std::vector<double> out(F.dim, 0.0);
  if (t >= F.marks[0] - 1e-15) return out;
  const std::size_t nf = F.dim;
  if (nf > 3) throw unsupported_error("follmer_drift: dim must be <= 3");
  // divergence probe: the inner log-integral must be stable in the order
  if (F.marks[0] - t >= settings.terminal_eps) {
    const double sig = std::sqrt(F.marks[0] - t);
    auto logz = [&](std::size_t order) {
      const GaussianQuadrature q = GaussianQuadrature::make(nf, order);
      StreamingLogSum acc;
      std::vector<double> p(nf);
      for (std::size_t i = 0; i < q.count(); ++i) {
        for (std::size_t j = 0; j < nf; ++j)
          p[j] = x[j] + sig * q.point(i)[j];
        acc.add(q.log_weights[i] + F.f(p));
      }
      return acc.log_sum();
    };
    const std::size_t o = nf == 1 ? settings.order_1d : settings.order_tensor;
    if (std::abs(logz(o) - logz(2 * o)) > 0.5)
      throw numeric_error(
          "follmer_drift: inner expectation diverges with quadrature order; "
          "(A1) violated locally");
  }
  const GaussianQuadrature rule = detail::follmer_rule(nf, settings);
  const detail::FollmerNode nd =
      detail::build_follmer_node(F, t, settings, &rule);
  detail::follmer_eval_node(F, nd, form, x, {}, out, 0);
  return out;
}

/// DriftPolicy driving B into the law with density e^{F}/Z against the Wiener
/// marks. Bound to a grid at construction so every node's inner-integration
/// transform is precomputed; evaluation is then pure and thread-safe.
class FollmerPolicy final : public DriftPolicy {
 public:
  FollmerPolicy(CylinderFunctional F, const TimeGrid& grid,
                FollmerSettings settings = {})
      : F_(std::move(F)), settings_(settings) {
    const std::size_t m = F_.marks.size();
    const std::size_t d = F_.dim;
    if (m == 0) throw std::invalid_argument("FollmerPolicy: no marks");
    if (m >= 2 && m * d > 2)
      throw unsupported_error(
          "FollmerPolicy: multi-mark drift supported for marks*dim <= 2");
    if (m == 1 && d > 3)
      throw unsupported_error("FollmerPolicy: dim must be <= 3");
    mark_nodes_ = mark_nodes(F_, grid);
    if (F_.a1_violating)
      throw numeric_error(
          "FollmerPolicy: functional is flagged as violating (A1)");
    // order-doubling probe of log E[e^{F}] catches divergent inner integrals
    if (m * d <= 3) {
      const std::size_t o = m * d == 1 ? settings_.order_1d : settings_.order_tensor;
      const double z1 = estimate_lhs_quadrature(F_, o).value;
      const double z2 = estimate_lhs_quadrature(F_, 2 * o).value;
      if (std::abs(z1 - z2) > 0.5)
        throw numeric_error(
            "FollmerPolicy: inner expectation diverges with quadrature order; "
            "(A1) violated");
    }
    // one rule per distinct future-dimension count
    for (std::size_t mf = 1; mf <= m; ++mf)
      rules_[mf * d] = detail::follmer_rule(mf * d, settings_);
    times_ = grid.nodes;
    nodes_.reserve(grid.nodes.size());
    for (double t : grid.nodes) {
      detail::FollmerNode nd = detail::build_follmer_node(F_, t, settings_, nullptr);
      const std::size_t mf = m - nd.fut_begin;
      if (mf > 0 && !nd.terminal_shortcut) nd.rule = &rules_.at(mf * d);
      nodes_.push_back(std::move(nd));
    }
  }

  void eval(const TimeGrid& grid, std::size_t node,
            std::span<const double> history,
            std::span<double> out) const override {
    if (node >= nodes_.size() || std::abs(grid.nodes[node] - times_[node]) > 1e-12)
      throw std::invalid_argument("FollmerPolicy: evaluated on a foreign grid");
    const detail::FollmerNode& nd = nodes_[node];
    const std::size_t d = F_.dim;
    std::array<double, 16> past{};
    for (std::size_t i = 0; i < nd.fut_begin; ++i)
      for (std::size_t j = 0; j < d; ++j)
        past[i * d + j] = history[mark_nodes_[i] * d + j];
    detail::follmer_eval_node(F_, nd, settings_.form, history.last(d),
                              std::span<const double>(past.data(),
                                                      nd.fut_begin * d),
                              out, node);
  }

  std::optional<double> sup_bound() const override {
    return F_.follmer_sup_bound;
  }
  std::optional<double> cutoff() const override { return F_.marks.back(); }

  const CylinderFunctional& functional() const { return F_; }

 private:
  CylinderFunctional F_;
  FollmerSettings settings_;
  std::vector<std::size_t> mark_nodes_;
  std::map<std::size_t, GaussianQuadrature> rules_;
  std::vector<detail::FollmerNode> nodes_;
  std::vector<double> times_;
};

inline std::shared_ptr<FollmerPolicy> follmer_policy(
    const CylinderFunctional& F, const TimeGrid& grid,
    const FollmerSettings& settings = {}) {
  return std::make_shared<FollmerPolicy>(F, grid, settings);
}

/// log Z and E_mu[F] for dmu = e^{F}/Z dGamma over the mark Gaussian, both by
/// tilted tensor quadrature (deterministic).
struct TiltedMarkStats {
  double log_z = 0.0;
  double mean_f = 0.0;
};

inline TiltedMarkStats tilted_mark_stats(const CylinderFunctional& F,
                                         std::size_t order = 64) {
  const std::size_t n = F.input_size();
  if (n < 1 || n > 3)
    throw unsupported_error("tilted_mark_stats: supports marks*dim <= 3");
  Gaussian law = brownian_marks_law(F.marks, F.dim);
  std::vector<double> L = law.cov;
  cholesky(L, n);
  const GaussianQuadrature q = GaussianQuadrature::make(n, order);
  StreamingLogSum z;
  StreamingTiltedMean tm(1);
  std::vector<double> y(n);
  double fval[1];
  for (std::size_t i = 0; i < q.count(); ++i) {
    const auto zpt = q.point(i);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c <= r; ++c) s += L[r * n + c] * zpt[c];
      y[r] = s;
    }
    const double g = F.f(y);
    const double a = q.log_weights[i] + g;
    z.add(a);
    fval[0] = g;
    tm.add(a, std::span<const double>(fval, 1));
  }
  TiltedMarkStats out;
  out.log_z = z.log_sum();
  double mean[1];
  tm.result(std::span<double>(mean, 1));
  out.mean_f = mean[0];
  return out;
}

/// H(mu|W) = E_mu[F] - log Z (exact for the Föllmer target, whose density
/// against Wiener is a function of the marks alone) versus half the squared
/// action of the Föllmer policy along its own paths.
struct EntropyIdentityReport {
  double h = 0.0;
  double log_z = 0.0;
  double mu_mean_f = 0.0;
  EstimatorReport half_action;
  double diff = 0.0;  // h - half_action.value
};

inline EntropyIdentityReport entropy_identity_check(
    const CylinderFunctional& F, const PathBatch& base,
    const FollmerSettings& settings = {}) {
  EntropyIdentityReport rep;
  const TiltedMarkStats ts = tilted_mark_stats(F);
  rep.log_z = ts.log_z;
  rep.mu_mean_f = ts.mean_f;
  rep.h = ts.mean_f - ts.log_z;
  const auto policy = follmer_policy(F, base.grid, settings);
  EstimatorReport act = action_norm_sq(*policy, base);
  act.value *= 0.5;
  act.std_error *= 0.5;
  act.method = "mc_half_action";
  rep.half_action = act;
  rep.diff = rep.h - rep.half_action.value;
  return rep;
}

/// Exact Gaussian mark entropy of an affine policy against half its Monte
/// Carlo action. The mark entropy lower-bounds the path entropy, so
/// slack = action/2 - H >= 0 up to the action's estimation noise.
struct EntropyBoundReport {
  RelEntropyResult h;
  EstimatorReport half_action;
  double slack = 0.0;
  double slack_se = 0.0;
};

inline EntropyBoundReport entropy_bound_check(
    const DriftPolicy& policy, const PathBatch& base,
    std::span<const double> mark_times) {
  const auto* gp = dynamic_cast<const GaussianFamilyPolicy*>(&policy);
  if (!gp)
    throw unsupported_error(
        "entropy_bound_check: policy must be in the Gaussian (affine) family");
  EntropyBoundReport rep;
  rep.h = policy_marks_relative_entropy(*gp, base.grid, mark_times, base.dim);
  EstimatorReport act = action_norm_sq(policy, base);
  act.value *= 0.5;
  act.std_error *= 0.5;
  act.method = "mc_half_action";
  rep.half_action = act;
  rep.slack = rep.half_action.value - rep.h.value;
  rep.slack_se = rep.half_action.std_error;
  return rep;
}

/// Variance of the plain estimator e^{F(B)} against the importance-sampling
/// estimator e^{F(X)} exp(girsanov log-weight) under the Föllmer policy. In
/// the continuum the latter is constant; the Euler residual is what remains.
struct ZeroVarianceReport {
  double mean_plain = 0.0;
  double var_plain = 0.0;
  double mean_is = 0.0;
  double var_is = 0.0;
  double ratio = 0.0;  // var_is / var_plain
};

inline ZeroVarianceReport zero_variance_check(
    const CylinderFunctional& F, const PathBatch& base,
    const FollmerSettings& settings = {}) {
  ZeroVarianceReport rep;
  const std::vector<double> plain_f = evaluate(F, base);
  std::vector<double> plain(plain_f.size());
  for (std::size_t i = 0; i < plain.size(); ++i) plain[i] = std::exp(plain_f[i]);
  const MeanSe mp = mean_se(plain);
  rep.mean_plain = mp.mean;
  rep.var_plain = mp.sd * mp.sd;

  const auto policy = follmer_policy(F, base.grid, settings);
  const DriftDetail dd = drift_detail(base, *policy);
  const std::vector<double> fx = evaluate(F, dd.paths);
  std::vector<double> is(fx.size());
  for (std::size_t i = 0; i < is.size(); ++i)
    is[i] = std::exp(fx[i] + dd.log_weight[i]);
  const MeanSe mi = mean_se(is);
  rep.mean_is = mi.mean;
  rep.var_is = mi.sd * mi.sd;
  rep.ratio = rep.var_plain > 0.0
                  ? rep.var_is / rep.var_plain
                  : (rep.var_is == 0.0
                         ? 0.0
                         : std::numeric_limits<double>::infinity());
  return rep;
}

}  // namespace wvr
