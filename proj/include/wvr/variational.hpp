#pragma once

// Both sides of the variational representation
//   log E[e^{F(B)}] = sup_v E[F(B^v) - 1/2 ∫|v_t|^2 dt],
// the duality gap, the Donsker-Varadhan bound, and monotone truncation sweeps.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wvr/functionals.hpp"
#include "wvr/gaussian_law.hpp"
#include "wvr/paths.hpp"
#include "wvr/quadrature.hpp"
#include "wvr/report.hpp"
#include "wvr/stats.hpp"

namespace wvr {

/// Monte Carlo log E[e^{F(B)}]: logsumexp over paths minus log N, stabilized
/// by max subtraction; the standard error comes from the delta method on the
/// shifted mean.
inline EstimatorReport estimate_lhs(const CylinderFunctional& F,
                                    const PathBatch& paths) {
  if (paths.kind != PathKind::brownian)
    throw std::invalid_argument("estimate_lhs: needs a brownian batch");
  const std::vector<double> vals = evaluate(F, paths);
  const LogMeanExp lme = log_mean_exp(vals);
  EstimatorReport r;
  r.value = lme.value;
  r.std_error = lme.se;
  r.n_samples = vals.size();
  r.seed = paths.seed;
  r.method = "mc_lhs";
  return r;
}

/// Deterministic log E[e^{f(Gaussian marks)}] by tensor Gauss-Hermite through
/// the Cholesky root of the marks covariance. Supports dim*marks <= 3.
inline EstimatorReport estimate_lhs_quadrature(const CylinderFunctional& F,
                                               std::size_t order = 64) {
  const std::size_t n = F.input_size();
  if (n < 1 || n > 3)
    throw unsupported_error(
        "estimate_lhs_quadrature: supports 1 <= marks*dim <= 3");
  Gaussian law = brownian_marks_law(F.marks, F.dim);
  std::vector<double> L = law.cov;
  cholesky(L, n);
  const GaussianQuadrature q = GaussianQuadrature::make(n, order);
  StreamingLogSum acc;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < q.count(); ++i) {
    const auto z = q.point(i);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c <= r; ++c) s += L[r * n + c] * z[c];
      y[r] = s;
    }
    acc.add(q.log_weights[i] + F.f(y));
  }
  EstimatorReport rep;
  rep.value = acc.log_sum();
  rep.std_error = 0.0;
  rep.n_samples = q.count();
  rep.method = "quadrature_lhs";
  if (!std::isfinite(rep.value))
    throw numeric_error("estimate_lhs_quadrature: non-finite result");
  return rep;
}

/// Mean over paths of F(B^v) - 1/2 ∫|v|^2 dt under the Euler dynamics driven
/// by the given base batch (common random numbers across policies).
inline EstimatorReport estimate_rhs(const CylinderFunctional& F,
                                    const DriftPolicy& policy,
                                    const PathBatch& base) {
  const DriftDetail d = drift_detail(base, policy);
  const std::vector<double> fv = evaluate(F, d.paths);
  std::vector<double> obj(fv.size());
  for (std::size_t p = 0; p < fv.size(); ++p)
    obj[p] = fv[p] - 0.5 * d.action_sq[p];
  const MeanSe m = mean_se(obj);
  EstimatorReport r;
  r.value = m.mean;
  r.std_error = m.se;
  r.n_samples = m.n;
  r.seed = base.seed;
  r.method = "mc_rhs";
  return r;
}

/// gap = lhs - rhs. Weak duality says gap >= 0 for every admissible policy
/// up to estimation noise; it vanishes at the optimal drift.
inline GapReport duality_gap(const CylinderFunctional& F,
                             const DriftPolicy& policy, const PathBatch& base,
                             std::optional<EstimatorReport> lhs = std::nullopt) {
  EstimatorReport l = lhs ? *lhs : estimate_lhs(F, base);
  EstimatorReport r = estimate_rhs(F, policy, base);
  return make_gap_report(std::move(l), std::move(r));
}

/// Donsker-Varadhan lower bound at the law of B^v:
///   dv_value = E[F(B^v)] - H, slack = lhs - dv_value >= 0 up to noise.
/// For affine policies H is the exact Gaussian mark entropy of the simulated
/// chain; otherwise the entropy bound 1/2 E∫|v|^2 dt stands in (bound_only),
/// which only makes the reported dv_value more conservative.
struct DvReport {
  EstimatorReport drifted_mean;  // E[F(B^v)]
  RelEntropyResult entropy;
  double dv_value = 0.0;
  EstimatorReport lhs;
  double slack = 0.0;
  double slack_se = 0.0;
};

inline DvReport dv_bound(const CylinderFunctional& F, const DriftPolicy& policy,
                         const PathBatch& base) {
  const DriftDetail d = drift_detail(base, policy);
  const std::vector<double> fv = evaluate(F, d.paths);
  const MeanSe fm = mean_se(fv);
  DvReport rep;
  rep.drifted_mean.value = fm.mean;
  rep.drifted_mean.std_error = fm.se;
  rep.drifted_mean.n_samples = fm.n;
  rep.drifted_mean.seed = base.seed;
  rep.drifted_mean.method = "mc_drifted_mean";
  if (const auto* gp = dynamic_cast<const GaussianFamilyPolicy*>(&policy)) {
    rep.entropy =
        policy_marks_relative_entropy(*gp, base.grid, F.marks, base.dim);
  } else {
    const MeanSe act = mean_se(d.action_sq);
    rep.entropy.value = 0.5 * act.mean;
    rep.entropy.method = RelEntropyResult::Method::bound_only;
  }
  rep.dv_value = rep.drifted_mean.value - rep.entropy.value;
  rep.lhs = estimate_lhs(F, base);
  rep.slack = rep.lhs.value - rep.dv_value;
  rep.slack_se = std::sqrt(rep.lhs.std_error * rep.lhs.std_error +
                           rep.drifted_mean.std_error * rep.drifted_mean.std_error);
  return rep;
}

struct SweepRow {
  double M = std::numeric_limits<double>::infinity();
  double N = std::numeric_limits<double>::infinity();
  double lhs = 0.0;
  double rhs_reference = 0.0;
};

/// lhs((F ∧ M) ∨ (-N)) along a list of truncation specs, plus the rhs at a
/// reference policy under the same base batch. With N fixed the lhs column is
/// nondecreasing in M; with M fixed it is nonincreasing in N; both converge to
/// lhs(F) by monotone convergence.
inline std::vector<SweepRow> truncation_sweep(
    const CylinderFunctional& F, std::span<const TruncationSpec> specs,
    const PathBatch& base, const DriftPolicy* reference_policy = nullptr,
    std::size_t quad_order = 64) {
  double prev_m = -std::numeric_limits<double>::infinity();
  double prev_n = -std::numeric_limits<double>::infinity();
  for (const auto& s : specs) {
    if (s.M < prev_m || s.N < prev_n)
      throw std::invalid_argument(
          "truncation_sweep: specs must be ordered by nondecreasing M and N");
    prev_m = s.M;
    prev_n = s.N;
  }
  const bool quad_ok = F.input_size() <= 3;
  const ZeroPolicy zero;
  const DriftPolicy& ref = reference_policy ? *reference_policy : zero;
  std::vector<SweepRow> rows;
  rows.reserve(specs.size());
  for (const auto& s : specs) {
    const CylinderFunctional Ft = truncate(F, s);
    SweepRow row;
    row.M = s.M;
    row.N = s.N;
    row.lhs = quad_ok ? estimate_lhs_quadrature(Ft, quad_order).value
                      : estimate_lhs(Ft, base).value;
    row.rhs_reference = estimate_rhs(Ft, ref, base).value;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace wvr
