#include <doctest.h>

#include <cmath>
#include <vector>

#include "wvr/drift_opt.hpp"

using namespace wvr;

TEST_SUITE("drift_opt") {

TEST_CASE("constant family recovers the optimal drift of the linear case") {
  const CylinderFunctional F = make_linear(1.0);
  PolicyFamily fam;
  fam.kind = FamilyKind::constant;
  const TimeGrid g = make_grid(1.0, 50, std::vector<double>{1.0});
  OptConfig cfg;
  cfg.iters = 120;
  cfg.batch = 1024;
  cfg.holdout_batch = 1 << 15;
  cfg.seed = 100;
  const OptResult res = optimize(F, fam, g, cfg);
  REQUIRE(!res.aborted);
  CHECK(std::abs(res.trace.theta[0] - 1.0) <= 0.02);
  CHECK(std::abs(res.trace.holdout_objective - 0.5) <=
        0.01 + 3.0 * res.trace.holdout_se);
  // monotone improvement: at least the initial oracle gap minus 0.02
  CHECK(res.trace.holdout_objective - res.trace.initial_holdout >=
        0.5 - 0.02 - 3.0 * res.trace.holdout_se);
  CHECK(res.trace.gradient == "pathwise");
  CHECK(res.trace.param_count == 1);
}

TEST_CASE("zero functional keeps theta at zero exactly") {
  const CylinderFunctional F = make_zero_functional();
  PolicyFamily fam;
  fam.kind = FamilyKind::piecewise_open_loop;
  fam.time_bins = 4;
  fam.clamp = 1.0;
  const TimeGrid g = make_grid(1.0, 20, std::vector<double>{1.0});
  OptConfig cfg;
  cfg.iters = 40;
  cfg.batch = 256;
  cfg.holdout_batch = 1024;
  cfg.seed = 101;
  const OptResult res = optimize(F, fam, g, cfg);
  REQUIRE(!res.aborted);
  for (double th : res.trace.theta) CHECK(th == 0.0);  // gradient is -theta
  CHECK(res.trace.holdout_objective == 0.0);
}

TEST_CASE("spsa fallback still finds the constant optimum, loosely") {
  const CylinderFunctional F = make_linear(1.0);
  PolicyFamily fam;
  fam.kind = FamilyKind::constant;
  const TimeGrid g = make_grid(1.0, 25, std::vector<double>{1.0});
  OptConfig cfg;
  cfg.iters = 150;
  cfg.batch = 2048;
  cfg.holdout_batch = 1 << 15;
  cfg.seed = 102;
  cfg.force_spsa = true;
  const OptResult res = optimize(F, fam, g, cfg);
  REQUIRE(!res.aborted);
  CHECK(res.trace.gradient == "spsa");
  CHECK(std::abs(res.trace.theta[0] - 1.0) <= 0.2);
  CHECK(res.trace.holdout_objective >= 0.4);
}

TEST_CASE("grid feedback family improves the quadratic objective") {
  const CylinderFunctional F = make_quadratic(0.25);
  PolicyFamily fam;
  fam.kind = FamilyKind::grid_feedback;
  fam.time_bins = 5;
  fam.x_bins = 9;
  const TimeGrid g = make_grid(1.0, 100, std::vector<double>{1.0});
  OptConfig cfg;
  cfg.iters = 120;
  cfg.batch = 1024;
  cfg.holdout_batch = 1 << 14;
  cfg.seed = 103;
  const OptResult res = optimize(F, fam, g, cfg);
  REQUIRE(!res.aborted);
  // from E[F(B)] = 0.25 toward log E[e^F] = 0.3466
  CHECK(res.trace.holdout_objective >= 0.29);
  CHECK(res.trace.holdout_objective <=
        0.34657359027997264 + 3.0 * res.trace.holdout_se);
}

TEST_CASE("determinism: identical configs yield identical traces") {
  const CylinderFunctional F = make_linear(1.0);
  PolicyFamily fam;
  fam.kind = FamilyKind::linear_feedback;
  fam.time_bins = 3;
  const TimeGrid g = make_grid(1.0, 20, std::vector<double>{1.0});
  OptConfig cfg;
  cfg.iters = 25;
  cfg.batch = 512;
  cfg.holdout_batch = 2048;
  cfg.seed = 104;
  const OptResult a = optimize(F, fam, g, cfg);
  const OptResult b = optimize(F, fam, g, cfg);
  REQUIRE(a.trace.iterations.size() == b.trace.iterations.size());
  for (std::size_t i = 0; i < a.trace.iterations.size(); ++i) {
    CHECK(a.trace.iterations[i].objective == b.trace.iterations[i].objective);
    CHECK(a.trace.iterations[i].grad_norm == b.trace.iterations[i].grad_norm);
  }
  CHECK(a.trace.theta == b.trace.theta);
  CHECK(a.trace.holdout_objective == b.trace.holdout_objective);
}

TEST_CASE("clamped families respect the bound and stay weakly dual") {
  const CylinderFunctional F = make_linear(1.0);
  PolicyFamily fam;
  fam.kind = FamilyKind::constant;
  fam.clamp = 0.5;
  const TimeGrid g = make_grid(1.0, 25, std::vector<double>{1.0});
  OptConfig cfg;
  cfg.iters = 100;
  cfg.batch = 1024;
  cfg.holdout_batch = 1 << 14;
  cfg.seed = 105;
  const OptResult res = optimize(F, fam, g, cfg);
  REQUIRE(!res.aborted);
  CHECK(res.policy->sup_bound() == 0.5);
  std::vector<double> hist(g.nodes.size(), 0.0), v(1);
  for (std::size_t k = 0; k < g.steps(); ++k) {
    res.policy->eval(g, k, std::span<const double>(hist.data(), k + 1), v);
    CHECK(std::abs(v[0]) <= 0.5);
  }
  // clamped optimum of theta - theta^2/2 with |v| < 0.5 is below 0.5 - 1/8
  CHECK(res.trace.holdout_objective <= 0.5 + 3.0 * res.trace.holdout_se);
  CHECK(res.trace.holdout_objective >= 0.3);
}

TEST_CASE("optimizer aborts with a trace when the objective degenerates") {
  // finite near theta = 0, NaN once the ascent pushes paths past x = 5
  CylinderFunctional F = make_linear(2.0);
  F.f = [](std::span<const double> x) {
    return x[0] < 5.0 ? 2.0 * x[0] : std::nan("");
  };
  F.grad = [](std::span<const double>, std::span<double> g) { g[0] = 2.0; };
  F.oracle = {};
  PolicyFamily fam;
  fam.kind = FamilyKind::constant;
  const TimeGrid g = make_grid(1.0, 10, std::vector<double>{1.0});
  OptConfig cfg;
  cfg.iters = 300;
  cfg.batch = 1024;
  cfg.holdout_batch = 1024;
  cfg.seed = 106;
  const OptResult res = optimize(F, fam, g, cfg);
  CHECK(res.aborted);
  CHECK(!res.trace.iterations.empty());
  CHECK(!res.abort_reason.empty());
}

TEST_CASE("compare_to_oracle: optimized constant and closed-form feedback") {
  const TimeGrid g = make_grid(1.0, 100, std::vector<double>{1.0});
  const PathBatch base = sample_brownian(g, 100000, 1, 107);

  const CylinderFunctional lin = make_linear(1.0);
  PolicyFamily fam;
  fam.kind = FamilyKind::constant;
  OptConfig cfg;
  cfg.iters = 120;
  cfg.batch = 1024;
  cfg.holdout_batch = 1 << 14;
  cfg.seed = 108;
  const OptResult res = optimize(lin, fam, g, cfg);
  const OracleComparison cmp = compare_to_oracle(lin, *res.policy, base);
  CHECK(cmp.optimized.gap <= 0.01 + 3.0 * cmp.optimized.gap_se);
  REQUIRE(cmp.oracle.has_value());
  CHECK(std::abs(cmp.oracle->gap) <= 3.0 * cmp.oracle->gap_se);

  const CylinderFunctional quad = make_quadratic(0.25);
  const DriftPolicyPtr oracle_pol = quad.oracle.optimal_policy(g);
  const OracleComparison qc = compare_to_oracle(quad, *oracle_pol, base);
  REQUIRE(qc.oracle.has_value());
  CHECK(qc.oracle->gap <= 0.02 + 3.0 * qc.oracle->gap_se);

  const CylinderFunctional zero = make_zero_functional();
  const ZeroPolicy zp;
  const OracleComparison zc = compare_to_oracle(zero, zp, base);
  CHECK(zc.optimized.gap == 0.0);
}

TEST_CASE("random clamped policies respect their bound") {
  const TimeGrid g = make_grid(1.0, 12, {});
  const PathBatch b = sample_brownian(g, 64, 1, 109);
  for (std::uint64_t s = 0; s < 12; ++s) {
    const DriftPolicyPtr pol = random_clamped_policy(1, 1.0, 2.0, s);
    CHECK(pol->sup_bound() == 2.0);
    const DriftDetail d = drift_detail(b, *pol);
    // |v| <= 2 implies per-step action increments <= 4 dt
    for (double a : d.action_sq) CHECK(a <= 4.0 + 1e-12);
  }
}

}  // TEST_SUITE
