#include <doctest.h>

#include <cmath>
#include <vector>

#include "wvr/ou_gaussian.hpp"

using namespace wvr;

namespace {

double at(const ScalarField& f, double x) {
  return f.f(std::span<const double>(&x, 1));
}

double ou1(const ScalarField& f, double t, double x,
           const GaussianQuadrature& q) {
  return ou_apply(f, t, std::span<const double>(&x, 1), q);
}

}  // namespace

TEST_SUITE("ou_gaussian") {

TEST_CASE("quadrature integrates the Gaussian moments exactly") {
  for (std::size_t dim : {std::size_t{1}, std::size_t{2}}) {
    const GaussianQuadrature q =
        GaussianQuadrature::make(dim, dim == 1 ? 64 : 32);
    double wsum = 0.0;
    for (double w : q.weights) wsum += w;
    CHECK(std::abs(wsum - 1.0) <= 1e-12);
    // E[Z^k] for k = 2, 4, 6, 8 on the first axis: 1, 3, 15, 105
    const double want[4] = {1.0, 3.0, 15.0, 105.0};
    for (int i = 0; i < 4; ++i) {
      const double got = gauss_expect(q, [&](std::span<const double> x) {
        return std::pow(x[0], 2.0 * (i + 1));
      });
      CHECK(std::abs(got - want[i]) <= 1e-12 * want[i]);
    }
  }
}

TEST_CASE("ou_apply: contraction on linear functions and the variance fill-in") {
  const GaussianQuadrature q = GaussianQuadrature::make(1, 64);
  const ScalarField lin = field_linear(1.0);
  CHECK(std::abs(ou1(lin, std::log(2.0), 1.0, q) - 0.5) <= 1e-10);
  CHECK(ou1(lin, 0.0, 0.37, q) == at(lin, 0.37));  // exact identity at t = 0
  const ScalarField sq = field_quadratic(1.0);  // x^2
  CHECK(std::abs(ou1(sq, 1.0, 0.0, q) - (1.0 - std::exp(-2.0))) <= 1e-10);
  CHECK_THROWS_AS(ou1(lin, -0.1, 0.0, q), std::invalid_argument);
}

TEST_CASE("semigroup law and invariance of the Gaussian measure") {
  const GaussianQuadrature q = GaussianQuadrature::make(1, 64);
  const ScalarField f = field_sin();
  for (double s : {0.2, 0.7})
    for (double t : {0.1, 0.5}) {
      ScalarField qt;  // x -> (Q_t f)(x)
      qt.dim = 1;
      qt.f = [&f, t, &q](std::span<const double> x) {
        return ou_apply(f, t, x, q);
      };
      for (double x : {-1.3, 0.0, 0.8}) {
        const double lhs = ou1(qt, s, x, q);
        const double rhs = ou1(f, s + t, x, q);
        CHECK(std::abs(lhs - rhs) <= 1e-9);
      }
    }
  for (double t : {0.0, 0.3, 2.0}) {
    const double qint = gauss_expect(q, [&](std::span<const double> x) {
      return ou_apply(f, t, x, q);
    });
    const double fint = gauss_expect(q, [&](std::span<const double> x) {
      return f.f(x);
    });
    CHECK(std::abs(qint - fint) <= 1e-10);
  }
}

TEST_CASE("exponential hypercontractivity: equality and strict cases") {
  const GaussianQuadrature q = GaussianQuadrature::make(1, 64);

  const EhcResult lin = ehc_check(field_linear(1.0), 0.5, q);
  CHECK(std::abs(lin.lhs_norm - std::exp(0.5)) <= 1e-8);
  CHECK(std::abs(lin.rhs_norm - std::exp(0.5)) <= 1e-8);
  CHECK(std::abs(lin.deficit) <= 1e-8);

  const EhcResult cst = ehc_check(field_const(0.7), 1.0, q);
  CHECK(std::abs(cst.lhs_norm - std::exp(0.7)) <= 1e-10);
  CHECK(std::abs(cst.deficit) <= 1e-10);

  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    const EhcResult r = ehc_check(field_sin(), t, q);
    CHECK(r.deficit > 1e-9);  // strict for non-exponential f at t > 0
  }
  for (const ScalarField& f : scalar_catalog()) {
    if (!f.ehc_eligible) continue;
    for (double t : {0.05, 0.4, 1.7, 3.0})
      CHECK(ehc_check(f, t, q).deficit >= -1e-9);
  }
}

TEST_CASE("conditional_g: martingale identity, variance, boundary") {
  const GaussianQuadrature q = GaussianQuadrature::make(1, 64);
  const ScalarField lin = field_linear(1.0);
  for (double t : {0.0, 0.25, 0.8})
    for (double x : {-1.0, 0.2}) {
      const double g = conditional_g(lin, t, std::span<const double>(&x, 1), q);
      CHECK(std::abs(g - x) <= 1e-10);
    }
  const ScalarField sq = field_quadratic(1.0);
  const double x0 = 0.0;
  CHECK(std::abs(conditional_g(sq, 0.5, std::span<const double>(&x0, 1), q) -
                 0.5) <= 1e-10);
  const double xv = 0.77;
  CHECK(conditional_g(field_sin(), 1.0, std::span<const double>(&xv, 1), q) ==
        std::sin(0.77));
  CHECK_THROWS_AS(conditional_g(lin, 1.5, std::span<const double>(&xv, 1), q),
                  std::invalid_argument);
}

TEST_CASE("conditional-form hypercontractivity on the Wiener side") {
  const GaussianQuadrature q = GaussianQuadrature::make(1, 64);

  SUBCASE("linear f is an equality with both sides 1/2") {
    for (double t : {0.25, 0.5, 1.0}) {
      std::vector<double> marks = {t};
      if (t < 1.0) marks.push_back(1.0);
      const TimeGrid g = make_grid(1.0, 8, marks);
      const PathBatch base = sample_brownian(g, 100000, 1, 61);
      const RehcResult r = rehc_check(field_linear(1.0), t, base, q);
      CHECK(std::abs(r.lhs - 0.5) <= 3.0 * r.lhs_se);
      CHECK(std::abs(r.rhs - 0.5) <= 3.0 * r.rhs_se);
      CHECK(std::abs(r.slack) <= std::max(3.0 * r.slack_se, 1e-12));
    }
  }

  SUBCASE("constant f collapses to an exact identity") {
    const TimeGrid g = make_grid(1.0, 8, std::vector<double>{0.5, 1.0});
    const PathBatch base = sample_brownian(g, 1000, 1, 62);
    const RehcResult r = rehc_check(field_const(0.7), 0.5, base, q);
    CHECK(std::abs(r.slack) <= 1e-12);
  }

  SUBCASE("strictly convex f gives strictly positive slack") {
    const TimeGrid g = make_grid(1.0, 8, std::vector<double>{0.5, 1.0});
    const PathBatch base = sample_brownian(g, 200000, 1, 63);
    const RehcResult r = rehc_check(field_quadratic(0.25), 0.5, base, q);
    // closed-form slack: log E e^{cB_1^2} - (c(1-t) + t log E e^{(c/t) B_t^2})
    const double want = -0.5 * std::log(0.5) -
                        (0.125 + 0.5 * (-0.5) * std::log(1.0 - 0.5));
    CHECK(r.slack > 0.01);
    CHECK(std::abs(r.slack - want) <= 0.02);
  }

  SUBCASE("t outside (0, 1] is rejected") {
    const TimeGrid g = make_grid(1.0, 8, std::vector<double>{0.5, 1.0});
    const PathBatch base = sample_brownian(g, 100, 1, 64);
    CHECK_THROWS_AS(rehc_check(field_sin(), 0.0, base, q),
                    std::invalid_argument);
    CHECK_THROWS_AS(rehc_check(field_sin(), 1.2, base, q),
                    std::invalid_argument);
  }
}

TEST_CASE("brownian rescaling: identity, exact algebra, and the moments") {
  const TimeGrid g = make_grid(1.0, 16, std::vector<double>{0.25, 1.0});
  const PathBatch base = sample_brownian(g, 100000, 1, 65);

  const PathBatch same = rescale_path(base, 1.0);
  CHECK(same.values == base.values);
  CHECK(same.grid.nodes == base.grid.nodes);

  const PathBatch w = rescale_path(base, 0.25);
  CHECK(w.grid.nodes.back() == 1.0);
  const std::size_t kq = base.grid.node_index(0.25);
  const std::size_t klast = w.grid.nodes.size() - 1;
  for (std::size_t p = 0; p < 100; ++p)
    CHECK(w.value(p, klast, 0) == 2.0 * base.value(p, kq, 0));

  // W_1 has unit variance and Cov(W_s, W_1) = s
  std::vector<double> w1(w.batch), prod(w.batch);
  const std::size_t khalf = w.grid.node_index(0.5);
  for (std::size_t p = 0; p < w.batch; ++p) {
    w1[p] = w.value(p, klast, 0);
    prod[p] = w.value(p, khalf, 0) * w1[p];
  }
  const double var = sample_variance(w1);
  CHECK(std::abs(var - 1.0) <= 3.0 * var * std::sqrt(2.0 / (w.batch - 1.0)));
  const MeanSe cov = mean_se(prod);
  CHECK(std::abs(cov.mean - 0.5) <= 3.0 * cov.se);

  CHECK_THROWS_AS(rescale_path(base, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(rescale_path(base, 0.0), std::invalid_argument);
}

TEST_CASE("log-sobolev: equality at exp, zero at constants, strict otherwise") {
  const GaussianQuadrature q = GaussianQuadrature::make(1, 64);

  const LsiResult ex = lsi_check(field_exp(1.0), q);
  const double target = 2.0 * std::exp(2.0);
  CHECK(std::abs(ex.lhs - target) <= 1e-7);
  CHECK(std::abs(ex.rhs - target) <= 1e-7);

  const LsiResult one = lsi_check(field_const(1.0), q);
  CHECK(std::abs(one.lhs) <= 1e-14);
  CHECK(std::abs(one.rhs) <= 1e-14);

  const LsiResult wave = lsi_check(field_one_plus_half_sin(), q);
  CHECK(wave.deficit > 1e-6);

  for (const ScalarField& f : scalar_catalog())
    if (f.lsi_eligible) CHECK(lsi_check(f, q).deficit >= -1e-9);

  ScalarField no_grad = field_sin();
  no_grad.grad = nullptr;
  CHECK_THROWS_AS(lsi_check(no_grad, q), unsupported_error);
}

TEST_CASE("catalog fields carry the integrability tags") {
  bool saw_exp = false;
  for (const ScalarField& f : scalar_catalog()) {
    if (f.name == "exp") {
      saw_exp = true;
      CHECK(!f.ehc_eligible);  // e^{e^x} is not integrable
      CHECK(f.lsi_eligible);
    }
  }
  CHECK(saw_exp);
  CHECK_THROWS_AS(parse_scalar_field("nope"), std::invalid_argument);
}

}  // TEST_SUITE
