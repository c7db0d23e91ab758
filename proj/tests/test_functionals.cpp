#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "wvr/functionals.hpp"
#include "wvr/rng.hpp"
#include "wvr/variational.hpp"

using namespace wvr;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

/// A single-path batch with prescribed values at the marks of a grid.
PathBatch batch_with(const TimeGrid& grid, double at_t, double value) {
  PathBatch b;
  b.grid = grid;
  b.batch = 1;
  b.dim = 1;
  b.values.assign(grid.nodes.size(), 0.0);
  b.values[grid.node_index(at_t)] = value;
  return b;
}

/// Independent oracle for E[e^{-a|Z|}]: composite Simpson on [0, 40].
double simpson_abs_mgf(double a) {
  const std::size_t n = 400000;  // even
  const double h = 40.0 / n;
  auto f = [&](double x) {
    return std::exp(-a * x) * std::exp(-0.5 * x * x) /
           std::sqrt(2.0 * 3.14159265358979323846);
  };
  double s = f(0.0) + f(40.0);
  for (std::size_t i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return std::log(2.0 * s * h / 3.0);
}

}  // namespace

TEST_SUITE("functionals") {

TEST_CASE("evaluate applies f at the marks") {
  const TimeGrid g = make_grid(1.0, 4, std::vector<double>{1.0});
  CHECK(evaluate(make_linear(1.0), batch_with(g, 1.0, 0.7))[0] ==
        doctest::Approx(0.7));
  CHECK(evaluate(make_zero_functional(), batch_with(g, 1.0, 123.0))[0] == 0.0);
  CHECK(evaluate(make_quadratic(0.25), batch_with(g, 1.0, 2.0))[0] ==
        doctest::Approx(1.0));
}

TEST_CASE("evaluate rejects marks that are not grid nodes") {
  const TimeGrid g = make_grid(1.0, 4, {});  // no 0.5-free... nodes include 0.5
  const TimeGrid g3 = make_grid(1.0, 3, {});  // nodes 0,1/3,2/3,1
  const PathBatch b = sample_brownian(g3, 2, 1, 1);
  CHECK_THROWS_AS(evaluate(make_two_mark(), b), std::invalid_argument);
}

TEST_CASE("truncate clamps, keeps bounds metadata, drops oracles") {
  const TimeGrid g = make_grid(1.0, 2, std::vector<double>{1.0});
  const CylinderFunctional lin = make_linear(1.0);

  const CylinderFunctional noop = truncate(lin, {kInf, kInf});
  CHECK(noop.oracle.log_mgf == lin.oracle.log_mgf);  // no-op keeps the oracle
  CHECK(evaluate(noop, batch_with(g, 1.0, 0.7))[0] == doctest::Approx(0.7));

  const CylinderFunctional capped = truncate(lin, {0.0, kInf});
  CHECK(evaluate(capped, batch_with(g, 1.0, 0.7))[0] == 0.0);
  CHECK(!capped.oracle.log_mgf.has_value());
  CHECK(capped.upper == 0.0);

  const CylinderFunctional floored = truncate(make_quadratic(0.25), {kInf, 0.0});
  CHECK(evaluate(floored, batch_with(g, 1.0, 2.0))[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(truncate(lin, {-1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("truncation is monotone in the cap and respects both bounds") {
  const CylinderFunctional F = make_quadratic(0.25);
  NormalStream gen(77);
  for (int rep = 0; rep < 200; ++rep) {
    const double m1 = 4.0 * gen.uniform();
    const double m2 = m1 + 4.0 * gen.uniform();
    const double n1 = 2.0 * gen.uniform();
    const double x = 6.0 * gen.normal();
    const CylinderFunctional a = truncate(F, {m1, n1});
    const CylinderFunctional b = truncate(F, {m2, n1});
    const std::vector<double> pt = {x};
    CHECK(a.f(pt) <= b.f(pt));
    CHECK(a.f(pt) <= m1);
    CHECK(a.f(pt) >= -n1);
  }
}

TEST_CASE("smooth catalog oracles agree with quadrature to 1e-9") {
  for (const auto& F : {make_linear(1.0), make_linear(0.5),
                        make_quadratic(0.25), make_two_mark(),
                        make_zero_functional()}) {
    REQUIRE(F.oracle.log_mgf.has_value());
    const double quad = estimate_lhs_quadrature(F, 64).value;
    CHECK(std::abs(quad - *F.oracle.log_mgf) <= 1e-9);
  }
}

TEST_CASE("unbounded_below oracle matches an independent integral") {
  const CylinderFunctional F = make_unbounded_below(1.0);
  REQUIRE(F.oracle.log_mgf.has_value());
  // closed form a^2/2 + log erfc(a/sqrt 2) against composite Simpson
  CHECK(std::abs(*F.oracle.log_mgf - simpson_abs_mgf(1.0)) <= 1e-9);
}

TEST_CASE("gradients match central finite differences") {
  NormalStream gen(123);
  for (const auto& F :
       {make_linear(1.0), make_quadratic(0.25), make_two_mark(),
        make_bounded_smooth(), make_bounded_density(0.5)}) {
    REQUIRE(F.grad);
    const std::size_t n = F.input_size();
    std::vector<double> x(n), g(n);
    for (int rep = 0; rep < 100; ++rep) {
      for (auto& v : x) v = 2.5 * gen.normal();
      F.grad(x, g);
      const double h = 1e-6;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (F.f(xp) - F.f(xm)) / (2.0 * h);
        const double scale = std::max(1.0, std::abs(g[i]));
        CHECK(std::abs(fd - g[i]) <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("catalog names and the diverging flag") {
  const auto cat = catalog();
  std::vector<std::string> names;
  for (const auto& F : cat) names.push_back(F.name);
  for (const char* want :
       {"linear", "quadratic", "two_mark", "bounded_smooth", "bounded_density",
        "unbounded_below", "diverging", "zero"}) {
    CHECK(std::find(names.begin(), names.end(), want) != names.end());
  }
  for (const auto& F : cat)
    if (F.name == "diverging") {
      CHECK(F.a1_violating);
      CHECK(!F.oracle.log_mgf.has_value());
    }
}

TEST_CASE("spec strings parse with named and positional parameters") {
  const CylinderFunctional a = parse_functional("quadratic:c=0.25,t=1");
  CHECK(a.name == "quadratic");
  CHECK(*a.oracle.log_mgf == doctest::Approx(-0.5 * std::log(0.5)));
  const CylinderFunctional b = parse_functional("linear:2");
  CHECK(*b.oracle.log_mgf == doctest::Approx(2.0));
  const CylinderFunctional c = parse_functional("zero");
  CHECK(c.name == "zero");
  CHECK_THROWS_AS(parse_functional("nope:a=1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_functional("linear:a=x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_functional("diverging:c=0.25"), std::invalid_argument);
}

TEST_CASE("integrability diagnosis: healthy, heavy-tailed, constant") {
  const TimeGrid g = make_grid(1.0, 4, std::vector<double>{1.0});
  const PathBatch b = sample_brownian(g, 100000, 1, 31);

  const IntegrabilityReport lin = check_integrability(make_linear(1.0), b);
  CHECK(lin.a1_ok);
  CHECK(lin.a2_ok);

  const IntegrabilityReport div = check_integrability(make_diverging(0.6), b);
  CHECK(!div.a1_ok);  // top 0.1% of exp(F) dominates the sum
  CHECK(div.a2_ok);   // F >= 0, so the negative part is trivially fine

  const IntegrabilityReport zero =
      check_integrability(make_zero_functional(), b);
  CHECK(zero.a1_ok);
  CHECK(zero.a2_ok);
  CHECK(zero.top_fraction ==
        doctest::Approx(static_cast<double>(zero.top_k) / 100000.0));
}

}  // TEST_SUITE
