#pragma once

// The Ornstein-Uhlenbeck semigroup by quadrature,
//   (Q_t f)(x) = ∫ f(e^{-t} x + sqrt(1-e^{-2t}) y) γ(dy),
// exponential hypercontractivity ||exp(Q_t f)||_{e^{2t}} <= ||e^f||_1, its
// conditional-expectation reformulation on the Wiener side, Brownian
// rescaling, and the Gaussian logarithmic Sobolev inequality.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wvr/paths.hpp"
#include "wvr/quadrature.hpp"
#include "wvr/stats.hpp"
#include "wvr/variational.hpp"

namespace wvr {

/// A function on the Gaussian space (R^d, γ) with an optional gradient and
/// eligibility tags: ehc requires e^f and f integrable, lsi requires f and
/// |∇f| square integrable (checked analytically when the catalog is built).
struct ScalarField {
  std::string name;
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> f;
  std::function<void(std::span<const double>, std::span<double>)> grad;
  bool ehc_eligible = true;
  bool lsi_eligible = true;
};

/// (Q_t f)(x); exact semigroup at quadrature precision. Q_0 f = f.
inline double ou_apply(const ScalarField& field, double t,
                       std::span<const double> x, const GaussianQuadrature& q) {
  if (t < 0.0) throw std::invalid_argument("ou_apply: t must be >= 0");
  if (q.dim != field.dim)
    throw std::invalid_argument("ou_apply: quadrature dimension mismatch");
  if (t == 0.0) return field.f(x);
  const double a = std::exp(-t);
  const double s = std::sqrt(-std::expm1(-2.0 * t));
  std::vector<double> p(field.dim);
  double acc = 0.0;
  for (std::size_t i = 0; i < q.count(); ++i) {
    const auto y = q.point(i);
    for (std::size_t j = 0; j < field.dim; ++j) p[j] = a * x[j] + s * y[j];
    acc += q.weights[i] * field.f(p);
  }
  return acc;
}

struct EhcResult {
  double lhs_norm = 0.0;  // ||exp(Q_t f)||_{L^{e^{2t}}}
  double rhs_norm = 0.0;  // ||e^f||_{L^1}
  double deficit = 0.0;   // rhs - lhs >= 0
  double log_lhs = 0.0;
  double log_rhs = 0.0;
};

/// Both norms in the log domain; the outer integral is mode-recentered so the
/// large-exponent norm stays accurate even when e^{2t} Q_t f carries a strong
/// linear tilt.
inline EhcResult ehc_check(const ScalarField& field, double t,
                           const GaussianQuadrature& q) {
  if (t < 0.0) throw std::invalid_argument("ehc_check: t must be >= 0");
  const double p = std::exp(2.0 * t);
  auto phi_rhs = [&](std::span<const double> x) { return field.f(x); };
  auto phi_lhs = [&](std::span<const double> x) {
    return p * ou_apply(field, t, x, q);
  };
  EhcResult r;
  r.log_rhs = log_gauss_exp(q, phi_rhs, true);
  r.log_lhs = log_gauss_exp(q, phi_lhs, true) / p;
  if (!std::isfinite(r.log_rhs) || !std::isfinite(r.log_lhs))
    throw numeric_error("ehc_check: non-finite quadrature sum; (B) violated");
  r.lhs_norm = std::exp(r.log_lhs);
  r.rhs_norm = std::exp(r.log_rhs);
  r.deficit = r.rhs_norm - r.lhs_norm;
  return r;
}

/// g(t, x) = E[f(B_1 - B_t + x)] = ∫ f(x + sqrt(1-t) y) γ(dy), 0 <= t <= 1.
inline double conditional_g(const ScalarField& field, double t,
                            std::span<const double> x,
                            const GaussianQuadrature& q) {
  if (t < 0.0 || t > 1.0)
    throw std::invalid_argument("conditional_g: t must lie in [0, 1]");
  if (t == 1.0) return field.f(x);
  const double s = std::sqrt(1.0 - t);
  std::vector<double> p(field.dim);
  double acc = 0.0;
  for (std::size_t i = 0; i < q.count(); ++i) {
    const auto y = q.point(i);
    for (std::size_t j = 0; j < field.dim; ++j) p[j] = x[j] + s * y[j];
    acc += q.weights[i] * field.f(p);
  }
  return acc;
}

struct RehcResult {
  double lhs = 0.0;  // t log E[exp(t^{-1} g(t, B_t))]
  double rhs = 0.0;  // log E[e^{f(B_1)}]
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double slack = 0.0;  // rhs - lhs >= 0
  double slack_se = 0.0;
};

/// The conditional form of exponential hypercontractivity on the Wiener side:
/// the conditional expectation E[f(B_1)|F_t] is realized as g(t, B_t) with g
/// by quadrature and the outer expectations by Monte Carlo over the base
/// batch (common random numbers between the two sides).
inline RehcResult rehc_check(const ScalarField& field, double t,
                             const PathBatch& base,
                             const GaussianQuadrature& q) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("rehc_check: t must lie in (0, 1]");
  if (base.dim != field.dim)
    throw std::invalid_argument("rehc_check: dimension mismatch");
  const std::size_t kt = base.grid.node_index(t);
  const std::size_t k1 = base.grid.node_index(1.0);
  std::vector<double> inner(base.batch), fb(base.batch);
  parallel_for(base.batch, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> x(base.dim);
    for (std::size_t p = lo; p < hi; ++p) {
      for (std::size_t j = 0; j < base.dim; ++j) x[j] = base.value(p, kt, j);
      inner[p] = conditional_g(field, t, x, q) / t;
      for (std::size_t j = 0; j < base.dim; ++j) x[j] = base.value(p, k1, j);
      fb[p] = field.f(x);
    }
  });
  const LogMeanExp l = log_mean_exp(inner);
  const LogMeanExp r = log_mean_exp(fb);
  RehcResult out;
  out.lhs = t * l.value;
  out.lhs_se = t * l.se;
  out.rhs = r.value;
  out.rhs_se = r.se;
  out.slack = out.rhs - out.lhs;
  out.slack_se = std::sqrt(out.lhs_se * out.lhs_se + out.rhs_se * out.rhs_se);
  return out;
}

/// W_s = t^{-1/2} B_{ts}: a standard Brownian motion on [0, 1] built from the
/// base paths. The output grid carries the nodes u/t for input nodes u <= t,
/// so every output value is an exact algebraic transform of an input value.
inline PathBatch rescale_path(const PathBatch& base, double t) {
  if (!(t > 0.0 && t <= base.grid.horizon + 1e-12))
    throw std::invalid_argument("rescale_path: t must lie in (0, horizon]");
  if (!base.grid.has_node(t))
    throw std::invalid_argument(
        "rescale_path: t must be a node of the base grid");
  const std::size_t kt = base.grid.node_index(t);
  PathBatch out;
  out.grid.horizon = 1.0;
  out.grid.nodes.resize(kt + 1);
  for (std::size_t k = 0; k <= kt; ++k)
    out.grid.nodes[k] = base.grid.nodes[k] / t;
  out.grid.nodes.front() = 0.0;
  out.grid.nodes.back() = 1.0;
  out.batch = base.batch;
  out.dim = base.dim;
  out.kind = base.kind;
  out.seed = base.seed;
  out.values.resize(base.batch * (kt + 1) * base.dim);
  const double root = std::sqrt(t);
  parallel_for(base.batch, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (std::size_t k = 0; k <= kt; ++k)
        for (std::size_t j = 0; j < base.dim; ++j)
          out.value(p, k, j) = base.value(p, k, j) / root;
  });
  return out;
}

struct LsiResult {
  double lhs = 0.0;        // ∫ |f|^2 log|f| dγ
  double grad_term = 0.0;  // ∫ |∇f|^2 dγ
  double norm_term = 0.0;  // ||f||_2^2 log ||f||_2
  double rhs = 0.0;
  double deficit = 0.0;    // rhs - lhs >= 0
};

/// Gaussian logarithmic Sobolev inequality; |f|^2 log|f| is extended by 0 at
/// f = 0 (its limit value).
inline LsiResult lsi_check(const ScalarField& field,
                           const GaussianQuadrature& q) {
  if (!field.grad)
    throw unsupported_error("lsi_check: field must provide a gradient");
  LsiResult r;
  std::vector<double> g(field.dim);
  double l2 = 0.0;
  for (std::size_t i = 0; i < q.count(); ++i) {
    const auto x = q.point(i);
    const double v = field.f(x);
    const double ent = v == 0.0 ? 0.0 : v * v * std::log(std::abs(v));
    r.lhs += q.weights[i] * ent;
    field.grad(x, g);
    double gn = 0.0;
    for (double gv : g) gn += gv * gv;
    r.grad_term += q.weights[i] * gn;
    l2 += q.weights[i] * v * v;
  }
  r.norm_term = l2 <= 0.0 ? 0.0 : l2 * 0.5 * std::log(l2);
  r.rhs = r.grad_term + r.norm_term;
  r.deficit = r.rhs - r.lhs;
  return r;
}

inline ScalarField field_linear(double a = 1.0) {
  ScalarField f;
  f.name = "linear";
  f.f = [a](std::span<const double> x) { return a * x[0]; };
  f.grad = [a](std::span<const double>, std::span<double> g) { g[0] = a; };
  return f;
}

inline ScalarField field_const(double c = 1.0) {
  ScalarField f;
  f.name = "const";
  f.f = [c](std::span<const double>) { return c; };
  f.grad = [](std::span<const double>, std::span<double> g) { g[0] = 0.0; };
  return f;
}

inline ScalarField field_sin() {
  ScalarField f;
  f.name = "sin";
  f.f = [](std::span<const double> x) { return std::sin(x[0]); };
  f.grad = [](std::span<const double> x, std::span<double> g) {
    g[0] = std::cos(x[0]);
  };
  return f;
}

inline ScalarField field_one_plus_half_sin() {
  ScalarField f;
  f.name = "one_plus_half_sin";
  f.f = [](std::span<const double> x) { return 1.0 + 0.5 * std::sin(x[0]); };
  f.grad = [](std::span<const double> x, std::span<double> g) {
    g[0] = 0.5 * std::cos(x[0]);
  };
  return f;
}

inline ScalarField field_quadratic(double c = 0.25) {
  ScalarField f;
  f.name = "quadratic";
  f.f = [c](std::span<const double> x) { return c * x[0] * x[0]; };
  f.grad = [c](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * c * x[0];
  };
  f.ehc_eligible = 2.0 * c < 1.0;  // e^{c x^2} in L^1(γ)
  return f;
}

inline ScalarField field_exp(double a = 1.0) {
  ScalarField f;
  f.name = "exp";
  f.f = [a](std::span<const double> x) { return std::exp(a * x[0]); };
  f.grad = [a](std::span<const double> x, std::span<double> g) {
    g[0] = a * std::exp(a * x[0]);
  };
  f.ehc_eligible = false;  // e^{e^{ax}} is not γ-integrable
  return f;
}

/// The named fields the checks sweep over: smooth, with the eligibility tags
/// set from the closed-form integrability facts above. field_exp saturates
/// the log-Sobolev inequality; field_linear saturates hypercontractivity.
inline std::vector<ScalarField> scalar_catalog() {
  return {field_linear(),            field_const(), field_sin(),
          field_one_plus_half_sin(), field_quadratic(), field_exp()};
}

inline ScalarField parse_scalar_field(const std::string& name) {
  for (auto& f : scalar_catalog())
    if (f.name == name) return f;
  throw std::invalid_argument("unknown scalar field '" + name + "'");
}

}  // namespace wvr
