#pragma once

// Cylinder functionals F(w) = f(w(t_1),...,w(t_m)) with gradients, analytic
// oracles, truncation operators and integrability diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wvr/paths.hpp"

namespace wvr {

struct CylinderOracle {
  std::optional<double> log_mgf;  // closed-form log E[e^{F(B)}]
  std::function<DriftPolicyPtr(const TimeGrid&)> optimal_policy;  // may be null
};

/// F(w) = f(w(t_1),...,w(t_m)); f receives the mark values flattened
/// mark-major, size marks.size()*dim.
struct CylinderFunctional {
  std::string name;
  std::size_t dim = 1;
  std::vector<double> marks;  // strictly increasing, in (0, T] typically
  std::function<double(std::span<const double>)> f;
  std::function<void(std::span<const double>, std::span<double>)> grad;  // optional
  std::optional<double> lower;  // pointwise bounds on f where known
  std::optional<double> upper;
  CylinderOracle oracle;
  bool a1_violating = false;       // e^F not integrable; kept for diagnostics
  std::optional<double> follmer_sup_bound;  // density-form drift bound, if known

  std::size_t input_size() const { return marks.size() * dim; }
};

/// F wedge M and F vee (-N). Infinite entries are no-ops.
struct TruncationSpec {
  double M = std::numeric_limits<double>::infinity();
  double N = std::numeric_limits<double>::infinity();
};

inline std::vector<std::size_t> mark_nodes(const CylinderFunctional& F,
                                           const TimeGrid& grid) {
  std::vector<std::size_t> idx(F.marks.size());
  for (std::size_t i = 0; i < F.marks.size(); ++i)
    idx[i] = grid.node_index(F.marks[i]);  // throws if a mark is off the grid
  return idx;
}

/// Pointwise f applied to the path values at the marks.
inline std::vector<double> evaluate(const CylinderFunctional& F,
                                    const PathBatch& paths) {
  const auto idx = mark_nodes(F, paths.grid);
  const std::size_t m = idx.size();
  const std::size_t d = paths.dim;
  if (d != F.dim)
    throw std::invalid_argument("evaluate: functional/path dimension mismatch");
  std::vector<double> out(paths.batch);
  parallel_for(paths.batch, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> x(m * d);
    for (std::size_t p = lo; p < hi; ++p) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j)
          x[i * d + j] = paths.value(p, idx[i], j);
      out[p] = F.f(x);
    }
  });
  return out;
}

/// w -> (f ∧ M) ∨ (-N), with bounds metadata updated and the oracle dropped
/// unless the truncation is a no-op.
inline CylinderFunctional truncate(const CylinderFunctional& F,
                                   const TruncationSpec& spec) {
  if (!(spec.M > -spec.N))
    throw std::invalid_argument("truncate: requires M > -N");
  const bool noop = std::isinf(spec.M) && std::isinf(spec.N);
  if (noop) return F;
  CylinderFunctional out = F;
  std::ostringstream name;
  name << F.name << "|clip[" << -spec.N << "," << spec.M << "]";
  out.name = name.str();
  const double M = spec.M;
  const double floor_v = -spec.N;
  auto inner = F.f;
  out.f = [inner, M, floor_v](std::span<const double> x) {
    return std::max(floor_v, std::min(M, inner(x)));
  };
  if (F.grad) {
    auto ig = F.grad;
    out.grad = [inner, ig, M, floor_v](std::span<const double> x,
                                       std::span<double> g) {
      const double v = inner(x);
      if (v < M && v > floor_v) {
        ig(x, g);
      } else {
        std::fill(g.begin(), g.end(), 0.0);
      }
    };
  }
  out.upper = F.upper ? std::min(*F.upper, M) : M;
  if (std::isfinite(floor_v))
    out.lower = F.lower ? std::max(*F.lower, floor_v) : floor_v;
  out.oracle = CylinderOracle{};
  out.a1_violating = false;  // capping from above restores (A1) when M finite
  if (!std::isfinite(M)) out.a1_violating = F.a1_violating;
  out.follmer_sup_bound.reset();
  return out;
}

namespace detail {

inline double erfc_log_mgf_abs(double a) {
  // log E[e^{-a|Z|}] = a^2/2 + log erfc(a/sqrt(2))
  return 0.5 * a * a + std::log(std::erfc(a / std::sqrt(2.0)));
}

}  // namespace detail

inline CylinderFunctional make_linear(double a = 1.0, double t = 1.0) {
  CylinderFunctional F;
  F.name = "linear";
  F.marks = {t};
  F.f = [a](std::span<const double> x) { return a * x[0]; };
  F.grad = [a](std::span<const double>, std::span<double> g) { g[0] = a; };
  F.oracle.log_mgf = 0.5 * a * a * t;
  F.oracle.optimal_policy = [a, t](const TimeGrid&) -> DriftPolicyPtr {
    return std::make_shared<ConstantPolicy>(std::vector<double>{a}, t);
  };
  return F;
}

inline CylinderFunctional make_quadratic(double c = 0.25, double t = 1.0) {
  CylinderFunctional F;
  F.name = "quadratic";
  F.marks = {t};
  F.f = [c](std::span<const double> x) { return c * x[0] * x[0]; };
  F.grad = [c](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * c * x[0];
  };
  if (2.0 * c * t < 1.0) {
    F.oracle.log_mgf = -0.5 * std::log(1.0 - 2.0 * c * t);
    F.oracle.optimal_policy = [c, t](const TimeGrid&) -> DriftPolicyPtr {
      // u(s, x) = 2 c x / (1 - 2 c (t - s)) for s < t
      return std::make_shared<StateFeedbackPolicy>(
          [c, t](double s, std::span<const double> x, std::span<double> out) {
            out[0] = 2.0 * c * x[0] / (1.0 - 2.0 * c * (t - s));
          },
          std::nullopt, t);
    };
  } else {
    F.a1_violating = true;
    F.name = "diverging";
  }
  if (c >= 0.0) F.lower = 0.0;
  return F;
}

inline CylinderFunctional make_two_mark(double a1 = 1.0, double a2 = 1.0,
                                        double t1 = 0.5, double t2 = 1.0) {
  if (!(0.0 < t1 && t1 < t2))
    throw std::invalid_argument("two_mark: needs 0 < t1 < t2");
  CylinderFunctional F;
  F.name = "two_mark";
  F.marks = {t1, t2};
  F.f = [a1, a2](std::span<const double> x) { return a1 * x[0] + a2 * x[1]; };
  F.grad = [a1, a2](std::span<const double>, std::span<double> g) {
    g[0] = a1;
    g[1] = a2;
  };
  // Var(a1 B_{t1} + a2 B_{t2}) = a1^2 t1 + 2 a1 a2 t1 + a2^2 t2
  F.oracle.log_mgf = 0.5 * (a1 * a1 * t1 + 2.0 * a1 * a2 * t1 + a2 * a2 * t2);
  F.oracle.optimal_policy = [a1, a2, t1, t2](const TimeGrid&) -> DriftPolicyPtr {
    return std::make_shared<OpenLoopStepPolicy>(
        std::vector<double>{0.0, t1, t2}, std::vector<double>{a1 + a2, a2}, 1);
  };
  return F;
}

inline CylinderFunctional make_bounded_smooth(double t = 1.0) {
  CylinderFunctional F;
  F.name = "bounded_smooth";
  F.marks = {t};
  F.f = [](std::span<const double> x) { return std::sin(x[0]); };
  F.grad = [](std::span<const double> x, std::span<double> g) {
    g[0] = std::cos(x[0]);
  };
  F.lower = -1.0;
  F.upper = 1.0;
  return F;
}

/// F = log phi with phi(x) = 1 + eps sin(x): the drifted target has the
/// smooth strictly positive density phi against the Wiener marks, and the
/// resulting drift obeys |u| <= sup|phi'| / inf phi = eps / (1 - eps).
inline CylinderFunctional make_bounded_density(double eps = 0.5,
                                               double t = 1.0) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("bounded_density: eps in (0,1)");
  CylinderFunctional F;
  F.name = "bounded_density";
  F.marks = {t};
  F.f = [eps](std::span<const double> x) {
    return std::log(1.0 + eps * std::sin(x[0]));
  };
  F.grad = [eps](std::span<const double> x, std::span<double> g) {
    g[0] = eps * std::cos(x[0]) / (1.0 + eps * std::sin(x[0]));
  };
  F.lower = std::log(1.0 - eps);
  F.upper = std::log(1.0 + eps);
  F.follmer_sup_bound = eps / (1.0 - eps);
  return F;
}

inline CylinderFunctional make_unbounded_below(double scale = 1.0,
                                               double t = 1.0) {
  CylinderFunctional F;
  F.name = "unbounded_below";
  F.marks = {t};
  F.f = [scale](std::span<const double> x) { return -scale * std::abs(x[0]); };
  F.grad = [scale](std::span<const double> x, std::span<double> g) {
    g[0] = x[0] > 0.0 ? -scale : (x[0] < 0.0 ? scale : 0.0);
  };
  F.upper = 0.0;
  // E[e^{-a|Z sqrt(t)|}] with a = scale
  const double a = scale * std::sqrt(t);
  F.oracle.log_mgf = detail::erfc_log_mgf_abs(a);
  return F;
}

inline CylinderFunctional make_diverging(double c = 0.6, double t = 1.0) {
  if (2.0 * c * t < 1.0)
    throw std::invalid_argument("diverging: needs 2 c t >= 1");
  CylinderFunctional F = make_quadratic(c, t);
  F.name = "diverging";
  F.a1_violating = true;
  return F;
}

inline CylinderFunctional make_zero_functional() {
  CylinderFunctional F;
  F.name = "zero";
  F.marks = {1.0};
  F.f = [](std::span<const double>) { return 0.0; };
  F.grad = [](std::span<const double>, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
  };
  F.lower = 0.0;
  F.upper = 0.0;
  F.oracle.log_mgf = 0.0;
  F.oracle.optimal_policy = [](const TimeGrid&) -> DriftPolicyPtr {
    return std::make_shared<ZeroPolicy>();
  };
  return F;
}

inline std::vector<CylinderFunctional> catalog() {
  return {make_linear(),         make_quadratic(),       make_two_mark(),
          make_bounded_smooth(), make_bounded_density(), make_unbounded_below(),
          make_diverging(),      make_zero_functional()};
}

inline std::vector<std::pair<std::string, std::string>> functional_schemas() {
  return {
      {"linear", "linear:a=<real>[,t=<time>]"},
      {"quadratic", "quadratic:c=<real>[,t=<time>]  (valid iff 2 c t < 1)"},
      {"two_mark", "two_mark:a1=<real>,a2=<real>[,t1=<time>,t2=<time>]"},
      {"bounded_smooth", "bounded_smooth[:t=<time>]"},
      {"bounded_density", "bounded_density:eps=<real in (0,1)>[,t=<time>]"},
      {"unbounded_below", "unbounded_below:scale=<real>[,t=<time>]"},
      {"diverging", "diverging:c=<real>[,t=<time>]  (2 c t >= 1, violates integrability)"},
      {"zero", "zero"},
  };
}

namespace detail {

inline std::map<std::string, double> parse_params(
    const std::string& text, std::span<const std::string> positional) {
  std::map<std::string, double> out;
  if (text.empty()) return out;
  std::size_t pos_idx = 0;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    std::string key;
    std::string val;
    if (eq == std::string::npos) {
      if (pos_idx >= positional.size())
        throw std::invalid_argument("too many positional parameters: " + tok);
      key = positional[pos_idx++];
      val = tok;
    } else {
      key = tok.substr(0, eq);
      val = tok.substr(eq + 1);
    }
    try {
      out[key] = std::stod(val);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse parameter '" + tok + "'");
    }
  }
  return out;
}

inline double param_or(const std::map<std::string, double>& m,
                       const std::string& key, double fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

}  // namespace detail

/// Catalog entries addressable as "name" or "name:k=v,...", e.g.
/// "quadratic:c=0.25,t=1". A single bare value maps to the primary parameter.
inline CylinderFunctional parse_functional(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  using detail::param_or;
  using detail::parse_params;
  if (name == "linear") {
    const std::vector<std::string> pos = {"a", "t"};
    auto p = parse_params(rest, pos);
    return make_linear(param_or(p, "a", 1.0), param_or(p, "t", 1.0));
  }
  if (name == "quadratic") {
    const std::vector<std::string> pos = {"c", "t"};
    auto p = parse_params(rest, pos);
    return make_quadratic(param_or(p, "c", 0.25), param_or(p, "t", 1.0));
  }
  if (name == "two_mark") {
    const std::vector<std::string> pos = {"a1", "a2", "t1", "t2"};
    auto p = parse_params(rest, pos);
    return make_two_mark(param_or(p, "a1", 1.0), param_or(p, "a2", 1.0),
                         param_or(p, "t1", 0.5), param_or(p, "t2", 1.0));
  }
  if (name == "bounded_smooth") {
    const std::vector<std::string> pos = {"t"};
    auto p = parse_params(rest, pos);
    return make_bounded_smooth(param_or(p, "t", 1.0));
  }
  if (name == "bounded_density") {
    const std::vector<std::string> pos = {"eps", "t"};
    auto p = parse_params(rest, pos);
    return make_bounded_density(param_or(p, "eps", 0.5), param_or(p, "t", 1.0));
  }
  if (name == "unbounded_below") {
    const std::vector<std::string> pos = {"scale", "t"};
    auto p = parse_params(rest, pos);
    return make_unbounded_below(param_or(p, "scale", 1.0),
                                param_or(p, "t", 1.0));
  }
  if (name == "diverging") {
    const std::vector<std::string> pos = {"c", "t"};
    auto p = parse_params(rest, pos);
    return make_diverging(param_or(p, "c", 0.6), param_or(p, "t", 1.0));
  }
  if (name == "zero") return make_zero_functional();
  throw std::invalid_argument("unknown functional '" + name + "'");
}

struct IntegrabilitySettings {
  double top_fraction = 0.001;   // heaviest samples inspected
  double mass_threshold = 0.5;   // flag (A1) when they carry more than this
  std::size_t sub_batches = 8;   // stability split for the F_- mean
};

/// Empirical (A1)/(A2) diagnosis. Advisory only; never blocks estimation.
struct IntegrabilityReport {
  bool a1_ok = true;
  bool a2_ok = true;
  double top_fraction = 0.0;  // share of sum exp(F) carried by the top-k
  std::size_t top_k = 0;
  double f_minus_mean = 0.0;
  double f_minus_spread = 0.0;  // max-min over sub-batch means
  double f_max = 0.0;
};

inline IntegrabilityReport check_integrability(
    const CylinderFunctional& F, const PathBatch& paths,
    const IntegrabilitySettings& cfg = {}) {
  if (paths.kind != PathKind::brownian)
    throw std::invalid_argument("check_integrability: needs a brownian batch");
  const std::vector<double> vals = evaluate(F, paths);
  const std::size_t n = vals.size();
  IntegrabilityReport rep;

  // (A1): does the top slice of exp(F) dominate the sum? Work in the
  // max-shifted domain so nothing overflows.
  double m = -std::numeric_limits<double>::infinity();
  for (double v : vals) m = std::max(m, v);
  rep.f_max = m;
  std::vector<double> shifted(vals.begin(), vals.end());
  std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg.top_fraction * static_cast<double>(n)));
  k = std::min(k, n);
  std::nth_element(shifted.begin(), shifted.begin() + (n - k), shifted.end());
  double top = 0.0, total = 0.0;
  const double cut = shifted[n - k];
  // sum the k largest exp(F - max); ties at the cut are counted into the top
  // only up to k entries, which keeps the fraction well defined
  std::size_t taken = 0;
  for (double v : vals) total += std::exp(v - m);
  std::vector<double> sorted(vals.begin(), vals.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = n - k; i < n; ++i) top += std::exp(sorted[i] - m);
  (void)cut;
  (void)taken;
  rep.top_k = k;
  rep.top_fraction = top / total;
  rep.a1_ok = rep.top_fraction <= cfg.mass_threshold;

  // (A2): the mean of F_- must be finite and stable across sub-batches.
  const std::size_t nb = std::max<std::size_t>(1, cfg.sub_batches);
  std::vector<double> sub_means;
  double overall = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * n / nb, hi = (b + 1) * n / nb;
    if (hi == lo) continue;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += std::max(-vals[i], 0.0);
    sub_means.push_back(s / static_cast<double>(hi - lo));
  }
  for (double v : vals) overall += std::max(-v, 0.0);
  overall /= static_cast<double>(n);
  rep.f_minus_mean = overall;
  double lo = sub_means.front(), hi = sub_means.front();
  bool finite = true;
  for (double v : sub_means) {
    finite = finite && std::isfinite(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  rep.f_minus_spread = hi - lo;
  rep.a2_ok = finite && std::isfinite(overall) &&
              rep.f_minus_spread <= 0.5 * (1.0 + std::abs(overall));
  return rep;
}

}  // namespace wvr
