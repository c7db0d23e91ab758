#pragma once

// Experiment runner: named experiments over the module operations, a flat
// reproducible config, and persisted run records (JSON + CSV). A run is
// reproducible bitwise from its persisted config alone, for any thread count.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wvr/json_io.hpp"
#include "wvr/wvr.hpp"

namespace wvr {

/// Everything a run depends on numerically, plus output plumbing. threads and
/// out_dir never influence the numbers produced.
struct ExperimentConfig {
  std::string subcommand = "lhs";
  std::string functional = "zero";  // catalog spec string
  std::string policy = "zero";      // policy spec string
  std::string field = "sin";        // scalar field for ou/lsi checks
  double horizon = 1.0;
  std::size_t steps = 100;
  std::size_t n = 100000;  // Monte Carlo batch
  std::uint64_t seed = 1;
  std::size_t quad_order = 64;
  std::vector<double> t_values;  // ou checks; defaults set per subcommand
  std::vector<double> m_values;  // truncation caps
  std::vector<double> n_values;  // truncation floors
  std::string suite = "acceptance";
  // optimizer block
  std::string family = "constant";
  std::size_t time_bins = 16;
  std::size_t iters = 300;
  std::size_t opt_batch = 2048;
  double step0 = 0.25;
  double decay = 0.98;
  double clamp = 0.0;  // 0 disables the clamp
  // plumbing
  unsigned threads = 0;
  std::string out_dir;  // empty: $WVR_OUT or ./runs
};

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"subcommand", c.subcommand},
           {"functional", c.functional},
           {"policy", c.policy},
           {"field", c.field},
           {"horizon", c.horizon},
           {"steps", c.steps},
           {"n", c.n},
           {"seed", c.seed},
           {"quad_order", c.quad_order},
           {"t_values", c.t_values},
           {"m_values", c.m_values},
           {"n_values", c.n_values},
           {"suite", c.suite},
           {"family", c.family},
           {"time_bins", c.time_bins},
           {"iters", c.iters},
           {"opt_batch", c.opt_batch},
           {"step0", c.step0},
           {"decay", c.decay},
           {"clamp", c.clamp},
           {"threads", c.threads},
           {"out_dir", c.out_dir}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  ExperimentConfig d;
  c.subcommand = j.value("subcommand", d.subcommand);
  c.functional = j.value("functional", d.functional);
  c.policy = j.value("policy", d.policy);
  c.field = j.value("field", d.field);
  c.horizon = j.value("horizon", d.horizon);
  c.steps = j.value("steps", d.steps);
  c.n = j.value("n", d.n);
  c.seed = j.value("seed", d.seed);
  c.quad_order = j.value("quad_order", d.quad_order);
  c.t_values = j.value("t_values", d.t_values);
  c.m_values = j.value("m_values", d.m_values);
  c.n_values = j.value("n_values", d.n_values);
  c.suite = j.value("suite", d.suite);
  c.family = j.value("family", d.family);
  c.time_bins = j.value("time_bins", d.time_bins);
  c.iters = j.value("iters", d.iters);
  c.opt_batch = j.value("opt_batch", d.opt_batch);
  c.step0 = j.value("step0", d.step0);
  c.decay = j.value("decay", d.decay);
  c.clamp = j.value("clamp", d.clamp);
  c.threads = j.value("threads", d.threads);
  c.out_dir = j.value("out_dir", d.out_dir);
}

/// One recorded tolerance check; pass is recomputable from the stored numbers:
///   cmp "ge":    value >= bound
///   cmp "le":    value <= bound
///   cmp "absle": |value| <= bound
struct CheckLine {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  std::string cmp = "le";
  bool pass = false;
};

inline bool evaluate_check(const std::string& cmp, double value, double bound) {
  if (cmp == "ge") return value >= bound;
  if (cmp == "le") return value <= bound;
  if (cmp == "absle") return std::abs(value) <= bound;
  throw std::invalid_argument("unknown check comparator '" + cmp + "'");
}

inline CheckLine make_check(std::string name, double value, std::string cmp,
                            double bound) {
  CheckLine c;
  c.name = std::move(name);
  c.value = value;
  c.bound = bound;
  c.cmp = std::move(cmp);
  c.pass = evaluate_check(c.cmp, value, bound);
  return c;
}

inline void to_json(json& j, const CheckLine& c) {
  j = json{{"name", c.name},
           {"value", c.value},
           {"bound", c.bound},
           {"cmp", c.cmp},
           {"pass", c.pass}};
}

inline void from_json(const json& j, CheckLine& c) {
  j.at("name").get_to(c.name);
  j.at("value").get_to(c.value);
  j.at("bound").get_to(c.bound);
  j.at("cmp").get_to(c.cmp);
  j.at("pass").get_to(c.pass);
}

struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct RunRecord {
  std::string artifact_version = kArtifactVersion;
  ExperimentConfig config;
  std::vector<CheckLine> checks;
  json reports = json::object();
  std::vector<CsvTable> tables;
  // side files written as JSON lines (one object per line), e.g. opt traces
  std::vector<std::pair<std::string, std::vector<json>>> jsonl;
  double wall_ms = 0.0;
  bool pass = true;

  void add_check(CheckLine c) {
    pass = pass && c.pass;
    checks.push_back(std::move(c));
  }
};

inline void to_json(json& j, const RunRecord& r) {
  json tables = json::array();
  for (const auto& t : r.tables)
    tables.push_back(json{{"name", t.name}, {"header", t.header}, {"rows", t.rows}});
  j = json{{"artifact_version", r.artifact_version},
           {"config", r.config},
           {"checks", r.checks},
           {"reports", r.reports},
           {"tables", tables},
           {"wall_ms", r.wall_ms},
           {"pass", r.pass}};
}

/// Resolves a policy spec string against a functional and grid. Accepted:
/// zero | constant:<a> | linear_feedback:a=<gain>,b=<offset> | follmer |
/// oracle (the functional's optimal policy). An optional clamp=<c> wraps the
/// result in a hard norm clamp.
inline DriftPolicyPtr parse_policy(const std::string& spec,
                                   const CylinderFunctional& F,
                                   const TimeGrid& grid) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  DriftPolicyPtr p;
  std::map<std::string, double> params;
  if (name == "zero") {
    p = std::make_shared<ZeroPolicy>();
  } else if (name == "constant") {
    const std::vector<std::string> pos = {"a", "clamp"};
    params = detail::parse_params(rest, pos);
    std::vector<double> v(F.dim, detail::param_or(params, "a", 1.0));
    p = std::make_shared<ConstantPolicy>(std::move(v), grid.horizon);
  } else if (name == "linear_feedback") {
    const std::vector<std::string> pos = {"a", "b", "clamp"};
    params = detail::parse_params(rest, pos);
    const double gain = detail::param_or(params, "a", -1.0);
    const double offset = detail::param_or(params, "b", 0.0);
    if (F.dim != 1)
      throw std::invalid_argument("linear_feedback policy spec needs dim 1");
    p = LinearFeedbackPolicy::scalar([gain](double) { return gain; },
                                     [offset](double) { return offset; },
                                     grid.horizon);
  } else if (name == "follmer") {
    params = detail::parse_params(rest, std::vector<std::string>{"clamp"});
    p = follmer_policy(F, grid);
  } else if (name == "oracle") {
    params = detail::parse_params(rest, std::vector<std::string>{"clamp"});
    if (!F.oracle.optimal_policy)
      throw std::invalid_argument("functional '" + F.name +
                                  "' has no oracle policy");
    p = F.oracle.optimal_policy(grid);
  } else {
    throw std::invalid_argument("unknown policy '" + name + "'");
  }
  if (auto it = params.find("clamp"); it != params.end() && it->second > 0.0)
    p = std::make_shared<NormClampPolicy>(std::move(p), it->second);
  return p;
}

inline std::vector<std::pair<std::string, std::string>> policy_schemas() {
  return {
      {"zero", "zero"},
      {"constant", "constant:<a>[,clamp=<c>]"},
      {"linear_feedback", "linear_feedback:a=<gain>[,b=<offset>][,clamp=<c>]"},
      {"follmer", "follmer  (explicit drift of the given functional)"},
      {"oracle", "oracle   (the functional's known optimal policy)"},
  };
}

inline std::vector<std::string> experiment_names() {
  return {"acceptance", "smoke"};
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &tt);
#else
  gmtime_r(&tt, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

inline TimeGrid config_grid(const ExperimentConfig& cfg,
                            const CylinderFunctional& F) {
  return make_grid(cfg.horizon, cfg.steps, F.marks);
}

}  // namespace detail

/// Directory for a run: <out>/<timestamp>-<config hash>. The default root is
/// $WVR_OUT, falling back to ./runs.
inline std::filesystem::path run_directory(const ExperimentConfig& cfg) {
  std::string root = cfg.out_dir;
  if (root.empty()) {
    if (const char* env = std::getenv("WVR_OUT")) root = env;
  }
  if (root.empty()) root = "runs";
  const json j = cfg;
  std::ostringstream name;
  name << detail::timestamp_now() << "-" << std::hex
       << (detail::fnv1a(j.dump()) & 0xffffffffull);
  return std::filesystem::path(root) / name.str();
}

inline void write_record(const RunRecord& rec,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "record.json");
    out << json(rec).dump(2) << "\n";
  }
  for (const auto& t : rec.tables) {
    std::ofstream csv(dir / (t.name + ".csv"));
    for (std::size_t i = 0; i < t.header.size(); ++i)
      csv << (i ? "," : "") << t.header[i];
    csv << "\n";
    csv.precision(17);
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        csv << (i ? "," : "") << row[i];
      csv << "\n";
    }
  }
  for (const auto& [name, lines] : rec.jsonl) {
    std::ofstream out(dir / (name + ".jsonl"));
    for (const auto& line : lines) out << line.dump() << "\n";
  }
}

/// Executes a non-suite subcommand. All numbers depend only on the config's
/// numeric fields (never on threads/out_dir).
inline RunRecord run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.threads) set_max_threads(cfg.threads);
  RunRecord rec;
  rec.config = cfg;

  const auto& sub = cfg.subcommand;
  if (sub == "lhs" || sub == "rhs" || sub == "gap" || sub == "follmer" ||
      sub == "entropy" || sub == "truncation-sweep" || sub == "optimize") {
    const CylinderFunctional F = parse_functional(cfg.functional);
    const TimeGrid grid = detail::config_grid(cfg, F);
    if (sub == "lhs") {
      const PathBatch base = sample_brownian(grid, cfg.n, F.dim, cfg.seed);
      const EstimatorReport mc = estimate_lhs(F, base);
      rec.reports["lhs_mc"] = mc;
      std::optional<double> ref;
      if (F.oracle.log_mgf) {
        ref = *F.oracle.log_mgf;
        rec.reports["lhs_oracle"] = *ref;
      } else if (F.input_size() <= 3 && !F.a1_violating) {
        const EstimatorReport quad = estimate_lhs_quadrature(F, cfg.quad_order);
        rec.reports["lhs_quadrature"] = quad;
        ref = quad.value;
      }
      if (ref)
        rec.add_check(make_check("lhs_mc_vs_reference", mc.value - *ref,
                                 "absle", 3.0 * mc.std_error));
      rec.reports["integrability"] = check_integrability(F, base);
    } else if (sub == "rhs") {
      const PathBatch base = sample_brownian(grid, cfg.n, F.dim, cfg.seed);
      const DriftPolicyPtr pol = parse_policy(cfg.policy, F, grid);
      rec.reports["rhs"] = estimate_rhs(F, *pol, base);
    } else if (sub == "gap") {
      const PathBatch base = sample_brownian(grid, cfg.n, F.dim, cfg.seed);
      const DriftPolicyPtr pol = parse_policy(cfg.policy, F, grid);
      const GapReport gap = duality_gap(F, *pol, base);
      rec.reports["gap"] = gap;
      rec.add_check(make_check("weak_duality_gap", gap.gap, "ge",
                               -3.0 * gap.gap_se));
      rec.reports["dv"] = dv_bound(F, *pol, base);
    } else if (sub == "follmer") {
      const PathBatch base = sample_brownian(grid, cfg.n, F.dim, cfg.seed);
      const ZeroVarianceReport zv = zero_variance_check(F, base);
      rec.reports["zero_variance"] = zv;
      rec.add_check(make_check("is_variance_not_worse", zv.ratio, "le", 1.0));
    } else if (sub == "entropy") {
      const PathBatch base = sample_brownian(grid, cfg.n, F.dim, cfg.seed);
      const EntropyIdentityReport id = entropy_identity_check(F, base);
      rec.reports["entropy_identity"] = id;
      rec.add_check(make_check("entropy_identity_diff", id.diff, "absle",
                               3.0 * id.half_action.std_error + 0.01));
      const DriftPolicyPtr pol = parse_policy(cfg.policy, F, grid);
      if (dynamic_cast<const GaussianFamilyPolicy*>(pol.get())) {
        const EntropyBoundReport eb =
            entropy_bound_check(*pol, base, F.marks);
        rec.reports["entropy_bound"] = eb;
        rec.add_check(make_check("entropy_bound_slack", eb.slack, "ge",
                                 -3.0 * eb.slack_se - 1e-12));
      }
    } else if (sub == "truncation-sweep") {
      const double inf = std::numeric_limits<double>::infinity();
      const PathBatch base = sample_brownian(grid, cfg.n, F.dim, cfg.seed);
      std::vector<TruncationSpec> specs;
      for (double m : cfg.m_values) specs.push_back({m, inf});
      if (cfg.m_values.empty())
        for (double nn : cfg.n_values) specs.push_back({inf, nn});
      specs.push_back({inf, inf});
      const auto rows = truncation_sweep(F, specs, base);
      CsvTable table;
      table.name = "truncation_sweep";
      table.header = {"M", "N", "lhs", "rhs_reference"};
      for (const auto& r : rows)
        table.rows.push_back({r.M, r.N, r.lhs, r.rhs_reference});
      rec.tables.push_back(table);
      rec.reports["sweep"] = rows;
      const bool cap_sweep = !cfg.m_values.empty();
      for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double delta = rows[i + 1].lhs - rows[i].lhs;
        rec.add_check(make_check("monotone_" + std::to_string(i),
                                 cap_sweep ? delta : -delta, "ge", -1e-12));
      }
    } else if (sub == "optimize") {
      PolicyFamily fam;
      fam.dim = F.dim;
      fam.time_bins = cfg.time_bins;
      if (cfg.family == "constant")
        fam.kind = FamilyKind::constant;
      else if (cfg.family == "piecewise")
        fam.kind = FamilyKind::piecewise_open_loop;
      else if (cfg.family == "linear_feedback")
        fam.kind = FamilyKind::linear_feedback;
      else if (cfg.family == "grid_feedback")
        fam.kind = FamilyKind::grid_feedback;
      else
        throw std::invalid_argument("unknown family '" + cfg.family + "'");
      if (cfg.clamp > 0.0) fam.clamp = cfg.clamp;
      OptConfig oc;
      oc.iters = cfg.iters;
      oc.batch = cfg.opt_batch;
      oc.step0 = cfg.step0;
      oc.decay = cfg.decay;
      oc.seed = cfg.seed;
      const OptResult res = optimize(F, fam, grid, oc);
      rec.reports["trace"] = res.trace;
      rec.reports["aborted"] = res.aborted;
      rec.add_check(make_check("optimizer_completed", res.aborted ? 1.0 : 0.0,
                               "le", 0.0));
      std::vector<json> lines;
      lines.reserve(res.trace.iterations.size());
      for (std::size_t i = 0; i < res.trace.iterations.size(); ++i) {
        json line = res.trace.iterations[i];
        line["iteration"] = i;
        lines.push_back(std::move(line));
      }
      rec.jsonl.emplace_back("opt_trace", std::move(lines));
      if (!res.aborted && (F.oracle.log_mgf || F.input_size() <= 3)) {
        const PathBatch base =
            sample_brownian(grid, cfg.n, F.dim, substream_seed(cfg.seed, 77));
        const OracleComparison cmp = compare_to_oracle(F, *res.policy, base);
        rec.reports["optimized_gap"] = cmp.optimized;
        if (cmp.oracle) rec.reports["oracle_gap"] = *cmp.oracle;
        rec.add_check(make_check("optimized_weak_duality", cmp.optimized.gap,
                                 "ge", -3.0 * cmp.optimized.gap_se));
      }
    }
  } else if (sub == "ou-ehc" || sub == "ou-rehc" || sub == "lsi") {
    const ScalarField field = parse_scalar_field(cfg.field);
    const GaussianQuadrature quad =
        GaussianQuadrature::make(field.dim, cfg.quad_order);
    if (sub == "ou-ehc") {
      std::vector<double> ts = cfg.t_values;
      if (ts.empty())
        for (int k = 7; k >= 0; --k) ts.push_back(3.0 * std::pow(0.5, k));
      CsvTable table;
      table.name = "ehc";
      table.header = {"t", "lhs_norm", "rhs_norm", "deficit"};
      for (double t : ts) {
        const EhcResult r = ehc_check(field, t, quad);
        table.rows.push_back({t, r.lhs_norm, r.rhs_norm, r.deficit});
        rec.add_check(make_check("ehc_deficit_t=" + std::to_string(t),
                                 r.deficit, "ge", -1e-9));
      }
      rec.tables.push_back(table);
    } else if (sub == "ou-rehc") {
      std::vector<double> ts = cfg.t_values;
      if (ts.empty()) ts = {0.25, 0.5, 0.75, 1.0};
      CsvTable table;
      table.name = "rehc";
      table.header = {"t", "lhs", "rhs", "slack", "slack_se"};
      for (double t : ts) {
        std::vector<double> marks = {t};
        if (t < 1.0) marks.push_back(1.0);
        const TimeGrid grid = make_grid(1.0, cfg.steps, marks);
        const PathBatch base = sample_brownian(grid, cfg.n, field.dim,
                                               substream_seed(cfg.seed, static_cast<std::uint64_t>(t * 1e6)));
        const RehcResult r = rehc_check(field, t, base, quad);
        table.rows.push_back({t, r.lhs, r.rhs, r.slack, r.slack_se});
        rec.add_check(make_check("rehc_slack_t=" + std::to_string(t), r.slack,
                                 "ge", -3.0 * r.slack_se));
      }
      rec.tables.push_back(table);
    } else {
      const LsiResult r = lsi_check(field, quad);
      rec.reports["lsi"] = r;
      rec.add_check(make_check("lsi_deficit", r.deficit, "ge", -1e-9));
    }
  } else {
    throw std::invalid_argument("unknown subcommand '" + sub + "'");
  }

  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rec;
}

}  // namespace wvr
