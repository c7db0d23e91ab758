#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wvr/acceptance.hpp"
#include "wvr/experiments.hpp"

using namespace wvr;

TEST_SUITE("experiments") {

TEST_CASE("policy specs resolve against a functional and grid") {
  const CylinderFunctional F = make_linear(1.0);
  const TimeGrid g = make_grid(1.0, 10, F.marks);
  CHECK(dynamic_cast<const ZeroPolicy*>(parse_policy("zero", F, g).get()));
  const DriftPolicyPtr c = parse_policy("constant:1", F, g);
  std::vector<double> hist = {0.0}, v(1);
  c->eval(g, 0, hist, v);
  CHECK(v[0] == 1.0);
  const DriftPolicyPtr fb = parse_policy("linear_feedback:a=-1", F, g);
  CHECK(dynamic_cast<const GaussianFamilyPolicy*>(fb.get()));
  const DriftPolicyPtr fo = parse_policy("follmer", F, g);
  CHECK(fo->cutoff() == 1.0);
  const DriftPolicyPtr orc = parse_policy("oracle", F, g);
  orc->eval(g, 0, hist, v);
  CHECK(v[0] == 1.0);
  const DriftPolicyPtr cl = parse_policy("constant:3,clamp=0.5", F, g);
  cl->eval(g, 0, hist, v);
  CHECK(std::abs(v[0]) <= 0.5);
  CHECK_THROWS_AS(parse_policy("nope", F, g), std::invalid_argument);
  CHECK_THROWS_AS(parse_policy("oracle", make_bounded_smooth(), g),
                  std::invalid_argument);
}

TEST_CASE("config round-trips through json") {
  ExperimentConfig cfg;
  cfg.subcommand = "gap";
  cfg.functional = "quadratic:c=0.25";
  cfg.policy = "oracle";
  cfg.steps = 123;
  cfg.n = 4567;
  cfg.seed = 99;
  cfg.t_values = {0.25, 1.0};
  const json j = cfg;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(json(back).dump() == j.dump());
}

TEST_CASE("gap experiment passes weak duality and persists reproducibly") {
  ExperimentConfig cfg;
  cfg.subcommand = "gap";
  cfg.functional = "linear:a=1";
  cfg.policy = "constant:1";
  cfg.steps = 20;
  cfg.n = 20000;
  cfg.seed = 7;
  const RunRecord r1 = run_experiment(cfg);
  CHECK(r1.pass);
  // pass is recomputable from the stored numbers
  for (const auto& c : r1.checks)
    CHECK(c.pass == evaluate_check(c.cmp, c.value, c.bound));
  // bitwise reproducibility, including across thread counts
  const RunRecord r2 = run_experiment(cfg);
  CHECK(json(r1.reports).dump() == json(r2.reports).dump());
  ExperimentConfig threaded = cfg;
  threaded.threads = 2;
  const RunRecord r3 = run_experiment(threaded);
  CHECK(json(r1.reports).dump() == json(r3.reports).dump());
  set_max_threads(0);
}

TEST_CASE("records and tables land on disk") {
  ExperimentConfig cfg;
  cfg.subcommand = "truncation-sweep";
  cfg.functional = "quadratic:c=0.25";
  cfg.steps = 10;
  cfg.n = 2000;
  cfg.m_values = {1.0, 4.0, 16.0, 64.0};
  cfg.out_dir = (std::filesystem::temp_directory_path() / "wvr_test_runs").string();
  const RunRecord rec = run_experiment(cfg);
  CHECK(rec.pass);
  REQUIRE(rec.tables.size() == 1);
  CHECK(rec.tables[0].rows.size() == 5);  // 4 caps + the untruncated row
  const auto dir = run_directory(cfg);
  write_record(rec, dir);
  CHECK(std::filesystem::exists(dir / "record.json"));
  CHECK(std::filesystem::exists(dir / "truncation_sweep.csv"));
  std::ifstream in(dir / "record.json");
  json loaded;
  in >> loaded;
  CHECK(loaded["pass"] == true);
  CHECK(loaded["config"]["functional"] == "quadratic:c=0.25");
  std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("lhs experiment cross-checks against the oracle") {
  ExperimentConfig cfg;
  cfg.subcommand = "lhs";
  cfg.functional = "zero";
  cfg.n = 100;
  cfg.steps = 4;
  const RunRecord rec = run_experiment(cfg);
  CHECK(rec.pass);
  CHECK(rec.reports["lhs_mc"]["value"] == 0.0);

  ExperimentConfig lin = cfg;
  lin.functional = "linear:a=1";
  lin.n = 50000;
  CHECK(run_experiment(lin).pass);
}

TEST_CASE("ou experiments: ehc defaults and lsi equality") {
  ExperimentConfig cfg;
  cfg.subcommand = "ou-ehc";
  cfg.field = "sin";
  const RunRecord rec = run_experiment(cfg);
  CHECK(rec.pass);
  REQUIRE(rec.tables.size() == 1);
  CHECK(rec.tables[0].rows.size() == 8);

  ExperimentConfig lsi;
  lsi.subcommand = "lsi";
  lsi.field = "exp";
  const RunRecord r2 = run_experiment(lsi);
  CHECK(r2.pass);
  CHECK(std::abs(r2.reports["lsi"]["deficit"].get<double>()) <= 1e-7);
}

TEST_CASE("entropy experiment with a gaussian-family policy") {
  ExperimentConfig cfg;
  cfg.subcommand = "entropy";
  cfg.functional = "linear:a=1";
  cfg.policy = "constant:1";
  cfg.steps = 50;
  cfg.n = 5000;
  const RunRecord rec = run_experiment(cfg);
  CHECK(rec.pass);
  CHECK(rec.reports.contains("entropy_identity"));
  CHECK(rec.reports.contains("entropy_bound"));
}

TEST_CASE("rhs, follmer and ou-rehc experiments run end to end") {
  ExperimentConfig rhs;
  rhs.subcommand = "rhs";
  rhs.functional = "linear:a=1";
  rhs.policy = "oracle";
  rhs.steps = 20;
  rhs.n = 20000;
  const RunRecord rr = run_experiment(rhs);
  CHECK(rr.pass);
  const double v = rr.reports["rhs"]["value"].get<double>();
  const double se = rr.reports["rhs"]["std_error"].get<double>();
  CHECK(std::abs(v - 0.5) <= 3.0 * se);

  ExperimentConfig fol;
  fol.subcommand = "follmer";
  fol.functional = "linear:a=1";
  fol.steps = 100;
  fol.n = 2000;
  const RunRecord fr = run_experiment(fol);
  CHECK(fr.pass);
  CHECK(fr.reports["zero_variance"]["ratio"].get<double>() <= 1e-3);

  ExperimentConfig rehc;
  rehc.subcommand = "ou-rehc";
  rehc.field = "sin";
  rehc.steps = 8;
  rehc.n = 20000;
  const RunRecord hr = run_experiment(rehc);
  CHECK(hr.pass);
  REQUIRE(hr.tables.size() == 1);
  CHECK(hr.tables[0].rows.size() == 4);
}

TEST_CASE("optimize experiment writes a json-lines trace") {
  ExperimentConfig cfg;
  cfg.subcommand = "optimize";
  cfg.functional = "linear:a=1";
  cfg.family = "constant";
  cfg.iters = 30;
  cfg.opt_batch = 256;
  cfg.steps = 10;
  cfg.n = 5000;
  cfg.seed = 5;
  cfg.out_dir =
      (std::filesystem::temp_directory_path() / "wvr_opt_runs").string();
  const RunRecord rec = run_experiment(cfg);
  CHECK(rec.pass);
  REQUIRE(rec.jsonl.size() == 1);
  CHECK(rec.jsonl[0].second.size() == 30);
  const auto dir = run_directory(cfg);
  write_record(rec, dir);
  CHECK(std::filesystem::exists(dir / "opt_trace.jsonl"));
  std::ifstream in(dir / "opt_trace.jsonl");
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    CHECK(j.contains("objective"));
    ++count;
  }
  CHECK(count == 30);
  std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("unknown subcommands and suites are config errors") {
  ExperimentConfig cfg;
  cfg.subcommand = "frobnicate";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  ExperimentConfig s;
  s.subcommand = "suite";
  s.suite = "nope";
  CHECK_THROWS_AS(run_suite(s), std::invalid_argument);
}

TEST_CASE("suite: smoke passes and aggregation fails iff any check fails") {
  ExperimentConfig cfg;
  cfg.subcommand = "suite";
  cfg.suite = "smoke";
  const RunRecord rec = run_suite(cfg);
  CHECK(rec.pass);
  CHECK(!rec.checks.empty());

  RunRecord agg;
  agg.add_check(make_check("good", 1.0, "ge", 0.0));
  CHECK(agg.pass);
  agg.add_check(make_check("bad", -1.0, "ge", 0.0));
  CHECK(!agg.pass);
}

TEST_CASE("catalog listings are stable and complete") {
  std::vector<std::string> fn;
  for (const auto& [name, schema] : functional_schemas()) fn.push_back(name);
  for (const char* want : {"linear", "quadratic", "two_mark", "diverging"})
    CHECK(std::find(fn.begin(), fn.end(), want) != fn.end());
  std::vector<std::string> pn;
  for (const auto& [name, schema] : policy_schemas()) pn.push_back(name);
  for (const char* want : {"constant", "linear_feedback", "follmer"})
    CHECK(std::find(pn.begin(), pn.end(), want) != pn.end());
  const auto en = experiment_names();
  CHECK(std::find(en.begin(), en.end(), "acceptance") != en.end());
}

}  // TEST_SUITE
