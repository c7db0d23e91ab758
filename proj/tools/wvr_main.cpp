// wvr — experiment runner for the variational representation laboratory.
//
// Subcommands map onto the library operations; every run writes a RunRecord
// (record.json plus CSV tables) into a fresh directory under $WVR_OUT (or
// ./runs), and the exit status reflects the recorded tolerance checks.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wvr/acceptance.hpp"
#include "wvr/experiments.hpp"

namespace {

void print_list(const std::string& kind) {
  if (kind == "functionals") {
    for (const auto& [name, schema] : wvr::functional_schemas())
      std::cout << name << "\t" << schema << "\n";
  } else if (kind == "policies") {
    for (const auto& [name, schema] : wvr::policy_schemas())
      std::cout << name << "\t" << schema << "\n";
  } else if (kind == "fields") {
    for (const auto& f : wvr::scalar_catalog())
      std::cout << f.name << "\tehc=" << (f.ehc_eligible ? "yes" : "no")
                << " lsi=" << (f.lsi_eligible ? "yes" : "no") << "\n";
  } else if (kind == "experiments") {
    for (const auto& n : wvr::experiment_names()) std::cout << n << "\n";
  } else {
    throw std::invalid_argument("unknown catalog kind '" + kind +
                                "' (functionals|policies|fields|experiments)");
  }
}

void print_summary(const wvr::RunRecord& rec,
                   const std::filesystem::path& dir) {
  for (const auto& c : rec.checks)
    std::cout << (c.pass ? "  ok   " : "  FAIL ") << c.name
              << "  value=" << c.value << " " << c.cmp << " " << c.bound
              << "\n";
  std::cout << (rec.pass ? "PASS" : "FAIL") << "  (" << rec.wall_ms << " ms)  "
            << "record: " << (dir / "record.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational representation of Wiener functionals — "
               "numerical laboratory"};
  app.set_version_flag("--version", std::string(wvr::kArtifactVersion));
  app.require_subcommand(1);

  wvr::ExperimentConfig cfg;
  std::string config_file;
  double n_as_double = -1.0;  // accepts 1e6-style values

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON config file to start from");
    sub->add_option("--functional", cfg.functional,
                    "catalog spec, e.g. quadratic:c=0.25,t=1");
    sub->add_option("--policy", cfg.policy, "policy spec, e.g. constant:1");
    sub->add_option("--field", cfg.field, "scalar field name for ou/lsi");
    sub->add_option("--horizon", cfg.horizon, "time horizon");
    sub->add_option("--steps", cfg.steps, "grid steps");
    sub->add_option("--n", n_as_double, "Monte Carlo batch size (accepts 1e6)");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--quad-order", cfg.quad_order, "quadrature order");
    sub->add_option("--t", cfg.t_values, "t values for ou checks");
    sub->add_option("--M", cfg.m_values, "truncation caps");
    sub->add_option("--N", cfg.n_values, "truncation floors");
    sub->add_option("--family", cfg.family,
                    "constant|piecewise|linear_feedback|grid_feedback");
    sub->add_option("--time-bins", cfg.time_bins, "family time bins");
    sub->add_option("--iters", cfg.iters, "optimizer iterations");
    sub->add_option("--opt-batch", cfg.opt_batch, "optimizer batch per iter");
    sub->add_option("--step0", cfg.step0, "initial step size");
    sub->add_option("--decay", cfg.decay, "geometric step decay");
    sub->add_option("--clamp", cfg.clamp, "family clamp bound (0 = none)");
    sub->add_option("--threads", cfg.threads,
                    "worker threads (never changes the numbers)");
    sub->add_option("--out", cfg.out_dir, "output root directory");
  };

  const char* subs[] = {"lhs",     "rhs",     "gap",    "optimize",
                        "follmer", "entropy", "truncation-sweep",
                        "ou-ehc",  "ou-rehc", "lsi",    "suite"};
  for (const char* name : subs) add_common(app.add_subcommand(name));
  app.get_subcommand("suite")->add_option("--name", cfg.suite,
                                          "acceptance|smoke");

  std::string list_kind = "functionals";
  app.add_subcommand("list", "enumerate catalogs")
      ->add_option("kind", list_kind,
                   "functionals|policies|fields|experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub->get_name() == "list") {
      print_list(list_kind);
      return 0;
    }
    if (!config_file.empty()) {
      // file values first, then flags override what was set on the line
      std::ifstream in(config_file);
      if (!in) throw std::invalid_argument("cannot open " + config_file);
      wvr::json j;
      in >> j;
      wvr::ExperimentConfig file_cfg = j.get<wvr::ExperimentConfig>();
      // overlay: any option the user passed on the line wins over the file
      wvr::ExperimentConfig flags = cfg;
      cfg = file_cfg;
      auto passed = [&](const std::string& name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o && o->count() > 0;
      };
      if (passed("--functional")) cfg.functional = flags.functional;
      if (passed("--policy")) cfg.policy = flags.policy;
      if (passed("--field")) cfg.field = flags.field;
      if (passed("--horizon")) cfg.horizon = flags.horizon;
      if (passed("--steps")) cfg.steps = flags.steps;
      if (passed("--seed")) cfg.seed = flags.seed;
      if (passed("--quad-order")) cfg.quad_order = flags.quad_order;
      if (passed("--t")) cfg.t_values = flags.t_values;
      if (passed("--M")) cfg.m_values = flags.m_values;
      if (passed("--N")) cfg.n_values = flags.n_values;
      if (passed("--family")) cfg.family = flags.family;
      if (passed("--time-bins")) cfg.time_bins = flags.time_bins;
      if (passed("--iters")) cfg.iters = flags.iters;
      if (passed("--opt-batch")) cfg.opt_batch = flags.opt_batch;
      if (passed("--step0")) cfg.step0 = flags.step0;
      if (passed("--decay")) cfg.decay = flags.decay;
      if (passed("--clamp")) cfg.clamp = flags.clamp;
      if (passed("--threads")) cfg.threads = flags.threads;
      if (passed("--out")) cfg.out_dir = flags.out_dir;
      if (passed("--name")) cfg.suite = flags.suite;
    }
    if (n_as_double > 0.0) cfg.n = static_cast<std::size_t>(n_as_double);
    cfg.subcommand = sub->get_name();

    wvr::RunRecord rec = cfg.subcommand == "suite"
                             ? wvr::run_suite(cfg, &std::cout)
                             : wvr::run_experiment(cfg);
    const auto dir = wvr::run_directory(cfg);
    wvr::write_record(rec, dir);
    print_summary(rec, dir);
    return rec.pass ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
