#pragma once

// JSON bindings for reports, configs and run records. nlohmann/json prints
// doubles with shortest-round-trip precision, so persisted records reload to
// bitwise-identical values.

#include <string>
#include <vector>

#include <json.hpp>

#include "wvr/drift_opt.hpp"
#include "wvr/follmer.hpp"
#include "wvr/gaussian_law.hpp"
#include "wvr/ou_gaussian.hpp"
#include "wvr/report.hpp"
#include "wvr/variational.hpp"

namespace wvr {

using json = nlohmann::json;

inline void to_json(json& j, const EstimatorReport& r) {
  j = json{{"value", r.value},
           {"std_error", r.std_error},
           {"n_samples", r.n_samples},
           {"seed", r.seed},
           {"method", r.method}};
}

inline void from_json(const json& j, EstimatorReport& r) {
  j.at("value").get_to(r.value);
  j.at("std_error").get_to(r.std_error);
  j.at("n_samples").get_to(r.n_samples);
  j.at("seed").get_to(r.seed);
  j.at("method").get_to(r.method);
}

inline void to_json(json& j, const GapReport& g) {
  j = json{{"lhs", g.lhs}, {"rhs", g.rhs}, {"gap", g.gap}, {"gap_se", g.gap_se}};
}

inline void to_json(json& j, const RelEntropyResult& r) {
  j = json{{"value", r.value}, {"method", to_string(r.method)}};
}

inline void to_json(json& j, const DvReport& r) {
  j = json{{"drifted_mean", r.drifted_mean}, {"entropy", r.entropy},
           {"dv_value", r.dv_value},         {"lhs", r.lhs},
           {"slack", r.slack},               {"slack_se", r.slack_se}};
}

inline void to_json(json& j, const SweepRow& r) {
  j = json{{"M", r.M}, {"N", r.N}, {"lhs", r.lhs},
           {"rhs_reference", r.rhs_reference}};
}

inline void to_json(json& j, const EhcResult& r) {
  j = json{{"lhs_norm", r.lhs_norm}, {"rhs_norm", r.rhs_norm},
           {"deficit", r.deficit},   {"log_lhs", r.log_lhs},
           {"log_rhs", r.log_rhs}};
}

inline void to_json(json& j, const RehcResult& r) {
  j = json{{"lhs", r.lhs},       {"rhs", r.rhs},
           {"lhs_se", r.lhs_se}, {"rhs_se", r.rhs_se},
           {"slack", r.slack},   {"slack_se", r.slack_se}};
}

inline void to_json(json& j, const LsiResult& r) {
  j = json{{"lhs", r.lhs},
           {"grad_term", r.grad_term},
           {"norm_term", r.norm_term},
           {"rhs", r.rhs},
           {"deficit", r.deficit}};
}

inline void to_json(json& j, const ZeroVarianceReport& r) {
  j = json{{"mean_plain", r.mean_plain}, {"var_plain", r.var_plain},
           {"mean_is", r.mean_is},       {"var_is", r.var_is},
           {"ratio", r.ratio}};
}

inline void to_json(json& j, const EntropyIdentityReport& r) {
  j = json{{"h", r.h},
           {"log_z", r.log_z},
           {"mu_mean_f", r.mu_mean_f},
           {"half_action", r.half_action},
           {"diff", r.diff}};
}

inline void to_json(json& j, const EntropyBoundReport& r) {
  j = json{{"h", r.h},
           {"half_action", r.half_action},
           {"slack", r.slack},
           {"slack_se", r.slack_se}};
}

inline void to_json(json& j, const OptIterate& it) {
  j = json{{"objective", it.objective},
           {"step", it.step},
           {"grad_norm", it.grad_norm}};
}

inline void to_json(json& j, const OptTrace& t) {
  j = json{{"theta", t.theta},
           {"seed", t.seed},
           {"param_count", t.param_count},
           {"gradient", t.gradient},
           {"initial_holdout", t.initial_holdout},
           {"holdout_objective", t.holdout_objective},
           {"holdout_se", t.holdout_se},
           {"iterations", t.iterations.size()}};
}

inline void to_json(json& j, const IntegrabilityReport& r) {
  j = json{{"a1_ok", r.a1_ok},
           {"a2_ok", r.a2_ok},
           {"top_fraction", r.top_fraction},
           {"top_k", r.top_k},
           {"f_minus_mean", r.f_minus_mean},
           {"f_minus_spread", r.f_minus_spread},
           {"f_max", r.f_max}};
}

}  // namespace wvr
