#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rtandem/optimize.hpp"
#include "rtandem/simulate.hpp"

namespace rtandem {

// How the relay rules of a run are chosen.
struct RuleSpec {
    enum class Kind { kExplicit, kSocial, kOptimize, kPhiDelta };
    Kind kind = Kind::kSocial;
    double t1 = 1.0, t0 = 1.0, p = 0.0, q = 0.0;  // kExplicit
    Objective objective = Objective::kAsymptoticDd; // kOptimize
    double delta = 0.05;                            // kPhiDelta
};

struct ExperimentConfig {
    NominalPair model = NominalPair::exponential_means(1.0, 2.0);
    Priors priors{0.5};
    EpsSchedule eps;
    RuleSpec rule;
    int n = 1;
    long n_samples = 100000;
    std::uint64_t seed = 1;
    std::string out_prefix = "out/run";
    ContaminationPair contamination;  // simulate only; defaults to none
};

// Parses the single-document JSON config; throws std::invalid_argument with
// the offending field named.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

// Fully resolved config; parse_config(resolved_config_json(c)) reproduces c.
nlohmann::json resolved_config_json(const ExperimentConfig& config);

nlohmann::json rule_json(const RelayRule& rule);
nlohmann::json report_json(const OptimizationReport& report);

// Worker parallelism: min(hardware, 8), capped by the RT_THREADS variable.
int worker_threads();

// A concrete decision chain resolved from a config (rules, per-agent LFDs).
struct ResolvedChain {
    FirstAgentRule first{1.0};
    std::vector<RelayRule> relays;
    std::vector<LfdPair> lfds;  // size 1 (shared) or n
    nlohmann::json extra;       // objective reports, scheme parameters, ...
};
ResolvedChain resolve_chain(const ExperimentConfig& config);

// Subcommand runners; each writes its outputs plus a manifest under the
// prefix and returns the produced file names.
std::vector<std::string> run_lfd(const ExperimentConfig& config, const std::string& prefix);
std::vector<std::string> run_chain(const ExperimentConfig& config, const std::string& prefix);
std::vector<std::string> run_optimize(const ExperimentConfig& config, Objective objective,
                                      const std::string& prefix);
std::vector<std::string> run_simulate(const ExperimentConfig& config, const std::string& prefix);
std::vector<std::string> run_figure(const std::string& preset, const std::string& prefix);

// Standard-setup curves behind the `figure` presets, also used by the
// verification suites. Exponential nominals with means 1 and 2 unless noted.
struct RuleCurve {
    std::string name;
    RelayRule rule;
    std::vector<StageError> stages;
    double asymptote;
};
std::vector<RuleCurve> fig_rules_curves(int n);  // the two reference relays over k = 1..n

struct SweepRow {
    double x;      // swept parameter
    double p_sl;   // optimized worst-position error
    double p_dd;   // optimized fixed-point error
};
std::vector<SweepRow> fig_mean_sweep();  // mean of P1* over 1.2..4.0, eps = 0.01
std::vector<SweepRow> fig_eps_sweep();   // eps0 = eps1 over 0..0.3 (valid prefix)

// CSV cell with 12 significant digits.
std::string format_sig12(double v);

}  // namespace rtandem
