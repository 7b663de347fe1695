#include "rtandem/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "rtandem/errors.hpp"

namespace rtandem {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw std::invalid_argument("config field '" + field + "': " + what);
}

double require_number(const json& doc, const std::string& field) {
    if (!doc.contains(field) || !doc[field].is_number()) fail(field, "expected a number");
    return doc[field].get<double>();
}

NominalPair parse_model(const json& doc) {
    if (!doc.is_object() || !doc.contains("kind")) fail("model", "expected an object with 'kind'");
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "exponential_means")
        return NominalPair::exponential_means(require_number(doc, "m0"), require_number(doc, "m1"));
    if (kind == "gaussian_shift")
        return NominalPair::gaussian_shift(require_number(doc, "mu0"), require_number(doc, "mu1"),
                                           require_number(doc, "sigma"));
    if (kind == "discrete")
        return NominalPair::discrete_pmf(doc.at("support").get<std::vector<double>>(),
                                         doc.at("pmf0").get<std::vector<double>>(),
                                         doc.at("pmf1").get<std::vector<double>>());
    fail("model.kind", "unknown kind '" + kind + "'");
}

json model_json(const NominalPair& m) {
    switch (m.kind()) {
        case ModelKind::kExponentialMeans:
            return {{"kind", "exponential_means"}, {"m0", m.m0()}, {"m1", m.m1()}};
        case ModelKind::kGaussianShift:
            return {{"kind", "gaussian_shift"}, {"mu0", m.mu0()}, {"mu1", m.mu1()},
                    {"sigma", m.sigma()}};
        case ModelKind::kDiscretePmf:
            return {{"kind", "discrete"}, {"support", m.support()}, {"pmf0", m.pmf(0)},
                    {"pmf1", m.pmf(1)}};
    }
    throw std::logic_error("unreachable");
}

EpsSchedule parse_eps(const json& doc) {
    if (!doc.is_object()) fail("eps", "expected an object");
    if (doc.contains("schedule")) {
        if (doc["schedule"].is_string()) {
            if (doc["schedule"].get<std::string>() != "a/k")
                fail("eps.schedule", "only the decaying form 'a/k' is supported");
            return EpsSchedule::decaying(require_number(doc, "a"));
        }
        if (doc["schedule"].is_array()) {
            std::vector<std::pair<double, double>> values;
            for (const auto& entry : doc["schedule"]) {
                if (!entry.is_array() || entry.size() != 2)
                    fail("eps.schedule", "explicit entries must be [eps0, eps1] pairs");
                values.emplace_back(entry[0].get<double>(), entry[1].get<double>());
            }
            return EpsSchedule::explicit_list(std::move(values));
        }
        fail("eps.schedule", "expected 'a/k' or a list of pairs");
    }
    return EpsSchedule::constant(require_number(doc, "eps0"), require_number(doc, "eps1"));
}

json eps_json(const EpsSchedule& eps) {
    switch (eps.kind) {
        case EpsSchedule::Kind::kConstant: return {{"eps0", eps.eps0}, {"eps1", eps.eps1}};
        case EpsSchedule::Kind::kDecaying: return {{"schedule", "a/k"}, {"a", eps.decay_scale}};
        case EpsSchedule::Kind::kExplicit: {
            json list = json::array();
            for (const auto& [e0, e1] : eps.values) list.push_back({e0, e1});
            return {{"schedule", list}};
        }
    }
    throw std::logic_error("unreachable");
}

RuleSpec parse_rule(const json& doc) {
    RuleSpec spec;
    if (doc.is_object()) {
        spec.kind = RuleSpec::Kind::kExplicit;
        spec.t1 = require_number(doc, "t1");
        spec.t0 = doc.contains("t0") && doc["t0"].is_string() ? std::numeric_limits<double>::infinity()
                                                              : require_number(doc, "t0");
        spec.p = doc.contains("p") ? require_number(doc, "p") : 0.0;
        spec.q = doc.contains("q") ? require_number(doc, "q") : 0.0;
        return spec;
    }
    if (!doc.is_string()) fail("rule", "expected an object {t1,t0,p,q} or a string");
    const std::string s = doc.get<std::string>();
    if (s == "social") {
        spec.kind = RuleSpec::Kind::kSocial;
        return spec;
    }
    if (s.rfind("optimize:", 0) == 0) {
        spec.kind = RuleSpec::Kind::kOptimize;
        const std::string obj = s.substr(9);
        if (obj == "finite-dd")
            spec.objective = Objective::kFiniteDd;
        else if (obj == "asymptotic-dd")
            spec.objective = Objective::kAsymptoticDd;
        else if (obj == "unknown-sl")
            spec.objective = Objective::kUnknownSl;
        else
            fail("rule", "unknown objective '" + obj + "'");
        return spec;
    }
    if (s.rfind("phi-delta:", 0) == 0) {
        spec.kind = RuleSpec::Kind::kPhiDelta;
        spec.delta = std::stod(s.substr(10));
        return spec;
    }
    fail("rule", "unknown rule spec '" + s + "'");
}

json rule_spec_json(const RuleSpec& spec) {
    switch (spec.kind) {
        case RuleSpec::Kind::kExplicit: {
            json j = {{"t1", spec.t1}, {"p", spec.p}, {"q", spec.q}};
            if (std::isfinite(spec.t0))
                j["t0"] = spec.t0;
            else
                j["t0"] = "inf";
            return j;
        }
        case RuleSpec::Kind::kSocial: return "social";
        case RuleSpec::Kind::kOptimize:
            switch (spec.objective) {
                case Objective::kFiniteDd: return "optimize:finite-dd";
                case Objective::kAsymptoticDd: return "optimize:asymptotic-dd";
                case Objective::kUnknownSl: return "optimize:unknown-sl";
            }
            throw std::logic_error("unreachable");
        case RuleSpec::Kind::kPhiDelta: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "phi-delta:%.17g", spec.delta);
            return std::string(buf);
        }
    }
    throw std::logic_error("unreachable");
}

ContaminationSpec parse_contamination(const json& doc, const std::string& field) {
    if (!doc.is_object() || !doc.contains("kind")) fail(field, "expected an object with 'kind'");
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "none") return ContaminationSpec::none();
    if (kind == "point_mass") return ContaminationSpec::point_mass(require_number(doc, "y"));
    if (kind == "shifted_nominal")
        return ContaminationSpec::shifted_nominal(require_number(doc, "shift"));
    if (kind == "swap_nominal") return ContaminationSpec::swap_nominal();
    if (kind == "two_point")
        return ContaminationSpec::two_point(require_number(doc, "y_a"), require_number(doc, "y_b"),
                                            require_number(doc, "w"));
    fail(field, "unknown contamination kind '" + kind + "'");
}

json contamination_json(const ContaminationSpec& c) {
    switch (c.kind) {
        case ContaminationSpec::Kind::kNone: return {{"kind", "none"}};
        case ContaminationSpec::Kind::kPointMass: return {{"kind", "point_mass"}, {"y", c.y_a}};
        case ContaminationSpec::Kind::kShiftedNominal:
            return {{"kind", "shifted_nominal"}, {"shift", c.shift}};
        case ContaminationSpec::Kind::kSwapNominal: return {{"kind", "swap_nominal"}};
        case ContaminationSpec::Kind::kTwoPoint:
            return {{"kind", "two_point"}, {"y_a", c.y_a}, {"y_b", c.y_b}, {"w", c.w}};
    }
    throw std::logic_error("unreachable");
}

void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    out << text;
}

std::string stage_csv(const std::vector<StageError>& stages) {
    std::string csv = "k,P_F,P_M,P_e\n";
    for (const auto& s : stages)
        csv += std::to_string(s.k) + "," + format_sig12(s.p_f) + "," + format_sig12(s.p_m) + "," +
               format_sig12(s.p_e) + "\n";
    return csv;
}

std::string write_manifest(const ExperimentConfig& config, const std::string& prefix,
                           const json& extra) {
    json manifest = {
        {"version", kVersion},
        {"config", resolved_config_json(config)},
        {"tolerances",
         {{"breakpoint_residual", 1e-10},
          {"optimizer_objective", 1e-9},
          {"optimizer_parameter", 1e-8},
          {"coordinate_sweep", 1e-10}}},
        {"threads", worker_threads()},
    };
    if (!extra.is_null()) manifest["run"] = extra;
    const std::string path = prefix + ".manifest.json";
    write_text(path, manifest.dump(2) + "\n");
    return path;
}

// The two reference relays of the exponential comparison setup. Their printed
// upper threshold 5 lies just beyond b*c_hi (about 4.9749), where it would
// never fire and misses would accumulate; capping it at the top atom (with a
// sure 1 there) restores the intended behaviour.
std::pair<RelayRule, RelayRule> reference_rules(const LfdPair& lfd) {
    const RelayRule phi_a(lfd.l_lo(), std::min(5.0, lfd.l_hi()), 1.0, 0.0);
    const RelayRule phi_b(lfd.l_lo(), 1.1, 1.0, 0.0);
    return {phi_a, phi_b};
}

}  // namespace

std::string format_sig12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

int worker_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (n > 8) n = 8;
    if (const char* env = std::getenv("RT_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
    ExperimentConfig config;
    if (!doc.contains("model")) fail("model", "missing");
    config.model = parse_model(doc["model"]);
    if (!doc.contains("priors") || !doc["priors"].contains("pi0"))
        fail("priors.pi0", "missing");
    config.priors = Priors(doc["priors"]["pi0"].get<double>());
    if (!doc.contains("eps")) fail("eps", "missing");
    config.eps = parse_eps(doc["eps"]);
    if (doc.contains("rule")) config.rule = parse_rule(doc["rule"]);
    if (doc.contains("n")) {
        if (!doc["n"].is_number_integer() || doc["n"].get<long>() < 1)
            fail("n", "expected an integer >= 1");
        config.n = doc["n"].get<int>();
    }
    if (doc.contains("n_samples")) config.n_samples = doc["n_samples"].get<long>();
    if (config.n_samples < 1) fail("n_samples", "must be >= 1");
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("out")) config.out_prefix = doc["out"].get<std::string>();
    if (doc.contains("contamination")) {
        const auto& c = doc["contamination"];
        if (c.contains("h0")) config.contamination.r0 = parse_contamination(c["h0"], "contamination.h0");
        if (c.contains("h1")) config.contamination.r1 = parse_contamination(c["h1"], "contamination.h1");
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

json resolved_config_json(const ExperimentConfig& config) {
    return {
        {"model", model_json(config.model)},
        {"priors", {{"pi0", config.priors.pi0}}},
        {"eps", eps_json(config.eps)},
        {"rule", rule_spec_json(config.rule)},
        {"n", config.n},
        {"n_samples", config.n_samples},
        {"seed", config.seed},
        {"out", config.out_prefix},
        {"contamination",
         {{"h0", contamination_json(config.contamination.r0)},
          {"h1", contamination_json(config.contamination.r1)}}},
    };
}

json rule_json(const RelayRule& rule) {
    json j = {{"t1", rule.t1}, {"p", rule.p}, {"q", rule.q}};
    if (std::isfinite(rule.t0))
        j["t0"] = rule.t0;
    else
        j["t0"] = "inf";
    return j;
}

json report_json(const OptimizationReport& report) {
    json j;
    switch (report.objective) {
        case Objective::kFiniteDd: j["objective"] = "finite-dd"; break;
        case Objective::kAsymptoticDd: j["objective"] = "asymptotic-dd"; break;
        case Objective::kUnknownSl: j["objective"] = "unknown-sl"; break;
    }
    j["value"] = report.value;
    j["restarts"] = report.restarts;
    if (report.best_rule) j["best_rule"] = rule_json(*report.best_rule);
    if (!report.thresholds.empty()) j["thresholds"] = report.thresholds;
    if (!report.finite_rules.empty()) {
        json rules = json::array();
        for (const auto& rule : report.finite_rules) rules.push_back(rule_json(rule));
        j["relay_rules"] = rules;
    }
    json trace = json::array();
    for (const auto& [i, v] : report.trace) trace.push_back({{"eval", i}, {"value", v}});
    j["trace"] = trace;
    return j;
}

ResolvedChain resolve_chain(const ExperimentConfig& config) {
    ResolvedChain chain;
    chain.first = first_agent_rule(config.priors);

    const auto shared_lfd = [&]() -> LfdPair {
        const auto eps = config.eps.at(1);
        if (!config.eps.is_constant())
            throw std::invalid_argument("this rule spec needs a constant contamination pair");
        return LfdPair::solve({config.model, eps.first, eps.second});
    };

    switch (config.rule.kind) {
        case RuleSpec::Kind::kExplicit: {
            if (config.eps.is_constant()) {
                chain.lfds.push_back(shared_lfd());
            } else {
                for (int k = 1; k <= config.n; ++k) {
                    const auto eps = config.eps.at(k);
                    chain.lfds.push_back(LfdPair::solve({config.model, eps.first, eps.second}));
                }
            }
            chain.relays.assign(config.n - 1,
                                RelayRule(config.rule.t1, config.rule.t0, config.rule.p,
                                          config.rule.q));
            return chain;
        }
        case RuleSpec::Kind::kSocial: {
            // Rules come from the trajectory itself; resolve_chain only carries
            // them for simulation use.
            const SocialTrajectory traj = social_trajectory(
                {config.priors, config.n, config.eps, config.model});
            if (traj.halted)
                throw std::runtime_error("social trajectory halted: " + traj.diagnostic);
            if (traj.first_agent_coin)
                throw std::runtime_error("social trajectory starts from a coin; no LRT chain");
            for (int k = 1; k <= config.n; ++k) {
                const auto eps = config.eps.at(k);
                chain.lfds.push_back(LfdPair::solve({config.model, eps.first, eps.second}));
            }
            chain.relays = traj.relay_rules;
            return chain;
        }
        case RuleSpec::Kind::kOptimize: {
            const LfdPair lfd = shared_lfd();
            OptimizationReport report;
            if (config.rule.objective == Objective::kFiniteDd) {
                report = optimize_finite_dd({config.priors, config.n, config.eps, config.model});
                chain.first = FirstAgentRule{report.thresholds[0]};
                chain.relays = report.finite_rules;
            } else {
                report = config.rule.objective == Objective::kAsymptoticDd
                             ? optimize_asymptotic_dd(lfd, config.priors)
                             : optimize_unknown_sl(lfd, config.priors);
                chain.relays.assign(config.n - 1, *report.best_rule);
            }
            chain.lfds.push_back(lfd);
            chain.extra = report_json(report);
            return chain;
        }
        case RuleSpec::Kind::kPhiDelta: {
            const auto eps = config.eps.at(1);
            const UncertaintySpec spec{config.model, eps.first, eps.second};
            const PhiDeltaPlan plan = phi_delta_scheme(spec, config.rule.delta, config.priors);
            const LfdPair lfd = LfdPair::solve(spec);
            chain.first = FirstAgentRule{plan.threshold};
            // agents 1..N* OR their own test into the decision, the rest relay
            const double floor_t1 = lfd.l_lo() > 0.0 ? lfd.l_lo() : 1e-300;
            const RelayRule or_relay(floor_t1, plan.threshold, 0.0, 0.0);
            const RelayRule pass(floor_t1, std::numeric_limits<double>::infinity(), 0.0, 0.0);
            for (int k = 2; k <= config.n; ++k)
                chain.relays.push_back(k <= plan.n_star ? or_relay : pass);
            chain.lfds.push_back(lfd);
            chain.extra = {{"threshold", plan.threshold},
                           {"n_star", plan.n_star},
                           {"lower_bound", plan.lower_bound},
                           {"upper_bound", plan.upper_bound},
                           {"predicted_p_f", plan.predicted.p_f},
                           {"predicted_p_m", plan.predicted.p_m},
                           {"predicted_p_e", plan.predicted.p_e}};
            return chain;
        }
    }
    throw std::logic_error("unreachable");
}

std::vector<std::string> run_lfd(const ExperimentConfig& config, const std::string& prefix) {
    const auto eps = config.eps.at(1);
    const LfdPair lfd = LfdPair::solve({config.model, eps.first, eps.second});
    const json out = {{"c_lo", lfd.c_lo()},
                      {"c_hi", std::isfinite(lfd.c_hi()) ? json(lfd.c_hi()) : json("inf")},
                      {"b", lfd.b()},
                      {"l_lo", lfd.l_lo()},
                      {"l_hi", std::isfinite(lfd.l_hi()) ? json(lfd.l_hi()) : json("inf")},
                      {"residual_q0", lfd.normalization_residual(0)},
                      {"residual_q1", lfd.normalization_residual(1)}};
    const std::string path = prefix + ".lfd.json";
    write_text(path, out.dump(2) + "\n");
    return {path, write_manifest(config, prefix, out)};
}

std::vector<std::string> run_chain(const ExperimentConfig& config, const std::string& prefix) {
    std::vector<StageError> stages;
    json extra;
    if (config.rule.kind == RuleSpec::Kind::kSocial) {
        const SocialTrajectory traj =
            social_trajectory({config.priors, config.n, config.eps, config.model});
        stages = traj.stages;
        extra = {{"halted", traj.halted},
                 {"diagnostic", traj.diagnostic},
                 {"first_agent_coin", traj.first_agent_coin}};
    } else {
        const ResolvedChain chain = resolve_chain(config);
        stages = propagate(chain.first, chain.relays, chain.lfds, config.priors);
        extra = chain.extra;
    }
    const std::string path = prefix + ".chain.csv";
    write_text(path, stage_csv(stages));
    return {path, write_manifest(config, prefix, extra)};
}

std::vector<std::string> run_optimize(const ExperimentConfig& config, Objective objective,
                                      const std::string& prefix) {
    OptimizationReport report;
    if (objective == Objective::kFiniteDd) {
        report = optimize_finite_dd({config.priors, config.n, config.eps, config.model});
    } else {
        const auto eps = config.eps.at(1);
        if (!config.eps.is_constant())
            throw std::invalid_argument("shared-rule objectives need a constant contamination pair");
        const LfdPair lfd = LfdPair::solve({config.model, eps.first, eps.second});
        report = objective == Objective::kAsymptoticDd ? optimize_asymptotic_dd(lfd, config.priors)
                                                       : optimize_unknown_sl(lfd, config.priors);
    }
    const std::string path = prefix + ".report.json";
    write_text(path, report_json(report).dump(2) + "\n");
    return {path, write_manifest(config, prefix, report_json(report))};
}

std::vector<std::string> run_simulate(const ExperimentConfig& config, const std::string& prefix) {
    const ResolvedChain chain = resolve_chain(config);
    if (chain.lfds.size() != 1)
        throw std::invalid_argument("simulate needs a constant contamination pair");
    const ContaminationPair contam = config.contamination;
    const SimResult res = simulate_chain(chain.first, chain.relays, chain.lfds[0], {&contam, 1},
                                         config.priors, config.n_samples, config.seed,
                                         worker_threads());
    std::string csv = "k,P_F_hat,P_M_hat,P_e_hat,se\n";
    for (std::size_t k = 0; k < res.p_f_hat.size(); ++k)
        csv += std::to_string(k + 1) + "," + format_sig12(res.p_f_hat[k]) + "," +
               format_sig12(res.p_m_hat[k]) + "," + format_sig12(res.p_e_hat[k]) + "," +
               format_sig12(res.se_e[k]) + "\n";
    const std::string csv_path = prefix + ".sim.csv";
    write_text(csv_path, csv);
    const json summary = {{"n_samples", res.n_samples},
                          {"seed", res.seed},
                          {"final_p_f", res.p_f_hat.back()},
                          {"final_p_m", res.p_m_hat.back()},
                          {"final_p_e", res.p_e_hat.back()},
                          {"final_se", res.se_e.back()}};
    const std::string json_path = prefix + ".sim.json";
    write_text(json_path, summary.dump(2) + "\n");
    return {csv_path, json_path, write_manifest(config, prefix, summary)};
}

std::vector<RuleCurve> fig_rules_curves(int n) {
    const NominalPair model = NominalPair::exponential_means(1.0, 2.0);
    const LfdPair lfd = LfdPair::solve({model, 0.01, 0.01});
    const Priors priors(0.5);
    const auto [phi_a, phi_b] = reference_rules(lfd);
    const FirstAgentRule first = first_agent_rule(priors);
    std::vector<RuleCurve> curves;
    for (const auto& [name, rule] : {std::pair<std::string, RelayRule>{"phi_a", phi_a},
                                     std::pair<std::string, RelayRule>{"phi_b", phi_b}}) {
        RuleCurve curve{name, rule, propagate_shared(first, rule, lfd, priors, n),
                        asymptotic_error(rule, lfd, priors).p_e};
        curves.push_back(std::move(curve));
    }
    return curves;
}

std::vector<SweepRow> fig_mean_sweep() {
    std::vector<SweepRow> rows;
    const Priors priors(0.5);
    for (int i = 0; i < 15; ++i) {
        const double m1 = 1.2 + 0.2 * i;
        const LfdPair lfd =
            LfdPair::solve({NominalPair::exponential_means(1.0, m1), 0.01, 0.01});
        rows.push_back({m1, optimize_unknown_sl(lfd, priors).value,
                        optimize_asymptotic_dd(lfd, priors).value});
    }
    return rows;
}

std::vector<SweepRow> fig_eps_sweep() {
    std::vector<SweepRow> rows;
    const Priors priors(0.5);
    const NominalPair model = NominalPair::exponential_means(1.0, 2.0);
    for (int i = 0; i <= 15; ++i) {
        const double eps = 0.02 * i;  // 0 .. 0.30
        try {
            const LfdPair lfd = LfdPair::solve({model, eps, eps});
            rows.push_back({eps, optimize_unknown_sl(lfd, priors).value,
                            optimize_asymptotic_dd(lfd, priors).value});
        } catch (const NotDisjointError&) {
            break;  // classes overlap from here on; the sweep ends at the valid prefix
        }
    }
    return rows;
}

std::vector<std::string> run_figure(const std::string& preset, const std::string& prefix) {
    if (preset == "fig-rules") {
        std::vector<std::string> files;
        for (const auto& curve : fig_rules_curves(30)) {
            std::string csv = stage_csv(curve.stages);
            const std::string path = prefix + ".rules_" + curve.name + ".csv";
            write_text(path, csv);
            files.push_back(path);
        }
        return files;
    }
    const auto sweep_csv = [](const std::vector<SweepRow>& rows, const std::string& x_name) {
        std::string csv = x_name + ",P_max_SL,P_inf_DD\n";
        for (const auto& r : rows)
            csv += format_sig12(r.x) + "," + format_sig12(r.p_sl) + "," + format_sig12(r.p_dd) +
                   "\n";
        return csv;
    };
    if (preset == "fig-mean") {
        const std::string path = prefix + ".mean.csv";
        write_text(path, sweep_csv(fig_mean_sweep(), "m1"));
        return {path};
    }
    if (preset == "fig-eps") {
        const std::string path = prefix + ".eps.csv";
        write_text(path, sweep_csv(fig_eps_sweep(), "eps"));
        return {path};
    }
    throw std::invalid_argument("unknown preset '" + preset +
                                "' (expected fig-rules, fig-mean or fig-eps)");
}

}  // namespace rtandem
