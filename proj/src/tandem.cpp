#include "rtandem/tandem.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "rtandem/errors.hpp"

namespace rtandem {

namespace {

// Probability that the relay outputs 1 given the previous decision.
double out1(const RelayRule& rule, const LfdPair& lfd, int hyp, int u_prev) {
    return kernel_prob(rule, lfd, hyp, u_prev, 1);
}

StageError stage_one(const FirstAgentRule& first, const LfdPair& lfd, const Priors& priors) {
    const double p_f = lfd.event_prob(0, LrEvent::kGreaterEqual, first.threshold);
    const double p_m = lfd.event_prob(1, LrEvent::kLess, first.threshold);
    return make_stage(1, p_f, p_m, priors);
}

}  // namespace

StageError make_stage(int k, double p_f, double p_m, const Priors& priors) {
    return {k, p_f, p_m, priors.pi0 * p_f + priors.pi1 * p_m};
}

std::pair<double, double> EpsSchedule::at(int k) const {
    if (k < 1) throw std::invalid_argument("agent index is 1-based");
    switch (kind) {
        case Kind::kConstant: return {eps0, eps1};
        case Kind::kDecaying: return {decay_scale / k, decay_scale / k};
        case Kind::kExplicit:
            if (static_cast<std::size_t>(k) > values.size())
                throw std::invalid_argument("explicit schedule shorter than the chain");
            return values[k - 1];
    }
    throw std::logic_error("unreachable");
}

bool EpsSchedule::converges_to_zero() const {
    switch (kind) {
        case Kind::kConstant: return eps0 == 0.0 && eps1 == 0.0;
        case Kind::kDecaying: return true;
        case Kind::kExplicit: return false;  // finite lists carry no limit information
    }
    throw std::logic_error("unreachable");
}

std::vector<StageError> propagate(const FirstAgentRule& first, std::span<const RelayRule> relays,
                                  std::span<const LfdPair> lfds, const Priors& priors) {
    const std::size_t n = relays.size() + 1;
    if (lfds.size() != 1 && lfds.size() != n)
        throw std::invalid_argument("need one shared LFD pair or one per agent");
    const auto lfd_at = [&](std::size_t k) -> const LfdPair& {
        return lfds.size() == 1 ? lfds[0] : lfds[k - 1];
    };

    std::vector<StageError> stages;
    stages.reserve(n);
    stages.push_back(stage_one(first, lfd_at(1), priors));
    double p_f = stages[0].p_f, p_m = stages[0].p_m;
    for (std::size_t k = 2; k <= n; ++k) {
        const RelayRule& rule = relays[k - 2];
        const LfdPair& lfd = lfd_at(k);
        const double a = out1(rule, lfd, 0, 0);
        const double m = 1.0 - out1(rule, lfd, 1, 1);
        p_f = p_f * (out1(rule, lfd, 0, 1) - a) + a;
        p_m = p_m * ((1.0 - out1(rule, lfd, 1, 0)) - m) + m;
        stages.push_back(make_stage(static_cast<int>(k), p_f, p_m, priors));
    }
    return stages;
}

std::vector<StageError> propagate_shared(const FirstAgentRule& first, const RelayRule& relay,
                                         const LfdPair& lfd, const Priors& priors, int n) {
    if (n < 1) throw std::invalid_argument("chain length must be >= 1");
    const std::vector<RelayRule> relays(static_cast<std::size_t>(n - 1), relay);
    return propagate(first, relays, {&lfd, 1}, priors);
}

SocialTrajectory social_trajectory(const ChainConfig& config) {
    if (config.n < 1) throw std::invalid_argument("chain length must be >= 1");
    SocialTrajectory out;
    std::map<std::pair<double, double>, LfdPair> cache;
    const auto lfd_for = [&](int k) -> const LfdPair& {
        const auto eps = config.eps.at(k);
        auto it = cache.find(eps);
        if (it == cache.end())
            it = cache.emplace(eps, LfdPair::solve({config.model, eps.first, eps.second})).first;
        return it->second;
    };

    double q_f, q_m;
    try {
        const StageError s1 = stage_one(first_agent_rule(config.priors), lfd_for(1), config.priors);
        q_f = s1.p_f;
        q_m = s1.p_m;
        out.stages.push_back(s1);
    } catch (const NotDisjointError&) {
        if (config.priors.pi0 != config.priors.pi1) {
            out.halted = true;
            out.diagnostic =
                "agent 1 classes overlap and priors are asymmetric; no informative minimax rule";
            return out;
        }
        // Overlapping classes make the observation worthless in the worst case;
        // with symmetric priors a fair coin attains the stage-1 minimax error 1/2.
        out.first_agent_coin = true;
        q_f = q_m = 0.5;
        out.stages.push_back(make_stage(1, q_f, q_m, config.priors));
    }

    for (int k = 2; k <= config.n; ++k) {
        if (!(q_f > 0.0 && q_f < 1.0 && q_m > 0.0 && q_m < 1.0)) {
            out.halted = true;
            out.diagnostic = "posterior degenerated at stage " + std::to_string(k - 1);
            return out;
        }
        const LfdPair& lfd = lfd_for(k);
        const RelayRule rule = social_rule(config.priors, q_f, q_m);
        const double a = out1(rule, lfd, 0, 0);
        const double m = 1.0 - out1(rule, lfd, 1, 1);
        q_f = q_f * (out1(rule, lfd, 0, 1) - a) + a;
        q_m = q_m * ((1.0 - out1(rule, lfd, 1, 0)) - m) + m;
        out.relay_rules.push_back(rule);
        out.stages.push_back(make_stage(k, q_f, q_m, config.priors));
    }
    return out;
}

AsymptoticPoint asymptotic_error(const RelayRule& rule, const LfdPair& lfd, const Priors& priors) {
    const double a = out1(rule, lfd, 0, 0);
    const double d = 1.0 - out1(rule, lfd, 0, 1);
    const double m = 1.0 - out1(rule, lfd, 1, 1);
    const double f = out1(rule, lfd, 1, 0);
    if (a + d <= 0.0 || m + f <= 0.0)
        throw NoContractionError("relay never overrides on one side; the chain is constant");
    AsymptoticPoint pt;
    pt.p_f = a / (a + d);
    pt.p_m = m / (m + f);
    pt.p_e = priors.pi0 * pt.p_f + priors.pi1 * pt.p_m;
    pt.ratio_f = std::abs(1.0 - d - a);
    pt.ratio_m = std::abs((1.0 - m) - f);
    return pt;
}

PhiDeltaPlan phi_delta_scheme(const UncertaintySpec& spec, double delta, const Priors& priors) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (spec.eps0 != 0.0)
        throw SchemeInapplicableError("scheme requires an uncontaminated H0 class (eps0 = 0)");
    if (!spec.model.llr_unbounded_above())
        throw SchemeInapplicableError("scheme requires the LLR to be unbounded above");
    const LfdPair lfd = LfdPair::solve(spec);

    const double log_delta = std::log(delta);
    const double log_1m_delta = std::log1p(-delta);
    for (double t = 2.0; t <= 1152921504606846976.0; t *= 2.0) {  // cap 2^60
        const double x = lfd.event_prob(1, LrEvent::kGreaterEqual, t);   // Q1(l* >= t)
        if (!(x > 0.0) || !(x < 1.0)) continue;
        const double lower = log_delta / std::log1p(-x);
        const double upper = log_1m_delta / std::log1p(-x / t);
        const double n_candidate = std::floor(lower) + 1.0;
        if (!(n_candidate < upper)) continue;

        PhiDeltaPlan plan;
        plan.threshold = t;
        plan.n_star = static_cast<long>(n_candidate);
        plan.lower_bound = lower;
        plan.upper_bound = upper;
        const double y0 = lfd.event_prob(0, LrEvent::kGreaterEqual, t);  // Q0(l* >= t)
        const double p_m = std::pow(1.0 - x, static_cast<double>(plan.n_star));
        const double p_f = 1.0 - std::pow(1.0 - y0, static_cast<double>(plan.n_star));
        if (!(p_m < delta) || !(p_f < delta))
            throw std::logic_error("scheme bounds violated; tail formulas inconsistent");
        plan.predicted = make_stage(0, p_f, p_m, priors);
        return plan;
    }
    throw std::runtime_error("no feasible (t, N*) found below the threshold cap");
}

LearnabilityVerdict learnability_check(const ChainConfig& config, LearnMode mode) {
    const NominalPair& model = config.model;
    const bool above = model.llr_unbounded_above();
    const bool below = model.llr_unbounded_below();

    if (config.eps.is_constant()) {
        const double e0 = config.eps.eps0, e1 = config.eps.eps1;
        if (mode == LearnMode::kDecentralized) {
            if (e0 == 0.0 && above)
                return {true, "eps0 = 0 and the log-likelihood ratio is unbounded above"};
            if (e1 == 0.0 && below)
                return {true, "eps1 = 0 and the log-likelihood ratio is unbounded below"};
            return {false,
                    "both classes contaminated or the log-likelihood ratio is bounded on the "
                    "needed side"};
        }
        if (e0 == 0.0 && e1 == 0.0 && above && below)
            return {true, "uncontaminated classes and two-sided unbounded log-likelihood ratio"};
        return {false,
                "myopic chains need eps0 = eps1 = 0 and a two-sided unbounded log-likelihood "
                "ratio"};
    }

    if (config.eps.converges_to_zero()) {
        if (above && below)
            return {true, "contamination decays to zero along the chain and the log-likelihood "
                          "ratio is unbounded on both sides"};
        return {false, "bounded log-likelihood ratio prevents vanishing error even with decaying "
                       "contamination"};
    }
    throw std::invalid_argument(
        "schedule carries no limit information; learnability is undetermined");
}

}  // namespace rtandem
