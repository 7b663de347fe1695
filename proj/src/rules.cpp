#include "rtandem/rules.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rtandem/errors.hpp"

namespace rtandem {

Priors::Priors(double pi0_in) : pi0(pi0_in), pi1(1.0 - pi0_in) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw std::invalid_argument("pi0 must lie in (0, 1)");
}

FirstAgentRule first_agent_rule(const Priors& priors) { return {priors.pi0 / priors.pi1}; }

RelayRule::RelayRule(double t1_in, double t0_in, double p_in, double q_in)
    : t1(t1_in), t0(t0_in), p(p_in), q(q_in) {
    if (!(t1 > 0.0) || std::isnan(t0) || !(t1 <= t0))
        throw std::invalid_argument("relay thresholds must satisfy 0 < t1 <= t0");
    if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("tie probabilities must lie in [0, 1]");
}

double kernel_prob(const RelayRule& rule, const LfdPair& lfd, int hyp, int u_prev, int v) {
    double out1;
    if (u_prev == 1)
        out1 = lfd.event_prob(hyp, LrEvent::kGreater, rule.t1) +
               (1.0 - rule.p) * lfd.event_prob(hyp, LrEvent::kEqual, rule.t1);
    else
        out1 = lfd.event_prob(hyp, LrEvent::kGreater, rule.t0) +
               (1.0 - rule.q) * lfd.event_prob(hyp, LrEvent::kEqual, rule.t0);
    return v == 1 ? out1 : 1.0 - out1;
}

RelayRule social_rule(const Priors& priors, double prev_false_alarm, double prev_miss) {
    if (!(prev_false_alarm > 0.0 && prev_false_alarm < 1.0) ||
        !(prev_miss > 0.0 && prev_miss < 1.0))
        throw DegeneratePosteriorError(
            "predecessor error probabilities must lie in (0, 1); got qf=" +
            std::to_string(prev_false_alarm) + ", qm=" + std::to_string(prev_miss));
    const double t1 = priors.pi0 * prev_false_alarm / (priors.pi1 * (1.0 - prev_miss));
    const double t0 = priors.pi0 * (1.0 - prev_false_alarm) / (priors.pi1 * prev_miss);
    return RelayRule(t1, t0, 0.0, 0.0);
}

}  // namespace rtandem
