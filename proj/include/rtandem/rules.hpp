#pragma once

#include "rtandem/lfd.hpp"

namespace rtandem {

struct Priors {
    double pi0;
    double pi1;
    explicit Priors(double pi0_in);
};

// Agent 1: decide 1 iff l*(Y) >= threshold. The minimax choice is pi0/pi1.
struct FirstAgentRule {
    double threshold;
};

FirstAgentRule first_agent_rule(const Priors& priors);

// Randomized likelihood-ratio relay for agents k >= 2, thresholds on l*:
//   l* <  t1            -> 0
//   l* == t1            -> 0 with prob p, else keep u_prev
//   t1 < l* < t0        -> keep u_prev
//   l* == t0            -> keep u_prev with prob q, else 1
//   l* >  t0            -> 1
// Thresholds outside [l_lo, l_hi] are allowed and give degenerate
// (never-firing) branches; t0 may be +inf.
struct RelayRule {
    double t1;
    double t0;
    double p;
    double q;
    RelayRule(double t1_in, double t0_in, double p_in, double q_in);
};

// Exact kernel probability Q_i(phi(Y, u_prev) = v) under the LFD pair.
double kernel_prob(const RelayRule& rule, const LfdPair& lfd, int hyp, int u_prev, int v);

// Myopic plug-in relay given the predecessor's LFD false-alarm and miss
// probabilities:
//   t1 = pi0 * qf / (pi1 * (1 - qm)),   t0 = pi0 * (1 - qf) / (pi1 * qm),
// with the deterministic tie handling p = q = 0 (keep u_prev at t1, decide 1
// at t0). Throws DegeneratePosteriorError when qf or qm sits at 0 or 1.
RelayRule social_rule(const Priors& priors, double prev_false_alarm, double prev_miss);

}  // namespace rtandem
