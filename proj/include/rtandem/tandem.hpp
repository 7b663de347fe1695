#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rtandem/rules.hpp"

namespace rtandem {

// Exact false-alarm / miss / total error at chain position k under the LFDs.
struct StageError {
    int k = 0;
    double p_f = 0.0;
    double p_m = 0.0;
    double p_e = 0.0;
};

StageError make_stage(int k, double p_f, double p_m, const Priors& priors);

// Per-agent contamination values: a shared constant pair, a decaying a/k
// schedule, or an explicit list.
struct EpsSchedule {
    enum class Kind { kConstant, kDecaying, kExplicit };
    Kind kind = Kind::kConstant;
    double eps0 = 0.0, eps1 = 0.0;                   // kConstant
    double decay_scale = 0.0;                        // kDecaying: eps_{i,k} = decay_scale / k
    std::vector<std::pair<double, double>> values;   // kExplicit

    static EpsSchedule constant(double e0, double e1) { return {Kind::kConstant, e0, e1, 0.0, {}}; }
    static EpsSchedule decaying(double scale) { return {Kind::kDecaying, 0.0, 0.0, scale, {}}; }
    static EpsSchedule explicit_list(std::vector<std::pair<double, double>> v) {
        return {Kind::kExplicit, 0.0, 0.0, 0.0, std::move(v)};
    }

    std::pair<double, double> at(int k) const;  // k is 1-based
    bool converges_to_zero() const;
    bool is_constant() const { return kind == Kind::kConstant; }
};

struct ChainConfig {
    Priors priors;
    int n = 1;             // chain length
    EpsSchedule eps;
    NominalPair model;
};

// Exact error propagation: stage 1 from the first-agent test, stages k >= 2
// from the affine recurrences
//   P_F,k = P_F,k-1 * [Q0(phi(Y,1)=1) - Q0(phi(Y,0)=1)] + Q0(phi(Y,0)=1)
//   P_M,k = P_M,k-1 * [Q1(phi(Y,0)=0) - Q1(phi(Y,1)=0)] + Q1(phi(Y,1)=0)
// with each stage's own kernel. relays has length N-1; lfds has length N or 1
// (shared).
std::vector<StageError> propagate(const FirstAgentRule& first, std::span<const RelayRule> relays,
                                  std::span<const LfdPair> lfds, const Priors& priors);

// Shared-rule convenience for chains of length n.
std::vector<StageError> propagate_shared(const FirstAgentRule& first, const RelayRule& relay,
                                         const LfdPair& lfd, const Priors& priors, int n);

struct SocialTrajectory {
    std::vector<StageError> stages;
    std::vector<RelayRule> relay_rules;  // rules of agents 2..N actually built
    bool first_agent_coin = false;       // agent 1 fell back to a fair coin
    bool halted = false;
    std::string diagnostic;
};

// Myopic minimax trajectory: agent 1 uses the threshold pi0/pi1, each later
// agent applies the plug-in relay for the previous stage's LFD errors under
// its own contamination pair. Stops with a diagnostic when a posterior
// degenerates. When agent 1's classes are not disjoint and the priors are
// symmetric, its minimax decision carries no information and is taken to be a
// fair coin (later agents then start from qf = qm = 1/2).
SocialTrajectory social_trajectory(const ChainConfig& config);

struct AsymptoticPoint {
    double p_f = 0.0;     // a / (a + d)
    double p_m = 0.0;     // m / (m + f)
    double p_e = 0.0;
    double ratio_f = 0.0; // |Q0(phi(Y,1)=1) - Q0(phi(Y,0)=1)|
    double ratio_m = 0.0; // |Q1(phi(Y,1)=1) - Q1(phi(Y,0)=1)|
};

// Fixed point of the shared-relay recurrences with a = Q0(phi(Y,0)=1),
// d = Q0(phi(Y,1)=0), m = Q1(phi(Y,1)=0), f = Q1(phi(Y,0)=1). Throws
// NoContractionError when a + d = 0 or m + f = 0 (the chain is constant).
AsymptoticPoint asymptotic_error(const RelayRule& rule, const LfdPair& lfd, const Priors& priors);

struct PhiDeltaPlan {
    double threshold = 0.0;   // shared test threshold t on l*
    long n_star = 0;          // number of OR-ing agents
    StageError predicted;     // asymptotic errors of the scheme
    double lower_bound = 0.0; // log(delta)/log(1 - Q1(l* >= t))
    double upper_bound = 0.0; // log(1-delta)/log(1 - Q1(l* >= t)/t)
};

// Vanishing-error relay scheme for eps0 = 0 and LLR unbounded above: agents
// 1..N*-1 OR their own test l* >= t into the running decision, later agents
// relay. Doubles t from 2 until the open bound interval contains an integer
// and returns the smallest such N*; both predicted error rates are < delta.
PhiDeltaPlan phi_delta_scheme(const UncertaintySpec& spec, double delta,
                              const Priors& priors = Priors(0.5));

enum class LearnMode { kDecentralized, kSocial };

struct LearnabilityVerdict {
    bool learnable = false;
    std::string reason;
};

// Structural check of the vanishing-error conditions from the contamination
// values (or their limit behaviour) and the LLR boundedness flags.
LearnabilityVerdict learnability_check(const ChainConfig& config, LearnMode mode);

}  // namespace rtandem
