#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "rtandem/tandem.hpp"

namespace rtandem {

enum class Objective { kFiniteDd, kAsymptoticDd, kUnknownSl };

struct OptimizationReport {
    Objective objective = Objective::kFiniteDd;
    std::optional<RelayRule> best_rule;   // shared-rule objectives
    std::vector<double> thresholds;       // finite chains: [tau, t1_2, t0_2, ..., t1_N, t0_N]
    std::vector<RelayRule> finite_rules;  // finite chains: full relays (ties included)
    double value = 0.0;                   // objective at the optimum, re-evaluated
    std::vector<std::pair<long, double>> trace;  // (evaluation index, value) at improvements
    int restarts = 0;
};

// Minimizes the final-stage error of an N-agent chain under the LFDs over all
// per-agent thresholds (agent 1 included), by cyclic coordinate descent with a
// golden-section line search, multi-start, plus an atom snap-and-scan pass for
// the tie probabilities. N = 1 reduces to the single-agent test at pi0/pi1.
OptimizationReport optimize_finite_dd(const ChainConfig& config);

// Minimizes the fixed-point error over shared relay rules (t1, t0, p, q):
// a grid over [l_lo, l_hi]^2 with t1 <= t0 (tie probabilities scanned only
// where a threshold sits on an atom of l*), then Nelder-Mead refinement.
OptimizationReport optimize_asymptotic_dd(const LfdPair& lfd, const Priors& priors);

// Minimizes max{ P_e,2, P_e,inf } over shared relay rules, with agent 1 fixed
// at the pi0/pi1 test. Verifies afterwards that the supremum over positions
// 2..500 is attained at position 2 or at the fixed point (within 1e-9).
OptimizationReport optimize_unknown_sl(const LfdPair& lfd, const Priors& priors);

// Search box for thresholds on l*: [l_lo, l_hi] when both are finite,
// otherwise capped where the clipped-ratio tails drop below 1e-10.
std::pair<double, double> threshold_box(const LfdPair& lfd);

// Sorted distinct atom values of l* under the LFD pair.
std::vector<double> lstar_atoms(const LfdPair& lfd);

}  // namespace rtandem
