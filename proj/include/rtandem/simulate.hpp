#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rtandem/tandem.hpp"

namespace rtandem {

// One contaminating distribution R; the class member actually sampled is
// (1 - eps) * P_i* + eps * R. Kind kNone selects the least favorable member
// of the class itself (the reference distribution the exact engine uses).
struct ContaminationSpec {
    enum class Kind { kNone, kPointMass, kShiftedNominal, kSwapNominal, kTwoPoint };
    Kind kind = Kind::kNone;
    double y_a = 0.0;   // point mass location / first two-point atom
    double y_b = 0.0;   // second two-point atom
    double w = 0.5;     // two-point weight on y_a
    double shift = 0.0; // shifted-nominal offset

    static ContaminationSpec none() { return {}; }
    static ContaminationSpec point_mass(double y) { return {Kind::kPointMass, y, 0.0, 0.5, 0.0}; }
    static ContaminationSpec shifted_nominal(double s) {
        return {Kind::kShiftedNominal, 0.0, 0.0, 0.5, s};
    }
    static ContaminationSpec swap_nominal() { return {Kind::kSwapNominal, 0.0, 0.0, 0.5, 0.0}; }
    static ContaminationSpec two_point(double a, double b, double w) {
        return {Kind::kTwoPoint, a, b, w, 0.0};
    }
};

// R distributions for both hypotheses (applied at every agent).
struct ContaminationPair {
    ContaminationSpec r0;
    ContaminationSpec r1;
};

struct SimResult {
    std::vector<double> p_f_hat, p_m_hat, p_e_hat;
    std::vector<double> se_f, se_m, se_e;  // sqrt(p(1-p)/n) per stage
    long n_samples = 0;
    std::uint64_t seed = 0;
};

// Monte Carlo chain run: per hypothesis, draws each agent's observation from
// (1-eps_{i,k}) P_i* + eps_{i,k} R_{i,k}, applies the decision rules
// (including tie coins), and tallies every stage's decisions. One RNG stream
// per (agent, hypothesis, replicate), so results are independent of threading
// and of the chain length beyond an agent's own position.
// contamination has length 1 (shared by all agents) or N.
SimResult simulate_chain(const FirstAgentRule& first, std::span<const RelayRule> relays,
                         const LfdPair& lfd, std::span<const ContaminationPair> contamination,
                         const Priors& priors, long n_samples, std::uint64_t seed,
                         int threads = 1);

struct AdversarialReport {
    double worst_p_e = 0.0;              // largest final-stage empirical error found
    ContaminationPair argmax;
    std::vector<double> max_p_f, max_p_m;  // stage-wise maxima across candidates
    std::vector<std::string> violations;   // candidates beating the LFD bound + 4 se
    long candidates_evaluated = 0;
};

// Sweeps contamination candidates against the exact LFD chain errors and
// checks, stage by stage and separately for false alarms and misses, that no
// candidate exceeds the bound by more than 4 standard errors.
AdversarialReport adversarial_search(const FirstAgentRule& first, std::span<const RelayRule> relays,
                                     const LfdPair& lfd, const Priors& priors,
                                     std::span<const ContaminationPair> candidates, long n_samples,
                                     std::uint64_t seed, int threads = 1);

struct OrderingReport {
    double max_violation = 0.0;  // largest breach of the four-way tail ordering
    double worst_t = 0.0;
    int grid_size = 0;
};

// Checks P0(l* > t) <= Q0(l* > t) <= Q1(l* > t) <= P1(l* > t) on a t-grid
// spanning the clipped-ratio range, using closed forms for all four tails.
OrderingReport ordering_check(const LfdPair& lfd, int n_grid);

// Builds a default candidate menu for adversarial_search: point masses swept
// over an observation grid, shifted nominals, swaps, and two-point mixtures.
std::vector<ContaminationPair> default_contamination_menu(const NominalPair& model, int budget);

}  // namespace rtandem
