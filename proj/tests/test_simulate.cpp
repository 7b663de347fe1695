#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "rtandem/simulate.hpp"

using namespace rtandem;

namespace {

NominalPair disc_model() { return NominalPair::discrete_pmf({0.0, 1.0}, {0.8, 0.2}, {0.2, 0.8}); }

LfdPair lfd_exp_001() {
    return LfdPair::solve({NominalPair::exponential_means(1.0, 2.0), 0.01, 0.01});
}

}  // namespace

TEST_CASE("uncontaminated stage-1 error matches the closed form") {
    const LfdPair lfd = LfdPair::solve({NominalPair::exponential_means(1.0, 2.0), 0.0, 0.0});
    const Priors priors(0.5);
    const ContaminationPair none{};
    const SimResult res = simulate_chain(first_agent_rule(priors), {}, lfd, {&none, 1}, priors,
                                         100000, 2023);
    CHECK(std::abs(res.p_e_hat[0] - 0.375) < 3.0 * res.se_e[0]);
    CHECK(res.se_f[0] == doctest::Approx(std::sqrt(res.p_f_hat[0] * (1 - res.p_f_hat[0]) /
                                                   res.n_samples)));
}

TEST_CASE("simulation tracks the exact recursion along the chain") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.5);
    const RelayRule rule(lfd.l_lo(), 1.1, 1.0, 0.0);
    const auto exact = propagate_shared(first_agent_rule(priors), rule, lfd, priors, 10);
    const ContaminationPair none{};
    const std::vector<RelayRule> relays(9, rule);
    const SimResult res = simulate_chain(first_agent_rule(priors), relays, lfd, {&none, 1}, priors,
                                         200000, 99);
    for (int k = 0; k < 10; ++k) {
        CHECK(std::abs(res.p_f_hat[k] - exact[k].p_f) < 4.0 * std::max(res.se_f[k], 1e-4));
        CHECK(std::abs(res.p_m_hat[k] - exact[k].p_m) < 4.0 * std::max(res.se_m[k], 1e-4));
    }
}

TEST_CASE("discrete simulation agrees with tuple enumeration") {
    const LfdPair lfd = LfdPair::solve({disc_model(), 0.1, 0.1});
    const auto dens = oracle::discrete_lfd_densities(disc_model(), 0.1, 0.1, lfd.c_lo(), lfd.c_hi());
    const Priors priors(0.5);
    const RelayRule rule(0.8, 1.9, 0.0, 0.0);
    const std::vector<RelayRule> relays(2, rule);
    const auto brute = oracle::enumerate_chain(first_agent_rule(priors), relays, dens, priors);
    // contaminated draws come from the least favorable members themselves:
    // H0 mass pushed above c_hi, H1 mass below c_lo
    const ContaminationPair worst{ContaminationSpec::point_mass(1.0),
                                  ContaminationSpec::point_mass(0.0)};
    const SimResult res = simulate_chain(first_agent_rule(priors), relays, lfd, {&worst, 1}, priors,
                                         400000, 7);
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(res.p_f_hat[k] - brute[k].p_f) < 4.0 * std::max(res.se_f[k], 1e-4));
        CHECK(std::abs(res.p_m_hat[k] - brute[k].p_m) < 4.0 * std::max(res.se_m[k], 1e-4));
    }
}

TEST_CASE("simulation is deterministic and thread-count independent") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.5);
    const RelayRule rule(lfd.l_lo(), 1.1, 1.0, 0.0);
    const std::vector<RelayRule> relays(4, rule);
    const ContaminationPair contam{ContaminationSpec::shifted_nominal(1.0),
                                   ContaminationSpec::none()};
    const SimResult a =
        simulate_chain(first_agent_rule(priors), relays, lfd, {&contam, 1}, priors, 50000, 5, 1);
    const SimResult b =
        simulate_chain(first_agent_rule(priors), relays, lfd, {&contam, 1}, priors, 50000, 5, 4);
    CHECK(a.p_f_hat == b.p_f_hat);
    CHECK(a.p_m_hat == b.p_m_hat);
    const SimResult c =
        simulate_chain(first_agent_rule(priors), relays, lfd, {&contam, 1}, priors, 50000, 6, 1);
    CHECK(a.p_f_hat != c.p_f_hat);  // different seed, different draws
}

TEST_CASE("zero contamination makes every candidate identical") {
    const LfdPair lfd = LfdPair::solve({NominalPair::exponential_means(1.0, 2.0), 0.0, 0.0});
    const Priors priors(0.5);
    const RelayRule rule(0.7, 1.4, 0.0, 0.0);
    const std::vector<RelayRule> relays(3, rule);
    const ContaminationPair none{};
    const ContaminationPair aggressive{ContaminationSpec::point_mass(50.0),
                                       ContaminationSpec::point_mass(0.0)};
    const SimResult a =
        simulate_chain(first_agent_rule(priors), relays, lfd, {&none, 1}, priors, 20000, 11);
    const SimResult b = simulate_chain(first_agent_rule(priors), relays, lfd, {&aggressive, 1},
                                       priors, 20000, 11);
    CHECK(a.p_f_hat == b.p_f_hat);
    CHECK(a.p_m_hat == b.p_m_hat);
}

TEST_CASE("adversarial search stays below the least-favorable bound") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.5);
    const RelayRule rule(lfd.l_lo(), std::min(5.0, lfd.l_hi()), 1.0, 0.0);
    const std::vector<RelayRule> relays(5, rule);
    const auto candidates = default_contamination_menu(lfd.model(), 40);
    const AdversarialReport report = adversarial_search(first_agent_rule(priors), relays, lfd,
                                                        priors, candidates, 20000, 3141);
    CHECK(report.candidates_evaluated == 40);
    CHECK(report.violations.empty());
    const auto bound = propagate(first_agent_rule(priors), relays, {&lfd, 1}, priors);
    CHECK(report.worst_p_e <= bound.back().p_e + 0.02);
}

TEST_CASE("ordering check on the clipped-ratio grid") {
    const LfdPair lfd = lfd_exp_001();
    const OrderingReport r = ordering_check(lfd, 100);
    CHECK(r.max_violation <= 1e-9);
    // uncontaminated pair: all four tails coincide
    const LfdPair clean = LfdPair::solve({NominalPair::exponential_means(1.0, 2.0), 0.0, 0.0});
    CHECK(ordering_check(clean, 100).max_violation <= 1e-12);
    const LfdPair disc = LfdPair::solve({disc_model(), 0.1, 0.1});
    CHECK(ordering_check(disc, 100).max_violation <= 1e-12);
}

TEST_CASE("contamination menu respects the requested budget") {
    CHECK(default_contamination_menu(NominalPair::exponential_means(1.0, 2.0), 200).size() == 200);
    CHECK(default_contamination_menu(disc_model(), 25).size() == 25);
}
