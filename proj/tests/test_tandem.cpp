#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracle.hpp"
#include "rtandem/errors.hpp"
#include "rtandem/tandem.hpp"

using namespace rtandem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NominalPair disc_model() { return NominalPair::discrete_pmf({0.0, 1.0}, {0.8, 0.2}, {0.2, 0.8}); }

LfdPair lfd_exp_001() {
    return LfdPair::solve({NominalPair::exponential_means(1.0, 2.0), 0.01, 0.01});
}

// the two reference relays of the exponential comparison (upper threshold of
// the first capped at the top atom, where it decides 1 surely)
RelayRule phi_a(const LfdPair& lfd) { return {lfd.l_lo(), std::min(5.0, lfd.l_hi()), 1.0, 0.0}; }
RelayRule phi_b(const LfdPair& lfd) { return {lfd.l_lo(), 1.1, 1.0, 0.0}; }

}  // namespace

TEST_CASE("stage errors satisfy the prior mix identity") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.3);
    const auto stages = propagate_shared(first_agent_rule(priors), phi_b(lfd), lfd, priors, 20);
    for (const auto& s : stages)
        CHECK(s.p_e == doctest::Approx(priors.pi0 * s.p_f + priors.pi1 * s.p_m).epsilon(1e-14));
}

TEST_CASE("pass-through relays keep the stage errors constant") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.5);
    const RelayRule pass(1e-3, 1e9, 0.0, 0.0);
    const auto stages = propagate_shared(first_agent_rule(priors), pass, lfd, priors, 10);
    for (const auto& s : stages) {
        CHECK(s.p_f == doctest::Approx(stages[0].p_f).epsilon(1e-14));
        CHECK(s.p_m == doctest::Approx(stages[0].p_m).epsilon(1e-14));
    }
    CHECK(stages[0].p_e == doctest::Approx(0.38125).epsilon(1e-9));
}

TEST_CASE("reference exponential chain: stage one and the shape of both curves") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.5);
    const auto a = propagate_shared(first_agent_rule(priors), phi_a(lfd), lfd, priors, 30);
    CHECK(a[0].p_f == doctest::Approx(0.2575).epsilon(1e-12));
    CHECK(a[0].p_m == doctest::Approx(0.505).epsilon(1e-12));
    CHECK(a[0].p_e == doctest::Approx(0.38125).epsilon(1e-12));
    // decreasing total error with the position-2 value on top
    for (int k = 1; k < 25; ++k) CHECK(a[k].p_e < a[k - 1].p_e);
    double max_tail = 0.0;
    for (int k = 2; k < 30; ++k) max_tail = std::max(max_tail, a[k].p_e);
    CHECK(a[1].p_e > max_tail);

    const auto b = propagate_shared(first_agent_rule(priors), phi_b(lfd), lfd, priors, 500);
    const AsymptoticPoint fp = asymptotic_error(phi_b(lfd), lfd, priors);
    // the supremum over positions >= 2 sits at the fixed point
    for (int k = 1; k < 500; ++k) CHECK(b[k].p_e <= fp.p_e + 1e-12);
    CHECK(b[499].p_e == doctest::Approx(fp.p_e).epsilon(1e-9));
}

TEST_CASE("discrete chains match tuple enumeration exactly") {
    const NominalPair model = disc_model();
    const LfdPair lfd = LfdPair::solve({model, 0.1, 0.1});
    const auto dens = oracle::discrete_lfd_densities(model, 0.1, 0.1, lfd.c_lo(), lfd.c_hi());
    const Priors priors(0.5);
    RngStream rng(404);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 2 + static_cast<int>(rng.next_double() * 9);  // 2..10
        std::vector<RelayRule> relays;
        for (int j = 1; j < n; ++j) {
            double t1 = 0.3 + 2.5 * rng.next_double();
            double t0 = 0.3 + 2.5 * rng.next_double();
            if (t1 > t0) std::swap(t1, t0);
            relays.emplace_back(t1, t0, rng.next_double(), rng.next_double());
        }
        const FirstAgentRule first{0.3 + 2.5 * rng.next_double()};
        const auto exact = propagate(first, relays, {&lfd, 1}, priors);
        const auto brute = oracle::enumerate_chain(first, relays, dens, priors);
        for (int k = 0; k < n; ++k) {
            CHECK(exact[k].p_f == doctest::Approx(brute[k].p_f).epsilon(1e-12));
            CHECK(exact[k].p_m == doctest::Approx(brute[k].p_m).epsilon(1e-12));
        }
    }
}

TEST_CASE("acceptance probability under H1 dominates H0 along random chains") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.5);
    RngStream rng(88);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<RelayRule> relays;
        for (int j = 0; j < 6; ++j) {
            double t1 = lfd.l_lo() + (lfd.l_hi() - lfd.l_lo()) * rng.next_double();
            double t0 = lfd.l_lo() + (lfd.l_hi() - lfd.l_lo()) * rng.next_double();
            if (t1 > t0) std::swap(t1, t0);
            relays.emplace_back(t1, t0, rng.next_double(), rng.next_double());
        }
        const auto stages = propagate(FirstAgentRule{0.5 + 2.0 * rng.next_double()}, relays,
                                      {&lfd, 1}, priors);
        for (const auto& s : stages) CHECK(1.0 - s.p_m >= s.p_f - 1e-12);
    }
}

TEST_CASE("fixed point matches the iterated recursion and its rate") {
    const LfdPair lfd = lfd_exp_001();
    const Priors priors(0.5);
    const RelayRule rule = phi_b(lfd);
    const AsymptoticPoint fp = asymptotic_error(rule, lfd, priors);
    const auto stages = propagate_shared(first_agent_rule(priors), rule, lfd, priors, 500);
    CHECK(std::abs(stages[499].p_e - fp.p_e) < 1e-9);
    // the false-alarm recursion is affine: successive gaps shrink by ratio_f
    for (int k = 2; k < 8; ++k) {
        const double g1 = stages[k].p_f - fp.p_f;
        const double g0 = stages[k - 1].p_f - fp.p_f;
        CHECK(g1 / g0 == doctest::Approx(fp.ratio_f).epsilon(1e-6));
    }
    // and the contraction bounds the distance to the fixed point
    for (int k = 2; k < 100; ++k) {
        const double bound = std::pow(fp.ratio_f, k - 1) * std::abs(stages[1].p_f - fp.p_f);
        CHECK(std::abs(stages[k].p_f - fp.p_f) <= bound + 1e-12);
    }
}

TEST_CASE("symmetric kernel gives a 1/2 fixed point") {
    const LfdPair lfd = LfdPair::solve({disc_model(), 0.0, 0.0});
    // a = (1-q) * 0.2 and d = p * 0.8 equalize at p = 0.125, q = 0.5
    const RelayRule rule(0.25, 4.0, 0.125, 0.5);
    const AsymptoticPoint fp = asymptotic_error(rule, lfd, Priors(0.5));
    CHECK(fp.p_f == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pass-through rules carry no fixed point") {
    const LfdPair lfd = lfd_exp_001();
    CHECK_THROWS_AS(asymptotic_error(RelayRule(1e-3, 1e9, 0.0, 0.0), lfd, Priors(0.5)),
                    NoContractionError);
}

TEST_CASE("myopic trajectory: bounded ratio plateaus, unbounded ratio keeps learning") {
    const Priors priors(0.5);
    // bounded ratio, no contamination: the relay eventually passes through
    const SocialTrajectory disc = social_trajectory(
        {priors, 200, EpsSchedule::constant(0.0, 0.0), disc_model()});
    REQUIRE_FALSE(disc.halted);
    CHECK(disc.stages[199].p_e > 0.01);
    CHECK(disc.stages[199].p_e == doctest::Approx(disc.stages[99].p_e).epsilon(1e-14));
    for (int k = 1; k < 200; ++k) CHECK(disc.stages[k].p_e <= disc.stages[k - 1].p_e + 1e-14);
    // the plateau value is confirmed by tuple enumeration at small depth
    const LfdPair lfd0 = LfdPair::solve({disc_model(), 0.0, 0.0});
    const auto dens = oracle::discrete_lfd_densities(disc_model(), 0.0, 0.0, lfd0.c_lo(), lfd0.c_hi());
    std::vector<RelayRule> head(disc.relay_rules.begin(), disc.relay_rules.begin() + 7);
    const auto brute = oracle::enumerate_chain(first_agent_rule(priors), head, dens, priors);
    CHECK(disc.stages[7].p_e == doctest::Approx(brute[7].p_e).epsilon(1e-12));

    // two-sided unbounded ratio, no contamination: strictly decreasing
    const SocialTrajectory gauss = social_trajectory(
        {priors, 50, EpsSchedule::constant(0.0, 0.0), NominalPair::gaussian_shift(0.0, 1.0, 1.0)});
    REQUIRE_FALSE(gauss.halted);
    for (int k = 1; k < 50; ++k) CHECK(gauss.stages[k].p_e < gauss.stages[k - 1].p_e);

    // identical contaminated classes: the error settles above a positive floor
    const SocialTrajectory stuck = social_trajectory(
        {priors, 2000, EpsSchedule::constant(0.01, 0.01), NominalPair::gaussian_shift(0.0, 1.0, 1.0)});
    REQUIRE_FALSE(stuck.halted);
    CHECK(stuck.stages[199].p_e > 0.01);
    CHECK(stuck.stages[1999].p_e > 0.01);
    CHECK(stuck.stages[1999].p_e == doctest::Approx(stuck.stages[1499].p_e).epsilon(1e-9));
}

TEST_CASE("decaying contamination restores learning") {
    const Priors priors(0.5);
    const SocialTrajectory traj = social_trajectory(
        {priors, 50, EpsSchedule::decaying(0.5), NominalPair::gaussian_shift(0.0, 1.0, 1.0)});
    REQUIRE_FALSE(traj.halted);
    CHECK(traj.first_agent_coin);  // eps = 1/2 at agent 1 overlaps the classes
    for (int k = 1; k < 50; ++k) CHECK(traj.stages[k].p_e <= traj.stages[k - 1].p_e + 1e-14);
    CHECK(traj.stages[49].p_e < traj.stages[4].p_e);
    CHECK(traj.stages[49].p_e < 0.5 * traj.stages[4].p_e);
}

TEST_CASE("vanishing-error scheme on the contaminated-H1 exponential pair") {
    const UncertaintySpec spec{NominalPair::exponential_means(1.0, 2.0), 0.0, 0.05};
    const PhiDeltaPlan plan = phi_delta_scheme(spec, 0.05);
    const LfdPair lfd = LfdPair::solve(spec);
    const double x = lfd.event_prob(1, LrEvent::kGreaterEqual, plan.threshold);
    const double y = lfd.event_prob(0, LrEvent::kGreaterEqual, plan.threshold);
    // the returned N* sits strictly inside the printed bounds
    CHECK(plan.n_star > std::log(0.05) / std::log1p(-x));
    CHECK(plan.n_star < std::log1p(-0.05) / std::log1p(-x / plan.threshold));
    CHECK(plan.predicted.p_m == doctest::Approx(std::pow(1.0 - x, plan.n_star)).epsilon(1e-12));
    CHECK(plan.predicted.p_f ==
          doctest::Approx(1.0 - std::pow(1.0 - y, plan.n_star)).epsilon(1e-12));
    CHECK(plan.predicted.p_m < 0.05);
    CHECK(plan.predicted.p_f < 0.05);
    CHECK(plan.predicted.p_e < 0.05);

    // independent doubling-grid scan finds the same first feasible threshold
    double t_scan = 2.0;
    long n_scan = -1;
    for (; t_scan <= 1e18; t_scan *= 2.0) {
        const double xs = lfd.event_prob(1, LrEvent::kGreaterEqual, t_scan);
        if (!(xs > 0.0) || !(xs < 1.0)) continue;
        const double lower = std::log(0.05) / std::log1p(-xs);
        const double upper = std::log1p(-0.05) / std::log1p(-xs / t_scan);
        const double cand = std::floor(lower) + 1.0;
        if (cand < upper) {
            n_scan = static_cast<long>(cand);
            break;
        }
    }
    CHECK(t_scan == plan.threshold);
    CHECK(n_scan == plan.n_star);
}

TEST_CASE("vanishing-error scheme edge cases") {
    const UncertaintySpec spec{NominalPair::exponential_means(1.0, 2.0), 0.0, 0.05};
    const PhiDeltaPlan loose = phi_delta_scheme(spec, 0.99);
    CHECK(loose.n_star == 1);
    CHECK(loose.threshold == 2.0);

    CHECK_THROWS_AS(phi_delta_scheme({disc_model(), 0.0, 0.05}, 0.05), SchemeInapplicableError);
    CHECK_THROWS_AS(phi_delta_scheme({NominalPair::exponential_means(1.0, 2.0), 0.01, 0.05}, 0.05),
                    SchemeInapplicableError);
}

TEST_CASE("learnability verdicts") {
    const NominalPair exp_m = NominalPair::exponential_means(1.0, 2.0);
    const NominalPair gauss = NominalPair::gaussian_shift(0.0, 1.0, 1.0);
    const Priors priors(0.5);

    const ChainConfig dd_ok{priors, 10, EpsSchedule::constant(0.0, 0.05), exp_m};
    CHECK(learnability_check(dd_ok, LearnMode::kDecentralized).learnable);

    const ChainConfig dd_bad{priors, 10, EpsSchedule::constant(0.05, 0.0), exp_m};
    CHECK_FALSE(learnability_check(dd_bad, LearnMode::kDecentralized).learnable);

    const ChainConfig sl_bad{priors, 10, EpsSchedule::constant(0.01, 0.01), gauss};
    CHECK_FALSE(learnability_check(sl_bad, LearnMode::kSocial).learnable);

    const ChainConfig sl_ok{priors, 10, EpsSchedule::constant(0.0, 0.0), gauss};
    CHECK(learnability_check(sl_ok, LearnMode::kSocial).learnable);
    const ChainConfig sl_onesided{priors, 10, EpsSchedule::constant(0.0, 0.0), exp_m};
    CHECK_FALSE(learnability_check(sl_onesided, LearnMode::kSocial).learnable);

    const ChainConfig decay{priors, 10, EpsSchedule::decaying(0.5), gauss};
    CHECK(learnability_check(decay, LearnMode::kSocial).learnable);
    CHECK(learnability_check(decay, LearnMode::kDecentralized).learnable);
    const ChainConfig decay_bounded{priors, 10, EpsSchedule::decaying(0.5), disc_model()};
    CHECK_FALSE(learnability_check(decay_bounded, LearnMode::kSocial).learnable);
}

TEST_CASE("per-agent pairs propagate through explicit schedules") {
    const NominalPair gauss = NominalPair::gaussian_shift(0.0, 1.0, 1.0);
    const EpsSchedule sched = EpsSchedule::explicit_list({{0.05, 0.05}, {0.01, 0.02}, {0.0, 0.0}});
    CHECK(sched.at(2) == std::pair<double, double>{0.01, 0.02});
    const SocialTrajectory traj = social_trajectory({Priors(0.5), 3, sched, gauss});
    REQUIRE_FALSE(traj.halted);
    CHECK(traj.stages.size() == 3);
    CHECK_THROWS_AS(social_trajectory({Priors(0.5), 4, sched, gauss}), std::invalid_argument);
}
