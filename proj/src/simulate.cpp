#include "rtandem/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace rtandem {

namespace {

double draw_contaminated(const ContaminationSpec& spec, const NominalPair& model, int hyp,
                         RngStream& rng) {
    switch (spec.kind) {
        case ContaminationSpec::Kind::kNone:
            return model.sample(hyp, rng);
        case ContaminationSpec::Kind::kPointMass:
            return spec.y_a;
        case ContaminationSpec::Kind::kShiftedNominal: {
            double y = model.sample(hyp, rng) + spec.shift;
            if (model.kind() == ModelKind::kExponentialMeans && y < 0.0) y = 0.0;
            return y;
        }
        case ContaminationSpec::Kind::kSwapNominal:
            return model.sample(1 - hyp, rng);
        case ContaminationSpec::Kind::kTwoPoint:
            return rng.next_double() < spec.w ? spec.y_a : spec.y_b;
    }
    throw std::logic_error("unreachable");
}

int apply_first(const FirstAgentRule& rule, double lstar) { return lstar >= rule.threshold ? 1 : 0; }

int apply_relay(const RelayRule& rule, double lstar, int u_prev, RngStream& rng) {
    if (lstar < rule.t1) return 0;
    if (lstar == rule.t1) return rng.next_double() < rule.p ? 0 : u_prev;
    if (lstar < rule.t0) return u_prev;
    if (lstar == rule.t0) return rng.next_double() < rule.q ? u_prev : 1;
    return 1;
}

}  // namespace

SimResult simulate_chain(const FirstAgentRule& first, std::span<const RelayRule> relays,
                         const LfdPair& lfd, std::span<const ContaminationPair> contamination,
                         const Priors& priors, long n_samples, std::uint64_t seed, int threads) {
    const int n = static_cast<int>(relays.size()) + 1;
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (contamination.size() != 1 && contamination.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("need one shared contamination pair or one per agent");
    const auto contam_at = [&](int k) -> const ContaminationPair& {
        return contamination.size() == 1 ? contamination[0] : contamination[k - 1];
    };
    const NominalPair& model = lfd.model();
    const double eps[2] = {lfd.spec().eps0, lfd.spec().eps1};

    // wrong[hyp][k-1]: decisions == 1 under H0, == 0 under H1
    std::vector<std::vector<long>> wrong(2, std::vector<long>(n, 0));

    const auto run_block = [&](int hyp, long r_begin, long r_end, std::vector<long>& tally) {
        for (long r = r_begin; r < r_end; ++r) {
            int u = 0;
            for (int k = 1; k <= n; ++k) {
                RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(k),
                                                     static_cast<std::uint64_t>(hyp),
                                                     static_cast<std::uint64_t>(r));
                const ContaminationSpec& spec =
                    hyp == 0 ? contam_at(k).r0 : contam_at(k).r1;
                double lstar;
                if (eps[hyp] == 0.0) {
                    lstar = lfd.clipped_lr(model.sample(hyp, rng));
                } else if (spec.kind == ContaminationSpec::Kind::kNone) {
                    // no adversary chosen: the observation comes from the least
                    // favorable member itself
                    lstar = lfd.sample_clipped(hyp, rng);
                } else {
                    const double y = rng.next_double() < eps[hyp]
                                         ? draw_contaminated(spec, model, hyp, rng)
                                         : model.sample(hyp, rng);
                    lstar = lfd.clipped_lr(y);
                }
                u = (k == 1) ? apply_first(first, lstar) : apply_relay(relays[k - 2], lstar, u, rng);
                if (u == (hyp == 0 ? 1 : 0)) ++tally[k - 1];
            }
        }
    };

    const int n_threads = std::max(1, threads);
    for (int hyp = 0; hyp < 2; ++hyp) {
        if (n_threads == 1) {
            run_block(hyp, 0, n_samples, wrong[hyp]);
            continue;
        }
        std::vector<std::vector<long>> partial(n_threads, std::vector<long>(n, 0));
        std::vector<std::thread> pool;
        const long block = (n_samples + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const long lo = t * block, hi = std::min<long>(n_samples, lo + block);
            if (lo >= hi) break;
            pool.emplace_back([&, hyp, lo, hi, t] { run_block(hyp, lo, hi, partial[t]); });
        }
        for (auto& th : pool) th.join();
        for (const auto& part : partial)
            for (int k = 0; k < n; ++k) wrong[hyp][k] += part[k];
    }

    SimResult res;
    res.n_samples = n_samples;
    res.seed = seed;
    const double inv_n = 1.0 / static_cast<double>(n_samples);
    for (int k = 0; k < n; ++k) {
        const double pf = wrong[0][k] * inv_n;
        const double pm = wrong[1][k] * inv_n;
        res.p_f_hat.push_back(pf);
        res.p_m_hat.push_back(pm);
        res.p_e_hat.push_back(priors.pi0 * pf + priors.pi1 * pm);
        const double sf = std::sqrt(pf * (1.0 - pf) * inv_n);
        const double sm = std::sqrt(pm * (1.0 - pm) * inv_n);
        res.se_f.push_back(sf);
        res.se_m.push_back(sm);
        res.se_e.push_back(std::sqrt(priors.pi0 * priors.pi0 * sf * sf +
                                     priors.pi1 * priors.pi1 * sm * sm));
    }
    return res;
}

AdversarialReport adversarial_search(const FirstAgentRule& first, std::span<const RelayRule> relays,
                                     const LfdPair& lfd, const Priors& priors,
                                     std::span<const ContaminationPair> candidates, long n_samples,
                                     std::uint64_t seed, int threads) {
    const int n = static_cast<int>(relays.size()) + 1;
    const std::vector<StageError> bound = propagate(first, relays, {&lfd, 1}, priors);

    AdversarialReport report;
    report.max_p_f.assign(n, 0.0);
    report.max_p_m.assign(n, 0.0);
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const ContaminationPair& cand = candidates[ci];
        const std::uint64_t cand_seed = RngStream::substream(seed, 0xadu, ci).next_u64();
        const SimResult res =
            simulate_chain(first, relays, lfd, {&cand, 1}, priors, n_samples, cand_seed, threads);
        ++report.candidates_evaluated;
        for (int k = 0; k < n; ++k) {
            report.max_p_f[k] = std::max(report.max_p_f[k], res.p_f_hat[k]);
            report.max_p_m[k] = std::max(report.max_p_m[k], res.p_m_hat[k]);
            if (res.p_f_hat[k] > bound[k].p_f + 4.0 * res.se_f[k])
                report.violations.push_back("candidate " + std::to_string(ci) + " stage " +
                                            std::to_string(k + 1) + ": p_f " +
                                            std::to_string(res.p_f_hat[k]) + " > bound " +
                                            std::to_string(bound[k].p_f));
            if (res.p_m_hat[k] > bound[k].p_m + 4.0 * res.se_m[k])
                report.violations.push_back("candidate " + std::to_string(ci) + " stage " +
                                            std::to_string(k + 1) + ": p_m " +
                                            std::to_string(res.p_m_hat[k]) + " > bound " +
                                            std::to_string(bound[k].p_m));
        }
        if (res.p_e_hat[n - 1] > report.worst_p_e) {
            report.worst_p_e = res.p_e_hat[n - 1];
            report.argmax = cand;
        }
    }
    return report;
}

OrderingReport ordering_check(const LfdPair& lfd, int n_grid) {
    if (n_grid < 2) throw std::invalid_argument("ordering_check needs at least two grid points");
    double lo = lfd.l_lo(), hi = lfd.l_hi();
    if (!(lo > 0.0) || !std::isfinite(hi)) {
        // uncontaminated sides leave the range open; use the tail-capped box
        lo = std::max(lo, 1e-6);
        if (!std::isfinite(hi)) {
            hi = std::max(1.0, 2.0 * lo);
            for (int i = 0; i < 2000 && lfd.event_prob(1, LrEvent::kGreater, hi) > 1e-10; ++i)
                hi *= 2.0;
        }
    }
    OrderingReport report;
    report.grid_size = n_grid;
    for (int i = 0; i < n_grid; ++i) {
        const double t = lo + (hi - lo) * i / double(n_grid - 1);
        const double p0 = lfd.nominal_clipped_tail(0, t);
        const double p1 = lfd.nominal_clipped_tail(1, t);
        const double q0 = lfd.event_prob(0, LrEvent::kGreater, t);
        const double q1 = lfd.event_prob(1, LrEvent::kGreater, t);
        const double v = std::max({p0 - q0, q0 - q1, q1 - p1});
        if (v > report.max_violation) {
            report.max_violation = v;
            report.worst_t = t;
        }
    }
    return report;
}

std::vector<ContaminationPair> default_contamination_menu(const NominalPair& model, int budget) {
    std::vector<ContaminationSpec> singles;
    singles.push_back(ContaminationSpec::none());
    singles.push_back(ContaminationSpec::swap_nominal());
    if (model.kind() == ModelKind::kDiscretePmf) {
        for (double y : model.support()) singles.push_back(ContaminationSpec::point_mass(y));
        const auto& sup = model.support();
        for (std::size_t i = 0; i + 1 < sup.size(); ++i)
            for (double w : {0.25, 0.5, 0.75})
                singles.push_back(ContaminationSpec::two_point(sup[i], sup[i + 1], w));
    } else {
        const bool expo = model.kind() == ModelKind::kExponentialMeans;
        const double lo = expo ? 0.0 : std::min(model.mu0(), model.mu1()) - 4.0;
        const double hi = expo ? 4.0 * std::max(model.m0(), model.m1())
                               : std::max(model.mu0(), model.mu1()) + 4.0;
        for (int i = 0; i <= 24; ++i)
            singles.push_back(ContaminationSpec::point_mass(lo + (hi - lo) * i / 24.0));
        for (double s : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0})
            singles.push_back(ContaminationSpec::shifted_nominal(s));
        singles.push_back(ContaminationSpec::two_point(lo, hi, 0.5));
        singles.push_back(ContaminationSpec::two_point(lo, hi, 0.1));
        singles.push_back(ContaminationSpec::two_point(lo, hi, 0.9));
    }

    // Pair the menus: each single applied to H0 only, H1 only, or both.
    std::vector<ContaminationPair> pairs;
    for (const auto& s : singles) {
        pairs.push_back({s, ContaminationSpec::none()});
        pairs.push_back({ContaminationSpec::none(), s});
        pairs.push_back({s, s});
        if (static_cast<int>(pairs.size()) >= budget) break;
    }
    while (static_cast<int>(pairs.size()) < budget) {
        // round-robin cross pairs to fill the requested budget
        const std::size_t i = pairs.size() % singles.size();
        const std::size_t j = (pairs.size() / singles.size() + 1) % singles.size();
        pairs.push_back({singles[i], singles[j]});
    }
    pairs.resize(budget);
    return pairs;
}

}  // namespace rtandem
