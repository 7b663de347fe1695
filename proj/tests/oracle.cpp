#include "oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace rtandem::oracle {

DiscreteLfd discrete_lfd_densities(const NominalPair& model, double eps0, double eps1,
                                   double c_lo, double c_hi) {
    if (model.kind() != ModelKind::kDiscretePmf)
        throw std::invalid_argument("oracle needs a discrete model");
    const auto& p0 = model.pmf(0);
    const auto& p1 = model.pmf(1);
    DiscreteLfd out;
    for (std::size_t j = 0; j < p0.size(); ++j) {
        const double lr = p1[j] / p0[j];
        out.q0.push_back(lr < c_hi ? (1.0 - eps0) * p0[j] : (1.0 - eps0) * p1[j] / c_hi);
        out.q1.push_back(lr > c_lo ? (1.0 - eps1) * p1[j] : c_lo * (1.0 - eps1) * p0[j]);
        out.lstar.push_back(out.q1.back() / out.q0.back());
    }
    return out;
}

namespace {

double relay_out1(const RelayRule& rule, double v, double pu) {
    if (v < rule.t1) return 0.0;
    if (v == rule.t1) return (1.0 - rule.p) * pu;
    if (v < rule.t0) return pu;
    if (v == rule.t0) return rule.q * pu + (1.0 - rule.q);
    return 1.0;
}

}  // namespace

std::vector<StageError> enumerate_chain(const FirstAgentRule& first,
                                        std::span<const RelayRule> relays, const DiscreteLfd& lfd,
                                        const Priors& priors) {
    const std::size_t m = lfd.lstar.size();
    const int n = static_cast<int>(relays.size()) + 1;
    std::vector<StageError> stages;
    for (int k = 1; k <= n; ++k) {
        // walk every observation tuple (y_1, ..., y_k) by odometer
        std::vector<std::size_t> idx(k, 0);
        double p_f = 0.0, p_m = 0.0;
        for (;;) {
            double w0 = 1.0, w1 = 1.0, pu = 0.0;
            for (int j = 0; j < k; ++j) {
                const std::size_t y = idx[j];
                w0 *= lfd.q0[y];
                w1 *= lfd.q1[y];
                pu = (j == 0) ? (lfd.lstar[y] >= first.threshold ? 1.0 : 0.0)
                              : relay_out1(relays[j - 1], lfd.lstar[y], pu);
            }
            p_f += w0 * pu;
            p_m += w1 * (1.0 - pu);
            int j = k - 1;
            while (j >= 0 && ++idx[j] == m) idx[j--] = 0;
            if (j < 0) break;
        }
        stages.push_back(make_stage(k, p_f, p_m, priors));
    }
    return stages;
}

namespace {

// Two-atom clipped ratio: deterministic monotone relay kernels are the tables
// (f(lo,0), f(lo,1), f(hi,0), f(hi,1)) non-decreasing in both arguments.
constexpr std::array<std::array<int, 4>, 6> kMonotoneTables = {{
    {0, 0, 0, 0},  // always 0
    {0, 0, 0, 1},  // 1 only on (hi, 1)
    {0, 0, 1, 1},  // fresh test on the atom
    {0, 1, 0, 1},  // pass-through
    {0, 1, 1, 1},  // 1 on hi or on u_prev = 1
    {1, 1, 1, 1},  // always 1
}};

struct TwoAtomMasses {
    double lo0, hi0, lo1, hi1;  // atom masses under q0 / q1
};

TwoAtomMasses collapse_two_atoms(const DiscreteLfd& lfd) {
    const double lo = *std::min_element(lfd.lstar.begin(), lfd.lstar.end());
    const double hi = *std::max_element(lfd.lstar.begin(), lfd.lstar.end());
    TwoAtomMasses m{0, 0, 0, 0};
    for (std::size_t j = 0; j < lfd.lstar.size(); ++j) {
        const bool is_lo = lfd.lstar[j] == lo;
        const bool is_hi = lfd.lstar[j] == hi;
        if (!is_lo && !is_hi) throw std::invalid_argument("clipped ratio has more than two atoms");
        (is_lo ? m.lo0 : m.hi0) += lfd.q0[j];
        (is_lo ? m.lo1 : m.hi1) += lfd.q1[j];
    }
    return m;
}

}  // namespace

double exhaustive_finite_dd(const DiscreteLfd& lfd, const Priors& priors, int n) {
    const TwoAtomMasses m = collapse_two_atoms(lfd);
    // first agent: decide 1 nowhere, only on the top atom, or everywhere
    const std::array<std::pair<double, double>, 3> firsts = {{
        {0.0, 0.0}, {m.hi0, m.hi1}, {1.0, 1.0}  // P_i(U1 = 1)
    }};
    double best = 1.0;
    std::vector<int> pick(std::max(0, n - 1), 0);
    for (const auto& [pf1, pd1] : firsts) {
        for (;;) {
            double p_f = pf1, p_detect = pd1;
            for (int j = 0; j < n - 1; ++j) {
                const auto& t = kMonotoneTables[pick[j]];
                const auto step = [&](double prev1, double mlo, double mhi) {
                    const double out1_u0 = mlo * t[0] + mhi * t[2];
                    const double out1_u1 = mlo * t[1] + mhi * t[3];
                    return prev1 * out1_u1 + (1.0 - prev1) * out1_u0;
                };
                p_f = step(p_f, m.lo0, m.hi0);
                p_detect = step(p_detect, m.lo1, m.hi1);
            }
            best = std::min(best, priors.pi0 * p_f + priors.pi1 * (1.0 - p_detect));
            int j = n - 2;
            while (j >= 0 && ++pick[j] == static_cast<int>(kMonotoneTables.size())) pick[j--] = 0;
            if (j < 0) break;
        }
    }
    return best;
}

double exhaustive_asymptotic_dd(const DiscreteLfd& lfd, const Priors& priors) {
    const TwoAtomMasses masses = collapse_two_atoms(lfd);
    double best = 1.0;
    for (const auto& t : kMonotoneTables) {
        const double a = masses.lo0 * t[0] + masses.hi0 * t[2];        // Q0(out 1 | u=0)
        const double d = 1.0 - (masses.lo0 * t[1] + masses.hi0 * t[3]);
        const double f = masses.lo1 * t[0] + masses.hi1 * t[2];
        const double mm = 1.0 - (masses.lo1 * t[1] + masses.hi1 * t[3]);
        if (a + d <= 0.0 || mm + f <= 0.0) continue;
        best = std::min(best, priors.pi0 * a / (a + d) + priors.pi1 * mm / (mm + f));
    }
    return best;
}

}  // namespace rtandem::oracle
