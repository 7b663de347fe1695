#include "rtandem/observation_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace rtandem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPmfSumTol = 1e-12;

void check_hyp(int hyp) {
    if (hyp != 0 && hyp != 1) throw std::invalid_argument("hypothesis index must be 0 or 1");
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_cdf_complement(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

NominalPair NominalPair::exponential_means(double m0, double m1) {
    if (!(m0 > 0.0) || !(m1 > 0.0)) throw std::invalid_argument("exponential means must be positive");
    if (m0 == m1) throw std::invalid_argument("exponential means must differ");
    NominalPair m;
    m.kind_ = ModelKind::kExponentialMeans;
    m.m0_ = m0;
    m.m1_ = m1;
    if (m1 > m0) {
        // L increasing in y, range [m0/m1, inf)
        m.lr_ess_inf_ = m0 / m1;
        m.lr_ess_sup_ = kInf;
        m.llr_unbounded_above_ = true;
        m.llr_unbounded_below_ = false;
    } else {
        // L decreasing in y, range (0, m0/m1]
        m.lr_ess_inf_ = 0.0;
        m.lr_ess_sup_ = m0 / m1;
        m.llr_unbounded_above_ = false;
        m.llr_unbounded_below_ = true;
    }
    return m;
}

NominalPair NominalPair::gaussian_shift(double mu0, double mu1, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (mu0 == mu1) throw std::invalid_argument("gaussian means must differ");
    NominalPair m;
    m.kind_ = ModelKind::kGaussianShift;
    m.mu0_ = mu0;
    m.mu1_ = mu1;
    m.sigma_ = sigma;
    m.llr_slope_ = (mu1 - mu0) / (sigma * sigma);
    m.llr_offset_ = -m.llr_slope_ * (mu0 + mu1) / 2.0;
    m.lr_ess_inf_ = 0.0;
    m.lr_ess_sup_ = kInf;
    m.llr_unbounded_above_ = true;
    m.llr_unbounded_below_ = true;
    return m;
}

NominalPair NominalPair::discrete_pmf(std::vector<double> support, std::vector<double> pmf0,
                                      std::vector<double> pmf1) {
    const std::size_t n = support.size();
    if (n < 2) throw std::invalid_argument("discrete support needs at least two points");
    if (pmf0.size() != n || pmf1.size() != n)
        throw std::invalid_argument("pmf vectors must match the support size");
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(pmf0[j] > 0.0) || !(pmf1[j] > 0.0))
            throw std::invalid_argument("pmf entries must be strictly positive on the shared support");
        s0 += pmf0[j];
        s1 += pmf1[j];
    }
    if (std::abs(s0 - 1.0) > kPmfSumTol || std::abs(s1 - 1.0) > kPmfSumTol)
        throw std::invalid_argument("pmf vectors must sum to 1 within 1e-12");
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j + 1; i < n; ++i)
            if (support[j] == support[i]) throw std::invalid_argument("support labels must be distinct");

    NominalPair m;
    m.kind_ = ModelKind::kDiscretePmf;
    m.support_ = std::move(support);
    m.pmf0_ = std::move(pmf0);
    m.pmf1_ = std::move(pmf1);
    m.lr_values_.resize(n);
    m.cdf0_.resize(n);
    m.cdf1_.resize(n);
    double c0 = 0.0, c1 = 0.0;
    std::map<double, LrAtom> atoms;
    for (std::size_t j = 0; j < n; ++j) {
        m.lr_values_[j] = m.pmf1_[j] / m.pmf0_[j];
        c0 += m.pmf0_[j];
        c1 += m.pmf1_[j];
        m.cdf0_[j] = c0;
        m.cdf1_[j] = c1;
        auto& a = atoms[m.lr_values_[j]];
        a.value = m.lr_values_[j];
        a.mass0 += m.pmf0_[j];
        a.mass1 += m.pmf1_[j];
    }
    m.lr_atoms_.reserve(atoms.size());
    for (auto& [v, a] : atoms) m.lr_atoms_.push_back(a);
    m.lr_ess_inf_ = m.lr_atoms_.front().value;
    m.lr_ess_sup_ = m.lr_atoms_.back().value;
    m.llr_unbounded_above_ = false;
    m.llr_unbounded_below_ = false;
    return m;
}

double NominalPair::lr_value(double y) const {
    switch (kind_) {
        case ModelKind::kExponentialMeans:
            if (!(y >= 0.0)) throw std::domain_error("exponential observation must be >= 0");
            return (m0_ / m1_) * std::exp(y * (1.0 / m0_ - 1.0 / m1_));
        case ModelKind::kGaussianShift:
            if (!std::isfinite(y)) throw std::domain_error("gaussian observation must be finite");
            return std::exp(llr_slope_ * y + llr_offset_);
        case ModelKind::kDiscretePmf:
            for (std::size_t j = 0; j < support_.size(); ++j)
                if (support_[j] == y) return lr_values_[j];
            throw std::domain_error("observation " + std::to_string(y) + " not in discrete support");
    }
    throw std::logic_error("unreachable");
}

LrTail NominalPair::lr_tail(int hyp, double t) const {
    check_hyp(hyp);
    if (!(t >= 0.0)) throw std::invalid_argument("lr_tail requires t >= 0");
    switch (kind_) {
        case ModelKind::kExponentialMeans: {
            const double r = m0_ / m1_;
            if (m1_ > m0_) {
                // increasing LR: P_i(L > t) = (t/r)^(-e_i) for t >= r
                if (t <= r) return {1.0, 0.0};
                const double e = (hyp == 0) ? m1_ / (m1_ - m0_) : m0_ / (m1_ - m0_);
                return {std::pow(t / r, -e), 0.0};
            }
            // decreasing LR: P_i(L > t) = 1 - (t/r)^(h_i) for 0 < t < r
            if (t >= r) return {0.0, 0.0};
            if (t == 0.0) return {1.0, 0.0};
            const double h = (hyp == 0) ? m1_ / (m0_ - m1_) : m0_ / (m0_ - m1_);
            return {1.0 - std::pow(t / r, h), 0.0};
        }
        case ModelKind::kGaussianShift: {
            if (t == 0.0) return {1.0, 0.0};
            const double y_star = (std::log(t) - llr_offset_) / llr_slope_;
            const double mu = (hyp == 0) ? mu0_ : mu1_;
            const double z = (y_star - mu) / sigma_;
            // slope > 0: {L > t} = {Y > y*}; slope < 0: {L > t} = {Y < y*}
            return {llr_slope_ > 0.0 ? normal_cdf_complement(z) : normal_cdf(z), 0.0};
        }
        case ModelKind::kDiscretePmf: {
            LrTail out;
            for (const auto& a : lr_atoms_) {
                const double mass = (hyp == 0) ? a.mass0 : a.mass1;
                if (a.value > t)
                    out.tail += mass;
                else if (a.value == t)
                    out.atom += mass;
            }
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

double NominalPair::sample(int hyp, RngStream& rng) const {
    check_hyp(hyp);
    switch (kind_) {
        case ModelKind::kExponentialMeans:
            return rng.next_exponential(hyp == 0 ? m0_ : m1_);
        case ModelKind::kGaussianShift:
            return rng.next_normal(hyp == 0 ? mu0_ : mu1_, sigma_);
        case ModelKind::kDiscretePmf: {
            const double u = rng.next_double();
            const auto& cdf = (hyp == 0) ? cdf0_ : cdf1_;
            for (std::size_t j = 0; j < cdf.size(); ++j)
                if (u < cdf[j]) return support_[j];
            return support_.back();
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace rtandem
