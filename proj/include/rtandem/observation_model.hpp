#pragma once

#include <vector>

#include "rtandem/rng.hpp"

namespace rtandem {

enum class ModelKind { kExponentialMeans, kGaussianShift, kDiscretePmf };

// P_i(L > t) and P_i(L = t) for the likelihood ratio L = p1/p0 of a nominal pair.
struct LrTail {
    double tail = 0.0;
    double atom = 0.0;
};

// A pair of nominal observation distributions (P0*, P1*) with closed-form
// likelihood-ratio tails. Three families are supported:
//   - exponential with distinct means (monotone LR, one-sided unbounded LLR),
//   - Gaussians with a common sigma and distinct means (LLR unbounded both ways),
//   - finite pmfs strictly positive on a shared support (bounded LLR).
// Instances are immutable and safe to share across threads.
class NominalPair {
  public:
    static NominalPair exponential_means(double m0, double m1);
    static NominalPair gaussian_shift(double mu0, double mu1, double sigma);
    static NominalPair discrete_pmf(std::vector<double> support, std::vector<double> pmf0,
                                    std::vector<double> pmf1);

    ModelKind kind() const { return kind_; }
    bool llr_unbounded_above() const { return llr_unbounded_above_; }
    bool llr_unbounded_below() const { return llr_unbounded_below_; }

    // L(y) = p1(y)/p0(y). Throws std::domain_error for y outside the support.
    double lr_value(double y) const;

    // Exact tail P_i(L > t) and atom P_i(L = t) under nominal i, for t >= 0.
    LrTail lr_tail(int hyp, double t) const;

    // One draw from P_i*, deterministic given the stream state.
    double sample(int hyp, RngStream& rng) const;

    // Essential range of L; the breakpoint solver brackets its roots with these.
    double lr_ess_inf() const { return lr_ess_inf_; }
    double lr_ess_sup() const { return lr_ess_sup_; }

    struct LrAtom {
        double value;  // distinct value of L
        double mass0;  // P0(L = value)
        double mass1;  // P1(L = value)
    };
    // Sorted distinct LR atoms; empty for the continuous families.
    const std::vector<LrAtom>& lr_atoms() const { return lr_atoms_; }

    // Family parameters (valid for the matching kind only).
    double m0() const { return m0_; }
    double m1() const { return m1_; }
    double mu0() const { return mu0_; }
    double mu1() const { return mu1_; }
    double sigma() const { return sigma_; }
    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& pmf(int hyp) const { return hyp == 0 ? pmf0_ : pmf1_; }

  private:
    NominalPair() = default;

    ModelKind kind_ = ModelKind::kExponentialMeans;
    bool llr_unbounded_above_ = false;
    bool llr_unbounded_below_ = false;
    double lr_ess_inf_ = 0.0;
    double lr_ess_sup_ = 0.0;

    // exponential_means
    double m0_ = 0.0, m1_ = 0.0;
    // gaussian_shift; llr_slope_/llr_offset_ give log L(y) = slope*y + offset
    double mu0_ = 0.0, mu1_ = 0.0, sigma_ = 0.0;
    double llr_slope_ = 0.0, llr_offset_ = 0.0;
    // discrete_pmf
    std::vector<double> support_, pmf0_, pmf1_, lr_values_;
    std::vector<double> cdf0_, cdf1_;
    std::vector<LrAtom> lr_atoms_;
};

// Standard normal CDF and complement, accurate in both tails.
double normal_cdf(double z);
double normal_cdf_complement(double z);

}  // namespace rtandem
