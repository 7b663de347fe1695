#pragma once

#include <utility>

#include "rtandem/observation_model.hpp"
#include "rtandem/rng.hpp"

namespace rtandem {

// An epsilon-contamination class pair around a shared nominal pair.
struct UncertaintySpec {
    NominalPair model;
    double eps0 = 0.0;
    double eps1 = 0.0;
};

enum class LrEvent { kGreater, kGreaterEqual, kEqual, kLess, kLessEqual };

// The least favorable pair (Q0, Q1) for an epsilon-contamination spec: the
// clipping breakpoints c_lo < c_hi, the scale b = (1-eps1)/(1-eps0), and exact
// evaluators for events of the clipped ratio l*(Y) = b * clamp(L(Y), c_lo, c_hi).
// c_lo = 0 iff eps1 = 0 and c_hi = +inf iff eps0 = 0; both are represented
// exactly and propagate through the event formulas without overflow.
// Immutable after solve(); all evaluators are pure.
class LfdPair {
  public:
    // Finds the breakpoints by bisection on the two normalization residuals.
    // Throws NotDisjointError when no valid clipping exists.
    static LfdPair solve(UncertaintySpec spec);

    const UncertaintySpec& spec() const { return spec_; }
    const NominalPair& model() const { return spec_.model; }
    double c_lo() const { return c_lo_; }
    double c_hi() const { return c_hi_; }
    double b() const { return b_; }

    // Range of the clipped ratio: [b*c_lo, b*c_hi]. These are the only atoms
    // of l* for continuous nominals.
    double l_lo() const { return l_lo_; }
    double l_hi() const { return l_hi_; }

    // l*(y) = b * clamp(L(y), c_lo, c_hi); clamped values are bit-exact l_lo()/l_hi().
    double clipped_lr(double y) const;

    // Exact Q_i(l* <ev> t) for t >= 0, assembled from the nominal LR tails.
    double event_prob(int hyp, LrEvent ev, double t) const;

    // Tail of l* when Y is drawn from the nominal P_i* instead: P_i*(l* > t).
    double nominal_clipped_tail(int hyp, double t) const;

    // Draws the value of l*(Y) with Y ~ Q_i (atoms plus conditioned middle part).
    double sample_clipped(int hyp, RngStream& rng) const;

    // |integral of q_i - 1| recomputed from the closed-form tail identities.
    double normalization_residual(int hyp) const;

  private:
    explicit LfdPair(UncertaintySpec spec) : spec_(std::move(spec)) {}

    double prob_gt(int hyp, double t) const;
    double prob_eq(int hyp, double t) const;

    UncertaintySpec spec_;
    double c_lo_ = 0.0;
    double c_hi_ = 0.0;
    double b_ = 1.0;
    double l_lo_ = 0.0;
    double l_hi_ = 0.0;
};

}  // namespace rtandem
