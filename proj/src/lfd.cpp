#include "rtandem/lfd.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "rtandem/errors.hpp"

namespace rtandem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kResidualTol = 1e-10;

// Bisection for a strictly monotone residual. The bracket is grown from c = 1
// in both directions until the residual changes sign, then halved down to
// machine precision so breakpoints are accurate well past the residual tol.
double bisect_monotone(const std::function<double(double)>& residual, bool increasing) {
    double lo = 1.0, hi = 1.0;
    // want residual(lo) < 0 < residual(hi) for increasing, mirrored otherwise
    const double want_lo = increasing ? -1.0 : 1.0;
    for (int i = 0; i < 2100 && residual(lo) * want_lo <= 0.0; ++i) {
        lo *= 0.5;
        if (lo < 1e-300) throw NotDisjointError("no breakpoint bracket below c = 1");
    }
    for (int i = 0; i < 2100 && residual(hi) * want_lo >= 0.0; ++i) {
        hi *= 2.0;
        if (hi > 1e300) throw NotDisjointError("no breakpoint bracket above c = 1");
    }
    for (int i = 0; i < 300 && (hi - lo) > 1e-16 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double r = residual(mid);
        if (r == 0.0) return mid;
        if ((r < 0.0) == increasing)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

LfdPair LfdPair::solve(UncertaintySpec spec) {
    if (!(spec.eps0 >= 0.0 && spec.eps0 < 1.0) || !(spec.eps1 >= 0.0 && spec.eps1 < 1.0))
        throw std::invalid_argument("contamination values must lie in [0, 1)");

    LfdPair lfd(std::move(spec));
    const NominalPair& model = lfd.spec_.model;
    const double eps0 = lfd.spec_.eps0;
    const double eps1 = lfd.spec_.eps1;
    lfd.b_ = (1.0 - eps1) / (1.0 - eps0);

    // c_hi normalizes q0: P0(L < c) + P1(L >= c)/c = 1/(1-eps0). The left side
    // is continuous and strictly decreasing through the crossing (the atom
    // jumps cancel because P1(L = v) = v * P0(L = v)).
    if (eps0 == 0.0) {
        lfd.c_hi_ = kInf;
    } else {
        const double target = 1.0 / (1.0 - eps0);
        lfd.c_hi_ = bisect_monotone(
            [&](double c) {
                const LrTail t0 = model.lr_tail(0, c);
                const LrTail t1 = model.lr_tail(1, c);
                return (1.0 - t0.tail - t0.atom) + (t1.tail + t1.atom) / c - target;
            },
            /*increasing=*/false);
    }

    // c_lo normalizes q1: P1(L > c) + c * P0(L <= c) = 1/(1-eps1), increasing in c.
    if (eps1 == 0.0) {
        lfd.c_lo_ = 0.0;
    } else {
        const double target = 1.0 / (1.0 - eps1);
        lfd.c_lo_ = bisect_monotone(
            [&](double c) {
                return model.lr_tail(1, c).tail + c * (1.0 - model.lr_tail(0, c).tail) - target;
            },
            /*increasing=*/true);
    }

    // A valid clipping needs c_lo < c_hi strictly inside the essential range of
    // L; otherwise the contamination classes overlap and the pair degenerates.
    if (!(lfd.c_lo_ < lfd.c_hi_) || lfd.c_lo_ >= model.lr_ess_sup() ||
        lfd.c_hi_ <= model.lr_ess_inf())
        throw NotDisjointError("contamination classes are not disjoint (eps0=" +
                               std::to_string(eps0) + ", eps1=" + std::to_string(eps1) + ")");

    lfd.l_lo_ = lfd.b_ * lfd.c_lo_;
    lfd.l_hi_ = lfd.b_ * lfd.c_hi_;
    if (lfd.normalization_residual(0) > kResidualTol || lfd.normalization_residual(1) > kResidualTol)
        throw std::runtime_error("breakpoint solve did not reach the normalization tolerance");
    return lfd;
}

double LfdPair::clipped_lr(double y) const {
    const double lr = spec_.model.lr_value(y);
    if (lr <= c_lo_) return l_lo_;
    if (lr >= c_hi_) return l_hi_;
    return b_ * lr;
}

double LfdPair::prob_gt(int hyp, double t) const {
    const NominalPair& model = spec_.model;
    if (t < l_lo_) return 1.0;
    if (std::isfinite(l_hi_) && t >= l_hi_) return 0.0;
    double s = (t == l_lo_) ? c_lo_ : t / b_;
    if (s < c_lo_) s = c_lo_;
    if (hyp == 1) return (1.0 - spec_.eps1) * model.lr_tail(1, s).tail;
    double above = 0.0, top = 0.0;
    if (std::isfinite(c_hi_)) {
        const LrTail t0 = model.lr_tail(0, c_hi_);
        const LrTail t1 = model.lr_tail(1, c_hi_);
        above = t0.tail + t0.atom;              // P0(L >= c_hi)
        top = (t1.tail + t1.atom) / c_hi_;      // P1(L >= c_hi)/c_hi
    }
    return (1.0 - spec_.eps0) * (model.lr_tail(0, s).tail - above + top);
}

double LfdPair::prob_eq(int hyp, double t) const {
    const NominalPair& model = spec_.model;
    if (c_lo_ > 0.0 && t == l_lo_) {
        const double mass = 1.0 - model.lr_tail(0, c_lo_).tail;  // P0(L <= c_lo)
        return hyp == 0 ? (1.0 - spec_.eps0) * mass : (1.0 - spec_.eps1) * c_lo_ * mass;
    }
    if (std::isfinite(l_hi_) && t == l_hi_) {
        const LrTail t1 = model.lr_tail(1, c_hi_);
        const double mass = t1.tail + t1.atom;  // P1(L >= c_hi)
        return hyp == 0 ? (1.0 - spec_.eps0) * mass / c_hi_ : (1.0 - spec_.eps1) * mass;
    }
    if (t <= l_lo_ || (std::isfinite(l_hi_) && t >= l_hi_)) return 0.0;
    const double s = t / b_;
    if (s <= c_lo_ || s >= c_hi_) return 0.0;
    const double eps = hyp == 0 ? spec_.eps0 : spec_.eps1;
    return (1.0 - eps) * model.lr_tail(hyp, s).atom;
}

double LfdPair::event_prob(int hyp, LrEvent ev, double t) const {
    if (hyp != 0 && hyp != 1) throw std::invalid_argument("hypothesis index must be 0 or 1");
    if (!(t >= 0.0)) throw std::invalid_argument("event_prob requires t >= 0");
    const auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    const bool at_top = std::isfinite(l_hi_) && t >= l_hi_;
    switch (ev) {
        case LrEvent::kGreater: return clamp01(prob_gt(hyp, t));
        case LrEvent::kGreaterEqual:
            if (t <= l_lo_) return 1.0;
            return clamp01(prob_gt(hyp, t) + prob_eq(hyp, t));
        case LrEvent::kEqual: return clamp01(prob_eq(hyp, t));
        case LrEvent::kLess:
            if (t <= l_lo_) return 0.0;
            return clamp01(1.0 - prob_gt(hyp, t) - prob_eq(hyp, t));
        case LrEvent::kLessEqual:
            if (t < l_lo_) return 0.0;
            if (at_top && t > l_hi_) return 1.0;
            return clamp01(1.0 - prob_gt(hyp, t));
    }
    throw std::logic_error("unreachable");
}

double LfdPair::nominal_clipped_tail(int hyp, double t) const {
    if (t < l_lo_) return 1.0;
    if (std::isfinite(l_hi_) && t >= l_hi_) return 0.0;
    double s = (t == l_lo_) ? c_lo_ : t / b_;
    if (s < c_lo_) s = c_lo_;
    return spec_.model.lr_tail(hyp, s).tail;
}

double LfdPair::sample_clipped(int hyp, RngStream& rng) const {
    const double a_lo = prob_eq(hyp, l_lo_);
    const double a_hi = std::isfinite(l_hi_) ? prob_eq(hyp, l_hi_) : 0.0;
    const double u = rng.next_double();
    if (u < a_lo) return l_lo_;
    if (u >= 1.0 - a_hi) return l_hi_;
    // Middle part: under Q_i the density on {c_lo < L < c_hi} is proportional
    // to the nominal p_i, so sample the nominal conditioned on that region.
    for (int i = 0; i < 1000000; ++i) {
        const double lr = spec_.model.lr_value(spec_.model.sample(hyp, rng));
        if (lr > c_lo_ && lr < c_hi_) return b_ * lr;
    }
    throw std::runtime_error("sample_clipped: interior region has vanishing mass");
}

double LfdPair::normalization_residual(int hyp) const {
    const NominalPair& model = spec_.model;
    if (hyp == 0) {
        if (!std::isfinite(c_hi_)) return 0.0;
        const LrTail t0 = model.lr_tail(0, c_hi_);
        const LrTail t1 = model.lr_tail(1, c_hi_);
        const double g = (1.0 - t0.tail - t0.atom) + (t1.tail + t1.atom) / c_hi_;
        return std::abs((1.0 - spec_.eps0) * g - 1.0);
    }
    if (c_lo_ == 0.0) return 0.0;
    const double g = model.lr_tail(1, c_lo_).tail + c_lo_ * (1.0 - model.lr_tail(0, c_lo_).tail);
    return std::abs((1.0 - spec_.eps1) * g - 1.0);
}

}  // namespace rtandem
