#include "rtandem/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "rtandem/errors.hpp"
#include "rtandem/rng.hpp"

namespace rtandem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kObjectiveTol = 1e-9;
constexpr double kParamTol = 1e-8;
constexpr double kSweepTol = 1e-10;
constexpr int kGridSize = 64;
constexpr double kPqGrid[] = {0.0, 0.25, 0.5, 0.75, 1.0};

bool is_atom(double t, const std::vector<double>& atoms) {
    for (double a : atoms)
        if (t == a) return true;
    return false;
}

// Tracks the running best with an evaluation counter for the report trace.
struct BestTracker {
    double value = kInf;
    long evals = 0;
    std::vector<std::pair<long, double>> trace;

    bool offer(double v) {
        ++evals;
        if (v < value) {
            value = v;
            trace.emplace_back(evals, v);
            return true;
        }
        return false;
    }
};

double golden_section(const std::function<double(double)>& f, double lo, double hi) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 80 && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

// Candidate points exercising every kernel piece of a step-shaped objective:
// the atoms themselves plus one interior point of every gap.
std::vector<double> piecewise_candidates(double lo, double hi, const std::vector<double>& atoms) {
    std::vector<double> pts;
    pts.push_back(lo);
    pts.push_back(hi);
    std::vector<double> in_range;
    for (double a : atoms)
        if (a >= lo && a <= hi) in_range.push_back(a);
    for (std::size_t i = 0; i < in_range.size(); ++i) {
        pts.push_back(in_range[i]);
        const double prev = i == 0 ? lo : in_range[i - 1];
        if (in_range[i] > prev) pts.push_back(0.5 * (prev + in_range[i]));
    }
    if (!in_range.empty() && hi > in_range.back()) pts.push_back(0.5 * (in_range.back() + hi));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

struct NelderMeadResult {
    double x = 0.0, y = 0.0, value = kInf;
};

// Derivative-free refinement in the (t1, t0) plane; infeasible points return +inf.
NelderMeadResult nelder_mead_2d(const std::function<double(double, double)>& f, double x0,
                                double y0, double scale) {
    struct Vertex {
        double x, y, v;
    };
    std::array<Vertex, 3> s = {Vertex{x0, y0, f(x0, y0)},
                               Vertex{x0 + scale, y0, f(x0 + scale, y0)},
                               Vertex{x0, y0 + scale, f(x0, y0 + scale)}};
    for (int it = 0; it < 500; ++it) {
        std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
        const double value_spread = std::abs(s[2].v - s[0].v);
        const double param_spread =
            std::max(std::abs(s[2].x - s[0].x) + std::abs(s[1].x - s[0].x),
                     std::abs(s[2].y - s[0].y) + std::abs(s[1].y - s[0].y));
        if (value_spread < kObjectiveTol && param_spread < kParamTol) break;
        const double cx = 0.5 * (s[0].x + s[1].x), cy = 0.5 * (s[0].y + s[1].y);
        const auto try_point = [&](double alpha) {
            return Vertex{cx + alpha * (cx - s[2].x), cy + alpha * (cy - s[2].y), 0.0};
        };
        Vertex r = try_point(1.0);
        r.v = f(r.x, r.y);
        if (r.v < s[0].v) {
            Vertex e = try_point(2.0);
            e.v = f(e.x, e.y);
            s[2] = e.v < r.v ? e : r;
        } else if (r.v < s[1].v) {
            s[2] = r;
        } else {
            Vertex c = try_point(-0.5);
            c.v = f(c.x, c.y);
            if (c.v < s[2].v) {
                s[2] = c;
            } else {
                for (int j = 1; j < 3; ++j) {
                    s[j].x = s[0].x + 0.5 * (s[j].x - s[0].x);
                    s[j].y = s[0].y + 0.5 * (s[j].y - s[0].y);
                    s[j].v = f(s[j].x, s[j].y);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
    return {s[0].x, s[0].y, s[0].v};
}

// Shared grid + refinement driver for the rule objectives.
OptimizationReport optimize_rule(const LfdPair& lfd,
                                 const std::function<double(const RelayRule&)>& objective,
                                 Objective tag) {
    const auto [lo, hi] = threshold_box(lfd);
    const std::vector<double> atoms = lstar_atoms(lfd);

    // log-spaced grid: thresholds act on a likelihood ratio
    std::vector<double> axis;
    const double log_lo = std::log(lo), log_hi = std::log(hi);
    for (int i = 0; i < kGridSize; ++i)
        axis.push_back(std::exp(log_lo + (log_hi - log_lo) * i / double(kGridSize - 1)));
    axis.front() = lo;
    axis.back() = hi;
    axis.insert(axis.end(), atoms.begin(), atoms.end());
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    axis.erase(std::remove_if(axis.begin(), axis.end(),
                              [&](double t) { return t < lo || t > hi || !(t > 0.0); }),
               axis.end());

    BestTracker best;
    double bt1 = axis.front(), bt0 = axis.back(), bp = 0.0, bq = 0.0;
    const auto consider = [&](double t1, double t0, double p, double q) {
        if (!(t1 > 0.0) || !(t1 <= t0)) return;
        const double v = objective(RelayRule(t1, t0, p, q));
        if (best.offer(v)) {
            bt1 = t1;
            bt0 = t0;
            bp = p;
            bq = q;
        }
    };

    for (std::size_t i = 0; i < axis.size(); ++i) {
        for (std::size_t j = i; j < axis.size(); ++j) {
            const bool a1 = is_atom(axis[i], atoms), a0 = is_atom(axis[j], atoms);
            for (double p : a1 ? std::vector<double>(std::begin(kPqGrid), std::end(kPqGrid))
                                : std::vector<double>{0.0})
                for (double q : a0 ? std::vector<double>(std::begin(kPqGrid), std::end(kPqGrid))
                                    : std::vector<double>{0.0})
                    consider(axis[i], axis[j], p, q);
        }
    }

    // Refine thresholds (in log space) with the ties frozen at the best cell.
    const double p_fix = bp, q_fix = bq;
    const auto penalized = [&](double lx, double ly) {
        const double t1 = std::exp(lx), t0 = std::exp(ly);
        if (!(t1 > 0.0) || t1 > t0 || t1 < lo || t0 > hi) return kInf;
        return objective(RelayRule(t1, t0, p_fix, q_fix));
    };
    const NelderMeadResult nm_log = nelder_mead_2d(penalized, std::log(bt1), std::log(bt0),
                                                   0.02 * (log_hi - log_lo));
    const NelderMeadResult nm{std::exp(nm_log.x), std::exp(nm_log.y), nm_log.value};
    consider(nm.x, nm.y, p_fix, q_fix);

    // Snap refined thresholds onto nearby atoms and rescan ties there.
    const auto near_atom = [](double t, double a) {
        return std::abs(t - a) <= 1e-6 * std::max(1.0, std::abs(a));
    };
    for (double a1 : atoms) {
        if (!near_atom(nm.x, a1)) continue;
        for (double p : kPqGrid) consider(a1, std::max(nm.y, a1), p, q_fix);
    }
    for (double a0 : atoms) {
        if (!near_atom(nm.y, a0)) continue;
        for (double q : kPqGrid) consider(std::min(nm.x, a0), a0, p_fix, q);
        for (double a1 : atoms)
            if (near_atom(nm.x, a1) && a1 <= a0)
                for (double p : kPqGrid)
                    for (double q : kPqGrid) consider(a1, a0, p, q);
    }

    OptimizationReport report;
    report.objective = tag;
    report.best_rule = RelayRule(bt1, bt0, bp, bq);
    report.value = objective(*report.best_rule);
    report.trace = std::move(best.trace);
    report.restarts = 1;
    return report;
}

}  // namespace

std::pair<double, double> threshold_box(const LfdPair& lfd) {
    double lo = lfd.l_lo();
    double hi = lfd.l_hi();
    if (!(lo > 0.0)) {
        lo = 1.0;
        for (int i = 0; i < 2000 && lfd.event_prob(0, LrEvent::kLess, lo) > 1e-10; ++i) lo *= 0.5;
    }
    if (!std::isfinite(hi)) {
        hi = std::max(1.0, 2.0 * lo);
        for (int i = 0; i < 2000 && lfd.event_prob(1, LrEvent::kGreater, hi) > 1e-10; ++i) hi *= 2.0;
    }
    return {lo, hi};
}

std::vector<double> lstar_atoms(const LfdPair& lfd) {
    std::vector<double> atoms;
    if (lfd.c_lo() > 0.0) atoms.push_back(lfd.l_lo());
    for (const auto& a : lfd.model().lr_atoms())
        if (a.value > lfd.c_lo() && a.value < lfd.c_hi()) atoms.push_back(lfd.b() * a.value);
    if (std::isfinite(lfd.l_hi())) atoms.push_back(lfd.l_hi());
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
    return atoms;
}

OptimizationReport optimize_asymptotic_dd(const LfdPair& lfd, const Priors& priors) {
    const auto objective = [&](const RelayRule& rule) {
        try {
            return asymptotic_error(rule, lfd, priors).p_e;
        } catch (const NoContractionError&) {
            return kInf;  // constant chains carry no fixed point; skip
        }
    };
    return optimize_rule(lfd, objective, Objective::kAsymptoticDd);
}

OptimizationReport optimize_unknown_sl(const LfdPair& lfd, const Priors& priors) {
    const FirstAgentRule first = first_agent_rule(priors);
    const double pf1 = lfd.event_prob(0, LrEvent::kGreaterEqual, first.threshold);
    const double pm1 = lfd.event_prob(1, LrEvent::kLess, first.threshold);

    const auto objective = [&](const RelayRule& rule) {
        const double a = kernel_prob(rule, lfd, 0, 0, 1);
        const double d = kernel_prob(rule, lfd, 0, 1, 0);
        const double m = kernel_prob(rule, lfd, 1, 1, 0);
        const double f = kernel_prob(rule, lfd, 1, 0, 1);
        const double pf2 = pf1 * (1.0 - d - a) + a;
        const double pm2 = pm1 * ((1.0 - f) - m) + m;
        const double pe2 = priors.pi0 * pf2 + priors.pi1 * pm2;
        // Sides without contraction stay at the stage-1 constant.
        const double pf_inf = (a + d > 0.0) ? a / (a + d) : pf1;
        const double pm_inf = (m + f > 0.0) ? m / (m + f) : pm1;
        const double pe_inf = priors.pi0 * pf_inf + priors.pi1 * pm_inf;
        return std::max(pe2, pe_inf);
    };
    OptimizationReport report = optimize_rule(lfd, objective, Objective::kUnknownSl);

    // The maximum over positions must sit at position 2 or at the fixed point.
    const auto stages = propagate_shared(first, *report.best_rule, lfd, priors, 500);
    double sup = 0.0;
    for (const auto& s : stages)
        if (s.k >= 2) sup = std::max(sup, s.p_e);
    if (std::abs(sup - report.value) > 1e-9)
        throw std::logic_error("position supremum not attained at k=2 or the fixed point");
    return report;
}

OptimizationReport optimize_finite_dd(const ChainConfig& config) {
    const int n = config.n;
    if (n < 1) throw std::invalid_argument("chain length must be >= 1");
    const Priors& priors = config.priors;

    std::vector<LfdPair> lfds;
    for (int k = 1; k <= n; ++k) {
        const auto eps = config.eps.at(k);
        lfds.push_back(LfdPair::solve({config.model, eps.first, eps.second}));
    }

    OptimizationReport report;
    report.objective = Objective::kFiniteDd;

    if (n == 1) {
        const FirstAgentRule rule = first_agent_rule(priors);
        report.thresholds = {rule.threshold};
        report.value = priors.pi0 * lfds[0].event_prob(0, LrEvent::kGreaterEqual, rule.threshold) +
                       priors.pi1 * lfds[0].event_prob(1, LrEvent::kLess, rule.threshold);
        report.restarts = 0;
        return report;
    }

    struct Params {
        double tau;
        std::vector<double> t1, t0, p, q;
    };
    std::vector<std::pair<double, double>> boxes;
    std::vector<std::vector<double>> agent_atoms;
    for (const auto& lfd : lfds) {
        boxes.push_back(threshold_box(lfd));
        agent_atoms.push_back(lstar_atoms(lfd));
    }

    const auto evaluate = [&](const Params& s) {
        std::vector<RelayRule> relays;
        relays.reserve(n - 1);
        for (int j = 0; j < n - 1; ++j) relays.emplace_back(s.t1[j], s.t0[j], s.p[j], s.q[j]);
        return propagate(FirstAgentRule{s.tau}, relays, lfds, priors).back().p_e;
    };

    BestTracker best;
    Params best_params;

    const bool discrete = config.model.kind() == ModelKind::kDiscretePmf;
    if (discrete) {
        // The distinct relay kernels of a finite clipped ratio are the finitely
        // many threshold placements between atoms (ties scanned on the atoms),
        // so the chain is searched exhaustively over placements.
        struct Placement {
            double t1, t0, p, q;
        };
        std::vector<std::vector<Placement>> menus(n - 1);
        for (int j = 1; j < n; ++j) {
            const auto pos = piecewise_candidates(boxes[j].first, boxes[j].second, agent_atoms[j]);
            for (std::size_t i1 = 0; i1 < pos.size(); ++i1)
                for (std::size_t i0 = i1; i0 < pos.size(); ++i0)
                    for (double p : is_atom(pos[i1], agent_atoms[j]) ? std::vector<double>{0.0, 1.0}
                                                                     : std::vector<double>{0.0})
                        for (double q : is_atom(pos[i0], agent_atoms[j])
                                            ? std::vector<double>{0.0, 1.0}
                                            : std::vector<double>{0.0})
                            menus[j - 1].push_back({pos[i1], pos[i0], p, q});
        }
        std::vector<double> first_menu =
            piecewise_candidates(boxes[0].first, boxes[0].second, agent_atoms[0]);
        first_menu.push_back(2.0 * boxes[0].second);  // mute the first agent entirely

        double combos = first_menu.size();
        for (const auto& m : menus) combos *= static_cast<double>(m.size());
        if (combos <= 2e5) {
            std::vector<std::size_t> pick(n - 1, 0);
            for (double tau : first_menu) {
                for (;;) {
                    Params s;
                    s.tau = tau;
                    for (int j = 0; j < n - 1; ++j) {
                        const Placement& pl = menus[j][pick[j]];
                        s.t1.push_back(pl.t1);
                        s.t0.push_back(pl.t0);
                        s.p.push_back(pl.p);
                        s.q.push_back(pl.q);
                    }
                    if (best.offer(evaluate(s))) best_params = s;
                    int j = n - 2;
                    while (j >= 0 && ++pick[j] == menus[j].size()) pick[j--] = 0;
                    if (j < 0) break;
                }
            }
            report.thresholds.push_back(best_params.tau);
            for (int j = 0; j < n - 1; ++j) {
                report.thresholds.push_back(best_params.t1[j]);
                report.thresholds.push_back(best_params.t0[j]);
                report.finite_rules.emplace_back(best_params.t1[j], best_params.t0[j],
                                                 best_params.p[j], best_params.q[j]);
            }
            report.value = evaluate(best_params);
            report.trace = std::move(best.trace);
            report.restarts = static_cast<int>(combos);
            return report;
        }
    }

    const auto line_minimize = [&](const std::function<double(double)>& f, double lo, double hi,
                                   const std::vector<double>& atoms) {
        if (discrete) {
            double bx = lo, bv = f(lo);
            for (double x : piecewise_candidates(lo, hi, atoms)) {
                const double v = f(x);
                if (v < bv) {
                    bv = v;
                    bx = x;
                }
            }
            return bx;
        }
        return golden_section(f, lo, hi);
    };

    constexpr int kStarts = 9;  // one centered start plus eight random ones
    RngStream rng(0x7a6d3f21u);
    for (int start = 0; start < kStarts; ++start) {
        Params s;
        if (start == 0) {
            const double mid = std::clamp(priors.pi0 / priors.pi1, boxes[0].first, boxes[0].second);
            s.tau = mid;
            for (int j = 1; j < n; ++j) {
                const double m = std::clamp(priors.pi0 / priors.pi1, boxes[j].first, boxes[j].second);
                s.t1.push_back(m);
                s.t0.push_back(m);
                s.p.push_back(0.0);
                s.q.push_back(0.0);
            }
        } else {
            const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_double(); };
            s.tau = uniform(boxes[0].first, boxes[0].second);
            for (int j = 1; j < n; ++j) {
                double u = uniform(boxes[j].first, boxes[j].second);
                double v = uniform(boxes[j].first, boxes[j].second);
                if (u > v) std::swap(u, v);
                s.t1.push_back(u);
                s.t0.push_back(v);
                s.p.push_back(0.0);
                s.q.push_back(0.0);
            }
        }

        double current = evaluate(s);
        if (best.offer(current)) best_params = s;

        for (int round = 0; round < 6; ++round) {
            // cyclic coordinate sweeps
            for (int sweep = 0; sweep < 100; ++sweep) {
                const double before = current;
                s.tau = line_minimize(
                    [&](double x) {
                        Params t = s;
                        t.tau = x;
                        return evaluate(t);
                    },
                    boxes[0].first, boxes[0].second, agent_atoms[0]);
                current = evaluate(s);
                for (int j = 0; j < n - 1; ++j) {
                    const auto& box = boxes[j + 1];
                    s.t1[j] = line_minimize(
                        [&](double x) {
                            Params t = s;
                            t.t1[j] = x;
                            return evaluate(t);
                        },
                        box.first, std::min(s.t0[j], box.second), agent_atoms[j + 1]);
                    s.t0[j] = line_minimize(
                        [&](double x) {
                            Params t = s;
                            t.t0[j] = x;
                            return evaluate(t);
                        },
                        std::max(s.t1[j], box.first), box.second, agent_atoms[j + 1]);
                    current = evaluate(s);
                }
                if (best.offer(current)) best_params = s;
                if (before - current < kSweepTol) break;
            }

            // snap thresholds to atoms and scan the tie probabilities there
            bool improved = false;
            for (int j = 0; j < n - 1; ++j) {
                for (double a : agent_atoms[j + 1]) {
                    for (double pv : kPqGrid) {
                        Params t = s;
                        t.t1[j] = a;
                        t.t0[j] = std::max(a, t.t0[j]);
                        t.p[j] = pv;
                        const double v = evaluate(t);
                        if (v < current - kSweepTol) {
                            s = t;
                            current = v;
                            improved = true;
                        }
                        if (best.offer(v)) best_params = t;
                    }
                    for (double qv : kPqGrid) {
                        Params t = s;
                        t.t0[j] = a;
                        t.t1[j] = std::min(a, t.t1[j]);
                        t.q[j] = qv;
                        const double v = evaluate(t);
                        if (v < current - kSweepTol) {
                            s = t;
                            current = v;
                            improved = true;
                        }
                        if (best.offer(v)) best_params = t;
                    }
                }
            }
            for (double a : agent_atoms[0]) {
                Params t = s;
                t.tau = a;
                const double v = evaluate(t);
                if (v < current - kSweepTol) {
                    s = t;
                    current = v;
                    improved = true;
                }
                if (best.offer(v)) best_params = t;
            }
            if (!improved) break;
        }
    }

    report.thresholds.push_back(best_params.tau);
    for (int j = 0; j < n - 1; ++j) {
        report.thresholds.push_back(best_params.t1[j]);
        report.thresholds.push_back(best_params.t0[j]);
        report.finite_rules.emplace_back(best_params.t1[j], best_params.t0[j], best_params.p[j],
                                         best_params.q[j]);
    }
    report.value = evaluate(best_params);
    report.trace = std::move(best.trace);
    report.restarts = kStarts;
    return report;
}

}  // namespace rtandem
