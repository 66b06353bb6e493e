#include "tardos/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <string>

#include "tardos/error.hpp"

namespace tardos {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

} // namespace

ConditionVariant ConditionVariant::for_scheme(SchemeVariant v, std::uint64_t B) {
    ConditionVariant cv;
    switch (v) {
    case SchemeVariant::static_scheme:
        cv.soundness = Soundness::S;
        cv.completeness = Completeness::C;
        break;
    case SchemeVariant::dynamic:
    case SchemeVariant::weakly_dynamic_a:
    case SchemeVariant::universal:
        cv.soundness = Soundness::S_prime;
        cv.completeness = Completeness::C_prime;
        break;
    case SchemeVariant::weakly_dynamic_b:
        if (B < 1) throw DomainError("condition C'' needs B >= 1");
        cv.soundness = Soundness::S_prime;
        cv.completeness = Completeness::C_double_prime;
        cv.B = B;
        break;
    }
    return cv;
}

double h(double x) {
    if (std::abs(x) < 1e-3) {
        // 1/2 + x/6 + x^2/24 + x^3/120 + x^4/720
        return 0.5 + x * (1.0 / 6 + x * (1.0 / 24 + x * (1.0 / 120 + x / 720)));
    }
    return (std::expm1(x) - x) / (x * x);
}

double lambda_a(double a, double d_delta, double c0) {
    return a * h(a * std::sqrt(d_delta) * std::cbrt(1.0 / c0));
}

double lambda_b(double b, double d_delta, double c0) {
    const double c13 = std::cbrt(1.0 / c0);
    return 2.0 / std::numbers::pi - 4.0 / (d_delta * std::numbers::pi) * c13 -
           b * h(b * std::sqrt(d_delta)) * c13 * c13;
}

double soundness_rhs(const ProblemInstance& inst, const ConditionVariant& variant) {
    if (variant.soundness == ConditionVariant::Soundness::S) return 1.0;
    return 1.0 + std::numbers::ln2 / inst.log_ratio();
}

double completeness_rhs(const ProblemInstance& inst, const ConditionVariant& variant, double b,
                        double d_delta) {
    const double c13 = std::cbrt(1.0 / static_cast<double>(inst.c0));
    const double L = inst.log_ratio();
    const double eta = inst.eta();
    switch (variant.completeness) {
    case ConditionVariant::Completeness::C:
        return eta * c13;
    case ConditionVariant::Completeness::C_prime:
        return (eta + (std::numbers::ln2 + b * std::sqrt(d_delta)) / L) * c13;
    case ConditionVariant::Completeness::C_double_prime:
        return (eta + (std::numbers::ln2 + static_cast<double>(variant.B) * b * std::sqrt(d_delta)) / L) *
               c13;
    }
    return inf;
}

Margins margins(const ProblemInstance& inst, const TuningConstants& tc,
                const ConditionVariant& variant) {
    const double c0 = static_cast<double>(inst.c0);
    const double la = lambda_a(tc.a, tc.d_delta, c0);
    const double lb = lambda_b(tc.b, tc.d_delta, c0);
    Margins m;
    m.soundness = tc.a * (tc.d_z - la * tc.d_ell) - soundness_rhs(inst, variant);
    m.completeness = tc.b * (lb * tc.d_ell - tc.d_z) - completeness_rhs(inst, variant, tc.b, tc.d_delta);
    return m;
}

TuningConstants tight_constants(const ProblemInstance& inst, const ConditionVariant& variant,
                                double a, double b, double d_delta) {
    TuningConstants tc;
    tc.a = a;
    tc.b = b;
    tc.d_delta = d_delta;
    tc.d_ell = inf;
    tc.d_z = inf;
    if (!(a > 0.0 && b > 0.0 && d_delta > 0.0)) return tc;

    const double c0 = static_cast<double>(inst.c0);
    tc.lambda_a = lambda_a(a, d_delta, c0);
    tc.lambda_b = lambda_b(b, d_delta, c0);
    if (!(tc.lambda_b > tc.lambda_a) || !(tc.lambda_b > 0.0)) return tc;
    if (!(d_delta * std::pow(c0, 4.0 / 3.0) > 2.0)) return tc;

    const double rs = soundness_rhs(inst, variant) / a;
    const double rc = completeness_rhs(inst, variant, b, d_delta) / b;
    tc.d_ell = (rs + rc) / (tc.lambda_b - tc.lambda_a);
    tc.d_z = rs + tc.lambda_a * tc.d_ell;
    const Margins m = margins(inst, tc, variant);
    tc.soundness_margin = m.soundness;
    tc.completeness_margin = m.completeness;
    return tc;
}

namespace {

using Point = std::array<double, 3>; // log a, log b, log d_delta

class Search {
public:
    Search(const ProblemInstance& inst, const ConditionVariant& variant)
        : inst_(inst), variant_(variant) {}

    double objective(const Point& x) const {
        for (double v : x)
            if (!std::isfinite(v) || std::abs(v) > 40.0) return inf;
        return tight_constants(inst_, variant_, std::exp(x[0]), std::exp(x[1]), std::exp(x[2])).d_ell;
    }

    // Minimizes t -> objective(origin + t * dir) over [lo, hi]: a coarse scan
    // locates the best finite sample, golden-section refines around it.
    double line_search(Point& origin, const Point& dir, double lo, double hi, double current) const {
        constexpr int samples = 40;
        auto at = [&](double t) {
            Point p = origin;
            for (int k = 0; k < 3; ++k) p[k] += t * dir[k];
            return p;
        };
        double best_t = 0.0;
        double best_f = current;
        const double step = (hi - lo) / samples;
        for (int s = 0; s <= samples; ++s) {
            const double t = lo + step * s;
            const double f = objective(at(t));
            if (f < best_f) {
                best_f = f;
                best_t = t;
            }
        }
        if (!std::isfinite(best_f)) return current;

        double left = best_t - step;
        double right = best_t + step;
        constexpr double invphi = 0.6180339887498949;
        double c = right - invphi * (right - left);
        double d = left + invphi * (right - left);
        double fc = objective(at(c));
        double fd = objective(at(d));
        for (int it = 0; it < 80 && (right - left) > 1e-13; ++it) {
            if (fc < fd) {
                right = d;
                d = c;
                fd = fc;
                c = right - invphi * (right - left);
                fc = objective(at(c));
            } else {
                left = c;
                c = d;
                fc = fd;
                d = left + invphi * (right - left);
                fd = objective(at(d));
            }
        }
        const double mid = 0.5 * (left + right);
        const double fm = objective(at(mid));
        for (auto [t, f] : {std::pair{mid, fm}, std::pair{c, fc}, std::pair{d, fd}}) {
            if (f < best_f) {
                best_f = f;
                best_t = t;
            }
        }
        origin = at(best_t);
        return best_f;
    }

    // Coordinate-wise golden-section cycles with a pattern move along the
    // net displacement of each cycle.
    std::pair<Point, double> refine(Point x, const OptimizerOptions& opt) const {
        double fx = objective(x);
        double width = 2.0;
        for (int cycle = 0; cycle < opt.max_cycles; ++cycle) {
            const Point start = x;
            const double f_start = fx;
            for (int k = 0; k < 3; ++k) {
                Point dir{0, 0, 0};
                dir[k] = 1.0;
                fx = line_search(x, dir, -width, width, fx);
            }
            Point disp{x[0] - start[0], x[1] - start[1], x[2] - start[2]};
            if (std::isfinite(fx) && (disp[0] != 0 || disp[1] != 0 || disp[2] != 0))
                fx = line_search(x, disp, -1.0, 3.0, fx);

            if (std::isfinite(f_start) && std::isfinite(fx) &&
                f_start - fx <= opt.relative_tolerance * std::abs(fx)) {
                if (width < 1e-3) break;
                width *= 0.25;
            } else {
                width = std::max(width * 0.7, 1e-2);
            }
        }
        return {x, fx};
    }

private:
    const ProblemInstance& inst_;
    const ConditionVariant& variant_;
};

} // namespace

TuningConstants optimize_constants(const ProblemInstance& inst, const ConditionVariant& variant,
                                   const OptimizerOptions& options) {
    inst.validate();
    Search search(inst, variant);

    const int per_axis = std::max(2, options.starts_per_axis);
    auto log_spaced = [&](double lo, double hi) {
        std::vector<double> v;
        for (int i = 0; i < per_axis; ++i)
            v.push_back(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (per_axis - 1));
        return v;
    };
    const auto as = log_spaced(0.2, 1.0);
    const auto bs = log_spaced(0.05, 1.0);
    const auto ds = log_spaced(3.0, 30.0);

    Point best{};
    double best_f = inf;
    for (double la : as) {
        for (double lb : bs) {
            for (double ld : ds) {
                auto [x, f] = search.refine(Point{la, lb, ld}, options);
                if (f < best_f) {
                    best_f = f;
                    best = x;
                }
            }
        }
    }
    if (!std::isfinite(best_f)) {
        throw InfeasibleError("no witnesses (a, b, d_delta) give lambda_b > lambda_a for c0=" +
                              std::to_string(inst.c0) + ", n=" + std::to_string(inst.n) +
                              ", B=" + std::to_string(variant.B));
    }
    TuningConstants tc =
        tight_constants(inst, variant, std::exp(best[0]), std::exp(best[1]), std::exp(best[2]));
    // Both conditions are tight at the optimum; nudge d_z/d_ell so rounding
    // never leaves a margin a few ulps below zero.
    if (tc.soundness_margin < 0.0 || tc.completeness_margin < 0.0) {
        tc.d_ell *= 1.0 + 1e-12;
        tc.d_z = soundness_rhs(inst, variant) / tc.a + tc.lambda_a * tc.d_ell;
        tc.d_z *= 1.0 + 1e-13;
        const Margins m = margins(inst, tc, variant);
        tc.soundness_margin = m.soundness;
        tc.completeness_margin = m.completeness;
    }
    return tc;
}

TuningConstants optimize_constants(const ProblemInstance& inst, const OptimizerOptions& options) {
    return optimize_constants(inst, ConditionVariant::for_scheme(inst.variant, inst.B), options);
}

std::vector<double> allocate_eps(double eps1, std::span<const std::uint64_t> c_grid) {
    if (c_grid.empty()) throw DomainError("allocate_eps needs a nonempty grid");
    std::vector<double> out;
    out.reserve(c_grid.size());
    for (auto c : c_grid) {
        if (c < 2) throw DomainError("coalition sizes in the grid must be >= 2");
        const double cd = static_cast<double>(c);
        out.push_back(6.0 * eps1 / (std::numbers::pi * std::numbers::pi * cd * cd));
    }
    return out;
}

std::vector<double> allocate_eps(double eps1, std::span<const std::uint64_t> c_grid,
                                 std::span<const double> weights) {
    if (c_grid.empty()) throw DomainError("allocate_eps needs a nonempty grid");
    if (weights.size() != c_grid.size())
        throw DomainError("allocation weights must match the grid size");
    std::vector<double> out;
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw DomainError("allocation weights must be positive");
        out.push_back(eps1 * w);
        total += eps1 * w;
    }
    if (total > eps1 * (1.0 + 1e-12))
        throw DomainError("allocation violates sum_c eps1_c <= eps1 (total " +
                          std::to_string(total / eps1) + " eps1)");
    return out;
}

std::vector<std::uint64_t> full_grid(std::uint64_t c_max) {
    if (c_max < 2) throw DomainError("c_max must be >= 2");
    std::vector<std::uint64_t> g;
    for (std::uint64_t c = 2; c <= c_max; ++c) g.push_back(c);
    return g;
}

std::vector<std::uint64_t> geometric_grid(std::uint64_t c_max, std::uint64_t ratio) {
    if (c_max < 2) throw DomainError("c_max must be >= 2");
    if (ratio < 2) throw DomainError("geometric ratio must be >= 2");
    std::vector<std::uint64_t> g;
    for (std::uint64_t c = 2; c <= c_max; c *= ratio) {
        g.push_back(c);
        if (c > c_max / ratio) break;
    }
    if (g.back() != c_max) g.push_back(c_max);
    return g;
}

std::vector<std::uint64_t> default_grid(std::uint64_t c_max) {
    return c_max <= 64 ? full_grid(c_max) : geometric_grid(c_max, 2);
}

UniversalLadder build_universal_ladder(std::uint64_t n, double eps1, double eps2,
                                       std::span<const std::uint64_t> c_grid,
                                       const OptimizerOptions& options) {
    const auto eps = allocate_eps(eps1, c_grid);
    return build_universal_ladder(n, eps1, eps2, c_grid, eps, options);
}

UniversalLadder build_universal_ladder(std::uint64_t n, double eps1, double eps2,
                                       std::span<const std::uint64_t> c_grid,
                                       std::span<const double> eps1_per_c,
                                       const OptimizerOptions& options) {
    if (c_grid.empty()) throw DomainError("ladder grid must be nonempty");
    if (eps1_per_c.size() != c_grid.size()) throw DomainError("eps1 allocation size mismatch");
    for (std::size_t k = 0; k < c_grid.size(); ++k) {
        if (c_grid[k] < 2 || c_grid[k] > n) throw DomainError("ladder grid must lie in {2..n}");
        if (k > 0 && c_grid[k] <= c_grid[k - 1])
            throw DomainError("ladder grid must be strictly increasing");
    }
    double total = 0.0;
    for (double e : eps1_per_c) total += e;
    if (total > eps1 * (1.0 + 1e-12)) throw DomainError("ladder allocation violates sum eps1_c <= eps1");

    std::vector<std::future<LadderEntry>> jobs;
    jobs.reserve(c_grid.size());
    for (std::size_t k = 0; k < c_grid.size(); ++k) {
        jobs.push_back(std::async(std::launch::async, [=, &options] {
            ProblemInstance inst;
            inst.n = n;
            inst.eps1 = eps1_per_c[k];
            inst.eps2 = eps2;
            inst.c0 = c_grid[k];
            inst.variant = SchemeVariant::universal;
            LadderEntry e;
            e.c = c_grid[k];
            e.eps1 = inst.eps1;
            e.eta = std::log(1.0 / eps2) / std::log(static_cast<double>(n) / inst.eps1);
            e.constants = optimize_constants(inst, options);
            const SchemeParameters p = derive_scheme_params(inst, e.constants);
            e.ell = p.ell;
            e.Z = p.Z;
            e.delta = p.delta;
            return e;
        }));
    }
    UniversalLadder ladder;
    ladder.n = n;
    ladder.eps1 = eps1;
    ladder.eps2 = eps2;
    for (auto& j : jobs) ladder.entries.push_back(j.get());
    return ladder;
}

} // namespace tardos
