#ifndef TARDOS_OPTIMIZER_HPP
#define TARDOS_OPTIMIZER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tardos/core_model.hpp"

namespace tardos {

/// The feasibility conditions a scheme variant must satisfy.
///   soundness:     S (static) or S' (adds ln2 / ln(n/eps1) to the right-hand side)
///   completeness:  C (static), C' (dynamic) or C'' (dynamic with delay B; C' is B = 1)
struct ConditionVariant {
    enum class Soundness { S, S_prime };
    enum class Completeness { C, C_prime, C_double_prime };

    Soundness soundness = Soundness::S;
    Completeness completeness = Completeness::C;
    std::uint64_t B = 1;

    static ConditionVariant for_scheme(SchemeVariant v, std::uint64_t B = 0);
};

/// (e^x - 1 - x) / x^2, with h(0) = 1/2.
double h(double x);

double lambda_a(double a, double d_delta, double c0);
double lambda_b(double b, double d_delta, double c0);

struct Margins {
    double soundness = 0;
    double completeness = 0;
};

/// LHS - RHS of the selected soundness and completeness conditions; reads
/// d_ell, d_z, d_delta, a and b from tc (the lambdas are recomputed).
Margins margins(const ProblemInstance& inst, const TuningConstants& tc,
                const ConditionVariant& variant);

/// Right-hand sides R_S and R_C for the given witnesses.
double soundness_rhs(const ProblemInstance& inst, const ConditionVariant& variant);
double completeness_rhs(const ProblemInstance& inst, const ConditionVariant& variant,
                        double b, double d_delta);

/// For fixed (a, b, d_delta), the (d_ell, d_z) making both conditions tight.
/// Returns constants with d_ell = +inf when lambda_b <= lambda_a or the
/// witnesses are otherwise outside the admissible region.
TuningConstants tight_constants(const ProblemInstance& inst, const ConditionVariant& variant,
                                double a, double b, double d_delta);

struct OptimizerOptions {
    int starts_per_axis = 2; // starts = starts_per_axis^3, at least 8
    int max_cycles = 400;
    double relative_tolerance = 1e-10;
};

/// Minimizes d_ell subject to the variant's two conditions. The returned
/// constants carry their witnesses and non-negative margins.
TuningConstants optimize_constants(const ProblemInstance& inst, const ConditionVariant& variant,
                                   const OptimizerOptions& options = {});

/// Uses the conditions that belong to inst.variant.
TuningConstants optimize_constants(const ProblemInstance& inst,
                                   const OptimizerOptions& options = {});

/// Default allocation eps1_c = 6 eps1 / (pi^2 c^2).
std::vector<double> allocate_eps(double eps1, std::span<const std::uint64_t> c_grid);

/// Custom allocation eps1 * w_c; throws DomainError when the total exceeds eps1.
std::vector<double> allocate_eps(double eps1, std::span<const std::uint64_t> c_grid,
                                 std::span<const double> weights);

std::vector<std::uint64_t> full_grid(std::uint64_t c_max);

/// {2, 2r, 2r^2, ...} capped at c_max; c_max itself is appended when the
/// progression skips it.
std::vector<std::uint64_t> geometric_grid(std::uint64_t c_max, std::uint64_t ratio = 2);

/// Full grid for c_max <= 64, geometric (r = 2) otherwise.
std::vector<std::uint64_t> default_grid(std::uint64_t c_max);

UniversalLadder build_universal_ladder(std::uint64_t n, double eps1, double eps2,
                                       std::span<const std::uint64_t> c_grid,
                                       const OptimizerOptions& options = {});

UniversalLadder build_universal_ladder(std::uint64_t n, double eps1, double eps2,
                                       std::span<const std::uint64_t> c_grid,
                                       std::span<const double> eps1_per_c,
                                       const OptimizerOptions& options = {});

} // namespace tardos

#endif // TARDOS_OPTIMIZER_HPP
