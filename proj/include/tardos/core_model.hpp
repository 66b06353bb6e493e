#ifndef TARDOS_CORE_MODEL_HPP
#define TARDOS_CORE_MODEL_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tardos {

using UserId = std::uint64_t;

enum class SchemeVariant {
    static_scheme,
    dynamic,
    weakly_dynamic_a,
    weakly_dynamic_b,
    universal,
};

std::string_view to_string(SchemeVariant v);

/// Accepts the canonical names ("static", "dynamic", "weakly-dynamic-A",
/// "weakly-dynamic-B", "universal") and the short forms "weakly-a"/"weakly-b".
SchemeVariant parse_variant(std::string_view name);

/// ln(eps2) / ln(eps1 / n): log-ratio of the two error budgets.
double eta(double n, double eps1, double eps2);

struct ProblemInstance {
    std::uint64_t n = 2;
    double eps1 = 1e-3;
    double eps2 = 1e-3;
    std::uint64_t c0 = 2;
    std::uint64_t B = 0; // feedback delay; only meaningful for weakly dynamic variants
    SchemeVariant variant = SchemeVariant::static_scheme;

    /// ln(n / eps1), the common scale of codelength and threshold.
    double log_ratio() const;
    double eta() const;

    /// Throws DomainError listing the first violated constraint.
    void validate() const;

    friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

struct TuningConstants {
    double d_ell = 0;
    double d_z = 0;
    double d_delta = 0;
    double a = 0;
    double b = 0;
    double lambda_a = 0;
    double lambda_b = 0;
    double soundness_margin = 0;
    double completeness_margin = 0;

    bool feasible(double tolerance = 0.0) const {
        return soundness_margin >= -tolerance && completeness_margin >= -tolerance;
    }

    friend bool operator==(const TuningConstants&, const TuningConstants&) = default;
};

struct SchemeParameters {
    std::uint64_t ell = 0;
    double Z = 0;
    double delta = 0;
    ProblemInstance instance;
    TuningConstants constants;

    friend bool operator==(const SchemeParameters&, const SchemeParameters&) = default;
};

/// ell = ceil(d_ell c0^2 ln(n/eps1)), Z = d_z c0 ln(n/eps1), delta = 1/(d_delta c0^(4/3)).
SchemeParameters derive_scheme_params(const ProblemInstance& inst, const TuningConstants& tc);

/// Cutoff for a coalition-size bound c; throws DomainError unless 0 < delta < 1/2.
double cutoff_for(double d_delta, double c);

struct LadderEntry {
    std::uint64_t c = 2;
    double eps1 = 0;
    double eta = 0;
    TuningConstants constants;
    std::uint64_t ell = 0;
    double Z = 0;
    double delta = 0;

    friend bool operator==(const LadderEntry&, const LadderEntry&) = default;
};

struct UniversalLadder {
    std::uint64_t n = 2;
    double eps1 = 1e-3;
    double eps2 = 1e-3;
    std::vector<LadderEntry> entries; // strictly increasing in c

    std::vector<std::uint64_t> c_grid() const;
    double eps1_total() const;
    std::uint64_t c_max() const { return entries.empty() ? 0 : entries.back().c; }

    friend bool operator==(const UniversalLadder&, const UniversalLadder&) = default;
};

void to_json(nlohmann::json& j, SchemeVariant v);
void from_json(const nlohmann::json& j, SchemeVariant& v);
void to_json(nlohmann::json& j, const ProblemInstance& v);
void from_json(const nlohmann::json& j, ProblemInstance& v);
void to_json(nlohmann::json& j, const TuningConstants& v);
void from_json(const nlohmann::json& j, TuningConstants& v);
void to_json(nlohmann::json& j, const SchemeParameters& v);
void from_json(const nlohmann::json& j, SchemeParameters& v);
void to_json(nlohmann::json& j, const LadderEntry& v);
void from_json(const nlohmann::json& j, LadderEntry& v);
void to_json(nlohmann::json& j, const UniversalLadder& v);
void from_json(const nlohmann::json& j, UniversalLadder& v);

} // namespace tardos

#endif // TARDOS_CORE_MODEL_HPP
