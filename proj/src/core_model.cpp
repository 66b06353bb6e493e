#include "tardos/core_model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tardos/error.hpp"

namespace tardos {

std::string_view to_string(SchemeVariant v) {
    switch (v) {
    case SchemeVariant::static_scheme: return "static";
    case SchemeVariant::dynamic: return "dynamic";
    case SchemeVariant::weakly_dynamic_a: return "weakly-dynamic-A";
    case SchemeVariant::weakly_dynamic_b: return "weakly-dynamic-B";
    case SchemeVariant::universal: return "universal";
    }
    return "unknown";
}

SchemeVariant parse_variant(std::string_view name) {
    if (name == "static") return SchemeVariant::static_scheme;
    if (name == "dynamic") return SchemeVariant::dynamic;
    if (name == "weakly-dynamic-A" || name == "weakly-dynamic-a" || name == "weakly-a")
        return SchemeVariant::weakly_dynamic_a;
    if (name == "weakly-dynamic-B" || name == "weakly-dynamic-b" || name == "weakly-b")
        return SchemeVariant::weakly_dynamic_b;
    if (name == "universal") return SchemeVariant::universal;
    throw DomainError("unknown scheme variant '" + std::string(name) + "'");
}

double eta(double n, double eps1, double eps2) {
    return std::log(eps2) / std::log(eps1 / n);
}

double ProblemInstance::log_ratio() const {
    return std::log(static_cast<double>(n) / eps1);
}

double ProblemInstance::eta() const {
    return tardos::eta(static_cast<double>(n), eps1, eps2);
}

void ProblemInstance::validate() const {
    if (n < 2) throw DomainError("n must be at least 2");
    if (!(eps1 > 0.0 && eps1 < 1.0)) throw DomainError("eps1 must lie in (0,1)");
    if (!(eps2 > 0.0 && eps2 < 1.0)) throw DomainError("eps2 must lie in (0,1)");
    if (c0 < 2 || c0 > n) throw DomainError("c0 must satisfy 2 <= c0 <= n");
    const bool weakly = variant == SchemeVariant::weakly_dynamic_a ||
                        variant == SchemeVariant::weakly_dynamic_b;
    if (!weakly && B != 0) throw DomainError("B is only used by weakly dynamic variants");
    if (weakly && B < 1) throw DomainError("weakly dynamic variants need B >= 1");
}

double cutoff_for(double d_delta, double c) {
    if (!(d_delta > 0.0)) throw DomainError("d_delta must be positive");
    const double delta = 1.0 / (d_delta * std::pow(c, 4.0 / 3.0));
    if (!(delta < 0.5)) throw DomainError("d_delta too small: cutoff delta >= 1/2");
    return delta;
}

SchemeParameters derive_scheme_params(const ProblemInstance& inst, const TuningConstants& tc) {
    inst.validate();
    if (!(tc.d_ell > 0.0) || !(tc.d_z > 0.0) || !(tc.d_delta > 0.0))
        throw DomainError("tuning constants must be positive");
    const double c0 = static_cast<double>(inst.c0);
    const double L = inst.log_ratio();

    SchemeParameters out;
    out.ell = static_cast<std::uint64_t>(std::ceil(tc.d_ell * c0 * c0 * L));
    out.Z = tc.d_z * c0 * L;
    out.delta = cutoff_for(tc.d_delta, c0);
    out.instance = inst;
    out.constants = tc;
    return out;
}

std::vector<std::uint64_t> UniversalLadder::c_grid() const {
    std::vector<std::uint64_t> grid;
    grid.reserve(entries.size());
    for (const auto& e : entries) grid.push_back(e.c);
    return grid;
}

double UniversalLadder::eps1_total() const {
    double total = 0.0;
    for (const auto& e : entries) total += e.eps1;
    return total;
}

// JSON ----------------------------------------------------------------------

void to_json(nlohmann::json& j, SchemeVariant v) { j = std::string(to_string(v)); }

void from_json(const nlohmann::json& j, SchemeVariant& v) {
    v = parse_variant(j.get<std::string>());
}

void to_json(nlohmann::json& j, const ProblemInstance& v) {
    j = nlohmann::json{{"n", v.n},   {"eps1", v.eps1}, {"eps2", v.eps2},
                       {"c0", v.c0}, {"B", v.B},       {"variant", v.variant},
                       {"eta", v.eta()}};
}

void from_json(const nlohmann::json& j, ProblemInstance& v) {
    v.n = j.at("n").get<std::uint64_t>();
    v.eps1 = j.at("eps1").get<double>();
    v.eps2 = j.at("eps2").get<double>();
    v.c0 = j.at("c0").get<std::uint64_t>();
    v.B = j.value("B", std::uint64_t{0});
    v.variant = j.at("variant").get<SchemeVariant>();
}

void to_json(nlohmann::json& j, const TuningConstants& v) {
    j = nlohmann::json{{"d_ell", v.d_ell},
                       {"d_z", v.d_z},
                       {"d_delta", v.d_delta},
                       {"a", v.a},
                       {"b", v.b},
                       {"lambda_a", v.lambda_a},
                       {"lambda_b", v.lambda_b},
                       {"soundness_margin", v.soundness_margin},
                       {"completeness_margin", v.completeness_margin}};
}

void from_json(const nlohmann::json& j, TuningConstants& v) {
    v.d_ell = j.at("d_ell").get<double>();
    v.d_z = j.at("d_z").get<double>();
    v.d_delta = j.at("d_delta").get<double>();
    v.a = j.value("a", 0.0);
    v.b = j.value("b", 0.0);
    v.lambda_a = j.value("lambda_a", 0.0);
    v.lambda_b = j.value("lambda_b", 0.0);
    v.soundness_margin = j.value("soundness_margin", 0.0);
    v.completeness_margin = j.value("completeness_margin", 0.0);
}

namespace {

// JSON has no infinity; +inf thresholds are written as null.
nlohmann::json real_or_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

double real_from(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

} // namespace

void to_json(nlohmann::json& j, const SchemeParameters& v) {
    j = nlohmann::json{{"ell", v.ell},
                       {"Z", real_or_null(v.Z)},
                       {"delta", v.delta},
                       {"instance", v.instance},
                       {"constants", v.constants}};
}

void from_json(const nlohmann::json& j, SchemeParameters& v) {
    v.ell = j.at("ell").get<std::uint64_t>();
    v.Z = real_from(j.at("Z"));
    v.delta = j.at("delta").get<double>();
    v.instance = j.at("instance").get<ProblemInstance>();
    v.constants = j.at("constants").get<TuningConstants>();
}

void to_json(nlohmann::json& j, const LadderEntry& v) {
    j = nlohmann::json{{"c", v.c},         {"eps1", v.eps1}, {"eta", v.eta},
                       {"constants", v.constants}, {"ell", v.ell},
                       {"Z", real_or_null(v.Z)},   {"delta", v.delta}};
}

void from_json(const nlohmann::json& j, LadderEntry& v) {
    v.c = j.at("c").get<std::uint64_t>();
    v.eps1 = j.at("eps1").get<double>();
    v.eta = j.at("eta").get<double>();
    v.constants = j.at("constants").get<TuningConstants>();
    v.ell = j.at("ell").get<std::uint64_t>();
    v.Z = real_from(j.at("Z"));
    v.delta = j.at("delta").get<double>();
}

void to_json(nlohmann::json& j, const UniversalLadder& v) {
    j = nlohmann::json{{"n", v.n},
                       {"eps1", v.eps1},
                       {"eps2", v.eps2},
                       {"c_grid", v.c_grid()},
                       {"eps1_total", v.eps1_total()},
                       {"entries", v.entries}};
}

void from_json(const nlohmann::json& j, UniversalLadder& v) {
    v.n = j.at("n").get<std::uint64_t>();
    v.eps1 = j.at("eps1").get<double>();
    v.eps2 = j.at("eps2").get<double>();
    v.entries = j.at("entries").get<std::vector<LadderEntry>>();
}

} // namespace tardos
