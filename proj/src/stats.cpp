#include "tardos/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "tardos/error.hpp"

namespace tardos::stats {

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    if (std::isinf(values[lo]) || std::isinf(values[hi])) return values[h - lo < 0.5 ? lo : hi];
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return s / static_cast<double>(values.size() - 1);
}

std::pair<double, double> clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence) {
    if (n == 0) return {0.0, 1.0};
    if (k > n) throw DomainError("clopper_pearson: more successes than trials");
    const double alpha = 1.0 - confidence;
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, alpha / 2.0);
    const double hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - alpha / 2.0);
    return {lo, hi};
}

std::pair<std::uint64_t, std::uint64_t> binomial_acceptance(std::uint64_t n, double p, double confidence) {
    const double alpha = 1.0 - confidence;
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
    std::uint64_t lo = 0;
    while (lo < n && boost::math::cdf(dist, static_cast<double>(lo)) <= alpha / 2.0) ++lo;
    std::uint64_t hi = n;
    while (hi > 0 && boost::math::cdf(boost::math::complement(dist, static_cast<double>(hi - 1))) <= alpha / 2.0) --hi;
    return {lo, hi};
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw DomainError("ks_statistic of an empty sample");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double f = cdf(samples[k]);
        d = std::max(d, std::max(static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n));
    }
    return d;
}

double ks_critical(std::uint64_t n, double alpha) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

} // namespace tardos::stats
