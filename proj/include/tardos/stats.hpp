#ifndef TARDOS_STATS_HPP
#define TARDOS_STATS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace tardos::stats {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);
double variance(std::span<const double> values); // unbiased

/// Exact two-sided Clopper-Pearson interval for k successes in n trials.
std::pair<double, double> clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence = 0.95);

/// Smallest/largest counts [lo, hi] with P(X < lo) <= a/2 and P(X > hi) <= a/2
/// for X ~ Binomial(n, p), a = 1 - confidence.
std::pair<std::uint64_t, std::uint64_t> binomial_acceptance(std::uint64_t n, double p,
                                                             double confidence = 0.99);

/// sup |F_n(x) - F(x)| for the empirical CDF of the samples.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov critical value sqrt(-ln(alpha/2)/2) / sqrt(n).
double ks_critical(std::uint64_t n, double alpha);

} // namespace tardos::stats

#endif // TARDOS_STATS_HPP
