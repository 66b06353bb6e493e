#include "tardos/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tardos/error.hpp"

namespace tardos {

BiasDistribution::BiasDistribution(double delta) : delta_(delta) {
    if (!(delta >= 0.0 && delta < 0.5))
        throw DomainError("cutoff delta must lie in [0, 1/2), got " + std::to_string(delta));
    theta_ = std::asin(std::sqrt(delta_));
    span_ = std::numbers::pi - 4.0 * theta_;
}

double BiasDistribution::cdf(double p) const {
    if (!(p >= delta_ && p <= 1.0 - delta_))
        throw DomainError("cdf argument outside [delta, 1-delta]");
    // Upper half through the mirror image keeps 1 - p exact.
    if (p > 0.5) {
        return 1.0 - (2.0 * std::asin(std::sqrt(1.0 - p)) - 2.0 * theta_) / span_;
    }
    return (2.0 * std::asin(std::sqrt(p)) - 2.0 * theta_) / span_;
}

double BiasDistribution::pdf(double p) const {
    if (!(p >= delta_ && p <= 1.0 - delta_))
        throw DomainError("pdf argument outside [delta, 1-delta]");
    return 1.0 / (span_ * std::sqrt(p * (1.0 - p)));
}

double BiasDistribution::sample(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("sample_bias needs u in (0,1)");
    // p = sin^2(theta + u (pi/2 - 2 theta)); the upper half is mirrored so
    // that sample(1-u) == 1 - sample(u).
    const double half = 0.5 * span_;
    double p;
    if (u > 0.5) {
        const double s = std::sin(theta_ + (1.0 - u) * half);
        p = 1.0 - s * s;
    } else {
        const double s = std::sin(theta_ + u * half);
        p = s * s;
    }
    return std::clamp(p, delta_, 1.0 - delta_);
}

double disregard_fraction(double delta_c) {
    if (!(delta_c >= 0.0 && delta_c <= 0.5))
        throw DomainError("disregard_fraction needs delta in [0, 1/2]");
    return 4.0 / std::numbers::pi * std::asin(std::sqrt(delta_c));
}

} // namespace tardos
