#ifndef TARDOS_DISTRIBUTIONS_HPP
#define TARDOS_DISTRIBUTIONS_HPP

#include <numbers>

namespace tardos {

/// Arcsine distribution on [delta, 1 - delta], renormalized. delta = 0 is the
/// pure arcsine law F(p) = (2/pi) arcsin(sqrt p).
class BiasDistribution {
public:
    BiasDistribution() = default;
    explicit BiasDistribution(double delta);

    double delta() const { return delta_; }
    double lower() const { return delta_; }
    double upper() const { return 1.0 - delta_; }

    double cdf(double p) const;
    double pdf(double p) const;

    /// Exact inverse CDF; u must lie in (0,1).
    double sample(double u) const;

private:
    double delta_ = 0.0;
    double theta_ = 0.0; // arcsin(sqrt(delta))
    double span_ = std::numbers::pi; // pi - 4 theta
};

inline double cdf(const BiasDistribution& d, double p) { return d.cdf(p); }
inline double sample_bias(const BiasDistribution& d, double u) { return d.sample(u); }

/// Probability that a pure-arcsine draw falls outside [delta_c, 1 - delta_c]:
/// (4/pi) arcsin(sqrt(delta_c)). Accepts delta_c in [0, 1/2].
double disregard_fraction(double delta_c);

} // namespace tardos

#endif // TARDOS_DISTRIBUTIONS_HPP
