#include "wrm/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "wrm/errors.hpp"

namespace wrm {

MeanFieldDistribution::MeanFieldDistribution(double mean, double sigma)
    : mean_(mean), sigma_(sigma) {
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw DomainError("mean-field law: mean must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw DomainError("mean-field law: sigma must be positive");
    shape_ = 1.0 + 1.0 / (sigma * sigma);
    scale_ = mean / (sigma * sigma);
    log_norm_ = shape_ * std::log(scale_) - std::lgamma(shape_);
}

MeanFieldDistribution MeanFieldDistribution::for_agent(const ExchangeNetwork& net,
                                                       int agent, double sigma) {
    if (agent < 0 || agent >= net.n_agents())
        throw DomainError("mean-field law: agent out of range");
    return MeanFieldDistribution(net.stationary_wealth()[static_cast<std::size_t>(agent)],
                                 sigma);
}

double MeanFieldDistribution::log_pdf(double v) const {
    if (!(v > 0.0)) throw DomainError("mean-field law: wealth must be positive");
    return log_norm_ - scale_ / v - (shape_ + 1.0) * std::log(v);
}

double MeanFieldDistribution::pdf(double v) const { return std::exp(log_pdf(v)); }

double MeanFieldDistribution::cdf(double v) const {
    if (!(v > 0.0)) throw DomainError("mean-field law: wealth must be positive");
    // P(V <= v) = Q(alpha, c/v), the upper regularised incomplete gamma.
    return boost::math::gamma_q(shape_, scale_ / v);
}

std::optional<double> MeanFieldDistribution::variance() const {
    const double s2 = sigma_ * sigma_;
    if (s2 >= 1.0) return std::nullopt;  // divergent second moment
    return mean_ * mean_ * s2 / (1.0 - s2);
}

double MeanFieldDistribution::density_tail_exponent() const {
    return 2.0 + 1.0 / (sigma_ * sigma_);
}

double MeanFieldDistribution::survival_tail_exponent() const {
    return 1.0 + 1.0 / (sigma_ * sigma_);
}

std::vector<double> MeanFieldDistribution::sample(RngStream& rng, std::size_t count) const {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = scale_ / rng.next_gamma(shape_);
    return out;
}

double MeanFieldDistribution::fit_distance(std::vector<double> samples) const {
    if (samples.empty()) throw DomainError("fit distance: empty sample");
    std::sort(samples.begin(), samples.end());
    if (!(samples.front() > 0.0))
        throw DomainError("fit distance: samples must be positive");
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                                 f - static_cast<double>(i) / n));
    }
    return d;
}

double hill_tail_exponent(std::vector<double> samples, std::size_t k) {
    if (samples.size() < 1000)
        throw DomainError("tail exponent: need at least 1000 samples");
    if (k == 0)
        k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(samples.size()))));
    if (k + 1 > samples.size()) throw DomainError("tail exponent: order too large");
    std::sort(samples.begin(), samples.end(), std::greater<double>());
    if (!(samples[k] > 0.0))
        throw DomainError("tail exponent: samples must be positive in the tail");
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += std::log(samples[i] / samples[k]);
    if (!(acc > 0.0)) throw DomainError("tail exponent: degenerate tail");
    return static_cast<double>(k) / acc;
}

}  // namespace wrm
