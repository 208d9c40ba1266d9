#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "wrm/network.hpp"
#include "wrm/rng.hpp"

namespace wrm {

// Stationary single-agent wealth law in the decoupled (large, well-mixed
// network) approximation: an inverse-gamma density
//   f(v) = norm * exp(-c/v) / v^(2 + 1/sigma^2),  c = mean/sigma^2,
// anchored so <v> equals the requested mean.
class MeanFieldDistribution {
public:
    MeanFieldDistribution(double mean, double sigma);
    static MeanFieldDistribution for_agent(const ExchangeNetwork& net, int agent,
                                           double sigma);

    double mean() const { return mean_; }
    double sigma() const { return sigma_; }
    double shape() const { return shape_; }  // alpha = 1 + 1/sigma^2
    double scale() const { return scale_; }  // c = mean/sigma^2

    double pdf(double v) const;
    double log_pdf(double v) const;
    double cdf(double v) const;

    // Divergent for sigma >= 1 (nullopt); otherwise mean^2 sigma^2/(1 - sigma^2).
    std::optional<double> variance() const;
    double density_tail_exponent() const;   // 2 + 1/sigma^2
    double survival_tail_exponent() const;  // 1 + 1/sigma^2

    std::vector<double> sample(RngStream& rng, std::size_t count) const;

    // Kolmogorov-Smirnov distance between the sample ECDF and this CDF.
    double fit_distance(std::vector<double> samples) const;

private:
    double mean_, sigma_, shape_, scale_, log_norm_;
};

// Hill estimator of the survival-function tail exponent from the k largest
// order statistics; k = ceil(sqrt(n)) when left zero.  Needs n >= 1000.
double hill_tail_exponent(std::vector<double> samples, std::size_t k = 0);

}  // namespace wrm
