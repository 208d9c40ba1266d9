#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wrm/network.hpp"

namespace wrm {

// Characteristic time scales on the complete graph.  All return nullopt where
// the scale is undefined (sigma >= 1; t3 also needs sigma > 0).
std::optional<double> free_regime_end(double sigma);            // 1/(2(1 - sigma^2))
std::optional<double> variance_sync_time(double sigma, int n);  // (1 - sigma^2) n
struct CorrelationSyncTime {
    double value;       // n(1 - sigma^2)/(2 sigma^2)
    double inv_lambda2; // exact companion 1/lambda2
};
std::optional<CorrelationSyncTime> correlation_sync_time(double sigma, int n);

// Degree-based generalisations for arbitrary networks.
std::optional<double> free_regime_end_general(double sigma);
double sync_time_general(const ExchangeNetwork& net, double constant = 1.0);  // const * z
double sync_time_pair(int degree_i, int degree_j, double constant = 1.0);

// Slowest relaxation time of the first-moment dynamics, 1/(1 - mu2) with mu2
// the second-largest eigenvalue of the symmetrised coupling matrix.
double equilibration_scale(const ExchangeNetwork& net);
double equilibration_scale_complete(int n);  // (n - 1)/n

// First crossing of (1 - 1/e) * c_inf on a sampled correlation curve, with
// linear interpolation between bracketing points.
std::optional<double> detect_transition(const std::vector<std::pair<double, double>>& curve,
                                        double c_inf);

struct RegimeInterval {
    std::string label;  // equilibration | free | power-law | synchronized | frozen
    double from;
    double to;
};

struct RegimeReport {
    double sigma2 = 0.0;
    int n = 0;
    std::string network;
    double horizon = 0.0;
    bool stationary_init = false;
    std::optional<double> t1;
    std::optional<double> t2;
    std::optional<double> t3;
    std::optional<double> inv_lambda2;
    std::optional<double> t1_general;
    std::optional<double> t2_general;
    std::optional<double> t_equilibration;
    std::vector<RegimeInterval> intervals;
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
};

RegimeReport classify_timeline(double sigma, int n, double horizon,
                               bool stationary_init = false);
RegimeReport classify_timeline(double sigma, const ExchangeNetwork& net, double horizon,
                               bool stationary_init = false);

}  // namespace wrm
