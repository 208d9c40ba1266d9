#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wrm/network.hpp"
#include "wrm/stats.hpp"

namespace wrm {

enum class InitKind { one, stationary, values };
enum class NegPolicy { reject, abort_run, clamp };

inline constexpr double kClampFloor = 1e-12;

struct SimConfig {
    double sigma = 0.0;  // multiplicative noise amplitude (sigma^2 is the spread)
    double dt = 1e-3;
    double horizon = 20.0;
    long long realisations = 10000;
    std::uint64_t master_seed = 12345;
    std::vector<double> sample_times;  // sorted, snapped to the step grid at run time
    InitKind init = InitKind::one;
    std::vector<double> init_values;  // used when init == values
    double tax_rate = 0.0;
    NegPolicy neg_policy = NegPolicy::reject;

    void validate(int n_agents) const;
};

// k geometrically spaced times from lo to hi inclusive.
std::vector<double> geometric_times(double lo, double hi, int k);

// a_i = vhat_i - v_i + tax*(1 - v_i), with vhat the degree-weighted
// neighbour average induced by the coupling matrix.
void exchange_drift(const ExchangeNetwork& net, const std::vector<double>& v,
                    double tax_rate, std::vector<double>& out);

// One Milstein update for dv = a dt + sqrt(2) sigma v dW:
//   v' = v + a dt + sqrt(2) sigma v dW + sigma^2 v (dW^2 - dt)
double milstein_update(double v, double drift, double sigma, double dt, double dw);

struct Snapshot {
    double time;
    std::vector<double> wealth;
};

struct RealisationResult {
    std::vector<Snapshot> snapshots;
    long long clamp_events = 0;
    bool rejected = false;  // hit v <= 0 under the reject policy
};

std::vector<double> initial_wealth(const SimConfig& cfg, const ExchangeNetwork& net);

RealisationResult simulate_realisation(const SimConfig& cfg, const ExchangeNetwork& net,
                                       long long realisation_index);

struct RunOptions {
    int threads = 1;
    AccumulatorOptions accumulator;
};

EnsembleAccumulator run_ensemble(const SimConfig& cfg, const ExchangeNetwork& net,
                                 const RunOptions& opt = {});

// Sample-time indices snapped onto the step grid (ceil with a relative guard).
std::vector<long long> sample_steps(const std::vector<double>& sample_times, double dt);

}  // namespace wrm
