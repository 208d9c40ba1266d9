#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wrm/network.hpp"

namespace wrm {

double normal_cdf(double x);

// Plain sample statistics (Bessel-corrected variance).
double sample_mean(const std::vector<double>& x);
std::optional<double> sample_variance(const std::vector<double>& x);
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

// Tie-corrected tau_b via merge-sort inversion counting, O(n log n).
std::optional<double> kendall_tau_b(std::vector<double> a, std::vector<double> b);
// Average-rank Spearman rho.
std::optional<double> spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct MadResult {
    double mad;          // <|v - target|>
    double mad_squared;  // its square
};
MadResult mean_abs_dev(const std::vector<double>& x, double target = 1.0);

// <|X - 1|> for a mean-one lognormal with log-std s: 4*Phi(s/2) - 2.
double lognormal_mad(double s);

// Least-squares slope of y against x; weights optional (1/sigma^2).
double fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& weights = {});

struct HistogramSpec {
    std::vector<double> edges;  // strictly increasing, >= 2 entries
    static HistogramSpec log_spaced(double lo, double hi, int bins);
    static HistogramSpec linear(double lo, double hi, int bins);
};

struct Histogram {
    std::vector<double> edges;
    std::vector<long long> counts;
    long long underflow = 0;
    long long overflow = 0;
    long long total() const;
    // Normalised so the density integrates to one over the binned range.
    std::vector<double> density() const;
};

Histogram histogram(const std::vector<double>& x, const HistogramSpec& spec);

struct TrackedPair {
    int i, j;
    int distance;
};

enum class PairTracking { none, distance_classes, all };

struct AccumulatorOptions {
    PairTracking pairs = PairTracking::distance_classes;
    int pairs_per_class = 256;  // cap per distance class
    int blocks = 100;           // jackknife block count
    bool track_va = true;
    bool track_population_variance = true;
    bool track_rank_pair = true;  // per-realisation values of one distance-1 pair
};

struct PopulationComparison {
    std::optional<double> ensemble_variance;   // agent-averaged ensemble variance
    std::optional<double> population_mean;     // mean over realisations of within-
    std::optional<double> population_std;      //   snapshot (Bessel) variance
    std::optional<double> rel_difference;      // |population_mean - ensemble|/ensemble
    std::optional<double> rel_fluctuation;     // population_std / population_mean
};

struct RankPairStats {
    int i = -1, j = -1;
    std::optional<double> kendall;
    std::optional<double> spearman;
};

// Running moment store for an ensemble of wealth snapshots on a fixed grid of
// sample times.  Everything is additive: two accumulators over disjoint
// realisation sets merge into the accumulator of the union, and the merged
// result does not depend on merge order beyond float reassociation (~1e-12
// relative).  Realisations hash into a fixed number of blocks so standard
// errors come out of a delete-block jackknife.
class EnsembleAccumulator {
public:
    EnsembleAccumulator(int n_agents, std::vector<double> sample_times,
                        long long realisations, AccumulatorOptions opt = {});
    EnsembleAccumulator(const ExchangeNetwork& net, std::vector<double> sample_times,
                        long long realisations, AccumulatorOptions opt = {});

    void update(long long realisation, int time_index, const std::vector<double>& v);
    void mark_discarded();
    void record_clamp_events(long long events);
    void merge(const EnsembleAccumulator& other);

    int n_agents() const { return n_; }
    const std::vector<double>& times() const { return times_; }
    long long count() const;
    long long discarded() const { return discarded_; }
    long long clamp_events() const { return clamps_; }
    const std::vector<TrackedPair>& tracked_pairs() const { return pairs_; }
    const std::vector<int>& distance_classes() const { return classes_; }

    double mean(int ti, int agent) const;
    std::optional<double> variance(int ti, int agent) const;
    // Agent-averaged ensemble variance and its jackknife standard error.
    std::optional<double> variance_mean(int ti) const;
    double variance_mean_stderr(int ti) const;

    std::optional<double> pearson_pair(int ti, int pair_index) const;
    std::optional<double> pearson_class_mean(int ti, int distance) const;
    double pearson_class_stderr(int ti, int distance) const;

    MadResult mean_abs_dev(int ti, int agent) const;
    double mad_over_agents(int ti) const;

    PopulationComparison population_vs_ensemble(int ti) const;

    // Ensemble-average wealth v_A per realisation.
    std::vector<double> va_samples(int ti) const;
    std::optional<double> va_mean(int ti) const;
    double va_mean_stderr(int ti) const;
    std::optional<double> va_median(int ti) const;
    std::optional<double> va_fraction_below(int ti, double threshold) const;
    Histogram va_histogram(int ti, const HistogramSpec& spec) const;

    RankPairStats rank_correlations(int ti) const;

private:
    struct Block {
        long long count = 0;
        std::vector<double> s1, s2, sabs;  // time-major [ti*n + agent]
        std::vector<double> sp;            // [ti*P + pair]
        std::vector<double> pv1, pv2;      // [ti]
    };

    int n_ = 0;
    std::vector<double> times_;
    long long slots_ = 0;
    AccumulatorOptions opt_;
    std::vector<TrackedPair> pairs_;
    std::vector<int> classes_;
    std::vector<Block> blocks_;
    std::vector<double> va_;              // [ti*slots + r], NaN = absent
    std::vector<double> rank_a_, rank_b_; // same layout
    int rank_i_ = -1, rank_j_ = -1;
    long long discarded_ = 0;
    long long clamps_ = 0;

    void init_storage();
    void check_time(int ti) const;
    void gather(int ti, std::vector<double>& s1, std::vector<double>& s2,
                std::vector<double>& sabs, std::vector<double>& sp, double& pv1,
                double& pv2, long long& cnt, int skip_block) const;
    template <class F>
    double jackknife_se(F&& stat) const;
};

}  // namespace wrm
