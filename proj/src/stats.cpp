#include "wrm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wrm/errors.hpp"

namespace wrm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Strict inversions (earlier > later) counted with a bottom-up merge sort.
long long count_inversions(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> buf(n);
    long long inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    inversions += static_cast<long long>(mid - i);
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
            std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
        }
    }
    return inversions;
}

long long tie_pairs(const std::vector<double>& sorted) {
    long long ties = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            ties += static_cast<long long>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    return ties;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double sample_mean(const std::vector<double>& x) {
    if (x.empty()) throw DomainError("sample_mean: empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

std::optional<double> sample_variance(const std::vector<double>& x) {
    if (x.size() < 2) return std::nullopt;
    const double m = sample_mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size() - 1);
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DomainError("pearson: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) return std::nullopt;
    const double ma = sample_mean(a), mb = sample_mean(b);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

std::optional<double> kendall_tau_b(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size()) throw DomainError("kendall_tau_b: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) return std::nullopt;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t p, std::size_t q) {
        if (a[p] != a[q]) return a[p] < a[q];
        return b[p] < b[q];
    });
    std::vector<double> av(n), bv(n);
    for (std::size_t k = 0; k < n; ++k) {
        av[k] = a[idx[k]];
        bv[k] = b[idx[k]];
    }
    const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
    long long n1 = 0, n3 = 0;
    {
        std::size_t run_a = 1, run_ab = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            const bool same_a = i < n && av[i] == av[i - 1];
            const bool same_ab = same_a && bv[i] == bv[i - 1];
            if (same_a) {
                ++run_a;
            } else {
                n1 += static_cast<long long>(run_a) * (run_a - 1) / 2;
                run_a = 1;
            }
            if (same_ab) {
                ++run_ab;
            } else {
                n3 += static_cast<long long>(run_ab) * (run_ab - 1) / 2;
                run_ab = 1;
            }
        }
    }
    const long long discordant = count_inversions(bv);  // bv now sorted
    const long long n2 = tie_pairs(bv);
    const double den_a = static_cast<double>(n0 - n1);
    const double den_b = static_cast<double>(n0 - n2);
    if (den_a <= 0.0 || den_b <= 0.0) return std::nullopt;
    const double num = static_cast<double>(n0 - n1 - n2 + n3 - 2 * discordant);
    return num / std::sqrt(den_a * den_b);
}

std::optional<double> spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DomainError("spearman_rho: length mismatch");
    if (a.size() < 2) return std::nullopt;
    return pearson(average_ranks(a), average_ranks(b));
}

MadResult mean_abs_dev(const std::vector<double>& x, double target) {
    if (x.empty()) throw DomainError("mean_abs_dev: empty sample");
    double acc = 0.0;
    for (double v : x) acc += std::abs(v - target);
    const double mad = acc / static_cast<double>(x.size());
    return {mad, mad * mad};
}

double lognormal_mad(double s) {
    if (s < 0.0) throw DomainError("lognormal_mad: negative log-std");
    return 4.0 * normal_cdf(0.5 * s) - 2.0;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& weights) {
    if (x.size() != y.size() || (!weights.empty() && weights.size() != x.size()))
        throw DomainError("fit_slope: length mismatch");
    if (x.size() < 2) throw DomainError("fit_slope: need at least two points");
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w < 0.0) throw DomainError("fit_slope: negative weight");
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
    }
    if (sw <= 0.0) throw DomainError("fit_slope: zero total weight");
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sxx += w * (x[i] - mx) * (x[i] - mx);
        sxy += w * (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw DomainError("fit_slope: degenerate abscissa");
    return sxy / sxx;
}

HistogramSpec HistogramSpec::log_spaced(double lo, double hi, int bins) {
    if (!(lo > 0.0) || !(hi > lo) || bins < 1)
        throw DomainError("log_spaced: need 0 < lo < hi and bins >= 1");
    HistogramSpec spec;
    spec.edges.resize(static_cast<std::size_t>(bins) + 1);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i <= bins; ++i)
        spec.edges[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * i / static_cast<double>(bins));
    spec.edges.front() = lo;
    spec.edges.back() = hi;
    return spec;
}

HistogramSpec HistogramSpec::linear(double lo, double hi, int bins) {
    if (!(hi > lo) || bins < 1) throw DomainError("linear: need lo < hi and bins >= 1");
    HistogramSpec spec;
    spec.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        spec.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / static_cast<double>(bins);
    return spec;
}

long long Histogram::total() const {
    long long t = underflow + overflow;
    for (long long c : counts) t += c;
    return t;
}

std::vector<double> Histogram::density() const {
    long long in_range = 0;
    for (long long c : counts) in_range += c;
    std::vector<double> d(counts.size(), 0.0);
    if (in_range == 0) return d;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double width = edges[i + 1] - edges[i];
        d[i] = static_cast<double>(counts[i]) / (static_cast<double>(in_range) * width);
    }
    return d;
}

Histogram histogram(const std::vector<double>& x, const HistogramSpec& spec) {
    if (spec.edges.size() < 2) throw DomainError("histogram: need at least one bin");
    if (!std::is_sorted(spec.edges.begin(), spec.edges.end()) ||
        std::adjacent_find(spec.edges.begin(), spec.edges.end()) != spec.edges.end())
        throw DomainError("histogram: edges must be strictly increasing");
    Histogram h;
    h.edges = spec.edges;
    h.counts.assign(spec.edges.size() - 1, 0);
    for (double v : x) {
        if (std::isnan(v)) continue;
        if (v < h.edges.front()) {
            ++h.underflow;
        } else if (v >= h.edges.back()) {
            ++h.overflow;
        } else {
            const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
            ++h.counts[static_cast<std::size_t>(it - h.edges.begin()) - 1];
        }
    }
    return h;
}

EnsembleAccumulator::EnsembleAccumulator(int n_agents, std::vector<double> sample_times,
                                         long long realisations, AccumulatorOptions opt)
    : n_(n_agents), times_(std::move(sample_times)), slots_(realisations), opt_(opt) {
    if (n_ < 1) throw ConfigError("accumulator: need at least one agent");
    if (times_.empty()) throw ConfigError("accumulator: no sample times");
    if (!std::is_sorted(times_.begin(), times_.end()))
        throw ConfigError("accumulator: sample times must be sorted");
    if (slots_ < 1) throw ConfigError("accumulator: need at least one realisation");
    if (opt_.blocks < 1) throw ConfigError("accumulator: need at least one block");
    opt_.pairs = PairTracking::none;  // no distance data without a network
    init_storage();
}

EnsembleAccumulator::EnsembleAccumulator(const ExchangeNetwork& net,
                                         std::vector<double> sample_times,
                                         long long realisations, AccumulatorOptions opt)
    : n_(net.n_agents()), times_(std::move(sample_times)), slots_(realisations), opt_(opt) {
    if (times_.empty()) throw ConfigError("accumulator: no sample times");
    if (!std::is_sorted(times_.begin(), times_.end()))
        throw ConfigError("accumulator: sample times must be sorted");
    if (slots_ < 1) throw ConfigError("accumulator: need at least one realisation");
    if (opt_.blocks < 1) throw ConfigError("accumulator: need at least one block");
    if (opt_.pairs != PairTracking::none) {
        const auto dist = net.shortest_path_lengths();
        std::vector<std::vector<TrackedPair>> by_distance;
        for (int i = 0; i < n_; ++i) {
            for (int j = i + 1; j < n_; ++j) {
                const int d = dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (d >= static_cast<int>(by_distance.size()))
                    by_distance.resize(static_cast<std::size_t>(d) + 1);
                by_distance[static_cast<std::size_t>(d)].push_back({i, j, d});
            }
        }
        for (std::size_t d = 1; d < by_distance.size(); ++d) {
            auto& bucket = by_distance[d];
            if (bucket.empty()) continue;
            if (opt_.pairs == PairTracking::distance_classes &&
                static_cast<int>(bucket.size()) > opt_.pairs_per_class) {
                // Deterministic thinning: keep an evenly strided subset.
                std::vector<TrackedPair> kept;
                const double stride = static_cast<double>(bucket.size()) /
                                      static_cast<double>(opt_.pairs_per_class);
                for (int k = 0; k < opt_.pairs_per_class; ++k)
                    kept.push_back(bucket[static_cast<std::size_t>(k * stride)]);
                bucket = std::move(kept);
            }
            classes_.push_back(static_cast<int>(d));
            for (const auto& p : bucket) pairs_.push_back(p);
        }
        if (opt_.track_rank_pair && !pairs_.empty()) {
            rank_i_ = pairs_.front().i;
            rank_j_ = pairs_.front().j;
        }
    }
    init_storage();
}

void EnsembleAccumulator::init_storage() {
    const std::size_t tn = times_.size() * static_cast<std::size_t>(n_);
    const std::size_t tp = times_.size() * pairs_.size();
    blocks_.resize(static_cast<std::size_t>(opt_.blocks));
    for (auto& b : blocks_) {
        b.s1.assign(tn, 0.0);
        b.s2.assign(tn, 0.0);
        b.sabs.assign(tn, 0.0);
        b.sp.assign(tp, 0.0);
        if (opt_.track_population_variance) {
            b.pv1.assign(times_.size(), 0.0);
            b.pv2.assign(times_.size(), 0.0);
        }
    }
    if (opt_.track_va)
        va_.assign(times_.size() * static_cast<std::size_t>(slots_), kNaN);
    if (rank_i_ >= 0) {
        rank_a_.assign(times_.size() * static_cast<std::size_t>(slots_), kNaN);
        rank_b_.assign(times_.size() * static_cast<std::size_t>(slots_), kNaN);
    }
}

void EnsembleAccumulator::check_time(int ti) const {
    if (ti < 0 || static_cast<std::size_t>(ti) >= times_.size())
        throw DomainError("accumulator: sample-time index out of range");
}

void EnsembleAccumulator::update(long long realisation, int time_index,
                                 const std::vector<double>& v) {
    check_time(time_index);
    if (realisation < 0 || realisation >= slots_)
        throw DomainError("accumulator: realisation index out of range");
    if (static_cast<int>(v.size()) != n_)
        throw DomainError("accumulator: snapshot size mismatch");
    Block& b = blocks_[static_cast<std::size_t>(realisation % opt_.blocks)];
    if (time_index == 0) ++b.count;
    const std::size_t base = static_cast<std::size_t>(time_index) * static_cast<std::size_t>(n_);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n_; ++i) {
        const double w = v[static_cast<std::size_t>(i)];
        b.s1[base + static_cast<std::size_t>(i)] += w;
        b.s2[base + static_cast<std::size_t>(i)] += w * w;
        b.sabs[base + static_cast<std::size_t>(i)] += std::abs(w - 1.0);
        sum += w;
        sum2 += w * w;
    }
    if (!pairs_.empty()) {
        const std::size_t pbase = static_cast<std::size_t>(time_index) * pairs_.size();
        for (std::size_t p = 0; p < pairs_.size(); ++p)
            b.sp[pbase + p] += v[static_cast<std::size_t>(pairs_[p].i)] *
                               v[static_cast<std::size_t>(pairs_[p].j)];
    }
    if (opt_.track_population_variance && n_ >= 2) {
        const double mean = sum / n_;
        const double pv = (sum2 - n_ * mean * mean) / (n_ - 1);
        b.pv1[static_cast<std::size_t>(time_index)] += pv;
        b.pv2[static_cast<std::size_t>(time_index)] += pv * pv;
    }
    const std::size_t slot = static_cast<std::size_t>(time_index) *
                                 static_cast<std::size_t>(slots_) +
                             static_cast<std::size_t>(realisation);
    if (opt_.track_va) va_[slot] = sum / n_;
    if (rank_i_ >= 0) {
        rank_a_[slot] = v[static_cast<std::size_t>(rank_i_)];
        rank_b_[slot] = v[static_cast<std::size_t>(rank_j_)];
    }
}

void EnsembleAccumulator::mark_discarded() { ++discarded_; }

void EnsembleAccumulator::record_clamp_events(long long events) {
    if (events < 0) throw DomainError("accumulator: negative clamp count");
    clamps_ += events;
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
    if (other.n_ != n_ || other.times_ != times_ || other.slots_ != slots_ ||
        other.blocks_.size() != blocks_.size() || other.pairs_.size() != pairs_.size())
        throw DomainError("accumulator merge: incompatible shapes");
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        Block& a = blocks_[bi];
        const Block& b = other.blocks_[bi];
        a.count += b.count;
        for (std::size_t k = 0; k < a.s1.size(); ++k) {
            a.s1[k] += b.s1[k];
            a.s2[k] += b.s2[k];
            a.sabs[k] += b.sabs[k];
        }
        for (std::size_t k = 0; k < a.sp.size(); ++k) a.sp[k] += b.sp[k];
        for (std::size_t k = 0; k < a.pv1.size(); ++k) {
            a.pv1[k] += b.pv1[k];
            a.pv2[k] += b.pv2[k];
        }
    }
    auto fold = [](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t k = 0; k < dst.size(); ++k)
            if (!std::isnan(src[k])) {
                if (!std::isnan(dst[k]))
                    throw DomainError("accumulator merge: overlapping realisation slots");
                dst[k] = src[k];
            }
    };
    fold(va_, other.va_);
    fold(rank_a_, other.rank_a_);
    fold(rank_b_, other.rank_b_);
    discarded_ += other.discarded_;
    clamps_ += other.clamps_;
}

long long EnsembleAccumulator::count() const {
    long long c = 0;
    for (const auto& b : blocks_) c += b.count;
    return c;
}

void EnsembleAccumulator::gather(int ti, std::vector<double>& s1, std::vector<double>& s2,
                                 std::vector<double>& sabs, std::vector<double>& sp,
                                 double& pv1, double& pv2, long long& cnt,
                                 int skip_block) const {
    s1.assign(static_cast<std::size_t>(n_), 0.0);
    s2.assign(static_cast<std::size_t>(n_), 0.0);
    sabs.assign(static_cast<std::size_t>(n_), 0.0);
    sp.assign(pairs_.size(), 0.0);
    pv1 = pv2 = 0.0;
    cnt = 0;
    const std::size_t base = static_cast<std::size_t>(ti) * static_cast<std::size_t>(n_);
    const std::size_t pbase = static_cast<std::size_t>(ti) * pairs_.size();
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        if (static_cast<int>(bi) == skip_block) continue;
        const Block& b = blocks_[bi];
        cnt += b.count;
        for (int i = 0; i < n_; ++i) {
            s1[static_cast<std::size_t>(i)] += b.s1[base + static_cast<std::size_t>(i)];
            s2[static_cast<std::size_t>(i)] += b.s2[base + static_cast<std::size_t>(i)];
            sabs[static_cast<std::size_t>(i)] += b.sabs[base + static_cast<std::size_t>(i)];
        }
        for (std::size_t p = 0; p < pairs_.size(); ++p) sp[p] += b.sp[pbase + p];
        if (!b.pv1.empty()) {
            pv1 += b.pv1[static_cast<std::size_t>(ti)];
            pv2 += b.pv2[static_cast<std::size_t>(ti)];
        }
    }
}

namespace {

std::optional<double> variance_from_sums(double s1, double s2, long long cnt) {
    if (cnt < 2) return std::nullopt;
    const double n = static_cast<double>(cnt);
    const double var = (s2 - s1 * s1 / n) / (n - 1.0);
    return std::max(0.0, var);
}

}  // namespace

double EnsembleAccumulator::mean(int ti, int agent) const {
    check_time(ti);
    if (agent < 0 || agent >= n_) throw DomainError("accumulator: agent out of range");
    const long long c = count();
    if (c == 0) throw DomainError("accumulator: no data");
    double s = 0.0;
    const std::size_t k = static_cast<std::size_t>(ti) * static_cast<std::size_t>(n_) +
                          static_cast<std::size_t>(agent);
    for (const auto& b : blocks_) s += b.s1[k];
    return s / static_cast<double>(c);
}

std::optional<double> EnsembleAccumulator::variance(int ti, int agent) const {
    check_time(ti);
    if (agent < 0 || agent >= n_) throw DomainError("accumulator: agent out of range");
    const long long c = count();
    double s1 = 0.0, s2 = 0.0;
    const std::size_t k = static_cast<std::size_t>(ti) * static_cast<std::size_t>(n_) +
                          static_cast<std::size_t>(agent);
    for (const auto& b : blocks_) {
        s1 += b.s1[k];
        s2 += b.s2[k];
    }
    return variance_from_sums(s1, s2, c);
}

std::optional<double> EnsembleAccumulator::variance_mean(int ti) const {
    check_time(ti);
    std::vector<double> s1, s2, sabs, sp;
    double pv1, pv2;
    long long cnt;
    gather(ti, s1, s2, sabs, sp, pv1, pv2, cnt, -1);
    if (cnt < 2) return std::nullopt;
    double acc = 0.0;
    for (int i = 0; i < n_; ++i)
        acc += *variance_from_sums(s1[static_cast<std::size_t>(i)],
                                   s2[static_cast<std::size_t>(i)], cnt);
    return acc / n_;
}

template <class F>
double EnsembleAccumulator::jackknife_se(F&& stat) const {
    std::vector<double> theta;
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        if (blocks_[bi].count == 0) continue;
        const auto value = stat(static_cast<int>(bi));
        if (!value) return kNaN;
        theta.push_back(*value);
    }
    const std::size_t g = theta.size();
    if (g < 2) return kNaN;
    const double mean = std::accumulate(theta.begin(), theta.end(), 0.0) /
                        static_cast<double>(g);
    double ss = 0.0;
    for (double t : theta) ss += (t - mean) * (t - mean);
    return std::sqrt(ss * (static_cast<double>(g) - 1.0) / static_cast<double>(g));
}

double EnsembleAccumulator::variance_mean_stderr(int ti) const {
    check_time(ti);
    return jackknife_se([&](int skip) -> std::optional<double> {
        std::vector<double> s1, s2, sabs, sp;
        double pv1, pv2;
        long long cnt;
        gather(ti, s1, s2, sabs, sp, pv1, pv2, cnt, skip);
        if (cnt < 2) return std::nullopt;
        double acc = 0.0;
        for (int i = 0; i < n_; ++i)
            acc += *variance_from_sums(s1[static_cast<std::size_t>(i)],
                                       s2[static_cast<std::size_t>(i)], cnt);
        return acc / n_;
    });
}

namespace {

// Pearson correlation of a pair from accumulated sums.
std::optional<double> pearson_from_sums(double si, double sj, double sii, double sjj,
                                        double sij, long long cnt) {
    if (cnt < 2) return std::nullopt;
    const double n = static_cast<double>(cnt);
    const double cii = sii - si * si / n;
    const double cjj = sjj - sj * sj / n;
    const double cij = sij - si * sj / n;
    if (cii <= 0.0 || cjj <= 0.0) return std::nullopt;
    return cij / std::sqrt(cii * cjj);
}

}  // namespace

std::optional<double> EnsembleAccumulator::pearson_pair(int ti, int pair_index) const {
    check_time(ti);
    if (pair_index < 0 || static_cast<std::size_t>(pair_index) >= pairs_.size())
        throw DomainError("accumulator: pair index out of range");
    std::vector<double> s1, s2, sabs, sp;
    double pv1, pv2;
    long long cnt;
    gather(ti, s1, s2, sabs, sp, pv1, pv2, cnt, -1);
    const TrackedPair& p = pairs_[static_cast<std::size_t>(pair_index)];
    return pearson_from_sums(s1[static_cast<std::size_t>(p.i)], s1[static_cast<std::size_t>(p.j)],
                             s2[static_cast<std::size_t>(p.i)], s2[static_cast<std::size_t>(p.j)],
                             sp[static_cast<std::size_t>(pair_index)], cnt);
}

namespace {

std::optional<double> class_mean_from_sums(const std::vector<TrackedPair>& pairs,
                                           int distance, const std::vector<double>& s1,
                                           const std::vector<double>& s2,
                                           const std::vector<double>& sp, long long cnt) {
    double acc = 0.0;
    int m = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (pairs[p].distance != distance) continue;
        const auto r = pearson_from_sums(
            s1[static_cast<std::size_t>(pairs[p].i)], s1[static_cast<std::size_t>(pairs[p].j)],
            s2[static_cast<std::size_t>(pairs[p].i)], s2[static_cast<std::size_t>(pairs[p].j)],
            sp[p], cnt);
        if (!r) return std::nullopt;
        acc += *r;
        ++m;
    }
    if (m == 0) return std::nullopt;
    return acc / m;
}

}  // namespace

std::optional<double> EnsembleAccumulator::pearson_class_mean(int ti, int distance) const {
    check_time(ti);
    std::vector<double> s1, s2, sabs, sp;
    double pv1, pv2;
    long long cnt;
    gather(ti, s1, s2, sabs, sp, pv1, pv2, cnt, -1);
    return class_mean_from_sums(pairs_, distance, s1, s2, sp, cnt);
}

double EnsembleAccumulator::pearson_class_stderr(int ti, int distance) const {
    check_time(ti);
    return jackknife_se([&](int skip) -> std::optional<double> {
        std::vector<double> s1, s2, sabs, sp;
        double pv1, pv2;
        long long cnt;
        gather(ti, s1, s2, sabs, sp, pv1, pv2, cnt, skip);
        return class_mean_from_sums(pairs_, distance, s1, s2, sp, cnt);
    });
}

MadResult EnsembleAccumulator::mean_abs_dev(int ti, int agent) const {
    check_time(ti);
    if (agent < 0 || agent >= n_) throw DomainError("accumulator: agent out of range");
    const long long c = count();
    if (c == 0) throw DomainError("accumulator: no data");
    double s = 0.0;
    const std::size_t k = static_cast<std::size_t>(ti) * static_cast<std::size_t>(n_) +
                          static_cast<std::size_t>(agent);
    for (const auto& b : blocks_) s += b.sabs[k];
    const double mad = s / static_cast<double>(c);
    return {mad, mad * mad};
}

double EnsembleAccumulator::mad_over_agents(int ti) const {
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) acc += mean_abs_dev(ti, i).mad;
    return acc / n_;
}

PopulationComparison EnsembleAccumulator::population_vs_ensemble(int ti) const {
    check_time(ti);
    PopulationComparison out;
    out.ensemble_variance = variance_mean(ti);
    if (!opt_.track_population_variance || n_ < 2) return out;
    std::vector<double> s1, s2, sabs, sp;
    double pv1, pv2;
    long long cnt;
    gather(ti, s1, s2, sabs, sp, pv1, pv2, cnt, -1);
    if (cnt < 1) return out;
    const double mean = pv1 / static_cast<double>(cnt);
    out.population_mean = mean;
    if (const auto var = variance_from_sums(pv1, pv2, cnt))
        out.population_std = std::sqrt(*var);
    if (out.ensemble_variance && *out.ensemble_variance > 0.0)
        out.rel_difference = std::abs(mean - *out.ensemble_variance) / *out.ensemble_variance;
    if (mean > 0.0 && out.population_std)
        out.rel_fluctuation = *out.population_std / mean;
    return out;
}

std::vector<double> EnsembleAccumulator::va_samples(int ti) const {
    check_time(ti);
    if (!opt_.track_va) throw DomainError("accumulator: ensemble-average tracking disabled");
    std::vector<double> out;
    const std::size_t base = static_cast<std::size_t>(ti) * static_cast<std::size_t>(slots_);
    for (long long r = 0; r < slots_; ++r) {
        const double v = va_[base + static_cast<std::size_t>(r)];
        if (!std::isnan(v)) out.push_back(v);
    }
    return out;
}

std::optional<double> EnsembleAccumulator::va_mean(int ti) const {
    const auto s = va_samples(ti);
    if (s.empty()) return std::nullopt;
    return sample_mean(s);
}

double EnsembleAccumulator::va_mean_stderr(int ti) const {
    const auto s = va_samples(ti);
    const auto var = sample_variance(s);
    if (!var) return kNaN;
    return std::sqrt(*var / static_cast<double>(s.size()));
}

std::optional<double> EnsembleAccumulator::va_median(int ti) const {
    auto s = va_samples(ti);
    if (s.empty()) return std::nullopt;
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    if (n % 2 == 1) return s[n / 2];
    return 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

std::optional<double> EnsembleAccumulator::va_fraction_below(int ti, double threshold) const {
    const auto s = va_samples(ti);
    if (s.empty()) return std::nullopt;
    long long below = 0;
    for (double v : s)
        if (v < threshold) ++below;
    return static_cast<double>(below) / static_cast<double>(s.size());
}

Histogram EnsembleAccumulator::va_histogram(int ti, const HistogramSpec& spec) const {
    return histogram(va_samples(ti), spec);
}

RankPairStats EnsembleAccumulator::rank_correlations(int ti) const {
    check_time(ti);
    RankPairStats out;
    if (rank_i_ < 0) return out;
    out.i = rank_i_;
    out.j = rank_j_;
    std::vector<double> a, b;
    const std::size_t base = static_cast<std::size_t>(ti) * static_cast<std::size_t>(slots_);
    for (long long r = 0; r < slots_; ++r) {
        const double x = rank_a_[base + static_cast<std::size_t>(r)];
        const double y = rank_b_[base + static_cast<std::size_t>(r)];
        if (std::isnan(x) || std::isnan(y)) continue;
        a.push_back(x);
        b.push_back(y);
    }
    out.kendall = kendall_tau_b(a, b);
    out.spearman = spearman_rho(a, b);
    return out;
}

}  // namespace wrm
