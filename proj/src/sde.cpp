#include "wrm/sde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "wrm/errors.hpp"
#include "wrm/rng.hpp"

namespace wrm {

void SimConfig::validate(int n_agents) const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw ConfigError("simulation: sigma must be finite and non-negative");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigError("simulation: dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ConfigError("simulation: horizon must be positive");
    if (realisations < 1) throw ConfigError("simulation: need at least one realisation");
    if (realisations > (1LL << 31))
        throw CapError("simulation: realisation count exceeds 2^31");
    if (!(tax_rate >= 0.0) || !std::isfinite(tax_rate))
        throw ConfigError("simulation: tax rate must be finite and non-negative");
    if (sample_times.empty()) throw ConfigError("simulation: no sample times");
    if (!std::is_sorted(sample_times.begin(), sample_times.end()))
        throw ConfigError("simulation: sample times must be sorted");
    for (double t : sample_times)
        if (!(t >= 0.0) || t > horizon * (1.0 + 1e-12))
            throw ConfigError("simulation: sample times must lie in [0, horizon]");
    if (init == InitKind::values) {
        if (static_cast<int>(init_values.size()) != n_agents)
            throw ConfigError("simulation: initial wealth vector has wrong length");
        for (double v : init_values)
            if (!(v > 0.0) || !std::isfinite(v))
                throw ConfigError("simulation: initial wealth must be positive");
    }
}

std::vector<double> geometric_times(double lo, double hi, int k) {
    if (!(lo > 0.0) || !(hi >= lo)) throw DomainError("geometric_times: need 0 < lo <= hi");
    if (k < 2) throw DomainError("geometric_times: need at least two points");
    std::vector<double> t(static_cast<std::size_t>(k));
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < k; ++i)
        t[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / (k - 1.0));
    t.front() = lo;
    t.back() = hi;
    return t;
}

void exchange_drift(const ExchangeNetwork& net, const std::vector<double>& v,
                    double tax_rate, std::vector<double>& out) {
    const int n = net.n_agents();
    if (static_cast<int>(v.size()) != n) throw DomainError("drift: wealth size mismatch");
    out.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double vhat = 0.0;
        for (int j : net.neighbours(i)) vhat += v[static_cast<std::size_t>(j)] / net.degree(j);
        out[static_cast<std::size_t>(i)] =
            vhat - v[static_cast<std::size_t>(i)] + tax_rate * (1.0 - v[static_cast<std::size_t>(i)]);
    }
}

double milstein_update(double v, double drift, double sigma, double dt, double dw) {
    const double next = v + drift * dt + std::sqrt(2.0) * sigma * v * dw +
                        sigma * sigma * v * (dw * dw - dt);
    if (!std::isfinite(next)) throw NumericalError("milstein step produced a non-finite value");
    return next;
}

std::vector<double> initial_wealth(const SimConfig& cfg, const ExchangeNetwork& net) {
    switch (cfg.init) {
        case InitKind::one:
            return std::vector<double>(static_cast<std::size_t>(net.n_agents()), 1.0);
        case InitKind::stationary:
            return net.stationary_wealth();
        case InitKind::values:
            return cfg.init_values;
    }
    throw ConfigError("simulation: unknown initial condition");
}

std::vector<long long> sample_steps(const std::vector<double>& sample_times, double dt) {
    std::vector<long long> steps;
    steps.reserve(sample_times.size());
    for (double t : sample_times) {
        const double raw = t / dt;
        long long s = static_cast<long long>(std::ceil(raw - 1e-9));
        if (s < 0) s = 0;
        steps.push_back(s);
    }
    return steps;
}

namespace {

// Flattened neighbour lists with premultiplied 1/k_j, plus the closed-form
// shortcut for complete graphs where vhat_i = (S - v_i)/(n - 1).
struct DriftPlan {
    bool complete = false;
    int n = 0;
    std::vector<int> offset;
    std::vector<int> nbr;
    std::vector<double> nbr_invk;

    explicit DriftPlan(const ExchangeNetwork& net) : n(net.n_agents()) {
        complete = net.is_complete();
        if (complete) return;
        offset.resize(static_cast<std::size_t>(n) + 1, 0);
        for (int i = 0; i < n; ++i)
            offset[static_cast<std::size_t>(i) + 1] =
                offset[static_cast<std::size_t>(i)] + net.degree(i);
        nbr.resize(static_cast<std::size_t>(offset.back()));
        nbr_invk.resize(nbr.size());
        std::size_t k = 0;
        for (int i = 0; i < n; ++i)
            for (int j : net.neighbours(i)) {
                nbr[k] = j;
                nbr_invk[k] = 1.0 / net.degree(j);
                ++k;
            }
    }

    void drift(const std::vector<double>& v, double tax, std::vector<double>& a) const {
        if (complete) {
            double sum = 0.0;
            for (double w : v) sum += w;
            const double inv = 1.0 / (n - 1);
            for (int i = 0; i < n; ++i) {
                const double w = v[static_cast<std::size_t>(i)];
                a[static_cast<std::size_t>(i)] = (sum - w) * inv - w + tax * (1.0 - w);
            }
            return;
        }
        for (int i = 0; i < n; ++i) {
            double vhat = 0.0;
            for (int k = offset[static_cast<std::size_t>(i)];
                 k < offset[static_cast<std::size_t>(i) + 1]; ++k)
                vhat += v[static_cast<std::size_t>(nbr[static_cast<std::size_t>(k)])] *
                        nbr_invk[static_cast<std::size_t>(k)];
            const double w = v[static_cast<std::size_t>(i)];
            a[static_cast<std::size_t>(i)] = vhat - w + tax * (1.0 - w);
        }
    }
};

// One realisation; on_sample(time_index, wealth) fires for every sample time in
// order.  Returns false if the trajectory was rejected (v <= 0 under reject).
template <class OnSample>
bool run_one(const SimConfig& cfg, const DriftPlan& plan, const std::vector<double>& v0,
             long long realisation, long long& clamp_events, OnSample&& on_sample) {
    const int n = plan.n;
    std::vector<RngStream> streams;
    streams.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        streams.emplace_back(cfg.master_seed, static_cast<std::uint32_t>(realisation),
                             static_cast<std::uint32_t>(i));

    const auto steps = sample_steps(cfg.sample_times, cfg.dt);
    const long long last_step = steps.empty() ? 0 : steps.back();
    std::vector<double> v = v0;
    std::vector<double> a(static_cast<std::size_t>(n));
    const double sqrt_dt = std::sqrt(cfg.dt);
    const double sigma = cfg.sigma;

    std::size_t next = 0;
    while (next < steps.size() && steps[next] == 0) on_sample(static_cast<int>(next++), v);

    for (long long s = 1; s <= last_step; ++s) {
        plan.drift(v, cfg.tax_rate, a);
        for (int i = 0; i < n; ++i) {
            const double dw = streams[static_cast<std::size_t>(i)].next_normal() * sqrt_dt;
            double w = milstein_update(v[static_cast<std::size_t>(i)],
                                       a[static_cast<std::size_t>(i)], sigma, cfg.dt, dw);
            if (w <= 0.0) {
                switch (cfg.neg_policy) {
                    case NegPolicy::reject:
                        return false;
                    case NegPolicy::abort_run:
                        throw NumericalError("wealth went non-positive with the abort policy");
                    case NegPolicy::clamp:
                        w = kClampFloor;
                        ++clamp_events;
                        break;
                }
            }
            v[static_cast<std::size_t>(i)] = w;
        }
        while (next < steps.size() && steps[next] == s) on_sample(static_cast<int>(next++), v);
    }
    return true;
}

}  // namespace

RealisationResult simulate_realisation(const SimConfig& cfg, const ExchangeNetwork& net,
                                       long long realisation_index) {
    cfg.validate(net.n_agents());
    if (realisation_index < 0 || realisation_index >= cfg.realisations)
        throw DomainError("simulation: realisation index out of range");
    const DriftPlan plan(net);
    const auto v0 = initial_wealth(cfg, net);
    RealisationResult out;
    const bool ok = run_one(cfg, plan, v0, realisation_index, out.clamp_events,
                            [&](int ti, const std::vector<double>& v) {
                                out.snapshots.push_back(
                                    {cfg.sample_times[static_cast<std::size_t>(ti)], v});
                            });
    if (!ok) {
        out.rejected = true;
        out.snapshots.clear();
        out.clamp_events = 0;
    }
    return out;
}

EnsembleAccumulator run_ensemble(const SimConfig& cfg, const ExchangeNetwork& net,
                                 const RunOptions& opt) {
    cfg.validate(net.n_agents());
    if (opt.threads < 1) throw ConfigError("simulation: thread count must be positive");
    const DriftPlan plan(net);
    const auto v0 = initial_wealth(cfg, net);
    const std::size_t nt = cfg.sample_times.size();
    const int n = net.n_agents();

    auto worker = [&](long long lo, long long hi, EnsembleAccumulator& acc) {
        std::vector<std::vector<double>> buffer(nt, std::vector<double>(static_cast<std::size_t>(n)));
        for (long long r = lo; r < hi; ++r) {
            long long clamps = 0;
            const bool ok = run_one(cfg, plan, v0, r, clamps,
                                    [&](int ti, const std::vector<double>& v) {
                                        buffer[static_cast<std::size_t>(ti)] = v;
                                    });
            if (!ok) {
                acc.mark_discarded();
                continue;
            }
            for (std::size_t ti = 0; ti < nt; ++ti)
                acc.update(r, static_cast<int>(ti), buffer[ti]);
            acc.record_clamp_events(clamps);
        }
    };

    EnsembleAccumulator total(net, cfg.sample_times, cfg.realisations, opt.accumulator);
    const int threads = static_cast<int>(
        std::min<long long>(opt.threads, cfg.realisations));
    if (threads == 1) {
        worker(0, cfg.realisations, total);
        return total;
    }

    std::vector<EnsembleAccumulator> parts;
    parts.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        parts.emplace_back(net, cfg.sample_times, cfg.realisations, opt.accumulator);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    const long long chunk = (cfg.realisations + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long long lo = t * chunk;
        const long long hi = std::min<long long>(cfg.realisations, lo + chunk);
        pool.emplace_back([&, t, lo, hi] {
            try {
                if (lo < hi) worker(lo, hi, parts[static_cast<std::size_t>(t)]);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (int t = 0; t < threads; ++t) total.merge(parts[static_cast<std::size_t>(t)]);
    return total;
}

}  // namespace wrm
