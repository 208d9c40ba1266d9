#include "wrm/regimes.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "wrm/errors.hpp"
#include "wrm/moments.hpp"

namespace wrm {

std::optional<double> free_regime_end(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("time scales: bad sigma");
    if (sigma >= 1.0) return std::nullopt;
    return 1.0 / (2.0 * (1.0 - sigma * sigma));
}

std::optional<double> variance_sync_time(double sigma, int n) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("time scales: bad sigma");
    if (n < 2) throw DomainError("time scales: need at least two agents");
    if (sigma >= 1.0) return std::nullopt;
    return (1.0 - sigma * sigma) * n;
}

std::optional<CorrelationSyncTime> correlation_sync_time(double sigma, int n) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("time scales: bad sigma");
    if (n < 2) throw DomainError("time scales: need at least two agents");
    if (sigma <= 0.0 || sigma >= 1.0) return std::nullopt;
    const double s2 = sigma * sigma;
    CorrelationSyncTime out;
    out.value = n * (1.0 - s2) / (2.0 * s2);
    out.inv_lambda2 = 1.0 / complete_eigenvalues(sigma, n).lambda2;
    return out;
}

std::optional<double> free_regime_end_general(double sigma) { return free_regime_end(sigma); }

double sync_time_general(const ExchangeNetwork& net, double constant) {
    if (!(constant > 0.0)) throw DomainError("time scales: constant must be positive");
    return constant * net.avg_degree();
}

double sync_time_pair(int degree_i, int degree_j, double constant) {
    if (degree_i < 1 || degree_j < 1) throw DomainError("time scales: bad degree");
    if (!(constant > 0.0)) throw DomainError("time scales: constant must be positive");
    return constant * static_cast<double>(degree_i) * static_cast<double>(degree_j) /
           static_cast<double>(degree_i + degree_j);
}

double equilibration_scale(const ExchangeNetwork& net) {
    const int n = net.n_agents();
    if (n > ExchangeNetwork::kMaxDense)
        throw CapError("equilibration scale: network too large for a dense spectrum");
    if (!net.is_connected())
        throw DomainError("equilibration scale: network must be connected");
    // S = D^{-1/2} A D^{-1/2} is similar to the coupling matrix J = A D^{-1},
    // so its (real) spectrum gives the relaxation rates of the mean dynamics.
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : net.neighbours(i))
            S(i, j) = 1.0 / std::sqrt(static_cast<double>(net.degree(i)) *
                                      static_cast<double>(net.degree(j)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const double mu2 = es.eigenvalues()(n - 2);
    const double gap = 1.0 - mu2;
    if (!(gap > 1e-12))
        throw NumericalError("equilibration scale: vanishing spectral gap");
    return 1.0 / gap;
}

double equilibration_scale_complete(int n) {
    if (n < 2) throw DomainError("equilibration scale: need at least two agents");
    return static_cast<double>(n - 1) / static_cast<double>(n);
}

std::optional<double> detect_transition(const std::vector<std::pair<double, double>>& curve,
                                        double c_inf) {
    if (!(c_inf > 0.0)) throw DomainError("transition detection: plateau must be positive");
    if (curve.empty()) throw DomainError("transition detection: empty curve");
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].first < curve[i - 1].first)
            throw DomainError("transition detection: curve must be sorted by time");
    const double threshold = (1.0 - std::exp(-1.0)) * c_inf;
    bool have_prev = false;
    double tp = 0.0, cp = 0.0;
    for (const auto& [t, c] : curve) {
        if (!std::isfinite(c)) continue;
        if (c >= threshold) {
            if (!have_prev) return t;
            return tp + (threshold - cp) * (t - tp) / (c - cp);
        }
        have_prev = true;
        tp = t;
        cp = c;
    }
    return std::nullopt;
}

nlohmann::json RegimeReport::to_json() const {
    nlohmann::json j;
    j["sigma2"] = sigma2;
    j["n"] = n;
    j["network"] = network;
    j["horizon"] = horizon;
    j["stationary_init"] = stationary_init;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = *v;
        else
            j[key] = nullptr;
    };
    put("t1_free_end", t1);
    put("t2_variance_sync", t2);
    put("t3_correlation_sync", t3);
    put("inv_lambda2", inv_lambda2);
    put("t1_general", t1_general);
    put("t2_general", t2_general);
    put("t_equilibration", t_equilibration);
    j["intervals"] = nlohmann::json::array();
    for (const auto& iv : intervals)
        j["intervals"].push_back({{"label", iv.label}, {"from", iv.from}, {"to", iv.to}});
    j["notes"] = notes;
    return j;
}

namespace {

void push_interval(RegimeReport& report, const std::string& label, double from, double to) {
    from = std::max(0.0, from);
    to = std::min(to, report.horizon);
    if (to > from) report.intervals.push_back({label, from, to});
}

void classify_core(RegimeReport& report, double sigma) {
    const double horizon = report.horizon;
    if (sigma == 0.0) {
        push_interval(report, "frozen", 0.0, horizon);
        report.notes.push_back("no noise: wealth relaxes deterministically and "
                               "correlations never grow");
        return;
    }
    double b = 0.0;
    if (report.t_equilibration) {
        push_interval(report, "equilibration", 0.0, *report.t_equilibration);
        b = *report.t_equilibration;
    }
    if (!report.t1) {
        push_interval(report, "free", b, horizon);
        report.notes.push_back("second moments diverge for sigma^2 >= 1: no "
                               "variance-based synchronization stages");
        return;
    }
    const double t1 = *report.t1;
    double sync_start = horizon;
    if (report.t2 && report.t3)
        sync_start = std::min(*report.t2, *report.t3);
    else if (report.t2_general)
        sync_start = *report.t2_general;
    if (sync_start < t1)
        report.notes.push_back("time scales overlap: synchronization estimate "
                               "precedes the end of the free regime");
    // Stage boundaries are cumulative maxima so the timeline never overlaps;
    // a stage swallowed by a slower earlier one simply drops out.
    const double free_end = std::max(b, t1);
    const double sync_begin = std::max(free_end, sync_start);
    push_interval(report, "free", b, free_end);
    push_interval(report, "power-law", free_end, sync_begin);
    push_interval(report, "synchronized", sync_begin, horizon);
}

}  // namespace

RegimeReport classify_timeline(double sigma, int n, double horizon, bool stationary_init) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("regime timeline: horizon must be positive");
    if (n < 2) throw DomainError("regime timeline: need at least two agents");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("regime timeline: bad sigma");
    RegimeReport report;
    report.sigma2 = sigma * sigma;
    report.n = n;
    report.network = "complete:" + std::to_string(n);
    report.horizon = horizon;
    report.stationary_init = stationary_init;
    report.t1 = free_regime_end(sigma);
    report.t2 = variance_sync_time(sigma, n);
    if (sigma == 0.0) {
        report.t2 = static_cast<double>(n);
        report.notes.push_back("variance synchronization scale quoted at sigma = 0 "
                               "is formal: correlations never grow without noise");
    }
    if (const auto t3 = correlation_sync_time(sigma, n)) {
        report.t3 = t3->value;
        report.inv_lambda2 = t3->inv_lambda2;
    }
    report.t1_general = report.t1;
    report.t2_general = static_cast<double>(n - 1);  // z = n - 1 on the complete graph
    if (!stationary_init)
        report.t_equilibration = equilibration_scale_complete(n);
    else
        report.notes.push_back("stationary start: no equilibration stage");
    classify_core(report, sigma);
    return report;
}

RegimeReport classify_timeline(double sigma, const ExchangeNetwork& net, double horizon,
                               bool stationary_init) {
    if (net.is_complete()) {
        RegimeReport report = classify_timeline(sigma, net.n_agents(), horizon, stationary_init);
        report.network = net.descriptor();
        return report;
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("regime timeline: horizon must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("regime timeline: bad sigma");
    RegimeReport report;
    report.sigma2 = sigma * sigma;
    report.n = net.n_agents();
    report.network = net.descriptor();
    report.horizon = horizon;
    report.stationary_init = stationary_init;
    report.t1 = free_regime_end(sigma);
    report.t1_general = report.t1;
    report.t2_general = sync_time_general(net);
    report.notes.push_back("degree-based synchronization estimate: correlation "
                           "refinement is only available on the complete graph");
    if (!stationary_init)
        report.t_equilibration = equilibration_scale(net);
    else
        report.notes.push_back("stationary start: no equilibration stage");
    classify_core(report, sigma);
    return report;
}

}  // namespace wrm
