#include "wrm/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "wrm/errors.hpp"

namespace wrm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct System2 {
    // d/dt (x, y) = A (x, y) + f
    double a, b, c, d;
    double fx, fy;
};

System2 complete_system(double sigma, int n, double tax) {
    if (n < 2) throw DomainError("complete moments: need at least two agents");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw DomainError("complete moments: bad sigma");
    if (!(tax >= 0.0) || !std::isfinite(tax)) throw DomainError("complete moments: bad tax");
    const double s2 = sigma * sigma;
    System2 sys;
    sys.a = -2.0 * (1.0 - s2 + tax);
    sys.b = 2.0;
    sys.c = 2.0 / (n - 1);
    sys.d = -2.0 / (n - 1) - 2.0 * tax;
    sys.fx = 2.0 * tax;
    sys.fy = 2.0 * tax;
    return sys;
}

CompleteEigen eigen_of(const System2& sys) {
    const double tr = sys.a + sys.d;
    const double disc = (sys.a - sys.d) * (sys.a - sys.d) + 4.0 * sys.b * sys.c;
    if (!(disc > 0.0))
        throw NumericalError("complete moments: degenerate eigensystem");
    const double root = std::sqrt(disc);
    return {0.5 * (tr - root), 0.5 * (tr + root)};
}

}  // namespace

CompleteMoments complete_rhs(const CompleteMoments& s, double sigma, int n, double tax) {
    const System2 sys = complete_system(sigma, n, tax);
    return {sys.a * s.x + sys.b * s.y + sys.fx, sys.c * s.x + sys.d * s.y + sys.fy};
}

CompleteEigen complete_eigenvalues(double sigma, int n) {
    if (!(sigma >= 0.0) || sigma >= 1.0)
        throw DomainError("complete moments: eigenvalues defined for 0 <= sigma < 1 "
                          "(second moments diverge beyond)");
    return eigen_of(complete_system(sigma, n, 0.0));
}

CompleteEigen taxed_eigenvalues(double sigma, int n, double tax) {
    return eigen_of(complete_system(sigma, n, tax));
}

CompleteMoments solve_complete(double sigma, int n, double t, const CompleteMoments& init,
                               double tax) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("complete moments: bad time");
    const System2 sys = complete_system(sigma, n, tax);
    const CompleteEigen ev = eigen_of(sys);

    // Fixed point A s* = -f (only needed when there is forcing).
    double sx = 0.0, sy = 0.0;
    if (sys.fx != 0.0 || sys.fy != 0.0) {
        const double det = sys.a * sys.d - sys.b * sys.c;
        if (std::abs(det) < 1e-300)
            throw NumericalError("complete moments: singular system with forcing");
        sx = (-sys.fx * sys.d + sys.fy * sys.b) / det;
        sy = (-sys.fy * sys.a + sys.fx * sys.c) / det;
    }

    // Eigenvectors u_k = (1, (lambda_k - a)/b); expand init - s* in that basis.
    const double u1y = (ev.lambda1 - sys.a) / sys.b;
    const double u2y = (ev.lambda2 - sys.a) / sys.b;
    const double wx = init.x - sx;
    const double wy = init.y - sy;
    const double den = u2y - u1y;  // (lambda2 - lambda1)/b > 0
    const double c1 = (u2y * wx - wy) / den;
    const double c2 = (wy - u1y * wx) / den;
    const double e1 = std::exp(ev.lambda1 * t);
    const double e2 = std::exp(ev.lambda2 * t);
    return {sx + c1 * e1 + c2 * e2, sy + c1 * e1 * u1y + c2 * e2 * u2y};
}

double variance_complete(const CompleteMoments& s) { return s.x - 1.0; }

double correlation_complete(const CompleteMoments& s) {
    const double var = s.x - 1.0;
    if (var <= 0.0) return kNaN;  // undefined until the variance grows
    return (s.y - 1.0) / var;
}

double correlation_limit_complete(double sigma, int n) {
    if (!(sigma > 0.0) || sigma >= 1.0)
        throw DomainError("correlation limit: requires 0 < sigma < 1");
    const CompleteEigen ev = complete_eigenvalues(sigma, n);
    return 0.5 * (ev.lambda2 + 2.0 * (1.0 - sigma * sigma));
}

double correlation_limit_expansion(double sigma, int n) {
    if (!(sigma > 0.0) || sigma >= 1.0)
        throw DomainError("correlation limit: requires 0 < sigma < 1");
    const double s2 = sigma * sigma;
    return 1.0 - s2 + s2 / ((1.0 - s2) * n);
}

CompleteMoments taxed_stationary(double sigma, int n, double tax) {
    if (!(tax > 0.0)) throw DomainError("taxed stationary state: requires tax > 0");
    const System2 sys = complete_system(sigma, n, tax);
    const double det = sys.a * sys.d - sys.b * sys.c;
    if (std::abs(det) < 1e-12)
        throw NumericalError("taxed stationary state: singular system");
    return {(-sys.fx * sys.d + sys.fy * sys.b) / det,
            (-sys.fy * sys.a + sys.fx * sys.c) / det};
}

GeneralMomentState initial_moments(const ExchangeNetwork& net, InitKind init,
                                   const std::vector<double>& values) {
    const int n = net.n_agents();
    GeneralMomentState s;
    s.t = 0.0;
    s.m = Eigen::VectorXd::Ones(n);
    if (init == InitKind::stationary) {
        const auto v = net.stationary_wealth();
        for (int i = 0; i < n; ++i) s.m(i) = v[static_cast<std::size_t>(i)];
    } else if (init == InitKind::values) {
        if (static_cast<int>(values.size()) != n)
            throw ConfigError("initial moments: wealth vector has wrong length");
        for (int i = 0; i < n; ++i) {
            if (!(values[static_cast<std::size_t>(i)] > 0.0))
                throw ConfigError("initial moments: wealth must be positive");
            s.m(i) = values[static_cast<std::size_t>(i)];
        }
    }
    s.M = s.m * s.m.transpose();  // deterministic start: zero covariance
    return s;
}

void general_rhs(const ExchangeNetwork& net, double sigma, const Eigen::VectorXd& m,
                 const Eigen::MatrixXd& M, Eigen::VectorXd& dm, Eigen::MatrixXd& dM) {
    const int n = net.n_agents();
    if (m.size() != n || M.rows() != n || M.cols() != n)
        throw DomainError("moment dynamics: state size mismatch");
    const double s2 = sigma * sigma;
    dm.resize(n);
    dM.resize(n, n);
    // G = M J^T assembled column-wise from neighbour lists.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        for (int l : net.neighbours(j)) G.col(j) += M.col(l) / net.degree(l);
    }
    dM = G + G.transpose() - 2.0 * M;
    dM.diagonal() += 2.0 * s2 * M.diagonal();
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int l : net.neighbours(i)) acc += m(l) / net.degree(l);
        dm(i) = acc - m(i);
    }
}

double moment_operator_bound(const ExchangeNetwork& net, double sigma) {
    const int n = net.n_agents();
    const double s2 = sigma * sigma;
    std::vector<double> s(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j : net.neighbours(i)) s[static_cast<std::size_t>(i)] += 1.0 / net.degree(j);
    double s_max = 0.0, s_second = 0.0;
    for (double v : s) {
        if (v > s_max) {
            s_second = s_max;
            s_max = v;
        } else if (v > s_second) {
            s_second = v;
        }
    }
    double edge_max = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j : net.neighbours(i))
            edge_max = std::max(edge_max, 1.0 / net.degree(i) + 1.0 / net.degree(j));
    const double row_min = std::min({-2.0 * (1.0 - s2) - 2.0 * s_max,
                                     -2.0 - s_max - s_second, -1.0 - s_max});
    const double col_min = std::min({-2.0 * (1.0 - s2) - 1.0, -4.0 - edge_max, -2.0});
    return std::max(row_min, col_min);
}

std::vector<GeneralMomentState> integrate_general(const ExchangeNetwork& net, double sigma,
                                                  const GeneralMomentState& init,
                                                  const std::vector<double>& sample_times,
                                                  const IntegrateOptions& opt) {
    const int n = net.n_agents();
    if (n > ExchangeNetwork::kMaxDense)
        throw CapError("moment integration: network too large for dense second moments");
    if (init.m.size() != n || init.M.rows() != n || init.M.cols() != n)
        throw DomainError("moment integration: state size mismatch");
    if (sample_times.empty()) throw DomainError("moment integration: no sample times");
    if (!std::is_sorted(sample_times.begin(), sample_times.end()))
        throw DomainError("moment integration: sample times must be sorted");
    if (sample_times.front() < init.t - 1e-12)
        throw DomainError("moment integration: sample times precede the initial state");
    if (!(opt.max_step > 0.0)) throw DomainError("moment integration: bad max step");

    const double bound = moment_operator_bound(net, sigma);
    const double h_cap = std::min(opt.max_step, 0.1 / std::abs(bound));

    Eigen::VectorXd m = init.m;
    Eigen::MatrixXd M = init.M;
    double t = init.t;
    Eigen::VectorXd k1m(n), k2m(n), k3m(n), k4m(n), tm(n);
    Eigen::MatrixXd k1M(n, n), k2M(n, n), k3M(n, n), k4M(n, n), tM(n, n);

    auto check_state = [&](const GeneralMomentState& s) {
        if (!s.m.allFinite() || !s.M.allFinite())
            throw NumericalError("moment integration: state became non-finite");
        if (!opt.psd_check) return;
        const Eigen::MatrixXd C = s.M - s.m * s.m.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
        const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -opt.psd_tol * scale)
            throw NumericalError("moment integration: covariance lost positive "
                                 "semidefiniteness");
    };

    std::vector<GeneralMomentState> out;
    out.reserve(sample_times.size());
    for (double target : sample_times) {
        const double span = target - t;
        if (span > 1e-14) {
            const long long nsub =
                std::max<long long>(1, static_cast<long long>(std::ceil(span / h_cap - 1e-12)));
            const double h = span / static_cast<double>(nsub);
            for (long long s = 0; s < nsub; ++s) {
                general_rhs(net, sigma, m, M, k1m, k1M);
                tm = m + 0.5 * h * k1m;
                tM = M + 0.5 * h * k1M;
                general_rhs(net, sigma, tm, tM, k2m, k2M);
                tm = m + 0.5 * h * k2m;
                tM = M + 0.5 * h * k2M;
                general_rhs(net, sigma, tm, tM, k3m, k3M);
                tm = m + h * k3m;
                tM = M + h * k3M;
                general_rhs(net, sigma, tm, tM, k4m, k4M);
                m += (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
                M += (h / 6.0) * (k1M + 2.0 * k2M + 2.0 * k3M + k4M);
            }
            t = target;
        }
        GeneralMomentState s;
        s.t = target;
        s.m = m;
        s.M = M;
        check_state(s);
        out.push_back(std::move(s));
    }
    return out;
}

double variance_of(const GeneralMomentState& s, int i) {
    if (i < 0 || i >= s.m.size()) throw DomainError("moment state: agent out of range");
    return s.M(i, i) - s.m(i) * s.m(i);
}

double covariance_of(const GeneralMomentState& s, int i, int j) {
    if (i < 0 || i >= s.m.size() || j < 0 || j >= s.m.size())
        throw DomainError("moment state: agent out of range");
    return s.M(i, j) - s.m(i) * s.m(j);
}

double correlation_of(const GeneralMomentState& s, int i, int j) {
    const double vi = variance_of(s, i);
    const double vj = variance_of(s, j);
    if (vi <= 0.0 || vj <= 0.0) return kNaN;
    return covariance_of(s, i, j) / std::sqrt(vi * vj);
}

double mean_variance(const GeneralMomentState& s) {
    double acc = 0.0;
    for (int i = 0; i < s.m.size(); ++i) acc += variance_of(s, i);
    return acc / static_cast<double>(s.m.size());
}

double mean_correlation_at_distance(const GeneralMomentState& s, const ExchangeNetwork& net,
                                    int distance) {
    const auto dist = net.shortest_path_lengths();
    const int n = net.n_agents();
    double acc = 0.0;
    long long count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == distance) {
                acc += correlation_of(s, i, j);
                ++count;
            }
    if (count == 0) throw DomainError("moment state: no pairs at that distance");
    return acc / static_cast<double>(count);
}

}  // namespace wrm
