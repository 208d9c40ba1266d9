#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "wrm/errors.hpp"
#include "wrm/moments.hpp"
#include "wrm/network.hpp"
#include "wrm/stats.hpp"

using wrm::CompleteMoments;
using wrm::ExchangeNetwork;

namespace {

// Independent reference integrator: classical RK4 over a hand-written copy of
// the two-moment vector field, so the closed-form solver is checked against
// nothing but itself re-derived.
CompleteMoments rk4_reference(double sigma, int n, double tax, double t_end, double h) {
    double x = 1.0, y = 1.0;
    auto fx = [&](double xx, double yy) {
        return 2.0 * (yy - (1.0 - sigma * sigma + tax) * xx + tax);
    };
    auto fy = [&](double xx, double yy) {
        return 2.0 / (n - 1) * (xx - yy) + 2.0 * tax * (1.0 - yy);
    };
    const long steps = std::lround(t_end / h);
    for (long s = 0; s < steps; ++s) {
        const double k1x = fx(x, y), k1y = fy(x, y);
        const double k2x = fx(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
        const double k2y = fy(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
        const double k3x = fx(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
        const double k3y = fy(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
        const double k4x = fx(x + h * k3x, y + h * k3y);
        const double k4y = fy(x + h * k3x, y + h * k3y);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    }
    return {x, y};
}

}  // namespace

TEST_CASE("complete-graph eigenvalues in closed form") {
    const double s = std::sqrt(0.5);
    const auto eig = wrm::complete_eigenvalues(s, 10);
    // Trace/determinant of [[-1, 2], [2/9, -2/9]] give (-11 +- sqrt(193))/18.
    CHECK(eig.lambda1 == doctest::Approx((-11.0 - std::sqrt(193.0)) / 18.0).epsilon(1e-14));
    CHECK(eig.lambda2 == doctest::Approx((-11.0 + std::sqrt(193.0)) / 18.0).epsilon(1e-14));
    CHECK(eig.lambda2 == doctest::Approx(0.1606913327472113).epsilon(1e-13));

    const auto frozen = wrm::complete_eigenvalues(0.0, 10);
    CHECK(frozen.lambda2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(frozen.lambda1 == doctest::Approx(-20.0 / 9.0).epsilon(1e-14));

    CHECK_THROWS_AS(wrm::complete_eigenvalues(1.0, 10), wrm::DomainError);
    CHECK_THROWS_AS(wrm::complete_eigenvalues(-0.1, 10), wrm::DomainError);
    CHECK_THROWS_AS(wrm::complete_eigenvalues(0.5, 1), wrm::DomainError);
}

TEST_CASE("closed-form solution against an independent RK4 reference") {
    const double s = std::sqrt(0.5);
    for (double t : {0.3, 1.0, 3.0}) {
        const auto ref = rk4_reference(s, 10, 0.0, t, 1e-4);
        const auto sol = wrm::solve_complete(s, 10, t);
        CHECK(sol.x == doctest::Approx(ref.x).epsilon(1e-10));
        CHECK(sol.y == doctest::Approx(ref.y).epsilon(1e-10));
    }
    // Taxed flow, including the constant forcing term.
    for (double t : {0.5, 2.0}) {
        const auto ref = rk4_reference(s, 10, 0.5, t, 1e-4);
        const auto sol = wrm::solve_complete(s, 10, t, {1.0, 1.0}, 0.5);
        CHECK(sol.x == doctest::Approx(ref.x).epsilon(1e-10));
        CHECK(sol.y == doctest::Approx(ref.y).epsilon(1e-10));
    }
    // Time zero returns the initial condition untouched.
    const auto at0 = wrm::solve_complete(s, 10, 0.0, {1.3, 0.9});
    CHECK(at0.x == doctest::Approx(1.3).epsilon(1e-14));
    CHECK(at0.y == doctest::Approx(0.9).epsilon(1e-14));
    // Noise-free flow stays solvable even though the matrix is singular.
    const auto quiet = wrm::solve_complete(0.0, 10, 2.0);
    CHECK(quiet.x == doctest::Approx(rk4_reference(0.0, 10, 0.0, 2.0, 1e-4).x).epsilon(1e-10));
}

TEST_CASE("vector field transcription") {
    const CompleteMoments u{1.7, 0.8};
    const auto d = wrm::complete_rhs(u, std::sqrt(0.5), 10, 0.25);
    CHECK(d.x == doctest::Approx(2.0 * (0.8 - (1.0 - 0.5 + 0.25) * 1.7 + 0.25)).epsilon(1e-15));
    CHECK(d.y == doctest::Approx(2.0 / 9.0 * (1.7 - 0.8) + 2.0 * 0.25 * (1.0 - 0.8)).epsilon(1e-15));
}

TEST_CASE("small-time growth laws on the complete graph") {
    const double s = std::sqrt(0.5);
    const double t = 1e-3;
    const auto sol = wrm::solve_complete(s, 10, t);
    CHECK(wrm::variance_complete(sol) / (2.0 * 0.5 * t) == doctest::Approx(1.0).epsilon(5e-3));
    CHECK(wrm::correlation_complete(sol) * 9.0 / t == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("late-time correlation plateau") {
    const double s = std::sqrt(0.5);
    const double limit = wrm::correlation_limit_complete(s, 10);
    CHECK(limit == doctest::Approx(0.5803456663736056).epsilon(1e-13));

    // Two independent routes to the same number: eigenvector ratio and the
    // resolvent form 1/(1 + (n-1) lambda2 / 2).
    const double l2 = wrm::complete_eigenvalues(s, 10).lambda2;
    CHECK(limit == doctest::Approx((l2 + 2.0 * (1.0 - 0.5)) / 2.0).epsilon(1e-13));
    CHECK(limit == doctest::Approx(1.0 / (1.0 + 9.0 * l2 / 2.0)).epsilon(1e-13));

    // The ODE run actually lands on the plateau.
    CHECK(wrm::correlation_complete(wrm::solve_complete(s, 10, 50.0)) ==
          doctest::Approx(limit).epsilon(2e-3));

    // Large-n expansion: exact 0.6 at these parameters, within 5% of the limit.
    const double exp10 = wrm::correlation_limit_expansion(s, 10);
    CHECK(exp10 == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(std::abs(exp10 - limit) / limit < 0.05);
    const double exp100 = wrm::correlation_limit_expansion(s, 100);
    const double limit100 = wrm::correlation_limit_complete(s, 100);
    CHECK(std::abs(exp100 - limit100) / limit100 < std::abs(exp10 - limit) / limit);

    CHECK_THROWS_AS(wrm::correlation_limit_complete(0.0, 10), wrm::DomainError);
    CHECK_THROWS_AS(wrm::correlation_limit_complete(1.0, 10), wrm::DomainError);
}

TEST_CASE("variance grows on the slow eigenmode at late times") {
    const double s = std::sqrt(0.5);
    const double l2 = wrm::complete_eigenvalues(s, 10).lambda2;
    std::vector<double> ts, logv;
    for (double t = 40.0; t <= 60.0; t += 0.5) {
        ts.push_back(t);
        logv.push_back(std::log(wrm::variance_complete(wrm::solve_complete(s, 10, t))));
    }
    CHECK(wrm::fit_slope(ts, logv) == doctest::Approx(l2).epsilon(0.01));
}

TEST_CASE("taxation pins the moments to a stationary point") {
    const double s = std::sqrt(0.5);
    const auto st = wrm::taxed_stationary(s, 10, 0.5);
    CHECK(st.x == doctest::Approx(29.0 / 18.0).epsilon(1e-13));
    CHECK(st.y == doctest::Approx(10.0 / 9.0).epsilon(1e-13));
    // Stationarity under the hand-written field.
    const auto d = wrm::complete_rhs(st, s, 10, 0.5);
    CHECK(std::abs(d.x) < 1e-13);
    CHECK(std::abs(d.y) < 1e-13);

    const auto eig = wrm::taxed_eigenvalues(s, 10, 0.5);
    CHECK(eig.lambda1 == doctest::Approx((-29.0 - std::sqrt(193.0)) / 18.0).epsilon(1e-13));
    CHECK(eig.lambda2 == doctest::Approx((-29.0 + std::sqrt(193.0)) / 18.0).epsilon(1e-13));
    CHECK(eig.lambda1 < 0.0);
    CHECK(eig.lambda2 < 0.0);

    // Long-run relaxation reaches the stationary point.
    const auto late = rk4_reference(s, 10, 0.5, 30.0, 1e-3);
    CHECK(std::abs(late.x - st.x) < 1e-8);
    CHECK(std::abs(late.y - st.y) < 1e-8);

    CHECK_THROWS_AS(wrm::taxed_stationary(s, 10, 0.0), wrm::DomainError);
}

TEST_CASE("general vector field against a dense matrix oracle") {
    for (const auto& net : {ExchangeNetwork::star(6), ExchangeNetwork::from_edge_list_text(
                                                          "0 1\n1 2\n2 3\n3 0\n0 2\n2 4\n")}) {
        const int n = net.n_agents();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
        for (int j = 0; j < n; ++j)
            for (int i : net.neighbours(j)) J(i, j) = 1.0 / net.degree(j);

        Eigen::VectorXd m(n);
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i) {
            m(i) = 0.5 + 0.13 * i;
            for (int j = 0; j < n; ++j) M(i, j) = 1.0 + 0.01 * (i + j) + 0.02 * i * j;
        }
        M = ((M + M.transpose()) / 2.0).eval();

        const double sigma = 0.7;
        Eigen::VectorXd dm;
        Eigen::MatrixXd dM;
        wrm::general_rhs(net, sigma, m, M, dm, dM);

        const Eigen::VectorXd dm_ref = J * m - m;
        Eigen::MatrixXd G = M * J.transpose();
        Eigen::MatrixXd dM_ref = G + G.transpose() - 2.0 * M;
        dM_ref.diagonal() += 2.0 * sigma * sigma * M.diagonal();

        CHECK((dm - dm_ref).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((dM - dM_ref).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("general integrator reduces to the complete closed form") {
    const double s = std::sqrt(0.5);
    const auto net = ExchangeNetwork::complete(10);
    const auto init = wrm::initial_moments(net, wrm::InitKind::one);
    wrm::IntegrateOptions opt;
    opt.max_step = 1e-3;
    const auto states = wrm::integrate_general(net, s, init, {0.5, 3.0}, opt);
    REQUIRE(states.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto sol = wrm::solve_complete(s, 10, states[k].t);
        CHECK(wrm::variance_of(states[k], 0) ==
              doctest::Approx(sol.x - 1.0).scale(0.0).epsilon(1e-8));
        CHECK(wrm::mean_variance(states[k]) ==
              doctest::Approx(sol.x - 1.0).scale(0.0).epsilon(1e-8));
        CHECK(wrm::correlation_of(states[k], 2, 7) ==
              doctest::Approx((sol.y - 1.0) / (sol.x - 1.0)).scale(0.0).epsilon(1e-8));
        CHECK(wrm::mean_correlation_at_distance(states[k], net, 1) ==
              doctest::Approx((sol.y - 1.0) / (sol.x - 1.0)).scale(0.0).epsilon(1e-8));
        // Means are conserved on a regular network.
        for (int i = 0; i < 10; ++i) CHECK(states[k].m(i) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("small-time degree laws on a star") {
    const double s = std::sqrt(0.5);
    const auto net = ExchangeNetwork::star(5);
    const double t = 3e-3;
    const auto init = wrm::initial_moments(net, wrm::InitKind::stationary);
    const auto st = wrm::integrate_general(net, s, init, {t}).front();

    const double z = net.avg_degree();  // 8/5
    for (int i = 0; i < 5; ++i) {
        const double k = net.degree(i);
        const double predicted = 2.0 * 0.5 * (k / z) * (k / z) * t;
        CHECK(wrm::variance_of(st, i) ==
              doctest::Approx(predicted).scale(0.0).epsilon(0.03));
    }
    // Hub-leaf correlation growth rate (k_i + k_j)/(2 k_i k_j) = 5/8.
    CHECK(wrm::correlation_of(st, 0, 1) ==
          doctest::Approx(5.0 / 8.0 * t).scale(0.0).epsilon(0.03));
}

TEST_CASE("correlation cascade orders on a ring") {
    const double s = 0.5;  // sigma^2 = 0.25
    const auto net = ExchangeNetwork::ring(10);
    const double t = 2e-3;
    const auto init = wrm::initial_moments(net, wrm::InitKind::one);
    const auto st = wrm::integrate_general(net, s, init, {t}).front();

    CHECK(wrm::mean_correlation_at_distance(st, net, 1) ==
          doctest::Approx(t / 2.0).scale(0.0).epsilon(0.02));
    CHECK(wrm::mean_correlation_at_distance(st, net, 2) ==
          doctest::Approx(t * t / 6.0).scale(0.0).epsilon(0.03));
    CHECK(wrm::mean_correlation_at_distance(st, net, 3) ==
          doctest::Approx(t * t * t / 24.0).scale(0.0).epsilon(0.05));
    CHECK_THROWS_AS(wrm::mean_correlation_at_distance(st, net, 6), wrm::DomainError);
}

TEST_CASE("moment integration stays physical") {
    const auto net = ExchangeNetwork::star(5);
    const auto init = wrm::initial_moments(net, wrm::InitKind::one);
    const auto states =
        wrm::integrate_general(net, std::sqrt(0.5), init, {1.0, 3.0, 5.0});
    for (const auto& st : states) {
        CHECK((st.M - st.M.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        for (int i = 0; i < 5; ++i) CHECK(wrm::variance_of(st, i) >= 0.0);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                if (i != j) CHECK(std::abs(wrm::correlation_of(st, i, j)) <= 1.0 + 1e-9);
    }
    // Total expected wealth is conserved by the exchange dynamics.
    for (const auto& st : states) CHECK(st.m.sum() == doctest::Approx(5.0).epsilon(1e-10));
}

TEST_CASE("step-size bound stays usable on degree-skewed networks") {
    // The row estimate alone would force a microscopic step on a big star; the
    // column estimate keeps the spectral bound modest.
    const double b_star = wrm::moment_operator_bound(ExchangeNetwork::star(200), std::sqrt(0.5));
    CHECK(b_star < 0.0);
    CHECK(b_star > -6.0);
    const double b_ring = wrm::moment_operator_bound(ExchangeNetwork::ring(10), 0.5);
    CHECK(b_ring < 0.0);
    CHECK(b_ring > -8.0);
}

TEST_CASE("moment integration guards") {
    const auto net = ExchangeNetwork::star(5);
    const auto init = wrm::initial_moments(net, wrm::InitKind::one);
    CHECK_THROWS_AS(wrm::integrate_general(net, 0.5, init, {}), wrm::DomainError);
    CHECK_THROWS_AS(wrm::integrate_general(net, 0.5, init, {2.0, 1.0}), wrm::DomainError);
    CHECK_THROWS_AS(wrm::integrate_general(net, 0.5, init, {-1.0}), wrm::DomainError);

    CHECK_THROWS_AS(wrm::initial_moments(net, wrm::InitKind::values, {1.0, 1.0}),
                    wrm::ConfigError);
    CHECK_THROWS_AS(
        wrm::initial_moments(net, wrm::InitKind::values, {1.0, 1.0, -2.0, 1.0, 1.0}),
        wrm::ConfigError);

    const auto st = wrm::integrate_general(net, 0.5, init, {0.5}).front();
    CHECK_THROWS_AS(wrm::variance_of(st, 9), wrm::DomainError);
    CHECK_THROWS_AS(wrm::correlation_of(st, 0, 9), wrm::DomainError);
}

TEST_CASE("stationary degree profile moments stay put") {
    // With a stationary start the first moments are a fixed point of the flow.
    const auto net = ExchangeNetwork::from_edge_list_text("0 1\n1 2\n2 3\n3 0\n0 2\n");
    const auto init = wrm::initial_moments(net, wrm::InitKind::stationary);
    const auto st = wrm::integrate_general(net, 0.3, init, {4.0}).front();
    const auto target = net.stationary_wealth();
    for (int i = 0; i < net.n_agents(); ++i)
        CHECK(st.m(i) == doctest::Approx(target[std::size_t(i)]).epsilon(1e-9));
}
