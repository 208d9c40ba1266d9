#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wrm/network.hpp"
#include "wrm/sde.hpp"

namespace wrm {

// Second moments on the complete graph with unit mean wealth:
// x = <v_i^2>, y = <v_i v_j> for i != j.
struct CompleteMoments {
    double x = 1.0;
    double y = 1.0;
};

// dx/dt = 2[y - (1 - sigma^2 + tax) x + tax]
// dy/dt = (2/(n-1))(x - y) + 2 tax (1 - y)
CompleteMoments complete_rhs(const CompleteMoments& s, double sigma, int n, double tax = 0.0);

struct CompleteEigen {
    double lambda1;  // more negative
    double lambda2;  // closer to zero (positive for 0 < sigma < 1, tax = 0)
};

// Eigenvalues of the linear part; requires 0 <= sigma < 1 for the untaxed case.
CompleteEigen complete_eigenvalues(double sigma, int n);
CompleteEigen taxed_eigenvalues(double sigma, int n, double tax);

// Closed-form solution via eigen-decomposition of the 2x2 system.
CompleteMoments solve_complete(double sigma, int n, double t,
                               const CompleteMoments& init = {1.0, 1.0}, double tax = 0.0);

double variance_complete(const CompleteMoments& s);     // x - 1
double correlation_complete(const CompleteMoments& s);  // (y - 1)/(x - 1)

// Late-time correlation plateau (y-1)/(x-1) -> (lambda2 + 1)/2; 0 < sigma < 1.
double correlation_limit_complete(double sigma, int n);
// Large-N expansion 1 - sigma^2 + sigma^2/((1 - sigma^2) n).
double correlation_limit_expansion(double sigma, int n);

// Fixed point of the taxed system; requires tax > 0.
CompleteMoments taxed_stationary(double sigma, int n, double tax);

// Moment state for an arbitrary network: first moments m and the full
// second-moment matrix M (symmetric).
struct GeneralMomentState {
    double t = 0.0;
    Eigen::VectorXd m;
    Eigen::MatrixXd M;
};

GeneralMomentState initial_moments(const ExchangeNetwork& net, InitKind init,
                                   const std::vector<double>& values = {});

// dm = (J - I) m;  dM = G + G^T - 2M + 2 sigma^2 diag(M) with G = M J^T.
void general_rhs(const ExchangeNetwork& net, double sigma, const Eigen::VectorXd& m,
                 const Eigen::MatrixXd& M, Eigen::VectorXd& dm, Eigen::MatrixXd& dM);

// Most negative Gershgorin estimate for the moment operator (tighter of the
// row and column discs); the integrator step is scaled off its magnitude.
double moment_operator_bound(const ExchangeNetwork& net, double sigma);

struct IntegrateOptions {
    double max_step = 1e-2;
    bool psd_check = true;     // covariance must stay PSD at sample times
    double psd_tol = 1e-8;     // relative slack for round-off
};

// Fixed-step RK4 through the sorted sample times; returns one state per time.
std::vector<GeneralMomentState> integrate_general(const ExchangeNetwork& net, double sigma,
                                                  const GeneralMomentState& init,
                                                  const std::vector<double>& sample_times,
                                                  const IntegrateOptions& opt = {});

double variance_of(const GeneralMomentState& s, int i);
double covariance_of(const GeneralMomentState& s, int i, int j);
double correlation_of(const GeneralMomentState& s, int i, int j);
double mean_variance(const GeneralMomentState& s);
double mean_correlation_at_distance(const GeneralMomentState& s, const ExchangeNetwork& net,
                                    int distance);

}  // namespace wrm
