#pragma once

#include "netid/simulate.hpp"

namespace netid {

/// High-order nonparametric ARX estimate (Step 1). The parameter vector zeta
/// stacks, row by row of the network, the a-coefficient blocks (lags 1..n per
/// signal) followed by the b-coefficient blocks (lags 0..n per excitation).
struct ArxEstimate {
    int L = 0;
    int K = 0;
    int n = 0;
    long N_used = 0;

    Vec zeta;
    Mat Lambda_est; // residual covariance
    Mat gram;       // M = (1/N_used) sum psi psi', shared by all rows

    bool noise_degenerate = false; // residual power below 1e-12 x signal power
    double residual_power = 0.0;
    double signal_power = 0.0;

    int row_param_dim() const { return L * n + K * (n + 1); }
    int dim() const { return L * row_param_dim(); }

    int zeta_a_index(int i, int j, int lag) const; // lag in 1..n
    int zeta_b_index(int i, int j, int lag) const; // lag in 0..n

    double a_coeff(int i, int j, int lag) const; // entry of the monic expansion; lag 0 is the identity
    double b_coeff(int i, int j, int lag) const;

    /// Information matrix (1/N) sum phi Lambda^-1 phi' assembled for the
    /// supplied innovation-covariance inverse.
    Mat info_matrix(const Mat& lambda_bar_inv) const;
};

/// Regressor phi^n(t) = [-w_1(t-1..t-n), ..., -w_L(t-1..t-n),
///                        r_1(t..t-n),   ..., r_K(t..t-n)]; t is 0-based, t >= n.
Vec build_regressor(const Dataset& data, int n, int t);

/// Least-squares fit of the order-n ARX model, row-decomposed into L MISO
/// problems sharing one orthogonal decomposition of the regressor matrix.
ArxEstimate arx_estimate(const Dataset& data, int n);

} // namespace netid
