#include "netid/arxstage.hpp"

#include <Eigen/QR>
#include <cmath>
#include <vector>

namespace netid {

int ArxEstimate::zeta_a_index(int i, int j, int lag) const {
    return (i * L + j) * n + (lag - 1);
}

int ArxEstimate::zeta_b_index(int i, int j, int lag) const {
    return L * L * n + (i * K + j) * (n + 1) + lag;
}

double ArxEstimate::a_coeff(int i, int j, int lag) const {
    if (lag == 0) return i == j ? 1.0 : 0.0;
    if (lag > n) return 0.0;
    return zeta(zeta_a_index(i, j, lag));
}

double ArxEstimate::b_coeff(int i, int j, int lag) const {
    if (lag < 0 || lag > n) return 0.0;
    return zeta(zeta_b_index(i, j, lag));
}

Mat ArxEstimate::info_matrix(const Mat& lambda_bar_inv) const {
    // The zeta layout stacks the a-parameters of all rows before the
    // b-parameters, so the row-grouped Kronecker form Lambda^-1 (x) gram has to
    // be rearranged through the (network row, regressor position) maps.
    const int d = dim();
    std::vector<int> net_row(d), pos(d);
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j)
            for (int lag = 1; lag <= n; ++lag) {
                const int idx = zeta_a_index(i, j, lag);
                net_row[idx] = i;
                pos[idx] = j * n + (lag - 1);
            }
        for (int j = 0; j < K; ++j)
            for (int lag = 0; lag <= n; ++lag) {
                const int idx = zeta_b_index(i, j, lag);
                net_row[idx] = i;
                pos[idx] = L * n + j * (n + 1) + lag;
            }
    }
    Mat out(d, d);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) out(p, q) = lambda_bar_inv(net_row[p], net_row[q]) * gram(pos[p], pos[q]);
    return out;
}

Vec build_regressor(const Dataset& data, int n, int t) {
    require(n >= 1, ErrorCode::DomainError, "build_regressor: order must be >= 1");
    require(t >= n && t < data.N(), ErrorCode::DomainError, "build_regressor: t out of range");
    const int L = data.L();
    const int K = data.K();
    Vec phi(L * n + K * (n + 1));
    int pos = 0;
    for (int j = 0; j < L; ++j)
        for (int l = 1; l <= n; ++l) phi(pos++) = -data.w(j, t - l);
    for (int j = 0; j < K; ++j)
        for (int l = 0; l <= n; ++l) phi(pos++) = data.r(j, t - l);
    return phi;
}

ArxEstimate arx_estimate(const Dataset& data, int n) {
    const int L = data.L();
    const int K = data.K();
    const int N = data.N();
    const int m = L * n + K * (n + 1);
    require(N - n > m, ErrorCode::DomainError, "arx_estimate: not enough samples for the requested order");
    require(data.w.allFinite() && data.r.allFinite(), ErrorCode::DomainError, "arx_estimate: non-finite data");

    const int rows = N - n;
    Mat psi(rows, m);
    Mat targets(rows, L);
    for (int t = n; t < N; ++t) {
        psi.row(t - n) = build_regressor(data, n, t).transpose();
        targets.row(t - n) = data.w.col(t).transpose();
    }

    Eigen::ColPivHouseholderQR<Mat> qr(psi);
    qr.setThreshold(1e-10);
    if (qr.rank() < m)
        fail(ErrorCode::InsufficientExcitation,
             "arx_estimate: regressor Gram matrix is singular (insufficient excitation)");

    Mat coef = qr.solve(targets); // m x L, column i = parameters of row i
    Mat resid = targets - psi * coef;

    ArxEstimate est;
    est.L = L;
    est.K = K;
    est.n = n;
    est.N_used = rows;
    est.zeta = Vec(static_cast<long>(L) * m);
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j)
            for (int l = 1; l <= n; ++l) est.zeta(est.zeta_a_index(i, j, l)) = coef(j * n + (l - 1), i);
        for (int j = 0; j < K; ++j)
            for (int l = 0; l <= n; ++l) est.zeta(est.zeta_b_index(i, j, l)) = coef(L * n + j * (n + 1) + l, i);
    }
    est.Lambda_est = (resid.transpose() * resid) / static_cast<double>(rows);
    est.gram = (psi.transpose() * psi) / static_cast<double>(rows);
    est.residual_power = resid.squaredNorm() / (static_cast<double>(rows) * L);
    est.signal_power = data.w.squaredNorm() / (static_cast<double>(N) * L);
    est.noise_degenerate = est.residual_power < 1e-12 * std::max(est.signal_power, 1e-300);
    return est;
}

} // namespace netid
