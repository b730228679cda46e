#include "netid/simulate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "netid/rng.hpp"

namespace netid {

namespace {

// PSD square root via eigendecomposition; tolerates semidefinite Lambda.
Mat psd_sqrt(const Mat& lambda) {
    require((lambda - lambda.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + lambda.cwiseAbs().maxCoeff()),
            ErrorCode::DomainError, "noise covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(lambda);
    const double floor = -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    require(es.eigenvalues().minCoeff() >= floor, ErrorCode::DomainError,
            "noise covariance has a negative eigenvalue");
    Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

GenerateDetail generate_detail(const DiscreteModel& model, const Mat& r, const NoiseSpec& noise) {
    const int L = model.A.rows();
    const int N = static_cast<int>(r.cols());
    require(model.B.cols() == r.rows(), ErrorCode::DimensionMismatch, "generate: r row count != B cols");
    require(N > 0, ErrorCode::DomainError, "generate: empty excitation");

    require(model.A.coeff(0).allFinite(), ErrorCode::DomainError, "generate: non-finite A_0");
    Eigen::FullPivLU<Mat> a0(model.A.coeff(0));
    require(a0.isInvertible(), ErrorCode::SingularMatrix, "generate: singular A_0");
    StabilityReport stab = is_inverse_stable(model.A);
    if (!stab.stable) {
        std::ostringstream os;
        os << "generate: model not inverse-stable, max root modulus " << stab.max_abs;
        fail(ErrorCode::UnstableModel, os.str());
    }

    Mat e = Mat::Zero(L, N);
    if ((noise.Lambda.array() != 0.0).any()) {
        e = psd_sqrt(noise.Lambda) * gaussian_matrix(L, N, noise.seed);
    }

    // Driving term B r + C e, then the A recursion with zero initial conditions.
    Mat drive = model.B.filter_all(r) + model.C.filter_all(e);
    Mat w = Mat::Zero(L, N);
    const int na = model.A.degree();
    for (int t = 0; t < N; ++t) {
        Vec rhs = drive.col(t);
        for (int l = 1; l <= na && l <= t; ++l) rhs -= model.A.coeff(l) * w.col(t - l);
        w.col(t) = a0.solve(rhs);
    }

    GenerateDetail out;
    out.data = Dataset{model.Ts, std::move(w), r};
    out.e = std::move(e);
    return out;
}

Dataset generate(const DiscreteModel& model, const Mat& r, const NoiseSpec& noise) {
    return generate_detail(model, r, noise).data;
}

Mat innovation_covariance(const Mat& A0, const Mat& Lambda) {
    Eigen::FullPivLU<Mat> lu(A0);
    require(lu.isInvertible(), ErrorCode::SingularMatrix, "innovation_covariance: singular A_0");
    Mat inv = lu.inverse();
    return inv * Lambda * inv.transpose();
}

Mat prediction_error(const DiscreteModel& model, const Dataset& data) {
    const int L = model.A.rows();
    require(data.L() == L, ErrorCode::DimensionMismatch, "prediction_error: data/model L mismatch");
    require(data.K() == model.B.cols(), ErrorCode::DimensionMismatch, "prediction_error: data/model K mismatch");
    require((model.C.coeff(0) - Mat::Identity(L, L)).cwiseAbs().maxCoeff() <= 1e-9,
            ErrorCode::DomainError, "prediction_error: C not monic");

    // Cbar = C A_0 so that Cbar^-1 (A w - B r) = A_0^-1 C^-1 (A w - B r).
    Mat x = model.A.filter_all(data.w) - model.B.filter_all(data.r);
    Eigen::FullPivLU<Mat> a0(model.A.coeff(0));
    require(a0.isInvertible(), ErrorCode::SingularMatrix, "prediction_error: singular A_0");

    const int N = data.N();
    const int nc = model.C.degree();
    Mat eps = Mat::Zero(L, N);
    for (int t = 0; t < N; ++t) {
        Vec rhs = x.col(t);
        for (int l = 1; l <= nc && l <= t; ++l) rhs -= model.C.coeff(l) * (model.A.coeff(0) * eps.col(t - l));
        eps.col(t) = a0.solve(rhs);
    }
    return eps;
}

double cost_weighted(const Mat& eps, const Mat& S) {
    require(S.rows() == eps.rows() && S.cols() == eps.rows(), ErrorCode::DimensionMismatch,
            "cost_weighted: weight dimension mismatch");
    Eigen::LLT<Mat> llt(S);
    require(llt.info() == Eigen::Success, ErrorCode::DomainError, "cost_weighted: S not positive definite");
    const int N = static_cast<int>(eps.cols());
    require(N > 0, ErrorCode::DomainError, "cost_weighted: empty sample");
    double acc = 0.0;
    for (int t = 0; t < N; ++t) acc += eps.col(t).dot(S * eps.col(t));
    return acc / N;
}

DetCost cost_det(const Mat& eps) {
    const int L = static_cast<int>(eps.rows());
    const int N = static_cast<int>(eps.cols());
    require(N > L, ErrorCode::DomainError, "cost_det: need more samples than channels");
    Mat cov = (eps * eps.transpose()) / static_cast<double>(N);
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    DetCost out;
    if (!(lmin > 1e-14 * std::max(lmax, 1e-300))) {
        out.value = 0.0;
        out.degenerate = true;
        return out;
    }
    out.value = es.eigenvalues().prod();
    return out;
}

Mat discard_transient(const Mat& m, int k) {
    require(k >= 0 && k < m.cols(), ErrorCode::DomainError, "discard_transient: bad cut");
    return m.rightCols(m.cols() - k);
}

WhitenessReport whiteness(const Mat& eps, int max_lag) {
    const int L = static_cast<int>(eps.rows());
    const int N = static_cast<int>(eps.cols());
    require(max_lag >= 1 && max_lag < N, ErrorCode::DomainError, "whiteness: bad lag range");
    WhitenessReport rep;
    rep.bound = 3.0 / std::sqrt(static_cast<double>(N));
    for (int i = 0; i < L; ++i) {
        Eigen::RowVectorXd row = eps.row(i);
        const double mean = row.mean();
        row.array() -= mean;
        const double c0 = row.squaredNorm() / N;
        if (c0 <= 0.0) continue;
        for (int lag = 1; lag <= max_lag; ++lag) {
            const double c = (row.rightCols(N - lag).cwiseProduct(row.leftCols(N - lag))).sum() / N;
            const double rho = c / c0;
            rep.max_abs_corr = std::max(rep.max_abs_corr, std::abs(rho));
            if (std::abs(rho) > rep.bound) ++rep.violations;
        }
    }
    return rep;
}

} // namespace netid
