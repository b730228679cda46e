#include "netid/polymat.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace netid {

PolyMatrix::PolyMatrix(int rows, int cols, int degree) : rows_(rows), cols_(cols) {
    require(rows > 0 && cols > 0 && degree >= 0, ErrorCode::DomainError, "PolyMatrix: bad dimensions");
    coeffs_.assign(degree + 1, Mat::Zero(rows, cols));
}

PolyMatrix::PolyMatrix(std::vector<Mat> coeffs) {
    require(!coeffs.empty(), ErrorCode::DomainError, "PolyMatrix: empty coefficient list");
    rows_ = static_cast<int>(coeffs.front().rows());
    cols_ = static_cast<int>(coeffs.front().cols());
    for (const Mat& m : coeffs)
        require(m.rows() == rows_ && m.cols() == cols_, ErrorCode::DimensionMismatch,
                "PolyMatrix: inconsistent coefficient dimensions");
    coeffs_ = std::move(coeffs);
}

PolyMatrix PolyMatrix::identity(int n) { return constant(Mat::Identity(n, n)); }

PolyMatrix PolyMatrix::constant(const Mat& m) {
    std::vector<Mat> c{m};
    return PolyMatrix(std::move(c));
}

const Mat& PolyMatrix::coeff(int lag) const {
    require(lag >= 0 && lag <= degree(), ErrorCode::DomainError, "PolyMatrix::coeff: lag out of range");
    return coeffs_[lag];
}

Mat& PolyMatrix::coeff(int lag) {
    require(lag >= 0 && lag <= degree(), ErrorCode::DomainError, "PolyMatrix::coeff: lag out of range");
    return coeffs_[lag];
}

Mat PolyMatrix::coeff_or_zero(int lag) const {
    if (lag < 0 || lag > degree()) return Mat::Zero(rows_, cols_);
    return coeffs_[lag];
}

bool PolyMatrix::all_finite() const {
    for (const Mat& m : coeffs_)
        if (!m.allFinite()) return false;
    return true;
}

PolyMatrix PolyMatrix::transpose() const {
    std::vector<Mat> c;
    c.reserve(coeffs_.size());
    for (const Mat& m : coeffs_) c.push_back(m.transpose());
    return PolyMatrix(std::move(c));
}

CMat PolyMatrix::eval(std::complex<double> z) const {
    // Horner in z^-1: P_0 + z^-1 (P_1 + z^-1 (...)).
    const std::complex<double> zinv = 1.0 / z;
    CMat acc = coeffs_.back().cast<std::complex<double>>();
    for (int l = degree() - 1; l >= 0; --l) acc = coeffs_[l].cast<std::complex<double>>() + zinv * acc;
    return acc;
}

Vec PolyMatrix::filter(const Mat& signal, int t) const {
    require(signal.rows() == cols_, ErrorCode::DimensionMismatch, "filter: signal row count != polynomial cols");
    require(t >= degree() && t < signal.cols(), ErrorCode::DomainError, "filter: t out of range");
    Vec out = Vec::Zero(rows_);
    for (int l = 0; l <= degree(); ++l) out += coeffs_[l] * signal.col(t - l);
    return out;
}

Mat PolyMatrix::filter_all(const Mat& signal) const {
    require(signal.rows() == cols_, ErrorCode::DimensionMismatch, "filter_all: signal row count != polynomial cols");
    const int n = static_cast<int>(signal.cols());
    Mat out = Mat::Zero(rows_, n);
    for (int l = 0; l <= degree(); ++l) {
        if (l >= n) break;
        out.rightCols(n - l) += coeffs_[l] * signal.leftCols(n - l);
    }
    return out;
}

PolyMatrix add(const PolyMatrix& p, const PolyMatrix& q) {
    require(p.rows() == q.rows() && p.cols() == q.cols(), ErrorCode::DimensionMismatch, "add: dimension mismatch");
    std::vector<Mat> c;
    const int deg = std::max(p.degree(), q.degree());
    c.reserve(deg + 1);
    for (int l = 0; l <= deg; ++l) c.push_back(p.coeff_or_zero(l) + q.coeff_or_zero(l));
    return PolyMatrix(std::move(c));
}

PolyMatrix mul(const PolyMatrix& p, const PolyMatrix& q) {
    require(p.cols() == q.rows(), ErrorCode::DimensionMismatch, "mul: dimension mismatch");
    const int deg = p.degree() + q.degree();
    std::vector<Mat> c(deg + 1, Mat::Zero(p.rows(), q.cols()));
    for (int i = 0; i <= p.degree(); ++i)
        for (int j = 0; j <= q.degree(); ++j) c[i + j] += p.coeff(i) * q.coeff(j);
    return PolyMatrix(std::move(c));
}

StructureFlags structure(const PolyMatrix& p, double tol) {
    require(p.rows() == p.cols(), ErrorCode::DimensionMismatch, "structure: matrix polynomial must be square");
    StructureFlags f;
    f.symmetric = true;
    f.diagonal = true;
    f.zero_row_sum = true;
    bool offdiag_nonpos = true;
    const int n = p.rows();
    for (int l = 0; l <= p.degree(); ++l) {
        const Mat& m = p.coeff(l);
        if (((m - m.transpose()).cwiseAbs().maxCoeff()) > tol) f.symmetric = false;
        if ((m.rowwise().sum().cwiseAbs().maxCoeff()) > tol) f.zero_row_sum = false;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                if (std::abs(m(i, j)) > tol) f.diagonal = false;
                if (m(i, j) > tol) offdiag_nonpos = false;
            }
    }
    f.sign_laplacian = f.symmetric && f.zero_row_sum && offdiag_nonpos;
    return f;
}

Mat toeplitz(const Vec& x, int rows, int cols) {
    require(rows >= cols && cols >= 0, ErrorCode::DomainError, "toeplitz: requires rows >= cols");
    Mat out = Mat::Zero(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = c; r < rows; ++r) {
            const int k = r - c;
            out(r, c) = (k < x.size()) ? x(k) : 0.0;
        }
    return out;
}

StabilityReport is_inverse_stable(const PolyMatrix& a, double tol) {
    require(a.rows() == a.cols(), ErrorCode::DimensionMismatch, "is_inverse_stable: non-square");
    const int L = a.rows();
    const int n = a.degree();
    Eigen::FullPivLU<Mat> lu0(a.coeff(0));
    require(lu0.isInvertible(), ErrorCode::SingularMatrix, "is_inverse_stable: singular A_0");

    StabilityReport rep;
    if (n == 0) return rep; // constant polynomial, no roots

    // Block companion of the A_0-normalized polynomial.
    Mat comp = Mat::Zero(L * n, L * n);
    for (int l = 1; l <= n; ++l) comp.block(0, (l - 1) * L, L, L) = -lu0.solve(a.coeff(l));
    if (n > 1) comp.block(L, 0, L * (n - 1), L * (n - 1)).setIdentity();

    Eigen::EigenSolver<Mat> es(comp, /*computeEigenvectors=*/false);
    rep.roots.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(rep.roots.begin(), rep.roots.end(),
              [](const auto& u, const auto& v) { return std::abs(u) > std::abs(v); });
    rep.max_abs = rep.roots.empty() ? 0.0 : std::abs(rep.roots.front());
    rep.stable = rep.max_abs < 1.0 + tol;
    return rep;
}

} // namespace netid
