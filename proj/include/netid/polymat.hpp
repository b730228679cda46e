#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "netid/errors.hpp"

namespace netid {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;

/// Matrix polynomial in the backward shift operator: P(q^-1) = sum_l P_l q^-l.
/// Coefficients are stored dense, one matrix per lag; immutable in normal use.
class PolyMatrix {
public:
    PolyMatrix() = default;
    PolyMatrix(int rows, int cols, int degree);
    explicit PolyMatrix(std::vector<Mat> coeffs);

    static PolyMatrix identity(int n);
    static PolyMatrix constant(const Mat& m);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    const Mat& coeff(int lag) const;
    Mat& coeff(int lag);
    /// Coefficient at any lag; zero matrix beyond the stored degree.
    Mat coeff_or_zero(int lag) const;

    const std::vector<Mat>& coeffs() const { return coeffs_; }

    bool all_finite() const;
    PolyMatrix transpose() const;

    /// sum_l P_l z^-l
    CMat eval(std::complex<double> z) const;

    /// sum_l P_l s(:, t-l); requires t >= degree (strict, no zero padding).
    Vec filter(const Mat& signal, int t) const;

    /// Filters the whole signal with zero initial conditions (s(t)=0 for t<0).
    Mat filter_all(const Mat& signal) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Mat> coeffs_;
};

PolyMatrix add(const PolyMatrix& p, const PolyMatrix& q);
PolyMatrix mul(const PolyMatrix& p, const PolyMatrix& q);

struct StructureFlags {
    bool symmetric = false;
    bool diagonal = false;
    bool zero_row_sum = false;
    bool sign_laplacian = false;
};

/// Structural predicates, each checked at every lag with absolute tolerance.
StructureFlags structure(const PolyMatrix& p, double tol = 1e-9);

/// Lower-triangular banded Toeplitz with first column x (zero padded to `rows`),
/// shifted down by one per column. Requires rows >= cols.
Mat toeplitz(const Vec& x, int rows, int cols);

struct StabilityReport {
    bool stable = true;
    std::vector<std::complex<double>> roots; // sorted by decreasing modulus
    double max_abs = 0.0;
};

/// Roots of det(sum_l A_l z^(n-l)) via block-companion eigenvalues after
/// normalizing by A_0^-1; stable iff all roots satisfy |z| < 1 + tol.
StabilityReport is_inverse_stable(const PolyMatrix& a, double tol = 1e-9);

} // namespace netid
