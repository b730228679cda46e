#pragma once

#include <vector>

#include "netid/arxstage.hpp"

namespace netid {

/// Index maps for the stacked structured parameter vector
/// vartheta = [theta_a; theta_b; eta_c]: theta_a holds the upper triangle of
/// the symmetric A (rows i, then j from i to L, lags ascending), theta_b the
/// full B, eta_c the lag >= 1 coefficients of Cbar (Cbar_0 is tied to A_0).
struct ParamLayout {
    int L = 0;
    int K = 0;
    int na = 0;
    int nb = 0;
    int nc = 0;

    int dim_a() const { return L * (L + 1) / 2 * (na + 1); }
    int dim_b() const { return L * K * (nb + 1); }
    int dim_c() const { return L * L * nc; }
    int dim() const { return dim_a() + dim_b() + dim_c(); }

    int a_index(int i, int j, int lag) const; // unordered pair, 0-based, lag 0..na
    int b_index(int i, int j, int lag) const; // lag 0..nb
    int c_index(int i, int j, int lag) const; // lag 1..nc
};

ParamLayout make_layout(int L, int K, int na, int nb, int nc);

struct Constraint {
    Mat Gamma;  // m x dim
    Vec gamma;  // m
    int count() const { return static_cast<int>(gamma.size()); }
};

struct UnpackedModel {
    PolyMatrix A;
    PolyMatrix B;
    PolyMatrix Cbar; // Cbar_0 = A_0
};

Vec pack(const PolyMatrix& A, const PolyMatrix& B, const PolyMatrix& Cbar, const ParamLayout& layout);
UnpackedModel unpack(const Vec& vartheta, const ParamLayout& layout);

/// Regression matrix of the null-space relation Q(zeta) vartheta =
/// -stack(A - Cbar*Abreve | lags 1..n, B - Cbar*Bbreve | lags 0..n); rows are
/// ordered (network row, column, lag) to line up with the zeta layout.
Mat build_Q(const ArxEstimate& arx, const ParamLayout& layout);

/// Residual-shaping matrix T(vartheta): block minus-Toeplitz matrices of Cbar
/// mapping zeta errors to the rows of Q.
Mat build_T(const Vec& vartheta, const ParamLayout& layout, int n);

struct KktSolution {
    Vec theta;
    Vec lambda;
};

/// Solves [[H, G'], [G, 0]] [theta; lambda] = [0; gamma].
KktSolution solve_kkt(const Mat& H, const Mat& Gamma, const Vec& gamma);

struct StructuredEstimate {
    Vec vartheta;
    Vec lambda;
    Mat Lambda_bar;                 // structured residual covariance
    std::vector<double> cost_trace; // det-cost per accepted solve (Step 2 first)
    int iterations = 0;
    double feasibility = 0.0;       // ||Gamma vartheta - gamma||_inf
    bool noise_degenerate = false;
    bool divergence = false;
    bool improved = false;          // Step 3 beat the Step 2 cost
    bool weighted = false;
};

/// Structured residual Cbar^-1 (A w - B r) for the packed parameters.
Mat structured_residual(const Vec& vartheta, const ParamLayout& layout, const Dataset& data);

StructuredEstimate step2(const ArxEstimate& arx, const ParamLayout& layout, const Constraint& constraint,
                         const Dataset& data, bool use_weighting = true);

StructuredEstimate step3(const ArxEstimate& arx, const StructuredEstimate& prev, const Dataset& data,
                         const ParamLayout& layout, const Constraint& constraint, int max_iter = 50,
                         double tol = 1e-9);

struct NoiseModel {
    PolyMatrix C; // monic
    Mat Lambda;
};

/// Step 4: C = Cbar A_0^-1 and Lambda = A_0 Lambda_bar A_0.
NoiseModel recover_noise(const StructuredEstimate& est, const ParamLayout& layout);

} // namespace netid
