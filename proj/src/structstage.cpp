#include "netid/structstage.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace netid {

int ParamLayout::a_index(int i, int j, int lag) const {
    if (i > j) std::swap(i, j);
    require(i >= 0 && j < L && lag >= 0 && lag <= na, ErrorCode::DomainError, "a_index: out of range");
    const int row_offset = (na + 1) * (i * L - i * (i - 1) / 2);
    return row_offset + (j - i) * (na + 1) + lag;
}

int ParamLayout::b_index(int i, int j, int lag) const {
    require(i >= 0 && i < L && j >= 0 && j < K && lag >= 0 && lag <= nb, ErrorCode::DomainError,
            "b_index: out of range");
    return dim_a() + (i * K + j) * (nb + 1) + lag;
}

int ParamLayout::c_index(int i, int j, int lag) const {
    require(i >= 0 && i < L && j >= 0 && j < L && lag >= 1 && lag <= nc, ErrorCode::DomainError,
            "c_index: out of range");
    return dim_a() + dim_b() + (i * L + j) * nc + (lag - 1);
}

ParamLayout make_layout(int L, int K, int na, int nb, int nc) {
    require(L >= 1 && K >= 0 && na >= 0 && nb >= 0 && nc >= 0, ErrorCode::DomainError, "make_layout: bad counts");
    return ParamLayout{L, K, na, nb, nc};
}

Vec pack(const PolyMatrix& A, const PolyMatrix& B, const PolyMatrix& Cbar, const ParamLayout& layout) {
    require(A.rows() == layout.L && A.cols() == layout.L && A.degree() == layout.na, ErrorCode::DimensionMismatch,
            "pack: A dimensions do not match layout");
    require(B.rows() == layout.L && B.cols() == layout.K && B.degree() == layout.nb, ErrorCode::DimensionMismatch,
            "pack: B dimensions do not match layout");
    require(Cbar.rows() == layout.L && Cbar.cols() == layout.L && Cbar.degree() == layout.nc,
            ErrorCode::DimensionMismatch, "pack: Cbar dimensions do not match layout");

    Vec vt = Vec::Zero(layout.dim());
    for (int i = 0; i < layout.L; ++i)
        for (int j = i; j < layout.L; ++j)
            for (int l = 0; l <= layout.na; ++l) vt(layout.a_index(i, j, l)) = A.coeff(l)(i, j);
    for (int i = 0; i < layout.L; ++i)
        for (int j = 0; j < layout.K; ++j)
            for (int l = 0; l <= layout.nb; ++l) vt(layout.b_index(i, j, l)) = B.coeff(l)(i, j);
    for (int i = 0; i < layout.L; ++i)
        for (int j = 0; j < layout.L; ++j)
            for (int l = 1; l <= layout.nc; ++l) vt(layout.c_index(i, j, l)) = Cbar.coeff(l)(i, j);
    return vt;
}

UnpackedModel unpack(const Vec& vartheta, const ParamLayout& layout) {
    require(vartheta.size() == layout.dim(), ErrorCode::DimensionMismatch, "unpack: wrong parameter count");
    PolyMatrix A(layout.L, layout.L, layout.na);
    for (int i = 0; i < layout.L; ++i)
        for (int j = i; j < layout.L; ++j)
            for (int l = 0; l <= layout.na; ++l) {
                const double v = vartheta(layout.a_index(i, j, l));
                A.coeff(l)(i, j) = v;
                A.coeff(l)(j, i) = v;
            }
    // With no excitations B degenerates to an all-zero single column.
    PolyMatrix B = layout.K > 0 ? PolyMatrix(layout.L, layout.K, layout.nb) : PolyMatrix(layout.L, 1, 0);
    for (int i = 0; i < layout.L; ++i)
        for (int j = 0; j < layout.K; ++j)
            for (int l = 0; l <= layout.nb; ++l) B.coeff(l)(i, j) = vartheta(layout.b_index(i, j, l));
    PolyMatrix Cbar(layout.L, layout.L, layout.nc);
    Cbar.coeff(0) = A.coeff(0);
    for (int i = 0; i < layout.L; ++i)
        for (int j = 0; j < layout.L; ++j)
            for (int l = 1; l <= layout.nc; ++l) Cbar.coeff(l)(i, j) = vartheta(layout.c_index(i, j, l));
    return UnpackedModel{std::move(A), std::move(B), std::move(Cbar)};
}

Mat build_Q(const ArxEstimate& arx, const ParamLayout& layout) {
    const int L = layout.L;
    const int K = layout.K;
    const int n = arx.n;
    require(arx.L == L && arx.K == K, ErrorCode::DimensionMismatch, "build_Q: ARX dimensions do not match layout");
    require(n >= layout.na && n >= layout.nc && n >= layout.nb, ErrorCode::DimensionMismatch,
            "build_Q: ARX order below the structured orders");

    const int rows_a = L * L * n;
    const int rows_b = L * K * (n + 1);
    Mat Q = Mat::Zero(rows_a + rows_b, layout.dim());

    // Lag-l coefficient of Cbar*Abreve - A per matrix entry (g, j); the lag-0
    // rows vanish identically because Cbar_0 = A_0 and Abreve_0 = I.
    for (int g = 0; g < L; ++g)
        for (int j = 0; j < L; ++j)
            for (int l = 1; l <= n; ++l) {
                const int row = (g * L + j) * n + (l - 1);
                for (int m = 0; m < L; ++m) {
                    Q(row, layout.a_index(g, m, 0)) += arx.a_coeff(m, j, l);
                    for (int u = 1; u <= std::min(l, layout.nc); ++u)
                        Q(row, layout.c_index(g, m, u)) += arx.a_coeff(m, j, l - u);
                }
                if (l <= layout.na) Q(row, layout.a_index(g, j, l)) -= 1.0;
            }

    for (int g = 0; g < L; ++g)
        for (int j = 0; j < K; ++j)
            for (int l = 0; l <= n; ++l) {
                const int row = rows_a + (g * K + j) * (n + 1) + l;
                for (int m = 0; m < L; ++m) {
                    Q(row, layout.a_index(g, m, 0)) += arx.b_coeff(m, j, l);
                    for (int u = 1; u <= std::min(l, layout.nc); ++u)
                        Q(row, layout.c_index(g, m, u)) += arx.b_coeff(m, j, l - u);
                }
                if (l <= layout.nb) Q(row, layout.b_index(g, j, l)) -= 1.0;
            }

    return Q;
}

Mat build_T(const Vec& vartheta, const ParamLayout& layout, int n) {
    const int L = layout.L;
    const int K = layout.K;
    require(n >= layout.nc && n >= 1, ErrorCode::DimensionMismatch, "build_T: order below nc");
    UnpackedModel model = unpack(vartheta, layout);

    const int rows_a = L * L * n;
    const int rows_b = L * K * (n + 1);
    Mat T = Mat::Zero(rows_a + rows_b, rows_a + rows_b);

    for (int g = 0; g < L; ++g)
        for (int m = 0; m < L; ++m) {
            Vec col = Vec::Zero(n + 1);
            for (int u = 0; u <= layout.nc && u <= n; ++u) col(u) = model.Cbar.coeff(u)(g, m);
            const Mat blockA = toeplitz(col.head(n), n, n);
            const Mat blockB = toeplitz(col, n + 1, n + 1);
            for (int d = 0; d < L; ++d)
                T.block((g * L + d) * n, (m * L + d) * n, n, n) = -blockA;
            for (int j = 0; j < K; ++j)
                T.block(rows_a + (g * K + j) * (n + 1), rows_a + (m * K + j) * (n + 1), n + 1, n + 1) = -blockB;
        }
    return T;
}

KktSolution solve_kkt(const Mat& H, const Mat& Gamma, const Vec& gamma) {
    const int d = static_cast<int>(H.rows());
    const int m = static_cast<int>(Gamma.rows());
    require(H.cols() == d, ErrorCode::DimensionMismatch, "solve_kkt: H not square");
    require(m == 0 || Gamma.cols() == d, ErrorCode::DimensionMismatch, "solve_kkt: Gamma width mismatch");
    require(gamma.size() == m, ErrorCode::DimensionMismatch, "solve_kkt: gamma length mismatch");

    // Equilibrate before factorizing: the weighted H sits many orders of
    // magnitude above the O(1) constraint rows and its columns span the very
    // different natural scales of the a/b/c parameters, which poisons
    // pivot-based singularity detection. Scaling H (argmin-invariant, the
    // multipliers scale back) plus symmetric Jacobi scaling fixes both.
    const double hmax = H.cwiseAbs().maxCoeff();
    const double s = hmax > 0.0 ? hmax : 1.0;

    Mat kkt = Mat::Zero(d + m, d + m);
    kkt.topLeftCorner(d, d) = H / s;
    if (m > 0) {
        kkt.topRightCorner(d, m) = Gamma.transpose();
        kkt.bottomLeftCorner(m, d) = Gamma;
    }
    Vec rhs = Vec::Zero(d + m);
    rhs.tail(m) = gamma;

    Vec diag(d + m);
    for (int i = 0; i < d + m; ++i) {
        const double c = kkt.col(i).cwiseAbs().maxCoeff();
        diag(i) = c > 0.0 ? 1.0 / std::sqrt(c) : 1.0;
    }
    Mat scaled = diag.asDiagonal() * kkt * diag.asDiagonal();

    Eigen::FullPivLU<Mat> lu(scaled);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
        fail(ErrorCode::IdentifiabilityFailure,
             "solve_kkt: singular bordered system (model set not identifiable from this data)");
    Vec sol = diag.asDiagonal() * lu.solve(Vec(diag.asDiagonal() * rhs));
    if (!sol.allFinite())
        fail(ErrorCode::IdentifiabilityFailure, "solve_kkt: bordered solve produced non-finite values");
    return KktSolution{sol.head(d), s * sol.tail(m)};
}

Mat structured_residual(const Vec& vartheta, const ParamLayout& layout, const Dataset& data) {
    UnpackedModel model = unpack(vartheta, layout);
    require(data.L() == layout.L, ErrorCode::DimensionMismatch, "structured_residual: L mismatch");

    Mat x = model.A.filter_all(data.w);
    if (layout.K > 0) x -= model.B.filter_all(data.r);

    Eigen::FullPivLU<Mat> c0(model.Cbar.coeff(0));
    require(c0.isInvertible(), ErrorCode::SingularMatrix, "structured_residual: singular Cbar_0 = A_0");
    const int N = data.N();
    Mat eps = Mat::Zero(layout.L, N);
    for (int t = 0; t < N; ++t) {
        Vec rhs = x.col(t);
        for (int l = 1; l <= layout.nc && l <= t; ++l) rhs -= model.Cbar.coeff(l) * eps.col(t - l);
        eps.col(t) = c0.solve(rhs);
    }
    return eps;
}

namespace {

struct ResidualStats {
    Mat Lambda_bar;
    double cost = std::numeric_limits<double>::infinity();
    bool degenerate = false;
};

ResidualStats residual_stats(const Vec& vartheta, const ParamLayout& layout, const Dataset& data, int n) {
    ResidualStats st;
    Mat eps = structured_residual(vartheta, layout, data);
    if (!eps.allFinite()) {
        st.Lambda_bar = Mat::Zero(layout.L, layout.L);
        st.degenerate = true;
        return st;
    }
    Mat window = discard_transient(eps, n);
    st.Lambda_bar = (window * window.transpose()) / static_cast<double>(window.cols());
    DetCost dc = cost_det(window);
    st.cost = dc.value;
    st.degenerate = dc.degenerate;
    return st;
}

Mat inverse_spd(const Mat& m, bool* ok) {
    Eigen::LDLT<Mat> ldlt(m);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
        *ok = false;
        return Mat::Identity(m.rows(), m.cols());
    }
    *ok = true;
    return ldlt.solve(Mat::Identity(m.rows(), m.cols()));
}

} // namespace

StructuredEstimate step2(const ArxEstimate& arx, const ParamLayout& layout, const Constraint& constraint,
                         const Dataset& data, bool use_weighting) {
    require(constraint.Gamma.cols() == layout.dim(), ErrorCode::DimensionMismatch,
            "step2: constraint width does not match layout");
    Mat Q = build_Q(arx, layout);

    StructuredEstimate est;
    est.noise_degenerate = arx.noise_degenerate;

    Mat H;
    if (use_weighting && !arx.noise_degenerate) {
        bool ok = false;
        Mat lam_inv = inverse_spd(arx.Lambda_est, &ok);
        if (ok) {
            Mat P_inv = arx.info_matrix(lam_inv);
            H = Q.transpose() * P_inv * Q;
            est.weighted = true;
        }
    }
    if (!est.weighted) H = Q.transpose() * Q;

    KktSolution sol = solve_kkt(H, constraint.Gamma, constraint.gamma);
    est.vartheta = sol.theta;
    est.lambda = sol.lambda;
    est.feasibility = constraint.count() == 0
                          ? 0.0
                          : (constraint.Gamma * est.vartheta - constraint.gamma).cwiseAbs().maxCoeff();

    ResidualStats st = residual_stats(est.vartheta, layout, data, arx.n);
    est.Lambda_bar = st.Lambda_bar;
    est.cost_trace.push_back(st.cost);
    est.noise_degenerate = est.noise_degenerate || st.degenerate;
    return est;
}

StructuredEstimate step3(const ArxEstimate& arx, const StructuredEstimate& prev, const Dataset& data,
                         const ParamLayout& layout, const Constraint& constraint, int max_iter, double tol) {
    StructuredEstimate best = prev;
    best.iterations = 0;

    // Zero residual power means Step 2 already interpolates the data; the
    // covariance weighting is undefined there and iterating is a no-op.
    if (prev.noise_degenerate || max_iter <= 0) return best;

    Mat Q = build_Q(arx, layout);
    Vec current = prev.vartheta;
    Mat lambda_bar = prev.Lambda_bar;
    double prev_cost = prev.cost_trace.empty() ? std::numeric_limits<double>::infinity() : prev.cost_trace.back();
    double best_cost = prev_cost;
    int consecutive_increases = 0;

    for (int k = 1; k <= max_iter; ++k) {
        bool ok = false;
        Mat lam_inv = inverse_spd(lambda_bar, &ok);
        if (!ok) {
            best.divergence = true;
            break;
        }
        Mat P_inv = arx.info_matrix(lam_inv);

        Mat T = build_T(current, layout, arx.n);
        Mat Z = T.partialPivLu().solve(Q); // T^-1 Q
        if (!Z.allFinite()) fail(ErrorCode::SingularMatrix, "step3: singular T (degenerate Cbar)");
        Mat H = Z.transpose() * P_inv * Z;

        KktSolution sol = solve_kkt(H, constraint.Gamma, constraint.gamma);
        ResidualStats st = residual_stats(sol.theta, layout, data, arx.n);

        best.cost_trace.push_back(st.cost);
        best.iterations = k;

        if (std::isfinite(st.cost) && st.cost < best_cost) {
            best_cost = st.cost;
            best.vartheta = sol.theta;
            best.lambda = sol.lambda;
            best.Lambda_bar = st.Lambda_bar;
            best.weighted = true;
            best.improved = true;
            best.feasibility = constraint.count() == 0
                                   ? 0.0
                                   : (constraint.Gamma * sol.theta - constraint.gamma).cwiseAbs().maxCoeff();
        }

        if (!std::isfinite(st.cost) || st.cost > prev_cost) {
            if (++consecutive_increases >= 5) {
                best.divergence = true;
                break;
            }
        } else {
            consecutive_increases = 0;
        }

        const double rel_change = std::abs(st.cost - prev_cost) / std::max(std::abs(prev_cost), 1e-300);
        const bool done = std::isfinite(st.cost) && rel_change < tol;

        current = sol.theta;
        lambda_bar = st.Lambda_bar;
        prev_cost = st.cost;
        if (st.degenerate || done) break;
    }

    return best;
}

NoiseModel recover_noise(const StructuredEstimate& est, const ParamLayout& layout) {
    UnpackedModel model = unpack(est.vartheta, layout);
    Eigen::FullPivLU<Mat> a0(model.A.coeff(0));
    require(a0.isInvertible(), ErrorCode::SingularMatrix, "recover_noise: singular A_0");
    Mat a0_inv = a0.inverse();

    PolyMatrix C(layout.L, layout.L, layout.nc);
    C.coeff(0) = Mat::Identity(layout.L, layout.L);
    for (int l = 1; l <= layout.nc; ++l) C.coeff(l) = model.Cbar.coeff(l) * a0_inv;

    Mat lambda = model.A.coeff(0) * est.Lambda_bar * model.A.coeff(0);
    lambda = 0.5 * (lambda + lambda.transpose()).eval();
    return NoiseModel{std::move(C), std::move(lambda)};
}

} // namespace netid
