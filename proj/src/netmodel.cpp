#include "netid/netmodel.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace netid {

namespace {

std::pair<int, int> norm_pair(int j, int k) { return j < k ? std::make_pair(j, k) : std::make_pair(k, j); }

// d[l] = (-1)^l sum_{i=l}^{m} binom(i,l) Ts^-i c[i]
// Accumulation in long double: the inverse direction cancels terms of size
// Ts^-m down to O(1), so every spare bit counts.
Vec forward_map(const Vec& c, double Ts) {
    const int m = static_cast<int>(c.size()) - 1;
    Vec d = Vec::Zero(m + 1);
    const long double ts = static_cast<long double>(Ts);
    for (int l = 0; l <= m; ++l) {
        long double acc = 0.0L;
        long double binom = 1.0L; // binom(l, l)
        long double tspow = std::pow(ts, static_cast<long double>(-l));
        for (int i = l; i <= m; ++i) {
            acc += binom * tspow * static_cast<long double>(c(i));
            binom = binom * (i + 1) / (i + 1 - l);
            tspow /= ts;
        }
        d(l) = static_cast<double>(l % 2 == 0 ? acc : -acc);
    }
    return d;
}

// c[l] = (-Ts)^l sum_{i=l}^{m} binom(i,l) d[i]
Vec inverse_map(const Vec& d, double Ts) {
    const int m = static_cast<int>(d.size()) - 1;
    Vec c = Vec::Zero(m + 1);
    const long double ts = static_cast<long double>(Ts);
    for (int l = 0; l <= m; ++l) {
        long double acc = 0.0L;
        long double binom = 1.0L;
        for (int i = l; i <= m; ++i) {
            acc += binom * static_cast<long double>(d(i));
            binom = binom * (i + 1) / (i + 1 - l);
        }
        c(l) = static_cast<double>(std::pow(-ts, static_cast<long double>(l)) * acc);
    }
    return c;
}

PolyMatrix map_entrywise(const PolyMatrix& p, double Ts, bool forward) {
    std::vector<Mat> out(p.degree() + 1, Mat::Zero(p.rows(), p.cols()));
    for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j) {
            Vec c(p.degree() + 1);
            for (int l = 0; l <= p.degree(); ++l) c(l) = p.coeff(l)(i, j);
            Vec d = forward ? forward_map(c, Ts) : inverse_map(c, Ts);
            for (int l = 0; l <= p.degree(); ++l) out[l](i, j) = d(l);
        }
    return PolyMatrix(std::move(out));
}

} // namespace

Vec ContinuousNetwork::coupling(int j, int k) const {
    auto it = y.find(norm_pair(j, k));
    if (it == y.end()) return Vec::Zero(ny + 1);
    return it->second;
}

void ContinuousNetwork::set_coupling(int j, int k, const Vec& coeffs) {
    require(j != k, ErrorCode::DomainError, "set_coupling: self coupling not allowed");
    require(coeffs.size() == ny + 1, ErrorCode::DimensionMismatch, "set_coupling: coefficient length != ny+1");
    y[norm_pair(j, k)] = coeffs;
}

std::vector<std::pair<int, int>> ContinuousNetwork::edges() const {
    std::vector<std::pair<int, int>> e;
    for (const auto& [pair, coeffs] : y)
        if ((coeffs.array() != 0.0).any()) e.push_back(pair);
    return e;
}

bool ContinuousNetwork::connected() const {
    if (L <= 1) return true;
    std::vector<std::vector<int>> adj(L);
    for (const auto& [j, k] : edges()) {
        adj[j].push_back(k);
        adj[k].push_back(j);
    }
    std::vector<bool> seen(L, false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : adj[v])
            if (!seen[u]) {
                seen[u] = true;
                ++count;
                stack.push_back(u);
            }
    }
    return count == L;
}

bool ContinuousNetwork::grounded() const { return (x.array() > 0.0).any(); }

std::vector<std::string> ContinuousNetwork::validate() const {
    std::vector<std::string> issues;
    if (x.rows() != L || x.cols() != nx + 1) issues.push_back("x has wrong dimensions");
    if ((x.array() < 0.0).any()) issues.push_back("negative ground/buffer component x_{jj,l}");
    for (const auto& [pair, coeffs] : y) {
        if (pair.first < 0 || pair.second >= L || pair.first >= pair.second)
            issues.push_back("coupling pair out of range");
        if (coeffs.size() != ny + 1) issues.push_back("coupling coefficient length != ny+1");
        if ((coeffs.array() < 0.0).any()) {
            std::ostringstream os;
            os << "negative coupling component y_{" << pair.first + 1 << "," << pair.second + 1 << "}";
            issues.push_back(os.str());
        }
    }
    if (!connected()) issues.push_back("coupling graph is not connected");
    if (!grounded()) issues.push_back("no connection to the ground node (all x_{jj,l} = 0)");
    if (B.rows() != L || B.cols() != K) issues.push_back("B has wrong dimensions");
    return issues;
}

std::vector<std::string> DiscreteModel::validate(double tol) const {
    std::vector<std::string> issues;
    const int L = A.rows();
    if (A.cols() != L) issues.push_back("A not square");
    for (int l = 0; l <= A.degree(); ++l)
        if ((A.coeff(l) - A.coeff(l).transpose()).cwiseAbs().maxCoeff() > tol)
            issues.push_back("A_" + std::to_string(l) + " not symmetric");
    if (!verify_rank_A0(A.coeff(0)).full_rank) issues.push_back("A_0 rank deficient");
    else {
        if (!is_inverse_stable(A, tol).stable) issues.push_back("A not inverse-stable");
    }
    if (C.rows() != L || C.cols() != L) issues.push_back("C has wrong dimensions");
    else {
        if ((C.coeff(0) - Mat::Identity(L, L)).cwiseAbs().maxCoeff() > tol) issues.push_back("C not monic");
        else if (!is_inverse_stable(C, tol).stable) issues.push_back("C not inversely stable");
    }
    if (Lambda.rows() != L || Lambda.cols() != L) issues.push_back("Lambda has wrong dimensions");
    else {
        if ((Lambda - Lambda.transpose()).cwiseAbs().maxCoeff() > tol) issues.push_back("Lambda not symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(Lambda);
        if (es.eigenvalues().minCoeff() <= 0.0) issues.push_back("Lambda not positive definite");
    }
    if (B.rows() != L) issues.push_back("B has wrong row count");
    if (Ts <= 0.0) issues.push_back("Ts <= 0");
    return issues;
}

DiscreteComponents discretize(const ContinuousNetwork& net, double Ts) {
    require(Ts > 0.0, ErrorCode::DomainError, "discretize: Ts must be positive");
    const int L = net.L;
    const int deg = std::max(net.nx, net.ny);

    PolyMatrix Xbar(L, L, deg);
    for (int j = 0; j < L; ++j) {
        Vec d = forward_map(net.x.row(j).transpose(), Ts);
        for (int l = 0; l <= net.nx; ++l) Xbar.coeff(l)(j, j) = d(l);
    }

    PolyMatrix Ybar(L, L, deg);
    for (const auto& [pair, coeffs] : net.y) {
        const auto [j, k] = pair;
        Vec d = forward_map(coeffs, Ts);
        for (int l = 0; l <= net.ny; ++l) {
            Ybar.coeff(l)(j, k) -= d(l);
            Ybar.coeff(l)(k, j) -= d(l);
            Ybar.coeff(l)(j, j) += d(l);
            Ybar.coeff(l)(k, k) += d(l);
        }
    }

    return DiscreteComponents{Xbar, Ybar, map_entrywise(net.B, Ts, /*forward=*/true)};
}

ContinuousNetwork undiscretize(const PolyMatrix& Xbar, const PolyMatrix& Ybar, const PolyMatrix& B,
                               double Ts, double structure_tol) {
    require(Ts > 0.0, ErrorCode::DomainError, "undiscretize: Ts must be positive");
    require(Xbar.rows() == Ybar.rows() && Xbar.cols() == Ybar.cols(), ErrorCode::DimensionMismatch,
            "undiscretize: Xbar/Ybar dimension mismatch");
    StructureFlags fx = structure(Xbar, structure_tol);
    require(fx.diagonal, ErrorCode::StructureViolation, "undiscretize: Xbar not diagonal");
    StructureFlags fy = structure(Ybar, structure_tol);
    require(fy.symmetric && fy.zero_row_sum, ErrorCode::StructureViolation,
            "undiscretize: Ybar not symmetric with zero row sums");

    ContinuousNetwork net;
    net.L = Xbar.rows();
    net.K = B.cols();
    net.nx = Xbar.degree();
    net.ny = Ybar.degree();

    net.x = Mat::Zero(net.L, net.nx + 1);
    for (int j = 0; j < net.L; ++j) {
        Vec d(net.nx + 1);
        for (int l = 0; l <= net.nx; ++l) d(l) = Xbar.coeff(l)(j, j);
        net.x.row(j) = inverse_map(d, Ts).transpose();
    }

    for (int j = 0; j < net.L; ++j)
        for (int k = j + 1; k < net.L; ++k) {
            Vec d(net.ny + 1);
            for (int l = 0; l <= net.ny; ++l) d(l) = -Ybar.coeff(l)(j, k); // component = -matrix off-diagonal
            Vec c = inverse_map(d, Ts);
            if ((c.array() != 0.0).any()) net.y[{j, k}] = c;
        }

    net.B = map_entrywise(B, Ts, /*forward=*/false);
    return net;
}

PolyMatrix assemble_A(const PolyMatrix& Xbar, const PolyMatrix& Ybar) {
    require(Xbar.degree() == Ybar.degree(), ErrorCode::DimensionMismatch, "assemble_A: degree mismatch");
    return add(Xbar, Ybar);
}

SplitComponents split_A(const PolyMatrix& A, double sym_tol) {
    require(A.rows() == A.cols(), ErrorCode::DimensionMismatch, "split_A: A not square");
    for (int l = 0; l <= A.degree(); ++l)
        require((A.coeff(l) - A.coeff(l).transpose()).cwiseAbs().maxCoeff() <= sym_tol,
                ErrorCode::StructureViolation, "split_A: asymmetric coefficient at lag " + std::to_string(l));

    const int L = A.rows();
    PolyMatrix Xbar(L, L, A.degree());
    PolyMatrix Ybar(L, L, A.degree());
    for (int l = 0; l <= A.degree(); ++l) {
        const Mat& m = A.coeff(l);
        for (int j = 0; j < L; ++j) {
            double offsum = 0.0;
            for (int i = 0; i < L; ++i) {
                if (i == j) continue;
                Ybar.coeff(l)(j, i) = m(j, i);
                offsum += m(i, j);
            }
            Ybar.coeff(l)(j, j) = -offsum;
            Xbar.coeff(l)(j, j) = m(j, j) + offsum;
        }
    }
    return SplitComponents{Xbar, Ybar};
}

RankReport verify_rank_A0(const Mat& A0, double tol) {
    RankReport rep;
    Eigen::JacobiSVD<Mat> svd(A0);
    rep.sigma_max = svd.singularValues().maxCoeff();
    rep.sigma_min = svd.singularValues().minCoeff();
    rep.full_rank = rep.sigma_min > tol * std::max(rep.sigma_max, 1e-300);
    rep.det = A0.determinant();
    return rep;
}

RankReport verify_rank_A0(const DiscreteModel& model, double tol) { return verify_rank_A0(model.A.coeff(0), tol); }

ModuleRepresentation to_module_representation(const PolyMatrix& A, const PolyMatrix& B) {
    require(A.rows() == A.cols(), ErrorCode::DimensionMismatch, "to_module_representation: A not square");
    require(B.rows() == A.rows(), ErrorCode::DimensionMismatch, "to_module_representation: B row mismatch");
    const int L = A.rows();
    const int K = B.cols();

    auto entry_poly = [](const PolyMatrix& p, int i, int j) {
        Vec v(p.degree() + 1);
        for (int l = 0; l <= p.degree(); ++l) v(l) = p.coeff(l)(i, j);
        return v;
    };

    ModuleRepresentation rep;
    rep.G.assign(L, std::vector<RationalEntry>(L));
    rep.R.assign(L, std::vector<RationalEntry>(K));
    for (int j = 0; j < L; ++j) {
        Vec den = entry_poly(A, j, j);
        require((den.array() != 0.0).any(), ErrorCode::SingularMatrix,
                "to_module_representation: zero diagonal polynomial a_" + std::to_string(j + 1) +
                    std::to_string(j + 1));
        for (int k = 0; k < L; ++k) {
            if (k == j) {
                rep.G[j][k].num = Vec::Zero(1);
                rep.G[j][k].den = den;
            } else {
                rep.G[j][k].num = -entry_poly(A, j, k);
                rep.G[j][k].den = den;
            }
        }
        for (int k = 0; k < K; ++k) {
            rep.R[j][k].num = entry_poly(B, j, k);
            rep.R[j][k].den = den;
        }
    }
    return rep;
}

} // namespace netid
