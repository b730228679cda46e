#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "netid/polymat.hpp"

namespace netid {

/// Continuous-time physical network: per-node ground/buffer components
/// x_{jj,l}, unordered-pair coupling components y_{jk,l} and the excitation
/// dynamics B. Couplings are stored per unordered pair so the diffusive
/// symmetry cannot be violated.
struct ContinuousNetwork {
    int L = 0;
    int K = 0;
    int nx = 0;
    int ny = 0;
    Mat x;                                   // L x (nx+1), x(j,l) = x_{jj,l}
    std::map<std::pair<int, int>, Vec> y;    // key (j,k), j<k, 0-based; value length ny+1
    PolyMatrix B;                            // L x K, continuous excitation dynamics

    /// Coupling coefficient vector for pair {j,k}; zeros when absent.
    Vec coupling(int j, int k) const;
    void set_coupling(int j, int k, const Vec& coeffs);

    /// Pairs with any exactly-nonzero coupling coefficient.
    std::vector<std::pair<int, int>> edges() const;

    bool connected() const;   // graph search over nonzero coupling pairs
    bool grounded() const;    // some x_{jj,l} > 0

    /// Definition-1 violations (signs, connectivity, grounding); empty if valid.
    std::vector<std::string> validate() const;
};

/// Discrete-time network model (A, B, C, Lambda, Ts) with monic C.
struct DiscreteModel {
    PolyMatrix A;
    PolyMatrix B;
    PolyMatrix C;
    Mat Lambda;
    double Ts = 1.0;

    std::vector<std::string> validate(double tol = 1e-9) const;
};

struct DiscreteComponents {
    PolyMatrix Xbar; // diagonal
    PolyMatrix Ybar; // symmetric, zero row sums per lag
    PolyMatrix B;
};

/// Backward-difference map of the continuous components; degree of Xbar/Ybar is
/// max(nx, ny), B maps with the same per-entry rule.
DiscreteComponents discretize(const ContinuousNetwork& net, double Ts);

/// Exact inverse of discretize.
ContinuousNetwork undiscretize(const PolyMatrix& Xbar, const PolyMatrix& Ybar, const PolyMatrix& B,
                               double Ts, double structure_tol = 1e-6);

PolyMatrix assemble_A(const PolyMatrix& Xbar, const PolyMatrix& Ybar);

struct SplitComponents {
    PolyMatrix Xbar;
    PolyMatrix Ybar;
};

/// Recovers the diagonal/Laplacian split from a symmetric A; exact inverse of assemble_A.
SplitComponents split_A(const PolyMatrix& A, double sym_tol = 1e-9);

struct RankReport {
    bool full_rank = false;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double det = 0.0;
};

RankReport verify_rank_A0(const Mat& A0, double tol = 1e-10);
RankReport verify_rank_A0(const DiscreteModel& model, double tol = 1e-10);

/// One rational entry as a (numerator, denominator) coefficient pair.
struct RationalEntry {
    Vec num;
    Vec den;
};

struct ModuleRepresentation {
    std::vector<std::vector<RationalEntry>> G; // L x L, G_jj = 0
    std::vector<std::vector<RationalEntry>> R; // L x K
};

/// Module (transfer-function) form of the network: G_jk = -a_jk / a_jj,
/// R_jk = b_jk / a_jj.
ModuleRepresentation to_module_representation(const PolyMatrix& A, const PolyMatrix& B);

} // namespace netid
