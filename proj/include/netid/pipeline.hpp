#pragma once

#include <optional>
#include <string>

#include "netid/structstage.hpp"

namespace netid {

enum class ParamState { Free, FixedZero, FixedValue };

/// Parametrized model set: orders, the per-entry parametrization mask and the
/// equality constraints that fix the scaling freedom.
struct ModelSetSpec {
    int L = 0;
    int K = 0;
    int na = 0;
    int nb = 0;
    int nc = 0;

    /// Off-diagonal entries of A are fixed to zero above this lag (couplings of
    /// lower order than the ground dynamics); -1 means no structural bound.
    int a_offdiag_max_lag = -1;

    struct LinTerm {
        std::string path; // a[i][j][l], b[i][j][l] or cbar[i][j][l], 1-based
        double coef = 1.0;
    };
    struct LinConstraint {
        std::vector<LinTerm> terms;
        double rhs = 0.0;
    };
    std::vector<LinConstraint> constraints;

    ParamLayout layout() const { return make_layout(L, K, na, nb, nc); }

    /// All equality rows: the user constraints plus the mask-implied zero rows.
    Constraint build_constraint() const;

    ParamState a_state(int i, int j, int lag, double* value = nullptr) const;
    ParamState b_state(int i, int j, int lag, double* value = nullptr) const;

    /// Node pairs that carry at least one free coupling parameter.
    std::vector<std::pair<int, int>> allowed_pairs() const;
};

/// Parses "a[i][j][l]" / "b[i][j][l]" / "cbar[i][j][l]" into a vartheta index.
int parse_param_path(const std::string& path, const ParamLayout& layout);

/// Parses the shorthand "fix b[1][1][0] = 1".
ModelSetSpec::LinConstraint parse_fix_constraint(const std::string& text);

enum class CheckStatus { Pass, Fail, NotChecked };

struct InformativityReport {
    CheckStatus status = CheckStatus::NotChecked;
    int depth = 0;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double tol = 0.0;
};

/// Persistency-of-excitation surrogate: minimum eigenvalue of the depth-deep
/// block-Toeplitz autocovariance of r.
InformativityReport check_informativity(const Mat& r, int depth, double rel_tol = 1e-6);

struct IdentifiabilityReport {
    CheckStatus coprimeness = CheckStatus::NotChecked; // condition 1, documented only
    CheckStatus diagonal_full_rank = CheckStatus::Fail; // condition 2
    CheckStatus excitation_present = CheckStatus::Fail; // condition 3
    CheckStatus scaling_constraint = CheckStatus::Fail; // condition 4
    int diagonal_lag = -1;     // lag of A (or B, offset by 100) that satisfied condition 2
    bool gamma_full_rank = true;
    bool pass() const {
        return diagonal_full_rank == CheckStatus::Pass && excitation_present == CheckStatus::Pass &&
               scaling_constraint == CheckStatus::Pass;
    }
};

IdentifiabilityReport check_identifiability(const ModelSetSpec& spec);

std::vector<std::pair<int, int>> topology(const PolyMatrix& Ybar, double threshold);

struct IdentOptions {
    bool use_weighting = true;
    int max_iter = 50;
    double tol = 1e-9;
    bool force = false;          // run even if the pre-checks fail
    double topology_threshold = 0.05;
};

struct IdentDiagnostics {
    std::vector<double> cost_trace;
    double feasibility = 0.0;
    StabilityReport stability;
    WhitenessReport whiteness;
    RankReport rank_A0;
    InformativityReport informativity;
    IdentifiabilityReport identifiability;
    int iterations = 0;
    bool weighted = false;
    bool noise_degenerate = false;
    bool divergence = false;
    std::vector<std::string> warnings;
};

struct IdentResult {
    ArxEstimate arx;
    StructuredEstimate structured;
    PolyMatrix A, B, Cbar;      // discrete estimates
    PolyMatrix C;               // monic noise filter
    Mat Lambda;
    PolyMatrix Xbar, Ybar;      // discrete components (Step 5)
    ContinuousNetwork continuous; // Step 6 output, with the excitation dynamics
    double Ts = 1.0;
    std::vector<std::pair<int, int>> topology_edges;
    IdentDiagnostics diag;
};

/// Algorithm steps 1-6 plus checks and topology extraction.
IdentResult identify(const Dataset& data, const ModelSetSpec& spec, int arx_order,
                     const IdentOptions& options = {});

} // namespace netid
