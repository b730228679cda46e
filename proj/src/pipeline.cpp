#include "netid/pipeline.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

namespace netid {

namespace {

// "a[i][j][l]" -> kind + 1-based indices
struct ParsedPath {
    char kind; // 'a', 'b', 'c'
    int i, j, lag;
};

ParsedPath parse_path_parts(const std::string& path) {
    std::string s;
    for (char c : path)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    ParsedPath p{};
    std::size_t base = 0;
    if (s.rfind("cbar[", 0) == 0) {
        p.kind = 'c';
        base = 4;
    } else if (!s.empty() && (s[0] == 'a' || s[0] == 'b') && s.size() > 1 && s[1] == '[') {
        p.kind = s[0];
        base = 1;
    } else {
        fail(ErrorCode::ConfigError, "bad parameter path: " + path);
    }
    int vals[3];
    std::size_t pos = base;
    for (int t = 0; t < 3; ++t) {
        if (pos >= s.size() || s[pos] != '[') fail(ErrorCode::ConfigError, "bad parameter path: " + path);
        std::size_t close = s.find(']', pos);
        if (close == std::string::npos) fail(ErrorCode::ConfigError, "bad parameter path: " + path);
        try {
            vals[t] = std::stoi(s.substr(pos + 1, close - pos - 1));
        } catch (const std::exception&) {
            fail(ErrorCode::ConfigError, "bad parameter path: " + path);
        }
        pos = close + 1;
    }
    if (pos != s.size()) fail(ErrorCode::ConfigError, "trailing characters in parameter path: " + path);
    p.i = vals[0];
    p.j = vals[1];
    p.lag = vals[2];
    return p;
}

} // namespace

int parse_param_path(const std::string& path, const ParamLayout& layout) {
    ParsedPath p = parse_path_parts(path);
    const int i = p.i - 1;
    const int j = p.j - 1;
    switch (p.kind) {
        case 'a': return layout.a_index(i, j, p.lag);
        case 'b': return layout.b_index(i, j, p.lag);
        default: return layout.c_index(i, j, p.lag);
    }
}

ModelSetSpec::LinConstraint parse_fix_constraint(const std::string& text) {
    // "fix <path> = <value>"
    std::istringstream is(text);
    std::string word, path, eq;
    double value = 0.0;
    is >> word >> path >> eq >> value;
    if (word != "fix" || eq != "=" || is.fail())
        fail(ErrorCode::ConfigError, "bad constraint shorthand: " + text);
    ModelSetSpec::LinConstraint c;
    c.terms.push_back({path, 1.0});
    c.rhs = value;
    return c;
}

Constraint ModelSetSpec::build_constraint() const {
    ParamLayout lay = layout();
    std::vector<std::pair<std::vector<std::pair<int, double>>, double>> rows;
    std::map<int, bool> single_fixed; // indices already pinned by a single-term row

    for (const auto& c : constraints) {
        std::vector<std::pair<int, double>> terms;
        for (const auto& t : c.terms) terms.emplace_back(parse_param_path(t.path, lay), t.coef);
        if (terms.size() == 1 && terms.front().second != 0.0) single_fixed[terms.front().first] = true;
        rows.emplace_back(std::move(terms), c.rhs);
    }

    // Mask-implied zero rows: couplings above the off-diagonal lag bound.
    const int bound = a_offdiag_max_lag < 0 ? na : a_offdiag_max_lag;
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j)
            for (int l = bound + 1; l <= na; ++l) {
                const int idx = lay.a_index(i, j, l);
                if (single_fixed.count(idx)) continue;
                rows.push_back({{{idx, 1.0}}, 0.0});
            }

    Constraint out;
    out.Gamma = Mat::Zero(static_cast<int>(rows.size()), lay.dim());
    out.gamma = Vec::Zero(static_cast<int>(rows.size()));
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
        for (const auto& [idx, coef] : rows[r].first) out.Gamma(r, idx) += coef;
        out.gamma(r) = rows[r].second;
    }
    return out;
}

ParamState ModelSetSpec::a_state(int i, int j, int lag, double* value) const {
    ParamLayout lay = layout();
    const int idx = lay.a_index(i, j, lag);
    for (const auto& c : constraints) {
        if (c.terms.size() != 1) continue;
        if (parse_param_path(c.terms.front().path, lay) != idx) continue;
        const double v = c.rhs / c.terms.front().coef;
        if (value) *value = v;
        return v == 0.0 ? ParamState::FixedZero : ParamState::FixedValue;
    }
    const int bound = a_offdiag_max_lag < 0 ? na : a_offdiag_max_lag;
    if (i != j && lag > bound) {
        if (value) *value = 0.0;
        return ParamState::FixedZero;
    }
    return ParamState::Free;
}

ParamState ModelSetSpec::b_state(int i, int j, int lag, double* value) const {
    ParamLayout lay = layout();
    const int idx = lay.b_index(i, j, lag);
    for (const auto& c : constraints) {
        if (c.terms.size() != 1) continue;
        if (parse_param_path(c.terms.front().path, lay) != idx) continue;
        const double v = c.rhs / c.terms.front().coef;
        if (value) *value = v;
        return v == 0.0 ? ParamState::FixedZero : ParamState::FixedValue;
    }
    return ParamState::Free;
}

std::vector<std::pair<int, int>> ModelSetSpec::allowed_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) {
            bool any = false;
            for (int l = 0; l <= na && !any; ++l) any = a_state(i, j, l) != ParamState::FixedZero;
            if (any) out.emplace_back(i, j);
        }
    return out;
}

InformativityReport check_informativity(const Mat& r, int depth, double rel_tol) {
    InformativityReport rep;
    rep.depth = depth;
    const int K = static_cast<int>(r.rows());
    const int N = static_cast<int>(r.cols());
    if (K == 0 || N <= depth) {
        rep.status = CheckStatus::Fail;
        return rep;
    }

    // Autocovariance up to the required lag depth, then its block Toeplitz.
    std::vector<Mat> cov(depth);
    Eigen::MatrixXd centered = r.colwise() - r.rowwise().mean();
    for (int tau = 0; tau < depth; ++tau)
        cov[tau] = (centered.rightCols(N - tau) * centered.leftCols(N - tau).transpose()) / double(N - tau);

    Mat block = Mat::Zero(depth * K, depth * K);
    for (int a = 0; a < depth; ++a)
        for (int b = 0; b < depth; ++b) {
            const int tau = a - b;
            block.block(a * K, b * K, K, K) = tau >= 0 ? cov[tau] : Mat(cov[-tau].transpose());
        }

    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (block + block.transpose()));
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
    rep.max_eigenvalue = es.eigenvalues().maxCoeff();
    rep.tol = rel_tol * std::max(rep.max_eigenvalue, 0.0);
    rep.status = (rep.max_eigenvalue > 0.0 && rep.min_eigenvalue > rep.tol) ? CheckStatus::Pass : CheckStatus::Fail;
    return rep;
}

IdentifiabilityReport check_identifiability(const ModelSetSpec& spec) {
    IdentifiabilityReport rep;
    rep.coprimeness = CheckStatus::NotChecked;

    // Condition 2: some A_k parametrized diagonal with free-or-fixed-nonzero
    // diagonal, or some B_l diagonal full rank.
    for (int k = 0; k <= spec.na && rep.diagonal_full_rank != CheckStatus::Pass; ++k) {
        bool offdiag_zero = true;
        for (int i = 0; i < spec.L && offdiag_zero; ++i)
            for (int j = i + 1; j < spec.L && offdiag_zero; ++j)
                offdiag_zero = spec.a_state(i, j, k) == ParamState::FixedZero;
        if (!offdiag_zero) continue;
        bool diag_ok = true;
        for (int i = 0; i < spec.L && diag_ok; ++i) diag_ok = spec.a_state(i, i, k) != ParamState::FixedZero;
        if (diag_ok) {
            rep.diagonal_full_rank = CheckStatus::Pass;
            rep.diagonal_lag = k;
        }
    }
    if (rep.diagonal_full_rank != CheckStatus::Pass && spec.K == spec.L) {
        for (int l = 0; l <= spec.nb && rep.diagonal_full_rank != CheckStatus::Pass; ++l) {
            bool offdiag_zero = true;
            bool diag_ok = true;
            for (int i = 0; i < spec.L; ++i)
                for (int j = 0; j < spec.K; ++j) {
                    if (i == j) {
                        if (spec.b_state(i, j, l) == ParamState::FixedZero) diag_ok = false;
                    } else if (spec.b_state(i, j, l) != ParamState::FixedZero) {
                        offdiag_zero = false;
                    }
                }
            if (offdiag_zero && diag_ok) {
                rep.diagonal_full_rank = CheckStatus::Pass;
                rep.diagonal_lag = 100 + l;
            }
        }
    }

    rep.excitation_present = spec.K >= 1 ? CheckStatus::Pass : CheckStatus::Fail;

    Constraint c = spec.build_constraint();
    const bool has_nonzero_rhs = c.count() > 0 && c.gamma.cwiseAbs().maxCoeff() > 0.0;
    rep.scaling_constraint = has_nonzero_rhs ? CheckStatus::Pass : CheckStatus::Fail;
    if (c.count() > 0) {
        Eigen::ColPivHouseholderQR<Mat> qr(c.Gamma.transpose());
        rep.gamma_full_rank = qr.rank() == c.count();
    }
    return rep;
}

std::vector<std::pair<int, int>> topology(const PolyMatrix& Ybar, double threshold) {
    require(Ybar.rows() == Ybar.cols(), ErrorCode::DimensionMismatch, "topology: Ybar not square");
    const int L = Ybar.rows();
    double gmax = 0.0;
    for (int l = 0; l <= Ybar.degree(); ++l)
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j)
                if (i != j) gmax = std::max(gmax, std::abs(Ybar.coeff(l)(i, j)));

    std::vector<std::pair<int, int>> edges;
    if (gmax == 0.0) return edges;
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) {
            double m = 0.0;
            for (int l = 0; l <= Ybar.degree(); ++l)
                m = std::max(m, std::max(std::abs(Ybar.coeff(l)(i, j)), std::abs(Ybar.coeff(l)(j, i))));
            if (m >= threshold * gmax) edges.emplace_back(i, j);
        }
    return edges;
}

namespace {

[[noreturn]] void fail_step(int step, const Error& e) {
    std::ostringstream os;
    os << "step " << step << ": " << e.what();
    throw Error(e.code(), os.str());
}

} // namespace

IdentResult identify(const Dataset& data, const ModelSetSpec& spec, int arx_order, const IdentOptions& options) {
    require(arx_order >= 1, ErrorCode::DomainError, "identify: ARX order must be >= 1");
    require(data.L() == spec.L && data.K() == spec.K, ErrorCode::DimensionMismatch,
            "identify: data dimensions do not match the model set");

    IdentResult res;
    res.Ts = data.Ts;

    const int depth = spec.L * arx_order + spec.K * (arx_order + 1);
    res.diag.informativity = check_informativity(data.r, depth);
    res.diag.identifiability = check_identifiability(spec);
    if (!options.force) {
        if (res.diag.informativity.status != CheckStatus::Pass)
            fail(ErrorCode::CheckFailure, "identify: excitation data fails the informativity check");
        if (!res.diag.identifiability.pass())
            fail(ErrorCode::CheckFailure, "identify: model set fails the identifiability conditions");
    }

    ParamLayout layout = spec.layout();
    Constraint constraint = spec.build_constraint();

    // Step 1
    try {
        res.arx = arx_estimate(data, arx_order);
    } catch (const Error& e) {
        fail_step(1, e);
    }

    // Steps 2 and 3
    StructuredEstimate st2;
    try {
        st2 = step2(res.arx, layout, constraint, data, options.use_weighting);
    } catch (const Error& e) {
        fail_step(2, e);
    }
    try {
        res.structured = step3(res.arx, st2, data, layout, constraint, options.max_iter, options.tol);
    } catch (const Error& e) {
        fail_step(3, e);
    }
    if (!res.structured.improved && !res.structured.noise_degenerate && options.max_iter > 0)
        res.diag.warnings.push_back("step 3 did not improve on the step-2 cost; returning the step-2 estimate");

    // Step 4
    UnpackedModel model = unpack(res.structured.vartheta, layout);
    res.A = model.A;
    res.B = model.B;
    res.Cbar = model.Cbar;
    try {
        NoiseModel noise = recover_noise(res.structured, layout);
        res.C = noise.C;
        res.Lambda = noise.Lambda;
    } catch (const Error& e) {
        fail_step(4, e);
    }

    // Step 5
    try {
        SplitComponents comp = split_A(res.A);
        res.Xbar = comp.Xbar;
        res.Ybar = comp.Ybar;
    } catch (const Error& e) {
        fail_step(5, e);
    }

    // Step 6
    try {
        res.continuous = undiscretize(res.Xbar, res.Ybar, res.B, data.Ts);
    } catch (const Error& e) {
        fail_step(6, e);
    }

    res.diag.cost_trace = res.structured.cost_trace;
    res.diag.feasibility = res.structured.feasibility;
    res.diag.iterations = res.structured.iterations;
    res.diag.weighted = res.structured.weighted;
    res.diag.noise_degenerate = res.structured.noise_degenerate;
    res.diag.divergence = res.structured.divergence;
    res.diag.rank_A0 = verify_rank_A0(res.A.coeff(0));
    res.diag.stability = is_inverse_stable(res.A);
    if (!res.diag.stability.stable) res.diag.warnings.push_back("estimated A is not inverse-stable");

    Mat eps = structured_residual(res.structured.vartheta, layout, data);
    const int cut = std::min(arx_order, data.N() - 2);
    Mat windowed = discard_transient(eps, cut);
    const int max_lag = std::min(20, static_cast<int>(windowed.cols()) - 1);
    if (max_lag >= 1) res.diag.whiteness = whiteness(windowed, max_lag);

    // Topology from the discrete couplings, restricted to mask-allowed pairs.
    std::vector<std::pair<int, int>> cand = topology(res.Ybar, options.topology_threshold);
    std::vector<std::pair<int, int>> allowed = spec.allowed_pairs();
    for (const auto& e : cand)
        if (std::find(allowed.begin(), allowed.end(), e) != allowed.end()) res.topology_edges.push_back(e);

    return res;
}

} // namespace netid
