#include "netid/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace netid {

using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::ConfigError, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::ConfigError, "bad JSON in " + path + ": " + e.what());
    }
    return j;
}

Mat matrix_from_json(const json& j, int rows, int cols, const std::string& what) {
    require(j.is_array() && static_cast<int>(j.size()) == rows, ErrorCode::ConfigError,
            what + ": expected " + std::to_string(rows) + " rows");
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = j[i];
        require(row.is_array() && static_cast<int>(row.size()) == cols, ErrorCode::ConfigError,
                what + ": expected " + std::to_string(cols) + " columns");
        for (int c = 0; c < cols; ++c) m(i, c) = row[c].get<double>();
    }
    return m;
}

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json poly_to_json(const PolyMatrix& p) {
    json lags = json::array();
    for (int l = 0; l <= p.degree(); ++l) lags.push_back(matrix_to_json(p.coeff(l)));
    return lags;
}

} // namespace

NetworkConfig network_from_json(const json& j) {
    NetworkConfig cfg;
    ContinuousNetwork& net = cfg.net;
    net.L = j.at("L").get<int>();
    net.K = j.at("K").get<int>();
    net.nx = j.at("nx").get<int>();
    net.ny = j.at("ny").get<int>();
    cfg.Ts = j.at("Ts").get<double>();
    require(net.L >= 1 && net.K >= 0 && net.nx >= 0 && net.ny >= 0 && cfg.Ts > 0.0, ErrorCode::ConfigError,
            "network: bad counts");

    net.x = matrix_from_json(j.at("x"), net.L, net.nx + 1, "network x");

    for (const json& edge : j.at("y")) {
        const int a = edge.at("j").get<int>() - 1;
        const int b = edge.at("k").get<int>() - 1;
        require(a >= 0 && b >= 0 && a < net.L && b < net.L && a != b, ErrorCode::ConfigError,
                "network y: bad node pair");
        const json& coeffs = edge.at("coeffs");
        require(static_cast<int>(coeffs.size()) == net.ny + 1, ErrorCode::ConfigError,
                "network y: coefficient count != ny+1");
        Vec v(net.ny + 1);
        for (int l = 0; l <= net.ny; ++l) v(l) = coeffs[l].get<double>();
        net.set_coupling(a, b, v);
    }

    if (net.K > 0) {
        const json& btab = j.at("B");
        require(btab.is_array() && !btab.empty(), ErrorCode::ConfigError, "network B: expected lag table");
        std::vector<Mat> blags;
        for (const json& lag : btab) blags.push_back(matrix_from_json(lag, net.L, net.K, "network B"));
        net.B = PolyMatrix(std::move(blags));
    } else {
        net.B = PolyMatrix(net.L, 1, 0);
    }

    std::vector<Mat> clags{Mat::Identity(net.L, net.L)};
    if (j.contains("C")) {
        for (const json& lag : j.at("C")) clags.push_back(matrix_from_json(lag, net.L, net.L, "network C"));
    }
    cfg.C = PolyMatrix(std::move(clags));

    if (j.contains("Lambda")) {
        const json& lam = j.at("Lambda");
        if (lam.is_number()) {
            cfg.Lambda = lam.get<double>() * Mat::Identity(net.L, net.L);
        } else {
            cfg.Lambda = matrix_from_json(lam, net.L, net.L, "network Lambda");
        }
    } else {
        cfg.Lambda = Mat::Zero(net.L, net.L);
    }
    return cfg;
}

NetworkConfig load_network(const std::string& path) { return network_from_json(load_json_file(path)); }

DiscreteModel discretize_model(const NetworkConfig& cfg) {
    DiscreteComponents comps = discretize(cfg.net, cfg.Ts);
    DiscreteModel model;
    model.A = assemble_A(comps.Xbar, comps.Ybar);
    model.B = comps.B;
    model.C = cfg.C;
    model.Lambda = cfg.Lambda;
    model.Ts = cfg.Ts;
    return model;
}

ModelSetSpec spec_from_json(const json& j) {
    ModelSetSpec spec;
    spec.L = j.at("L").get<int>();
    spec.K = j.at("K").get<int>();
    spec.na = j.at("na").get<int>();
    spec.nb = j.at("nb").get<int>();
    spec.nc = j.at("nc").get<int>();
    if (j.contains("a_offdiag_max_lag")) spec.a_offdiag_max_lag = j.at("a_offdiag_max_lag").get<int>();
    if (j.contains("constraints")) {
        for (const json& c : j.at("constraints")) {
            if (c.is_string()) {
                spec.constraints.push_back(parse_fix_constraint(c.get<std::string>()));
            } else {
                ModelSetSpec::LinConstraint lc;
                for (const json& t : c.at("terms"))
                    lc.terms.push_back({t.at("path").get<std::string>(), t.at("coef").get<double>()});
                lc.rhs = c.at("rhs").get<double>();
                spec.constraints.push_back(std::move(lc));
            }
        }
    }
    return spec;
}

ModelSetSpec load_spec(const std::string& path) { return spec_from_json(load_json_file(path)); }

void write_signals_csv(const std::string& path, const Dataset& data) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, ErrorCode::ConfigError, "cannot open " + path + " for writing");
    std::fputs("t", f);
    for (int i = 0; i < data.L(); ++i) std::fprintf(f, ",w%d", i + 1);
    for (int i = 0; i < data.K(); ++i) std::fprintf(f, ",r%d", i + 1);
    std::fputc('\n', f);
    for (int t = 0; t < data.N(); ++t) {
        std::fprintf(f, "%.17g", t * data.Ts);
        for (int i = 0; i < data.L(); ++i) std::fprintf(f, ",%.17g", data.w(i, t));
        for (int i = 0; i < data.K(); ++i) std::fprintf(f, ",%.17g", data.r(i, t));
        std::fputc('\n', f);
    }
    std::fclose(f);
}

Dataset read_signals_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::ConfigError, "cannot open " + path);
    std::string header;
    require(static_cast<bool>(std::getline(in, header)), ErrorCode::ConfigError, path + ": empty file");

    int L = 0, K = 0;
    {
        std::istringstream hs(header);
        std::string col;
        bool first = true;
        while (std::getline(hs, col, ',')) {
            if (first) {
                require(col == "t", ErrorCode::ConfigError, path + ": first column must be t");
                first = false;
            } else if (col.size() > 1 && col[0] == 'w') {
                ++L;
            } else if (col.size() > 1 && col[0] == 'r') {
                ++K;
            } else {
                fail(ErrorCode::ConfigError, path + ": unexpected column " + col);
            }
        }
        require(L >= 1, ErrorCode::ConfigError, path + ": no node signal columns");
    }

    std::vector<double> times;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        int col = 0;
        while (std::getline(ls, cell, ',')) {
            const double v = std::strtod(cell.c_str(), nullptr);
            if (col == 0) times.push_back(v);
            else values.push_back(v);
            ++col;
        }
        require(col == 1 + L + K, ErrorCode::ConfigError, path + ": inconsistent column count");
    }
    const int N = static_cast<int>(times.size());
    require(N >= 2, ErrorCode::ConfigError, path + ": need at least two samples");

    Dataset data;
    data.Ts = times[1] - times[0];
    require(data.Ts > 0.0, ErrorCode::ConfigError, path + ": non-increasing time column");
    data.w = Mat(L, N);
    data.r = Mat(K, N);
    for (int t = 0; t < N; ++t) {
        for (int i = 0; i < L; ++i) data.w(i, t) = values[static_cast<std::size_t>(t) * (L + K) + i];
        for (int i = 0; i < K; ++i) data.r(i, t) = values[static_cast<std::size_t>(t) * (L + K) + L + i];
    }
    require(data.w.allFinite() && data.r.allFinite(), ErrorCode::ConfigError, path + ": non-finite samples");
    return data;
}

namespace {

const char* status_name(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "PASS";
        case CheckStatus::Fail: return "FAIL";
        default: return "NOT CHECKED";
    }
}

} // namespace

json ident_report_json(const IdentResult& res) {
    json j;
    j["arx"] = {{"order", res.arx.n},
                {"zeta", std::vector<double>(res.arx.zeta.data(), res.arx.zeta.data() + res.arx.zeta.size())},
                {"Lambda_bar", matrix_to_json(res.arx.Lambda_est)},
                {"N_used", res.arx.N_used},
                {"noise_degenerate", res.arx.noise_degenerate}};

    j["structured"] = {
        {"vartheta",
         std::vector<double>(res.structured.vartheta.data(),
                             res.structured.vartheta.data() + res.structured.vartheta.size())},
        {"lagrange_multipliers",
         std::vector<double>(res.structured.lambda.data(),
                             res.structured.lambda.data() + res.structured.lambda.size())},
        {"Lambda_bar", matrix_to_json(res.structured.Lambda_bar)},
        {"cost_trace", res.structured.cost_trace},
        {"iterations", res.structured.iterations},
        {"weighted", res.structured.weighted}};

    j["noise"] = {{"C", poly_to_json(res.C)}, {"Lambda", matrix_to_json(res.Lambda)}};

    j["components_discrete"] = {{"A", poly_to_json(res.A)},
                                {"B", poly_to_json(res.B)},
                                {"Xbar", poly_to_json(res.Xbar)},
                                {"Ybar", poly_to_json(res.Ybar)}};

    json ycont = json::array();
    for (const auto& [pair, coeffs] : res.continuous.y) {
        ycont.push_back({{"j", pair.first + 1},
                         {"k", pair.second + 1},
                         {"coeffs", std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size())}});
    }
    j["components_continuous"] = {{"Ts", res.Ts},
                                  {"x", matrix_to_json(res.continuous.x)},
                                  {"y", ycont},
                                  {"B", poly_to_json(res.continuous.B)}};

    json edges = json::array();
    for (const auto& [a, b] : res.topology_edges) edges.push_back({a + 1, b + 1});
    j["topology"] = {{"edges", edges}};

    json roots = json::array();
    for (const auto& z : res.diag.stability.roots) roots.push_back({{"re", z.real()}, {"im", z.imag()}});
    j["diagnostics"] = {{"cost_trace", res.diag.cost_trace},
                        {"feasibility", res.diag.feasibility},
                        {"iterations", res.diag.iterations},
                        {"weighted", res.diag.weighted},
                        {"noise_degenerate", res.diag.noise_degenerate},
                        {"divergence", res.diag.divergence},
                        {"stable", res.diag.stability.stable},
                        {"max_root_modulus", res.diag.stability.max_abs},
                        {"roots", roots},
                        {"rank_A0", res.diag.rank_A0.full_rank},
                        {"sigma_min_A0", res.diag.rank_A0.sigma_min},
                        {"whiteness_max_abs_corr", res.diag.whiteness.max_abs_corr},
                        {"whiteness_bound", res.diag.whiteness.bound},
                        {"whiteness_violations", res.diag.whiteness.violations},
                        {"informativity", status_name(res.diag.informativity.status)},
                        {"informativity_min_eigenvalue", res.diag.informativity.min_eigenvalue},
                        {"identifiability",
                         {{"coprimeness", status_name(res.diag.identifiability.coprimeness)},
                          {"diagonal_full_rank", status_name(res.diag.identifiability.diagonal_full_rank)},
                          {"excitation_present", status_name(res.diag.identifiability.excitation_present)},
                          {"scaling_constraint", status_name(res.diag.identifiability.scaling_constraint)}}},
                        {"warnings", res.diag.warnings}};
    return j;
}

void write_ident_report(const std::string& path, const IdentResult& res) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::ConfigError, "cannot open " + path + " for writing");
    out << ident_report_json(res).dump(2) << '\n';
}

} // namespace netid
