#include "netid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "netid/rng.hpp"

namespace netid {

using nlohmann::json;

double rmse(const Vec& theta_hat, const Vec& theta0) {
    require(theta_hat.size() == theta0.size(), ErrorCode::DimensionMismatch, "rmse: dimension mismatch");
    const double denom = theta0.squaredNorm();
    require(denom > 0.0, ErrorCode::DomainError, "rmse: zero true parameter vector");
    return (theta0 - theta_hat).squaredNorm() / denom;
}

Vec theta_c(const ContinuousNetwork& net, int nx, int ny) {
    const int L = net.L;
    const int npairs = L * (L - 1) / 2;
    Vec out = Vec::Zero(L * (nx + 1) + npairs * (ny + 1));
    int pos = 0;
    for (int j = 0; j < L; ++j)
        for (int l = 0; l <= nx; ++l) out(pos++) = (l <= net.nx && j < net.x.rows()) ? net.x(j, l) : 0.0;
    for (int j = 0; j < L; ++j)
        for (int k = j + 1; k < L; ++k) {
            Vec c = net.coupling(j, k);
            for (int l = 0; l <= ny; ++l) out(pos++) = l < c.size() ? -c(l) : 0.0;
        }
    return out;
}

std::vector<std::string> theta_c_names(int L, int nx, int ny) {
    std::vector<std::string> names;
    for (int j = 1; j <= L; ++j)
        for (int l = 0; l <= nx; ++l) names.push_back("x[" + std::to_string(j) + "][" + std::to_string(l) + "]");
    for (int j = 1; j <= L; ++j)
        for (int k = j + 1; k <= L; ++k)
            for (int l = 0; l <= ny; ++l)
                names.push_back("Y" + std::to_string(l) + "[" + std::to_string(j) + "][" + std::to_string(k) + "]");
    return names;
}

ExperimentConfig experiment_from_json(const json& j, const std::string& base_dir) {
    ExperimentConfig cfg;

    const json& net = j.at("network");
    if (net.is_string()) {
        std::filesystem::path p(net.get<std::string>());
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        cfg.network = load_network(p.string());
    } else {
        cfg.network = network_from_json(net);
    }

    const json& spec = j.at("spec");
    if (spec.is_string()) {
        std::filesystem::path p(spec.get<std::string>());
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        cfg.spec = load_spec(p.string());
    } else {
        cfg.spec = spec_from_json(spec);
    }

    cfg.seed = j.value("seed", 1ULL);
    cfg.runs = j.value("runs", 20);
    require(cfg.runs >= 1, ErrorCode::ConfigError, "experiment: runs must be >= 1");

    if (j.contains("schedule")) {
        for (const json& row : j.at("schedule"))
            cfg.schedule.emplace_back(row.at("n").get<int>(), row.at("N").get<long>());
    } else {
        cfg.schedule.emplace_back(j.at("n").get<int>(), j.at("N").get<long>());
    }
    require(!cfg.schedule.empty(), ErrorCode::ConfigError, "experiment: empty schedule");
    for (const auto& [n, N] : cfg.schedule)
        require(n >= 1 && N > 0, ErrorCode::ConfigError, "experiment: bad (n, N) entry");

    if (j.contains("excitation")) {
        const json& exc = j.at("excitation");
        const std::string type = exc.value("type", "white");
        require(type == "white", ErrorCode::ConfigError, "experiment: only white excitation is supported");
        cfg.excitation_variance = exc.value("variance", 1.0);
    }
    if (j.contains("identify")) {
        const json& id = j.at("identify");
        cfg.ident.use_weighting = id.value("use_weighting", true);
        cfg.ident.max_iter = id.value("max_iter", 50);
        cfg.ident.topology_threshold = id.value("topology_threshold", 0.05);
    }
    return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::ConfigError, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::ConfigError, "bad JSON in " + path + ": " + e.what());
    }
    return experiment_from_json(j, std::filesystem::path(path).parent_path().string());
}

Dataset simulate_run(const ExperimentConfig& cfg, int set_index, int run_index, long N) {
    DiscreteModel model = discretize_model(cfg.network);
    const std::uint64_t run_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(set_index),
                                               static_cast<std::uint64_t>(run_index));
    Mat r = std::sqrt(cfg.excitation_variance) *
            gaussian_matrix(cfg.network.net.K, static_cast<int>(N), splitmix64(run_seed ^ 0x52554E5F52UL));
    NoiseSpec noise{cfg.network.Lambda, splitmix64(run_seed ^ 0x52554E5F45UL)};
    return generate(model, r, noise);
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        threads = hw == 0 ? 1 : static_cast<int>(hw);
    }
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

double median(std::vector<double> v) {
    require(!v.empty(), ErrorCode::DomainError, "median of empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double quantile(std::vector<double> v, double q) {
    require(!v.empty(), ErrorCode::DomainError, "quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

namespace {

RunRecord execute_run(const ExperimentConfig& cfg, int set_index, int run_index) {
    const auto& [n, N] = cfg.schedule[set_index];
    RunRecord rec;
    rec.set_index = set_index;
    rec.run_index = run_index;
    const auto start = std::chrono::steady_clock::now();
    try {
        Dataset data = simulate_run(cfg, set_index, run_index, N);
        IdentResult res = identify(data, cfg.spec, n, cfg.ident);
        rec.theta_hat = theta_c(res.continuous, cfg.network.net.nx, cfg.network.net.ny);
        Vec truth = theta_c(cfg.network.net, cfg.network.net.nx, cfg.network.net.ny);
        rec.rmse = rmse(rec.theta_hat, truth);
        rec.topology = res.topology_edges;
        ParamLayout lay = cfg.spec.layout();
        for (int i = 0; i < cfg.spec.L; ++i)
            for (int j = 0; j < cfg.spec.K; ++j)
                for (int l = 0; l <= cfg.spec.nb; ++l)
                    if (cfg.spec.b_state(i, j, l) == ParamState::Free)
                        rec.b_free.push_back(res.structured.vartheta(lay.b_index(i, j, l)));
        rec.ok = true;
    } catch (const Error& e) {
        rec.error = e.what();
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

ExperimentReport run_common(const ExperimentConfig& cfg, int threads) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.names = theta_c_names(cfg.network.net.L, cfg.network.net.nx, cfg.network.net.ny);
    rep.theta_true = theta_c(cfg.network.net, cfg.network.net.nx, cfg.network.net.ny);
    rep.true_edges = cfg.network.net.edges();

    const int sets = static_cast<int>(cfg.schedule.size());
    const int total = sets * cfg.runs;
    rep.runs.resize(total);
    parallel_for(total, threads, [&](int idx) {
        rep.runs[idx] = execute_run(cfg, idx / cfg.runs, idx % cfg.runs);
    });

    for (int s = 0; s < sets; ++s) {
        SetSummary sum;
        sum.n = cfg.schedule[s].first;
        sum.N = cfg.schedule[s].second;
        sum.rate = std::pow(static_cast<double>(sum.n), 4) / static_cast<double>(sum.N);
        for (int r = 0; r < cfg.runs; ++r) {
            const RunRecord& rec = rep.runs[s * cfg.runs + r];
            if (rec.ok) sum.rmse_samples.push_back(rec.rmse);
            else ++sum.failures;
        }
        if (!sum.rmse_samples.empty()) sum.rmse_median = median(sum.rmse_samples);
        rep.sets.push_back(std::move(sum));
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

} // namespace

ExperimentReport run_experiment1(const ExperimentConfig& cfg, int threads) { return run_common(cfg, threads); }

ExperimentReport run_experiment2(const ExperimentConfig& cfg, int threads) {
    require(cfg.schedule.size() == 1, ErrorCode::ConfigError, "experiment 2 expects a single (n, N) pair");
    ExperimentReport rep = run_common(cfg, threads);

    // Per-parameter mean and SD over successful runs.
    std::vector<const RunRecord*> ok;
    for (const RunRecord& r : rep.runs)
        if (r.ok) ok.push_back(&r);
    const int d = static_cast<int>(rep.theta_true.size());
    rep.mean = Vec::Zero(d);
    rep.sd = Vec::Zero(d);
    if (!ok.empty()) {
        for (const RunRecord* r : ok) rep.mean += r->theta_hat;
        rep.mean /= static_cast<double>(ok.size());
        if (ok.size() > 1) {
            for (const RunRecord* r : ok) rep.sd += (r->theta_hat - rep.mean).cwiseAbs2();
            rep.sd = (rep.sd / static_cast<double>(ok.size() - 1)).cwiseSqrt();
        }
    }

    std::set<std::pair<int, int>> truth(rep.true_edges.begin(), rep.true_edges.end());
    for (const RunRecord* r : ok) {
        std::set<std::pair<int, int>> got(r->topology.begin(), r->topology.end());
        if (got == truth) ++rep.topology_exact_matches;
    }
    return rep;
}

json experiment_report_json(const ExperimentReport& rep) {
    json j;
    j["names"] = rep.names;
    j["theta_true"] = std::vector<double>(rep.theta_true.data(), rep.theta_true.data() + rep.theta_true.size());
    json edges = json::array();
    for (const auto& [a, b] : rep.true_edges) edges.push_back({a + 1, b + 1});
    j["true_edges"] = edges;
    j["seconds"] = rep.seconds;

    json sets = json::array();
    for (const SetSummary& s : rep.sets)
        sets.push_back({{"n", s.n},
                        {"N", s.N},
                        {"rate", s.rate},
                        {"rmse_samples", s.rmse_samples},
                        {"rmse_median", s.rmse_median},
                        {"failures", s.failures}});
    j["sets"] = sets;

    json runs = json::array();
    for (const RunRecord& r : rep.runs) {
        json jr = {{"set", r.set_index}, {"run", r.run_index}, {"ok", r.ok}, {"seconds", r.seconds}};
        if (r.ok) {
            jr["theta_hat"] = std::vector<double>(r.theta_hat.data(), r.theta_hat.data() + r.theta_hat.size());
            jr["rmse"] = r.rmse;
            json tedges = json::array();
            for (const auto& [a, b] : r.topology) tedges.push_back({a + 1, b + 1});
            jr["topology"] = tedges;
            if (!r.b_free.empty()) jr["b_free"] = r.b_free;
        } else {
            jr["error"] = r.error;
        }
        runs.push_back(std::move(jr));
    }
    j["runs"] = runs;

    if (rep.mean.size() > 0) {
        j["mean"] = std::vector<double>(rep.mean.data(), rep.mean.data() + rep.mean.size());
        j["sd"] = std::vector<double>(rep.sd.data(), rep.sd.data() + rep.sd.size());
        j["topology_exact_matches"] = rep.topology_exact_matches;
    }
    return j;
}

void write_experiment_report(const std::string& path, const ExperimentReport& rep) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::ConfigError, "cannot open " + path + " for writing");
    out << experiment_report_json(rep).dump(2) << '\n';
}

void write_samples_csv(const std::string& path, const ExperimentReport& rep) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::ConfigError, "cannot open " + path + " for writing");
    out << "set,n,N,run,ok,rmse";
    for (const std::string& name : rep.names) out << "," << name;
    out << "\n";
    out.precision(17);
    for (const RunRecord& r : rep.runs) {
        const SetSummary& s = rep.sets[r.set_index];
        out << r.set_index << "," << s.n << "," << s.N << "," << r.run_index << "," << (r.ok ? 1 : 0) << ",";
        if (r.ok) {
            out << r.rmse;
            for (int i = 0; i < r.theta_hat.size(); ++i) out << "," << r.theta_hat(i);
        } else {
            for (int i = 0; i <= static_cast<int>(rep.names.size()); ++i) out << (i ? "," : "");
        }
        out << "\n";
    }
}

} // namespace netid
