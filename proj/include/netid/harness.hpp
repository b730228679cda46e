#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netid/io.hpp"

namespace netid {

/// Relative mean squared error ||theta0 - theta_hat||^2 / ||theta0||^2.
double rmse(const Vec& theta_hat, const Vec& theta0);

/// Continuous X/Y parameter vector in reporting order: ground/buffer
/// components node-major with ascending lags, then coupling MATRIX entries
/// (the negated components) pair-lexicographic with ascending lags.
Vec theta_c(const ContinuousNetwork& net, int nx, int ny);
std::vector<std::string> theta_c_names(int L, int nx, int ny);

struct ExperimentConfig {
    NetworkConfig network;
    ModelSetSpec spec;
    std::uint64_t seed = 1;
    int runs = 20;
    std::vector<std::pair<int, long>> schedule; // (n, N) per set; one entry for experiment 2
    double excitation_variance = 1.0;
    IdentOptions ident;
};

ExperimentConfig load_experiment(const std::string& path);
ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::string& base_dir);

struct RunRecord {
    int set_index = 0;
    int run_index = 0;
    bool ok = false;
    std::string error;
    Vec theta_hat;                      // theta_c of the estimate
    std::vector<double> b_free;         // free excitation parameters, layout order
    double rmse = 0.0;
    std::vector<std::pair<int, int>> topology;
    double seconds = 0.0;
};

struct SetSummary {
    int n = 0;
    long N = 0;
    double rate = 0.0; // n^4 / N
    std::vector<double> rmse_samples;
    double rmse_median = 0.0;
    int failures = 0;
};

struct ExperimentReport {
    std::vector<std::string> names;
    Vec theta_true;
    std::vector<std::pair<int, int>> true_edges;
    std::vector<RunRecord> runs;
    std::vector<SetSummary> sets;

    // Per-parameter statistics over the successful runs (experiment 2).
    Vec mean;
    Vec sd;
    int topology_exact_matches = 0;
    double seconds = 0.0;
};

/// Generates a fresh dataset for one Monte-Carlo run (new excitation and
/// noise, seeds derived from the master seed).
Dataset simulate_run(const ExperimentConfig& cfg, int set_index, int run_index, long N);

ExperimentReport run_experiment1(const ExperimentConfig& cfg, int threads = 0);
ExperimentReport run_experiment2(const ExperimentConfig& cfg, int threads = 0);

nlohmann::json experiment_report_json(const ExperimentReport& rep);
void write_experiment_report(const std::string& path, const ExperimentReport& rep);
void write_samples_csv(const std::string& path, const ExperimentReport& rep);

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

/// Runs fn(0..count-1) on a small thread pool; results must be stored by index.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

} // namespace netid
