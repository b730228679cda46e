#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "netid/harness.hpp"
#include "netid/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitCheck = 3;

int exit_code_for(const netid::Error& e) {
    switch (e.code()) {
        case netid::ErrorCode::ConfigError:
        case netid::ErrorCode::DomainError: return kExitUsage;
        case netid::ErrorCode::CheckFailure: return kExitCheck;
        default: return kExitNumerical;
    }
}

const char* status_text(netid::CheckStatus s) {
    switch (s) {
        case netid::CheckStatus::Pass: return "PASS";
        case netid::CheckStatus::Fail: return "FAIL";
        default: return "NOT CHECKED";
    }
}

struct ExcitationSpec {
    double variance = 1.0;
};

ExcitationSpec parse_excitation(const std::string& text) {
    ExcitationSpec spec;
    std::string s = text;
    const auto colon = s.find(':');
    std::string type = colon == std::string::npos ? s : s.substr(0, colon);
    if (type != "white") throw CLI::ValidationError("--excitation", "only white:var=<v> is supported");
    if (colon != std::string::npos) {
        std::string rest = s.substr(colon + 1);
        if (rest.rfind("var=", 0) != 0) throw CLI::ValidationError("--excitation", "expected white:var=<v>");
        try {
            spec.variance = std::stod(rest.substr(4));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--excitation", "bad variance value");
        }
    }
    if (!(spec.variance >= 0.0)) throw CLI::ValidationError("--excitation", "variance must be >= 0");
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identification of diffusively coupled linear networks"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate node-signal data from a network file");
    std::string sim_network, sim_out = "data.csv", sim_excitation = "white:var=1";
    long sim_samples = 10000;
    std::uint64_t sim_seed = 1;
    sim->add_option("--network", sim_network, "network description file")->required();
    sim->add_option("--samples", sim_samples, "number of samples")->required();
    sim->add_option("--seed", sim_seed, "seed");
    sim->add_option("--excitation", sim_excitation, "excitation spec, white:var=<v>");
    sim->add_option("--out", sim_out, "output CSV path");

    // identify
    auto* ident = app.add_subcommand("identify", "Identify a network from signal data");
    std::string id_data, id_spec, id_report = "report.json";
    int id_order = 0, id_max_iter = 50;
    bool id_no_weighting = false, id_force = false;
    double id_threshold = 0.05;
    ident->add_option("--data", id_data, "signal CSV")->required();
    ident->add_option("--spec", id_spec, "model-set spec file")->required();
    ident->add_option("--arx-order", id_order, "order n of the nonparametric ARX stage")->required();
    ident->add_flag("--no-weighting", id_no_weighting, "disable the step-2 covariance weighting");
    ident->add_option("--max-iter", id_max_iter, "step-3 iteration cap");
    ident->add_option("--threshold", id_threshold, "relative topology threshold");
    ident->add_flag("--force", id_force, "run even if pre-checks fail");
    ident->add_option("--report", id_report, "output report path");

    // check
    auto* check = app.add_subcommand("check", "Identifiability and informativity reports");
    std::string ck_spec, ck_data;
    int ck_order = 0;
    check->add_option("--spec", ck_spec, "model-set spec file")->required();
    check->add_option("--data", ck_data, "signal CSV (enables the informativity check)");
    check->add_option("--arx-order", ck_order, "ARX order used for the informativity depth");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Monte-Carlo experiment runner");
    std::string exp_kind, exp_config, exp_out = "report.json", exp_csv;
    int exp_runs = 0, exp_threads = 0;
    std::uint64_t exp_seed = 0;
    bool exp_seed_set = false, exp_runs_set = false;
    exp->add_option("kind", exp_kind, "exp1 or exp2")->required()->check(CLI::IsMember({"exp1", "exp2"}));
    exp->add_option("--config", exp_config, "experiment config file")->required();
    exp->add_option("--runs", exp_runs, "override Monte-Carlo run count")->each([&](const std::string&) {
        exp_runs_set = true;
    });
    exp->add_option("--seed", exp_seed, "override master seed")->each([&](const std::string&) {
        exp_seed_set = true;
    });
    exp->add_option("--out", exp_out, "report output path");
    exp->add_option("--csv", exp_csv, "raw sample CSV output path");
    exp->add_option("--threads", exp_threads, "worker threads (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) {
            ExcitationSpec exc = parse_excitation(sim_excitation);
            netid::NetworkConfig cfg = netid::load_network(sim_network);
            auto issues = cfg.net.validate();
            for (const auto& msg : issues) std::cerr << "warning: network: " << msg << "\n";
            netid::DiscreteModel model = netid::discretize_model(cfg);
            netid::Mat r = std::sqrt(exc.variance) *
                           netid::gaussian_matrix(cfg.net.K, static_cast<int>(sim_samples),
                                                  netid::splitmix64(sim_seed ^ 0x52554E5F52UL));
            netid::Dataset data =
                netid::generate(model, r, {cfg.Lambda, netid::splitmix64(sim_seed ^ 0x52554E5F45UL)});
            netid::write_signals_csv(sim_out, data);
            std::cout << "wrote " << data.N() << " samples (" << data.L() << " nodes, " << data.K()
                      << " excitations) to " << sim_out << "\n";
        } else if (ident->parsed()) {
            netid::Dataset data = netid::read_signals_csv(id_data);
            netid::ModelSetSpec spec = netid::load_spec(id_spec);
            netid::IdentOptions opts;
            opts.use_weighting = !id_no_weighting;
            opts.max_iter = id_max_iter;
            opts.force = id_force;
            opts.topology_threshold = id_threshold;
            netid::IdentResult res = netid::identify(data, spec, id_order, opts);
            netid::write_ident_report(id_report, res);
            std::cout << "report written to " << id_report << "\n";
            std::cout << "det-cost trace:";
            for (double c : res.diag.cost_trace) std::cout << " " << c;
            std::cout << "\nfeasibility " << res.diag.feasibility << ", "
                      << (res.diag.stability.stable ? "stable" : "UNSTABLE") << ", topology edges:";
            for (const auto& [a, b] : res.topology_edges) std::cout << " {" << a + 1 << "," << b + 1 << "}";
            std::cout << "\n";
        } else if (check->parsed()) {
            netid::ModelSetSpec spec = netid::load_spec(ck_spec);
            netid::IdentifiabilityReport rep = netid::check_identifiability(spec);
            std::cout << "condition 1 (left coprimeness):       " << status_text(rep.coprimeness) << "\n";
            std::cout << "condition 2 (diagonal full-rank lag): " << status_text(rep.diagonal_full_rank);
            if (rep.diagonal_full_rank == netid::CheckStatus::Pass) {
                if (rep.diagonal_lag >= 100) std::cout << " (B lag " << rep.diagonal_lag - 100 << ")";
                else std::cout << " (A lag " << rep.diagonal_lag << ")";
            }
            std::cout << "\n";
            std::cout << "condition 3 (excitation present):     " << status_text(rep.excitation_present) << "\n";
            std::cout << "condition 4 (scaling constraint):     " << status_text(rep.scaling_constraint) << "\n";
            bool ok = rep.pass();
            if (!ck_data.empty()) {
                netid::Dataset data = netid::read_signals_csv(ck_data);
                const int n = ck_order > 0 ? ck_order : spec.na + spec.nc + 2;
                const int depth = spec.L * n + spec.K * (n + 1);
                netid::InformativityReport inf = netid::check_informativity(data.r, depth);
                std::cout << "informativity (depth " << inf.depth << "):          " << status_text(inf.status)
                          << " (min eigenvalue " << inf.min_eigenvalue << ")\n";
                ok = ok && inf.status == netid::CheckStatus::Pass;
            }
            return ok ? kExitOk : kExitCheck;
        } else if (exp->parsed()) {
            netid::ExperimentConfig cfg = netid::load_experiment(exp_config);
            if (exp_runs_set) cfg.runs = exp_runs;
            if (exp_seed_set) cfg.seed = exp_seed;
            netid::ExperimentReport rep = exp_kind == "exp1" ? netid::run_experiment1(cfg, exp_threads)
                                                             : netid::run_experiment2(cfg, exp_threads);
            netid::write_experiment_report(exp_out, rep);
            if (!exp_csv.empty()) netid::write_samples_csv(exp_csv, rep);
            int failures = 0;
            for (const auto& s : rep.sets) failures += s.failures;
            std::cout << "completed " << rep.runs.size() << " runs in " << rep.seconds << " s, " << failures
                      << " failed\n";
            for (const auto& s : rep.sets)
                std::cout << "  set n=" << s.n << " N=" << s.N << " median RMSE "
                          << (s.rmse_samples.empty() ? 0.0 : s.rmse_median) << " (" << s.failures
                          << " failures)\n";
            if (rep.mean.size() > 0 && exp_kind == "exp2")
                std::cout << "  exact topology in " << rep.topology_exact_matches << " runs\n";
            std::cout << "report written to " << exp_out << "\n";
        }
    } catch (const netid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
