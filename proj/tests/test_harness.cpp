#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "netid/harness.hpp"
#include "netid/rng.hpp"
#include "support/fixtures.hpp"

using namespace netid;

TEST_CASE("rmse") {
    Vec t0(2), th(2);
    t0 << 1.0, 0.0;
    th << 1.0, 0.0;
    CHECK(rmse(th, t0) == doctest::Approx(0.0));

    th << 1.1, 0.0;
    CHECK(rmse(th, t0) == doctest::Approx(0.01));

    Vec t1(2), z(2);
    t1 << 3.0, 4.0;
    z << 0.0, 0.0;
    CHECK(rmse(z, t1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(rmse(t1, z), Error);
}

TEST_CASE("theta_c layout matches the reporting table order") {
    NetworkConfig cfg = testing::benchmark_network(1);
    Vec th = theta_c(cfg.net, 2, 1);
    REQUIRE(th.size() == 24);
    // Ground components node-major.
    CHECK(th(0) == doctest::Approx(1.0));
    CHECK(th(2) == doctest::Approx(1e-2));
    CHECK(th(9) == doctest::Approx(10.0));
    CHECK(th(11) == doctest::Approx(7e-2));
    // Couplings as matrix entries, pair-lexicographic: (1,2),(1,3),(1,4),(2,3),(2,4),(3,4).
    CHECK(th(12) == doctest::Approx(-4.0));
    CHECK(th(13) == doctest::Approx(-0.3));
    CHECK(th(14) == doctest::Approx(0.0));  // pair (1,3) absent
    CHECK(th(19) == doctest::Approx(-0.4)); // pair (2,3), lag 1
    CHECK(th(20) == doctest::Approx(-8.0)); // pair (2,4), lag 0
    CHECK(th(22) == doctest::Approx(-9.0)); // pair (3,4), lag 0
    CHECK(th(23) == doctest::Approx(-0.6));

    auto names = theta_c_names(4, 2, 1);
    CHECK(names.size() == 24);
    CHECK(names[0] == "x[1][0]");
    CHECK(names[12] == "Y0[1][2]");
}

TEST_CASE("seed derivation is order-free and collision-resistant") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
    CHECK(derive_seed(1, 0, 1) != derive_seed(1, 1, 0));
}

TEST_CASE("signal CSV round trip is bit exact") {
    NetworkConfig cfg = testing::benchmark_network(1);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(1, 257, 1);
    Dataset d = generate(model, r, {cfg.Lambda, 2});

    const std::string path = (std::filesystem::temp_directory_path() / "netid_csv_test.csv").string();
    write_signals_csv(path, d);
    Dataset back = read_signals_csv(path);
    std::remove(path.c_str());

    REQUIRE(back.N() == d.N());
    REQUIRE(back.L() == d.L());
    REQUIRE(back.K() == d.K());
    CHECK(back.Ts == d.Ts);
    CHECK((back.w - d.w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.r - d.r).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shipped configs load and describe the benchmark") {
    const std::string dir = testing::config_dir();
    NetworkConfig net = load_network(dir + "/network_k1.json");
    CHECK(net.net.L == 4);
    CHECK(net.net.edges().size() == 4);
    CHECK(net.net.validate().empty());
    CHECK(net.Lambda(0, 0) == doctest::Approx(1e-4));
    CHECK(net.C.degree() == 1);

    ModelSetSpec spec = load_spec(dir + "/spec_k3.json");
    CHECK(spec.K == 3);
    CHECK(check_identifiability(spec).pass());

    ExperimentConfig exp1 = load_experiment(dir + "/exp1.json");
    CHECK(exp1.schedule.size() == 10);
    CHECK(exp1.runs == 20);
}

TEST_CASE("shipped experiment-1 rates match the published table to 2 decimals") {
    ExperimentConfig cfg = load_experiment(testing::config_dir() + "/exp1.json");
    const double published[] = {0.85, 0.80, 0.75, 0.70, 0.65, 0.60, 0.55, 0.50, 0.45, 0.40};
    REQUIRE(cfg.schedule.size() == 10);
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
        const auto& [n, N] = cfg.schedule[i];
        const double rate = std::pow(n, 4) / static_cast<double>(N);
        CHECK(std::abs(rate - published[i]) <= 0.01);
    }
}

TEST_CASE("single-run experiment report") {
    ExperimentConfig cfg;
    cfg.network = testing::benchmark_network(1);
    cfg.spec = testing::benchmark_spec(1, 1);
    cfg.seed = 7;
    cfg.runs = 1;
    cfg.schedule = {{4, 3000}};

    ExperimentReport rep = run_experiment1(cfg, 1);
    REQUIRE(rep.runs.size() == 1);
    REQUIRE_MESSAGE(rep.runs[0].ok, rep.runs[0].error);
    REQUIRE(rep.sets.size() == 1);
    REQUIRE(rep.sets[0].rmse_samples.size() == 1);
    CHECK(rep.sets[0].rmse_median == rep.sets[0].rmse_samples[0]);
    CHECK(rep.sets[0].rmse_median < 1.0);

    nlohmann::json j = experiment_report_json(rep);
    CHECK(j.contains("sets"));
    CHECK(j["runs"].size() == 1);
}

TEST_CASE("experiment reports are invariant to the parallelization degree") {
    ExperimentConfig cfg;
    cfg.network = testing::benchmark_network(1);
    cfg.spec = testing::benchmark_spec(1, 1);
    cfg.seed = 11;
    cfg.runs = 4;
    cfg.schedule = {{3, 1200}};

    ExperimentReport serial = run_experiment1(cfg, 1);
    ExperimentReport threaded = run_experiment1(cfg, 4);
    REQUIRE(serial.runs.size() == threaded.runs.size());
    for (std::size_t i = 0; i < serial.runs.size(); ++i) {
        REQUIRE(serial.runs[i].ok == threaded.runs[i].ok);
        if (serial.runs[i].ok)
            CHECK((serial.runs[i].theta_hat - threaded.runs[i].theta_hat).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("deterministic replay of an experiment") {
    ExperimentConfig cfg;
    cfg.network = testing::benchmark_network(3);
    cfg.spec = testing::benchmark_spec(3, 1);
    cfg.seed = 13;
    cfg.runs = 2;
    cfg.schedule = {{5, 2000}};

    ExperimentReport a = run_experiment2(cfg, 1);
    ExperimentReport b = run_experiment2(cfg, 2);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.sd - b.sd).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.topology_exact_matches == b.topology_exact_matches);
}

TEST_CASE("oracle chain through the file formats") {
    // Noise-free simulate -> CSV -> read back -> identify: the continuous
    // parameters round-trip to working precision (RMSE far below 1e-10).
    NetworkConfig cfg = testing::benchmark_network(1, /*noiseless=*/true);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(1, 2000, 31337);
    Dataset d = generate(model, r, {Mat::Zero(4, 4), 0});

    const std::string path = (std::filesystem::temp_directory_path() / "netid_chain_test.csv").string();
    write_signals_csv(path, d);
    Dataset back = read_signals_csv(path);
    std::remove(path.c_str());

    IdentResult res = identify(back, testing::benchmark_spec(1, 0), 2);
    Vec truth = theta_c(cfg.net, 2, 1);
    Vec est = theta_c(res.continuous, 2, 1);
    CHECK(rmse(est, truth) < 1e-10);
}

TEST_CASE("structured multi-term constraints parse and bind") {
    nlohmann::json j = {{"L", 2},  {"K", 1},  {"na", 1}, {"nb", 0}, {"nc", 0},
                        {"constraints",
                         nlohmann::json::array(
                             {nlohmann::json{{"terms", nlohmann::json::array(
                                                           {nlohmann::json{{"path", "a[1][1][0]"}, {"coef", 1.0}},
                                                            nlohmann::json{{"path", "a[2][2][0]"}, {"coef", 1.0}}})},
                                             {"rhs", 2.0}},
                              "fix b[1][1][0] = 1"})}};
    ModelSetSpec spec = spec_from_json(j);
    Constraint c = spec.build_constraint();
    REQUIRE(c.count() == 2);
    ParamLayout lay = spec.layout();
    CHECK(c.Gamma(0, lay.a_index(0, 0, 0)) == doctest::Approx(1.0));
    CHECK(c.Gamma(0, lay.a_index(1, 1, 0)) == doctest::Approx(1.0));
    CHECK(c.gamma(0) == doctest::Approx(2.0));
    CHECK(c.Gamma(1, lay.b_index(0, 0, 0)) == doctest::Approx(1.0));
}

TEST_CASE("samples CSV carries one row per run") {
    ExperimentConfig cfg;
    cfg.network = testing::benchmark_network(1);
    cfg.spec = testing::benchmark_spec(1, 1);
    cfg.seed = 3;
    cfg.runs = 2;
    cfg.schedule = {{3, 1200}};
    ExperimentReport rep = run_experiment1(cfg, 1);

    const std::string path = (std::filesystem::temp_directory_path() / "netid_samples_test.csv").string();
    write_samples_csv(path, rep);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    in.close();
    std::remove(path.c_str());
    CHECK(lines == 1 + 2); // header + one row per run
}

TEST_CASE("median and quantile helpers") {
    CHECK(median({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
    CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25) == doctest::Approx(2.0));
    CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.75) == doctest::Approx(4.0));
}
