#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "netid/pipeline.hpp"
#include "netid/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace netid;

TEST_CASE("parameter paths") {
    ParamLayout lay = make_layout(4, 1, 2, 0, 1);
    CHECK(parse_param_path("b[1][1][0]", lay) == lay.b_index(0, 0, 0));
    CHECK(parse_param_path("a[2][3][1]", lay) == lay.a_index(1, 2, 1));
    CHECK(parse_param_path("a[3][2][1]", lay) == lay.a_index(1, 2, 1)); // symmetric normalization
    CHECK(parse_param_path("cbar[4][4][1]", lay) == lay.c_index(3, 3, 1));
    CHECK_THROWS_AS(parse_param_path("q[1][1][0]", lay), Error);
    CHECK_THROWS_AS(parse_param_path("a[1][1]", lay), Error);

    ModelSetSpec::LinConstraint c = parse_fix_constraint("fix b[1][1][0] = 1");
    CHECK(c.terms.size() == 1);
    CHECK(c.terms[0].path == "b[1][1][0]");
    CHECK(c.rhs == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_fix_constraint("pin b[1][1][0] = 1"), Error);
}

TEST_CASE("model set masks and constraint assembly") {
    ModelSetSpec spec = testing::benchmark_spec(1, 1);
    CHECK(spec.a_state(0, 1, 2) == ParamState::FixedZero);  // off-diagonal above the lag bound
    CHECK(spec.a_state(0, 1, 1) == ParamState::Free);
    CHECK(spec.a_state(2, 2, 2) == ParamState::Free);
    double v = 0.0;
    CHECK(spec.b_state(0, 0, 0, &v) == ParamState::FixedValue);
    CHECK(v == doctest::Approx(1.0));
    CHECK(spec.b_state(1, 0, 0) == ParamState::FixedZero);

    Constraint c = spec.build_constraint();
    CHECK(c.count() == 4 + 6); // b fixes + 6 masked coupling lags
    CHECK(c.gamma.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK(spec.allowed_pairs().size() == 6);
}

TEST_CASE("informativity check") {
    Mat white = gaussian_matrix(1, 4000, 2024);
    InformativityReport rep = check_informativity(white, 10);
    CHECK(rep.status == CheckStatus::Pass);
    CHECK(rep.min_eigenvalue == doctest::Approx(1.0).epsilon(0.2));

    Mat zero = Mat::Zero(1, 4000);
    CHECK(check_informativity(zero, 10).status == CheckStatus::Fail);

    Mat sine(1, 4000);
    for (int t = 0; t < 4000; ++t) sine(0, t) = std::sin(0.37 * t);
    CHECK(check_informativity(sine, 10).status == CheckStatus::Fail);
}

TEST_CASE("identifiability gate on the benchmark spec and its mutations") {
    ModelSetSpec spec = testing::benchmark_spec(1, 1);
    IdentifiabilityReport rep = check_identifiability(spec);
    CHECK(rep.pass());
    CHECK(rep.coprimeness == CheckStatus::NotChecked);
    CHECK(rep.diagonal_full_rank == CheckStatus::Pass);
    CHECK(rep.diagonal_lag == 2);
    CHECK(rep.excitation_present == CheckStatus::Pass);
    CHECK(rep.scaling_constraint == CheckStatus::Pass);

    ModelSetSpec no_excitation = spec;
    no_excitation.K = 0;
    no_excitation.constraints.clear();
    no_excitation.constraints.push_back(parse_fix_constraint("fix a[1][1][0] = 1"));
    IdentifiabilityReport r3 = check_identifiability(no_excitation);
    CHECK(r3.excitation_present == CheckStatus::Fail);
    CHECK(!r3.pass());

    ModelSetSpec zero_gamma = spec;
    for (auto& c : zero_gamma.constraints) c.rhs = 0.0;
    IdentifiabilityReport r4 = check_identifiability(zero_gamma);
    CHECK(r4.scaling_constraint == CheckStatus::Fail);
    CHECK(!r4.pass());

    ModelSetSpec no_diag = spec;
    no_diag.a_offdiag_max_lag = 2; // couplings at every lag: no diagonal matrix left
    IdentifiabilityReport r2 = check_identifiability(no_diag);
    CHECK(r2.diagonal_full_rank == CheckStatus::Fail);
    CHECK(!r2.pass());
}

TEST_CASE("topology thresholding") {
    PolyMatrix ybar(3, 3, 1);
    // Edge {1,2} strong, edge {2,3} weak.
    ybar.coeff(0) << 5.0, -5.0, 0.0, -5.0, 5.2, -0.2, 0.0, -0.2, 0.2;
    ybar.coeff(1) << 1.0, -1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0;

    auto edges = topology(ybar, 0.05);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0] == std::make_pair(0, 1));

    auto all = topology(ybar, 0.0);
    CHECK(all.size() == 3); // every pair reported at threshold zero

    PolyMatrix zero(3, 3, 0);
    CHECK(topology(zero, 0.05).empty());
}

TEST_CASE("identify on a noiseless network recovers everything exactly") {
    NetworkConfig cfg = testing::benchmark_network(1, /*noiseless=*/true);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(1, 2000, 999);
    Dataset data = generate(model, r, {Mat::Zero(4, 4), 0});

    ModelSetSpec spec = testing::benchmark_spec(1, 0);
    IdentResult res = identify(data, spec, 2);

    CHECK(res.diag.feasibility < 1e-9);
    CHECK(res.diag.stability.stable);
    CHECK(res.diag.rank_A0.full_rank);
    CHECK(res.diag.noise_degenerate);

    // Continuous components to 1e-6 relative.
    Vec truth = Vec::Zero(12);
    Vec est = Vec::Zero(12);
    int pos = 0;
    for (int j = 0; j < 4; ++j)
        for (int l = 0; l <= 2; ++l) {
            truth(pos) = cfg.net.x(j, l);
            est(pos) = res.continuous.x(j, l);
            ++pos;
        }
    CHECK((est - truth).cwiseAbs().maxCoeff() < 1e-6 * truth.cwiseAbs().maxCoeff());
    for (const auto& [pair, coeffs] : cfg.net.y) {
        Vec rec = res.continuous.coupling(pair.first, pair.second);
        CHECK((rec.head(2) - coeffs).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + coeffs.cwiseAbs().maxCoeff()));
    }
    CHECK(res.B.coeff(0)(0, 0) == doctest::Approx(1.0));

    // Topology equals the true edge set.
    CHECK(res.topology_edges == cfg.net.edges());

    // Step-5/6 outputs round-trip: discretizing the continuous estimate
    // reproduces the split components.
    DiscreteComponents again = discretize(res.continuous, res.Ts);
    for (int l = 0; l <= 2; ++l) {
        CHECK((again.Xbar.coeff(l) - res.Xbar.coeff(l)).cwiseAbs().maxCoeff() <
              1e-10 * (1.0 + res.Xbar.coeff(l).cwiseAbs().maxCoeff()));
        CHECK((again.Ybar.coeff(l) - res.Ybar.coeff(l)).cwiseAbs().maxCoeff() <
              1e-10 * (1.0 + res.Ybar.coeff(l).cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("identify is deterministic") {
    NetworkConfig cfg = testing::benchmark_network(1);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(1, 3000, 1001);
    Dataset data = generate(model, r, {cfg.Lambda, 1003});
    ModelSetSpec spec = testing::benchmark_spec(1, 1);

    IdentResult a = identify(data, spec, 4);
    IdentResult b = identify(data, spec, 4);
    CHECK((a.structured.vartheta - b.structured.vartheta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.diag.cost_trace == b.diag.cost_trace);
}

TEST_CASE("single noisy K=1 run: finite estimates, feasibility, structure") {
    NetworkConfig cfg = testing::benchmark_network(1);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(1, 10000, 2025);
    Dataset data = generate(model, r, {cfg.Lambda, 2026});
    ModelSetSpec spec = testing::benchmark_spec(1, 1);

    IdentResult res = identify(data, spec, 5);
    Vec th = theta_c(res.continuous, 2, 1);
    CHECK(th.allFinite());
    CHECK(th.size() == 24);
    CHECK(res.diag.feasibility < 1e-9);
    CHECK(res.diag.stability.stable);
    CHECK(res.diag.rank_A0.full_rank);

    // The estimated A is symmetric by construction of the parametrization and
    // reassembles exactly from its split components.
    CHECK(structure(res.A, 0.0).symmetric);
    PolyMatrix back = assemble_A(res.Xbar, res.Ybar);
    for (int l = 0; l <= res.A.degree(); ++l)
        CHECK((back.coeff(l) - res.A.coeff(l)).cwiseAbs().maxCoeff() <=
              4 * 2.3e-16 * res.Xbar.coeff(l).cwiseAbs().maxCoeff());

    // The refinement returns the lowest-cost iterate, never worse than step 2.
    Mat eps = discard_transient(structured_residual(res.structured.vartheta, spec.layout(), data), 5);
    const double returned_cost = cost_det(eps).value;
    const double best_traced = *std::min_element(res.diag.cost_trace.begin(), res.diag.cost_trace.end());
    CHECK(returned_cost == doctest::Approx(best_traced).epsilon(1e-12));
    CHECK(returned_cost <= res.diag.cost_trace.front());
}

TEST_CASE("recovered noise filter approaches the true first-order filter") {
    NetworkConfig cfg = testing::benchmark_network(3);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(3, 10000, 3001);
    Dataset data = generate(model, r, {cfg.Lambda, 3002});
    ModelSetSpec spec = testing::benchmark_spec(3, 1);

    IdentResult res = identify(data, spec, 5);
    REQUIRE(res.C.degree() == 1);
    CHECK((res.C.coeff(0) - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((res.C.coeff(1) - cfg.C.coeff(1)).cwiseAbs().maxCoeff() < 0.1);
    CHECK((res.Lambda - cfg.Lambda).cwiseAbs().maxCoeff() < 0.3 * cfg.Lambda(0, 0));
}

TEST_CASE("identify rejects short data at step 1") {
    NetworkConfig cfg = testing::benchmark_network(1);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(1, 12, 5);
    Dataset data = generate(model, r, {cfg.Lambda, 5});
    ModelSetSpec spec = testing::benchmark_spec(1, 1);
    try {
        identify(data, spec, 4, {});
        CHECK(false);
    } catch (const Error& e) {
        const std::string what = e.what();
        const bool tagged = what.find("step 1") != std::string::npos ||
                            what.find("informativity") != std::string::npos;
        CHECK(tagged);
    }
}

TEST_CASE("identify refuses non-identifiable specs unless forced") {
    NetworkConfig cfg = testing::benchmark_network(1);
    DiscreteModel model = discretize_model(cfg);
    Mat r = gaussian_matrix(1, 2000, 77);
    Dataset data = generate(model, r, {cfg.Lambda, 79});

    ModelSetSpec bad = testing::benchmark_spec(1, 1);
    for (auto& c : bad.constraints) c.rhs = 0.0; // gamma = 0
    CHECK_THROWS_AS(identify(data, bad, 3), Error);
}

TEST_CASE("end-to-end consistency trend for the ARX-like specialization") {
    NetworkConfig cfg = testing::benchmark_network(1, /*noiseless=*/true);
    cfg.Lambda = 1e-4 * Mat::Identity(4, 4); // C = I, white noise
    DiscreteModel model = discretize_model(cfg);
    ModelSetSpec spec = testing::benchmark_spec(1, 0);

    std::vector<double> medians;
    for (long N : {1000L, 10000L, 100000L}) {
        std::vector<double> errs;
        for (int run = 0; run < 5; ++run) {
            Mat r = gaussian_matrix(1, static_cast<int>(N), derive_seed(4242, N, run));
            Dataset data = generate(model, r, {cfg.Lambda, derive_seed(4243, N, run)});
            IdentResult res = identify(data, spec, 2);
            double err = 0.0;
            for (int j = 0; j < 4; ++j)
                for (int l = 0; l <= 2; ++l)
                    err = std::max(err, std::abs(res.continuous.x(j, l) - cfg.net.x(j, l)));
            errs.push_back(err);
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(errs[errs.size() / 2]);
    }
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}
