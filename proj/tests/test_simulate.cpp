#include "doctest.h"

#include <random>

#include "netid/rng.hpp"
#include "netid/simulate.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace netid;

namespace {

DiscreteModel benchmark_model(int K, bool noiseless = false) {
    NetworkConfig cfg = testing::benchmark_network(K, noiseless);
    DiscreteComponents c = discretize(cfg.net, cfg.Ts);
    return DiscreteModel{assemble_A(c.Xbar, c.Ybar), c.B, cfg.C, cfg.Lambda, cfg.Ts};
}

} // namespace

TEST_CASE("generate identity and static-gain networks") {
    const int L = 3, N = 16;
    Mat r = Mat::Random(L, N);
    DiscreteModel ident{PolyMatrix::identity(L), PolyMatrix::identity(L), PolyMatrix::identity(L),
                        Mat::Zero(L, L), 1.0};
    Dataset d = generate(ident, r, {Mat::Zero(L, L), 42});
    CHECK((d.w - r).cwiseAbs().maxCoeff() < 1e-14);

    DiscreteModel half = ident;
    half.A.coeff(0) = 2.0 * Mat::Identity(L, L);
    Dataset dh = generate(half, r, {Mat::Zero(L, L), 42});
    CHECK((dh.w - 0.5 * r).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("generate is deterministic and refuses unstable models") {
    DiscreteModel model = benchmark_model(1);
    Mat r = gaussian_matrix(1, 500, 7);
    Dataset d1 = generate(model, r, {model.Lambda, 99});
    Dataset d2 = generate(model, r, {model.Lambda, 99});
    CHECK((d1.w - d2.w).cwiseAbs().maxCoeff() == 0.0); // byte-identical replay

    Dataset d3 = generate(model, r, {model.Lambda, 100});
    CHECK((d1.w - d3.w).cwiseAbs().maxCoeff() > 0.0);

    DiscreteModel unstable = model;
    unstable.A = PolyMatrix(std::vector<Mat>{Mat::Identity(4, 4), -2.0 * Mat::Identity(4, 4)});
    CHECK_THROWS_AS(generate(unstable, r, {model.Lambda, 1}), Error);
}

TEST_CASE("innovation covariance") {
    CHECK((innovation_covariance(2.0 * Mat::Identity(2, 2), Mat::Identity(2, 2)) - 0.25 * Mat::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
    Mat lam = (Mat(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
    CHECK((innovation_covariance(Mat::Identity(2, 2), lam) - lam).cwiseAbs().maxCoeff() < 1e-15);

    Mat a0 = (Mat(2, 2) << 2.0, -1.0, -1.0, 1.0).finished();
    Mat expect = (Mat(2, 2) << 2.0, 3.0, 3.0, 5.0).finished();
    CHECK((innovation_covariance(a0, Mat::Identity(2, 2)) - expect).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(innovation_covariance(Mat::Zero(2, 2), lam), Error);
}

TEST_CASE("prediction error vanishes on noise-free data") {
    DiscreteModel model = benchmark_model(1, /*noiseless=*/true);
    Mat r = gaussian_matrix(1, 400, 3);
    Dataset d = generate(model, r, {Mat::Zero(4, 4), 0});
    Mat eps = prediction_error(model, d);
    CHECK(discard_transient(eps, model.A.degree()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("prediction error reproduces the innovation at the true model") {
    DiscreteModel model = benchmark_model(1);
    Mat r = gaussian_matrix(1, 2000, 5);
    GenerateDetail det = generate_detail(model, r, {model.Lambda, 11});
    Mat eps = prediction_error(model, det.data);
    // eps(t) = A_0^-1 e(t) sample-wise.
    Mat expected = model.A.coeff(0).lu().solve(det.e);
    CHECK((eps - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("static ARX case has a closed-form prediction error") {
    // C = I and A = A_0: eps(t) = w(t) - A_0^-1 B r(t).
    const int L = 2;
    Mat a0 = (Mat(2, 2) << 3.0, -1.0, -1.0, 2.0).finished();
    DiscreteModel model{PolyMatrix::constant(a0), PolyMatrix::identity(L), PolyMatrix::identity(L),
                        0.01 * Mat::Identity(L, L), 1.0};
    Mat r = gaussian_matrix(L, 300, 17);
    Dataset d = generate(model, r, {model.Lambda, 23});
    Mat eps = prediction_error(model, d);
    Mat direct = d.w - a0.lu().solve(r);
    CHECK((eps - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predictor matches an independently expanded filter") {
    // w(t) - eps(t) against the series-expanded predictor filters
    // [I - A0^-1 C^-1 A] w + A0^-1 C^-1 B r, truncated far beyond the decay.
    DiscreteModel model = benchmark_model(1);
    Mat r = gaussian_matrix(1, 300, 29);
    Dataset d = generate(model, r, {model.Lambda, 31});
    Mat eps = prediction_error(model, d);
    Mat predictor = d.w - eps;

    const int terms = 60; // the C^-1 expansion has decayed far below 1e-10 here
    PolyMatrix cbar = model.C;
    cbar.coeff(0) = model.A.coeff(0);
    for (int l = 1; l <= cbar.degree(); ++l) cbar.coeff(l) = model.C.coeff(l) * model.A.coeff(0);
    std::vector<Mat> ww = testing::series_divide(cbar, model.A, terms); // A0^-1 C^-1 A
    std::vector<Mat> wr = testing::series_divide(cbar, model.B, terms); // A0^-1 C^-1 B
    ww[0] = Mat::Identity(4, 4) - ww[0];
    for (std::size_t l = 1; l < ww.size(); ++l) ww[l] = -ww[l];
    Mat alt = PolyMatrix(ww).filter_all(d.w) + PolyMatrix(wr).filter_all(d.r);
    CHECK((predictor - alt).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("weighted cost") {
    Mat zero = Mat::Zero(2, 5);
    CHECK(cost_weighted(zero, Mat::Identity(2, 2)) == doctest::Approx(0.0));

    Mat one(2, 1);
    one << 1.0, 1.0;
    CHECK(cost_weighted(one, Mat::Identity(2, 2)) == doctest::Approx(2.0));

    Mat notpd = (Mat(2, 2) << 1.0, 2.0, 2.0, 1.0).finished();
    CHECK_THROWS_AS(cost_weighted(one, notpd), Error);
}

TEST_CASE("weighted cost at the true model is a chi-square mean") {
    DiscreteModel model = benchmark_model(1);
    Mat r = gaussian_matrix(1, 100000, 41);
    Dataset d = generate(model, r, {model.Lambda, 43});
    Mat eps = discard_transient(prediction_error(model, d), 10);
    Mat lam_bar = innovation_covariance(model.A.coeff(0), model.Lambda);
    const double cost = cost_weighted(eps, lam_bar.inverse());
    CHECK(cost == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("det cost") {
    Mat zero = Mat::Zero(2, 10);
    DetCost dz = cost_det(zero);
    CHECK(dz.degenerate);
    CHECK(dz.value == doctest::Approx(0.0));

    Mat c = Mat::Constant(1, 8, 3.0);
    DetCost dc = cost_det(c);
    CHECK(!dc.degenerate);
    CHECK(dc.value == doctest::Approx(9.0));
}

TEST_CASE("det cost converges to det(Lambda_bar)") {
    DiscreteModel model = benchmark_model(1);
    Mat r = gaussian_matrix(1, 100000, 47);
    Dataset d = generate(model, r, {model.Lambda, 53});
    Mat eps = discard_transient(prediction_error(model, d), 10);
    Mat lam_bar = innovation_covariance(model.A.coeff(0), model.Lambda);
    DetCost dc = cost_det(eps);
    CHECK(!dc.degenerate);
    CHECK(dc.value == doctest::Approx(lam_bar.determinant()).epsilon(0.10));
}

TEST_CASE("innovations are white at the true model") {
    DiscreteModel model = benchmark_model(1);
    Mat r = gaussian_matrix(1, 10000, 59);
    Dataset d = generate(model, r, {model.Lambda, 61});
    Mat eps = discard_transient(prediction_error(model, d), 10);
    WhitenessReport rep = whiteness(eps, 20);
    CHECK(rep.violations == 0);
    CHECK(rep.max_abs_corr <= rep.bound);
}

TEST_CASE("sample innovation covariance matches A0^-1 Lambda A0^-1") {
    DiscreteModel model = benchmark_model(1);
    Mat r = gaussian_matrix(1, 100000, 67);
    Dataset d = generate(model, r, {model.Lambda, 71});
    Mat eps = discard_transient(prediction_error(model, d), 10);
    Mat sample = (eps * eps.transpose()) / static_cast<double>(eps.cols());
    Mat truth = innovation_covariance(model.A.coeff(0), model.Lambda);
    CHECK((sample - truth).norm() < 0.05 * truth.norm());
}
