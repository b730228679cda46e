#pragma once

#include <cstdint>

#include "netid/netmodel.hpp"

namespace netid {

struct Dataset {
    double Ts = 1.0;
    Mat w; // L x N node signals
    Mat r; // K x N excitation signals

    int N() const { return static_cast<int>(w.cols()); }
    int L() const { return static_cast<int>(w.rows()); }
    int K() const { return static_cast<int>(r.rows()); }
};

struct NoiseSpec {
    Mat Lambda;             // symmetric PSD; zero gives a noise-free run
    std::uint64_t seed = 0;
};

/// Simulates A w = B r + C e with zero initial conditions and seeded Gaussian
/// innovations of covariance Lambda. Refuses unstable models.
Dataset generate(const DiscreteModel& model, const Mat& r, const NoiseSpec& noise);

struct GenerateDetail {
    Dataset data;
    Mat e; // the innovations that were drawn (L x N)
};

GenerateDetail generate_detail(const DiscreteModel& model, const Mat& r, const NoiseSpec& noise);

/// Covariance of the innovation: A_0^-1 Lambda A_0^-T.
Mat innovation_covariance(const Mat& A0, const Mat& Lambda);

/// One-step-ahead prediction error Cbar^-1 (A w - B r) with Cbar = C A_0,
/// realized by FIR filtering then the monic recursion; zero initial conditions.
Mat prediction_error(const DiscreteModel& model, const Dataset& data);

/// (1/N) sum_t eps(t)' S eps(t) over the columns of eps (caller windows).
double cost_weighted(const Mat& eps, const Mat& S);

struct DetCost {
    double value = 0.0;
    bool degenerate = false;
};

/// det((1/N) sum_t eps eps'); rank-deficient sample covariance reports
/// value 0 with the degeneracy flag set.
DetCost cost_det(const Mat& eps);

/// Drops the first `k` columns (the documented transient discard).
Mat discard_transient(const Mat& m, int k);

struct WhitenessReport {
    double max_abs_corr = 0.0;
    double bound = 0.0; // 3/sqrt(N)
    int violations = 0; // channel/lag autocorrelations beyond the bound
};

WhitenessReport whiteness(const Mat& eps, int max_lag);

} // namespace netid
