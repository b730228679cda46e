#pragma once

// The four-node benchmark network used across the test suites, matching the
// shipped example configs: two-node-order ground dynamics, first-order
// couplings, 100 Hz sampling, first-order noise filter.

#include <string>

#include "netid/harness.hpp"

namespace netid::testing {

inline NetworkConfig benchmark_network(int K, bool noiseless = false) {
    NetworkConfig cfg;
    ContinuousNetwork& net = cfg.net;
    net.L = 4;
    net.K = K;
    net.nx = 2;
    net.ny = 1;
    net.x = Mat::Zero(4, 3);
    net.x << 1.0, 0.0, 1e-2,
             1.0, 0.0, 2e-2,
             1.0, 0.0, 5e-2,
             10.0, 0.0, 7e-2;
    net.set_coupling(0, 1, (Vec(2) << 4.0, 0.3).finished());
    net.set_coupling(1, 2, (Vec(2) << 0.0, 0.4).finished());
    net.set_coupling(1, 3, (Vec(2) << 8.0, 0.0).finished());
    net.set_coupling(2, 3, (Vec(2) << 9.0, 0.6).finished());

    net.B = PolyMatrix(4, K, 0);
    for (int j = 0; j < K; ++j) net.B.coeff(0)(j, j) = 1.0;

    cfg.Ts = 0.01;
    if (noiseless) {
        cfg.C = PolyMatrix::identity(4);
        cfg.Lambda = Mat::Zero(4, 4);
    } else {
        cfg.C = PolyMatrix(4, 4, 1);
        cfg.C.coeff(0) = Mat::Identity(4, 4);
        cfg.C.coeff(1) = 0.1 * Mat::Identity(4, 4);
        cfg.Lambda = 1e-4 * Mat::Identity(4, 4);
    }
    return cfg;
}

inline ModelSetSpec benchmark_spec(int K, int nc) {
    ModelSetSpec spec;
    spec.L = 4;
    spec.K = K;
    spec.na = 2;
    spec.nb = 0;
    spec.nc = nc;
    spec.a_offdiag_max_lag = 1;
    spec.constraints.push_back(parse_fix_constraint("fix b[1][1][0] = 1"));
    for (int i = 1; i <= 4; ++i)
        for (int j = 1; j <= K; ++j) {
            if (i == 1 && j == 1) continue;
            if (i == j && (i == 2 || i == 3)) continue; // free selection entries
            spec.constraints.push_back(
                parse_fix_constraint("fix b[" + std::to_string(i) + "][" + std::to_string(j) + "][0] = 0"));
        }
    return spec;
}

inline std::string config_dir() {
#ifdef NETID_CONFIG_DIR
    return NETID_CONFIG_DIR;
#else
    return "configs";
#endif
}

} // namespace netid::testing
