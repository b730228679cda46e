#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "netid/pipeline.hpp"

namespace netid {

/// Network description file: continuous components plus the discrete-time
/// noise model and sampling interval.
struct NetworkConfig {
    ContinuousNetwork net;
    PolyMatrix C;  // monic noise filter (lag 0 = I)
    Mat Lambda;
    double Ts = 1.0;
};

NetworkConfig load_network(const std::string& path);
NetworkConfig network_from_json(const nlohmann::json& j);

DiscreteModel discretize_model(const NetworkConfig& cfg);

ModelSetSpec spec_from_json(const nlohmann::json& j);
ModelSetSpec load_spec(const std::string& path);

/// Signal CSV: header t,w1..wL,r1..rK, full-precision values, t = k*Ts.
void write_signals_csv(const std::string& path, const Dataset& data);
Dataset read_signals_csv(const std::string& path);

nlohmann::json ident_report_json(const IdentResult& res);
void write_ident_report(const std::string& path, const IdentResult& res);

} // namespace netid
