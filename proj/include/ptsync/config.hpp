#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptsync/dynamics.hpp"
#include "ptsync/errors.hpp"
#include "ptsync/integrator.hpp"
#include "ptsync/linalg.hpp"
#include "ptsync/network.hpp"
#include "ptsync/regulator.hpp"

namespace ptsync {

using json = nlohmann::json;

struct OutputPaths {
  std::string csv;
  std::string json;

  bool operator==(const OutputPaths&) const = default;
};

/// Everything one run needs: network, node dynamics, N x n initial states
/// (node-major), integrator settings and output paths.
struct RunConfig {
  MultiWeightNetwork network;
  NodeDynamics dynamics;
  Vector initial_states;
  IntegratorConfig integrator;
  OutputPaths outputs;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigError, what);
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) config_error(where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) config_error(where + ": expected a number");
  return j.get<double>();
}

inline DenseMatrix matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error(where + ": expected a nonempty array of rows");
  std::vector<std::vector<double>> rows;
  for (const json& row : j) {
    if (!row.is_array()) config_error(where + ": rows must be arrays");
    std::vector<double> r;
    for (const json& v : row) r.push_back(number(v, where));
    rows.push_back(std::move(r));
  }
  return DenseMatrix::from_rows(rows);
}

inline Vector vector(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + ": expected an array");
  Vector out;
  for (const json& v : j) out.push_back(number(v, where));
  return out;
}

inline json matrix_json(const DenseMatrix& m) { return json(m.to_rows()); }

}  // namespace detail

inline Regulator regulator_from_json(const json& j) {
  const json& kind = detail::require(j, "kind", "regulator");
  if (!kind.is_string()) detail::config_error("regulator.kind must be a string");
  const double horizon = detail::number(detail::require(j, "T", "regulator"), "regulator.T");
  const std::string k = kind.get<std::string>();
  if (k == "power") {
    return Regulator::power(horizon, detail::number(detail::require(j, "ell", "regulator"), "regulator.ell"));
  }
  if (k == "exp_a" || k == "exp_b") {
    const double a = detail::number(detail::require(j, "a", "regulator"), "regulator.a");
    return k == "exp_a" ? Regulator::exp_a(horizon, a) : Regulator::exp_b(horizon, a);
  }
  detail::config_error("unknown regulator kind \"" + k + "\"");
}

inline json to_json(const Regulator& r) {
  json j;
  j["kind"] = std::string(to_string(r.kind()));
  j["T"] = r.horizon();
  if (r.kind() == RegulatorKind::power) {
    j["ell"] = r.ell();
  } else {
    j["a"] = r.rate();
  }
  return j;
}

inline MultiWeightNetwork network_from_json(const json& j, double rel_tol = kStructuralTolerance) {
  const json& ocms_j = detail::require(j, "ocms", "network");
  const json& icms_j = detail::require(j, "icms", "network");
  if (!ocms_j.is_array() || !icms_j.is_array()) {
    detail::config_error("network.ocms and network.icms must be arrays of matrices");
  }
  std::vector<DenseMatrix> ocms;
  std::vector<DenseMatrix> icms;
  for (std::size_t w = 0; w < ocms_j.size(); ++w) {
    ocms.push_back(detail::matrix(ocms_j[w], "network.ocms[" + std::to_string(w) + "]"));
  }
  for (std::size_t w = 0; w < icms_j.size(); ++w) {
    icms.push_back(detail::matrix(icms_j[w], "network.icms[" + std::to_string(w) + "]"));
  }
  const double eta = detail::number(detail::require(j, "eta", "network"), "network.eta");
  Regulator reg = regulator_from_json(detail::require(j, "regulator", "network"));
  std::optional<PinningConfig> pinning;
  if (j.contains("pinning") && !j.at("pinning").is_null()) {
    const json& p = j.at("pinning");
    pinning = PinningConfig{detail::matrix(detail::require(p, "gain", "pinning"), "pinning.gain"),
                            detail::vector(detail::require(p, "target_initial", "pinning"),
                                           "pinning.target_initial")};
  }
  if (ocms.empty()) detail::config_error("network.ocms is empty");
  return MultiWeightNetwork(std::move(ocms), std::move(icms), eta, reg, std::move(pinning), rel_tol);
}

inline json to_json(const MultiWeightNetwork& net) {
  json j;
  j["ocms"] = json::array();
  j["icms"] = json::array();
  for (const DenseMatrix& m : net.ocms()) j["ocms"].push_back(detail::matrix_json(m));
  for (const DenseMatrix& m : net.icms()) j["icms"].push_back(detail::matrix_json(m));
  j["eta"] = net.eta();
  j["regulator"] = to_json(net.regulator());
  if (net.pinned()) {
    j["pinning"] = {{"gain", detail::matrix_json(net.pinning()->gain)},
                    {"target_initial", net.pinning()->target_initial}};
  }
  return j;
}

inline NodeDynamics dynamics_from_json(const json& j) {
  const json& kind = detail::require(j, "kind", "dynamics");
  if (!kind.is_string()) detail::config_error("dynamics.kind must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "chua3") {
    if (j.contains("D") || j.contains("A")) {
      detail::config_error("chua3 dynamics are fixed; use pwl_affine for custom matrices");
    }
    const NodeDynamics base = NodeDynamics::chua3();
    if (!j.contains("Hf")) return base;
    const double hf = detail::number(j.at("Hf"), "dynamics.Hf");
    if (hf != base.hf()) detail::config_error("chua3 dynamics fix Hf = 5.4704");
    return base;
  }
  if (k == "pwl_affine") {
    return NodeDynamics::pwl_affine(detail::matrix(detail::require(j, "D", "dynamics"), "dynamics.D"),
                                    detail::matrix(detail::require(j, "A", "dynamics"), "dynamics.A"),
                                    detail::number(detail::require(j, "Hf", "dynamics"), "dynamics.Hf"));
  }
  detail::config_error("unknown dynamics kind \"" + k + "\"");
}

inline json to_json(const NodeDynamics& dyn) {
  json j;
  j["kind"] = std::string(to_string(dyn.kind()));
  if (dyn.kind() == DynamicsKind::pwl_affine) {
    j["D"] = detail::matrix_json(dyn.linear());
    j["A"] = detail::matrix_json(dyn.nonlinear());
  }
  j["Hf"] = dyn.hf();
  return j;
}

inline IntegratorConfig integrator_from_json(const json& j, double horizon) {
  IntegratorConfig cfg = IntegratorConfig::network_defaults(horizon);
  if (j.is_null()) return cfg;
  if (!j.is_object()) detail::config_error("integrator must be an object");
  if (j.contains("stop_gap")) cfg.stop_gap = detail::number(j.at("stop_gap"), "integrator.stop_gap");
  if (j.contains("step_cap")) cfg.step_cap = detail::number(j.at("step_cap"), "integrator.step_cap");
  if (j.contains("shrink_factor")) {
    cfg.shrink_factor = detail::number(j.at("shrink_factor"), "integrator.shrink_factor");
  }
  if (j.contains("stiffness_cap")) {
    cfg.stiffness_cap = detail::number(j.at("stiffness_cap"), "integrator.stiffness_cap");
  }
  if (j.contains("samples")) {
    const json& s = j.at("samples");
    if (!s.is_number_integer() || s.get<long long>() < 2) {
      detail::config_error("integrator.samples must be an integer >= 2");
    }
    cfg.samples = s.get<std::size_t>();
  }
  cfg.validate(horizon);
  return cfg;
}

inline json to_json(const IntegratorConfig& cfg) {
  return {{"stop_gap", cfg.stop_gap},
          {"step_cap", cfg.step_cap},
          {"shrink_factor", cfg.shrink_factor},
          {"stiffness_cap", cfg.stiffness_cap},
          {"samples", cfg.samples}};
}

inline RunConfig run_config_from_json(const json& j, double rel_tol = kStructuralTolerance) {
  if (!j.is_object()) detail::config_error("config must be a JSON object");
  MultiWeightNetwork net = network_from_json(detail::require(j, "network", "config"), rel_tol);
  NodeDynamics dyn = dynamics_from_json(detail::require(j, "dynamics", "config"));
  if (dyn.dims() != net.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "dynamics dimension differs from the inner matrices");
  }
  const json& states = detail::require(j, "initial_states", "config");
  const DenseMatrix x0 = detail::matrix(states, "initial_states");
  if (x0.rows() != net.nodes() || x0.cols() != net.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "initial_states must be N x n");
  }
  IntegratorConfig cfg =
      integrator_from_json(j.contains("integrator") ? j.at("integrator") : json(), net.regulator().horizon());
  OutputPaths out;
  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    if (o.contains("csv")) out.csv = o.at("csv").get<std::string>();
    if (o.contains("json")) out.json = o.at("json").get<std::string>();
  }
  const auto entries = x0.entries();
  return RunConfig{std::move(net), std::move(dyn), Vector(entries.begin(), entries.end()), cfg,
                   std::move(out)};
}

inline json to_json(const RunConfig& c) {
  json j;
  j["network"] = to_json(c.network);
  j["dynamics"] = to_json(c.dynamics);
  std::vector<std::vector<double>> rows;
  const std::size_t n = c.network.dims();
  for (std::size_t i = 0; i < c.network.nodes(); ++i) {
    rows.emplace_back(c.initial_states.begin() + static_cast<std::ptrdiff_t>(i * n),
                      c.initial_states.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  }
  j["initial_states"] = rows;
  j["integrator"] = to_json(c.integrator);
  if (!c.outputs.csv.empty() || !c.outputs.json.empty()) {
    j["outputs"] = json::object();
    if (!c.outputs.csv.empty()) j["outputs"]["csv"] = c.outputs.csv;
    if (!c.outputs.json.empty()) j["outputs"]["json"] = c.outputs.json;
  }
  return j;
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    detail::config_error(std::string("malformed JSON: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path, double rel_tol = kStructuralTolerance) {
  std::ifstream in(path);
  if (!in) detail::config_error("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return run_config_from_json(parse_json_text(buf.str()), rel_tol);
  } catch (const json::exception& e) {
    detail::config_error(std::string("bad config value: ") + e.what());
  }
}

/// Three-node, four-layer Chua network with diagonal inner matrices.
/// Pinned variant adds Gamma = diag(11, 13, 15) on node 1 toward x0(0) = (4, 8, 12).
inline RunConfig chua3_benchmark(bool pinned, double eta = 0.35) {
  std::vector<DenseMatrix> ocms = {
      DenseMatrix::from_rows({{-3, 3, 0}, {0, 0, 0}, {3, 0, -3}}),
      DenseMatrix::from_rows({{0, 0, 0}, {0, -6, 6}, {3, 0, -3}}),
      DenseMatrix::from_rows({{2, -2, 0}, {0, 0, 0}, {4, 0, -4}}),
      DenseMatrix::from_rows({{-2, 0, 2}, {0, -5, 5}, {4, 0, -4}}),
  };
  const double gammas[4][3] = {{7, 5, 6}, {7, 5, 6}, {6, -1, 1}, {6, 5, 7}};
  std::vector<DenseMatrix> icms;
  for (const auto& g : gammas) icms.push_back(DenseMatrix::diagonal(std::vector<double>(g, g + 3)));
  std::optional<PinningConfig> pinning;
  if (pinned) {
    pinning = PinningConfig{DenseMatrix::diagonal(std::vector<double>{11, 13, 15}), {4, 8, 12}};
  }
  const Regulator reg = Regulator::power(3.0, 2.0);
  IntegratorConfig cfg = IntegratorConfig::network_defaults(reg.horizon());
  cfg.stop_gap = 1e-3;
  return RunConfig{MultiWeightNetwork(std::move(ocms), std::move(icms), eta, reg, std::move(pinning)),
                   NodeDynamics::chua3(),
                   {10, 15, 20, 25, 30, 35, 40, 45, 50},
                   cfg,
                   {}};
}

inline json to_json(const ValidationReport& r) {
  json j;
  j["mode"] = std::string(to_string(r.mode));
  j["assumption_a1"] = json::array();
  for (std::size_t d = 0; d < r.a1.size(); ++d) {
    json v = {{"dimension", d + 1}, {"holds", r.a1[d].holds}};
    if (!r.a1[d].holds) {
      v["reason"] = std::string(to_string(r.a1[d].reason));
      v["detail"] = r.a1[d].detail;
    }
    j["assumption_a1"].push_back(std::move(v));
  }
  j["nlevecs"] = r.nlevecs;
  if (r.lambda2) j["lambda2"] = *r.lambda2;
  if (r.lambda_max) j["lambda_max"] = *r.lambda_max;
  j["Hf"] = r.hf;
  j["C0"] = r.c0;
  j["threshold"] = r.threshold;
  j["eta"] = r.eta;
  j["eta_sufficient"] = r.eta_sufficient;
  return j;
}

}  // namespace ptsync
