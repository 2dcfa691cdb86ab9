// ptsync: validate, simulate, scalar, sweep and benchmark subcommands.
//
// Exit status: 0 ok, 2 input error, 3 assumption violation, 4 numerical failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ptsync/ptsync.hpp"

namespace {

using namespace ptsync;

struct Sinks {
  std::string csv_path;
  std::string json_path;
};

double structural_tolerance() {
  const char* env = std::getenv("PTSYNC_TOL");
  if (env == nullptr || *env == '\0') return kStructuralTolerance;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  if (end == env || *end != '\0' || !(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::ConfigError, "PTSYNC_TOL must be a positive number");
  }
  return v;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out << text;
}

/// The JSON document goes to the file when given, and to stdout unless CSV
/// data already occupies stdout (then stderr).
void emit_json(const json& doc, const std::string& path, bool stdout_taken) {
  const std::string text = doc.dump(2) + "\n";
  if (!path.empty()) write_file(path, text);
  if (path.empty() || !stdout_taken) {
    (stdout_taken ? std::cerr : std::cout) << text;
  }
}

void emit_csv(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

int fail(const Error& e) {
  std::cerr << "error: " << e.what() << '\n';
  return exit_status(e.code());
}

RunConfig load(const std::string& path) { return load_run_config(path, structural_tolerance()); }

int cmd_validate(const std::string& config, const Sinks& sinks, std::uint64_t seed) {
  const double tol = structural_tolerance();
  const RunConfig cfg = load(config);
  try {
    const ValidationReport report = compute_threshold(cfg.network, cfg.dynamics.hf(), tol);
    json doc = to_json(report);
    const QuadCheck quad = verify_quad(cfg.dynamics, 10000, 50.0, seed);
    doc["hf_check"] = {{"max_ratio", quad.max_ratio},
                       {"trials", quad.trials},
                       {"seed", seed},
                       {"passed", quad.passed}};
    if (!report.eta_sufficient) {
      std::cerr << "warning: eta = " << format_double(report.eta)
                << " does not exceed the sufficient threshold " << format_double(report.threshold)
                << '\n';
    }
    emit_json(doc, sinks.json_path, false);
    return 0;
  } catch (const Error& e) {
    if (exit_status(e.code()) != 3) throw;
    json doc;
    doc["error"] = std::string(to_string(e.code()));
    doc["message"] = e.what();
    const std::vector<A1Verdict> verdicts =
        check_assumption_a1(build_sum_matrices(cfg.network, false), tol);
    doc["assumption_a1"] = json::array();
    for (std::size_t d = 0; d < verdicts.size(); ++d) {
      json v = {{"dimension", d + 1}, {"holds", verdicts[d].holds}};
      if (!verdicts[d].holds) {
        v["reason"] = std::string(to_string(verdicts[d].reason));
        v["detail"] = verdicts[d].detail;
      }
      doc["assumption_a1"].push_back(std::move(v));
    }
    emit_json(doc, sinks.json_path, false);
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

/// Threshold verdict for the summary; null when the assumptions fail.
json sufficiency(const RunConfig& cfg) {
  try {
    const ValidationReport r = compute_threshold(cfg.network, cfg.dynamics.hf(), structural_tolerance());
    return {{"threshold", r.threshold}, {"eta_sufficient", r.eta_sufficient}};
  } catch (const Error& e) {
    return {{"threshold", nullptr}, {"eta_sufficient", nullptr}, {"reason", e.what()}};
  }
}

int cmd_simulate(const std::string& config, Sinks sinks, bool full_state) {
  const RunConfig cfg = load(config);
  if (sinks.csv_path.empty()) sinks.csv_path = cfg.outputs.csv;
  if (sinks.json_path.empty()) sinks.json_path = cfg.outputs.json;
  const bool csv_on_stdout = sinks.csv_path.empty();

  json summary;
  summary["error_metric"] = cfg.network.pinned() ? "E2" : "E1";
  const json verdict = sufficiency(cfg);
  summary.update(verdict);
  if (verdict["eta_sufficient"].is_boolean() && !verdict["eta_sufficient"].get<bool>()) {
    std::cerr << "warning: eta is below the sufficient threshold; convergence is not guaranteed\n";
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    const Trajectory traj =
        integrate(cfg.network, cfg.dynamics, cfg.initial_states, cfg.integrator);
    const double wall = elapsed();
    std::ostringstream csv;
    write_trajectory_csv(csv, traj, full_state);
    emit_csv(csv.str(), sinks.csv_path);
    const RunSummary s = summarize(traj);
    summary["E_start"] = s.error_start;
    summary["E_end"] = s.error_end;
    summary["end_time"] = s.end_time;
    summary["ratio"] = s.ratio;
    summary["monotone_W"] = s.monotone_w;
    summary["uniform_weights"] = s.uniform_weights;
    summary["samples"] = s.samples;
    summary["steps"] = s.steps;
    summary["wall_time_s"] = wall;
    emit_json(summary, sinks.json_path, csv_on_stdout);
    return 0;
  } catch (const IntegrationFailure& e) {
    std::ostringstream csv;
    write_trajectory_csv(csv, e.partial(), full_state, e.what());
    emit_csv(csv.str(), sinks.csv_path);
    summary["failed"] = std::string(to_string(e.code()));
    summary["message"] = e.what();
    summary["samples"] = e.partial().size();
    summary["wall_time_s"] = elapsed();
    emit_json(summary, sinks.json_path, csv_on_stdout);
    std::cerr << "error: " << e.what() << '\n';
    return exit_status(e.code());
  }
}

struct ScalarArgs {
  std::string kind = "lemma2";
  std::string regulator = "power";
  double horizon = 1.0;
  double ell = 1.0;
  double rate = 1.0;
  double delta = 1.0;
  double delta1 = 0.0;
  double delta2 = 1.0;
  double p = 1.0;
  double v0 = 15.0;
  double stop_gap = 1e-3;
  std::size_t samples = 200;
};

int cmd_scalar(const ScalarArgs& a, const Sinks& sinks) {
  Regulator reg = a.regulator == "power"   ? Regulator::power(a.horizon, a.ell)
                  : a.regulator == "exp_a" ? Regulator::exp_a(a.horizon, a.rate)
                  : a.regulator == "exp_b"
                      ? Regulator::exp_b(a.horizon, a.rate)
                      : throw Error(ErrorCode::InvalidParameters, "unknown regulator " + a.regulator);
  ScalarModel m;
  if (a.kind == "lemma2") {
    m = ScalarModel::lemma2(reg, a.delta, a.v0);
  } else if (a.kind == "power") {
    m = ScalarModel::power_law(reg, a.delta, a.p, a.v0);
  } else if (a.kind == "lemma3") {
    m = ScalarModel::lemma3(reg, a.delta1, a.delta2, a.p, a.v0);
  } else {
    throw Error(ErrorCode::InvalidParameters, "unknown scalar model " + a.kind);
  }
  IntegratorConfig cfg = IntegratorConfig::scalar_defaults(a.horizon);
  cfg.stop_gap = a.stop_gap;
  cfg.samples = a.samples;
  const ScalarTrajectory traj = simulate_scalar(m, cfg);
  const Vector closed = closed_form_series(m, traj.times);

  json doc;
  doc["model"] = std::string(to_string(m.kind));
  doc["phi"] = nullptr;
  if (m.kind != ScalarKind::power) {
    try {
      const PhiClass phi = classify_phi(m);
      doc["phi"] = std::string(to_string(phi.value));
      if (phi.value == PhiValue::NonzeroConstant) doc["constant"] = phi.constant;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnsupportedRegulator) throw;
      doc["reason"] = e.what();
    }
  }
  std::ostringstream csv;
  write_scalar_csv(csv, traj, closed);
  emit_csv(csv.str(), sinks.csv_path);
  emit_json(doc, sinks.json_path, sinks.csv_path.empty());
  return 0;
}

struct SweepRow {
  std::string line;
  bool failed = false;
};

int cmd_sweep(const std::string& config, const std::string& param,
              const std::vector<double>& values, const Sinks& sinks, unsigned jobs) {
  if (param != "eta" && param != "ell" && param != "shrink_factor") {
    throw Error(ErrorCode::InvalidParameters, "unknown sweep parameter " + param);
  }
  const RunConfig base = load(config);
  if (param == "ell" && base.network.regulator().kind() != RegulatorKind::power) {
    throw Error(ErrorCode::InvalidParameters, "ell sweeps need a power regulator");
  }
  std::vector<RunConfig> runs;
  for (double v : values) {
    RunConfig c = base;
    if (param == "eta") {
      c.network = c.network.with_eta(v);
    } else if (param == "ell") {
      c.network = c.network.with_regulator(c.network.regulator().with_ell(v));
    } else {
      c.integrator.shrink_factor = v;
      c.integrator.validate(c.network.regulator().horizon());
    }
    runs.push_back(std::move(c));
  }

  std::vector<SweepRow> rows(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < runs.size(); k = next++) {
      const std::string value = format_double(values[k]);
      try {
        const RunSummary s = summarize(
            integrate(runs[k].network, runs[k].dynamics, runs[k].initial_states, runs[k].integrator));
        rows[k].line = value + ',' + format_double(s.ratio) + ',' + (s.monotone_w ? "true" : "false");
      } catch (const Error& e) {
        rows[k].line = value + ",nan,false";
        rows[k].failed = true;
        std::cerr << "error: " << param << " = " << value << ": " << e.what() << '\n';
      }
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  std::string csv = "value,final_error_ratio,monotone_W\n";
  bool any_failed = false;
  for (const SweepRow& r : rows) {
    csv += r.line + '\n';
    any_failed = any_failed || r.failed;
  }
  emit_csv(csv, sinks.csv_path);
  return any_failed ? 4 : 0;
}

int cmd_benchmark(bool pinned, double eta, const std::string& out) {
  const std::string text = to_json(chua3_benchmark(pinned, eta)).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribed-time synchronization of multiweighted directed networks"};
  app.require_subcommand(1);

  Sinks sinks;
  std::string config;
  bool full_state = false;
  std::uint64_t seed = 0;

  auto add_io = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", config, "run configuration (JSON)")->required();
    sub->add_option("--out-csv", sinks.csv_path, "CSV output path");
    sub->add_option("--out-json", sinks.json_path, "JSON report path");
  };

  CLI::App* validate = app.add_subcommand("validate", "check assumptions and coupling thresholds");
  add_io(validate, true);
  validate->add_option("--seed", seed, "seed for the Hf sampling check");

  CLI::App* simulate = app.add_subcommand("simulate", "integrate the network up to T - stop_gap");
  add_io(simulate, true);
  simulate->add_flag("--full-state", full_state, "write every node state to the CSV");

  ScalarArgs sa;
  CLI::App* scalar = app.add_subcommand("scalar", "scalar model: numeric vs closed form");
  add_io(scalar, false);
  scalar->add_option("--model", sa.kind, "lemma2 | power | lemma3");
  scalar->add_option("--regulator", sa.regulator, "power | exp_a | exp_b");
  scalar->add_option("--T", sa.horizon, "prescribed time");
  scalar->add_option("--ell", sa.ell, "power regulator exponent");
  scalar->add_option("--a", sa.rate, "exponential regulator rate");
  scalar->add_option("--delta", sa.delta);
  scalar->add_option("--delta1", sa.delta1);
  scalar->add_option("--delta2", sa.delta2);
  scalar->add_option("--p", sa.p);
  scalar->add_option("--V0", sa.v0);
  scalar->add_option("--stop-gap", sa.stop_gap);
  scalar->add_option("--samples", sa.samples);

  std::string param;
  std::vector<double> values;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  CLI::App* sweep = app.add_subcommand("sweep", "one run per parameter value");
  add_io(sweep, true);
  sweep->add_option("--param", param, "eta | ell | shrink_factor")->required();
  sweep->add_option("--values", values, "parameter values")->required()->delimiter(',');
  sweep->add_option("--jobs", jobs, "worker threads");

  bool pinned = false;
  double eta = 0.35;
  std::string out;
  CLI::App* bench = app.add_subcommand("benchmark", "write the three-node Chua network config");
  bench->add_flag("--pinned", pinned, "pin node 1 to the isolated target");
  bench->add_option("--eta", eta, "coupling strength");
  bench->add_option("--out", out, "output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(config, sinks, seed);
    if (*simulate) return cmd_simulate(config, sinks, full_state);
    if (*scalar) return cmd_scalar(sa, sinks);
    if (*sweep) return cmd_sweep(config, param, values, sinks, jobs);
    if (*bench) return cmd_benchmark(pinned, eta, out);
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
