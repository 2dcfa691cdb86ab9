#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "ptsync/config.hpp"
#include "ptsync/csv.hpp"
#include "test_support.hpp"

using namespace ptsync;
namespace ts = testing_support;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const std::string cmd = std::string(PTSYNC_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ptsync_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST(Config, BenchmarkMatchesFixtures) {
  const RunConfig c = chua3_benchmark(true, 28.0);
  ASSERT_EQ(c.network.layers(), 4u);
  for (std::size_t w = 0; w < 4; ++w) {
    EXPECT_EQ(c.network.ocms()[w], ts::ocm(w));
    EXPECT_EQ(c.network.icms()[w], ts::icm(w));
  }
  EXPECT_EQ(c.initial_states, ts::initial_states());
  EXPECT_EQ(c.network.eta(), 28.0);
  EXPECT_EQ(c.integrator.stop_gap, 1e-3);
  EXPECT_EQ(c.network.pinning()->target_initial, (Vector{4, 8, 12}));
  EXPECT_EQ(c.dynamics, NodeDynamics::chua3());
}

TEST(Config, JsonRoundTrip) {
  for (bool pinned : {false, true}) {
    const RunConfig c = chua3_benchmark(pinned);
    const std::string text = to_json(c).dump(2);
    EXPECT_EQ(run_config_from_json(parse_json_text(text)), c);
  }
  RunConfig c = chua3_benchmark(false);
  c.network = c.network.with_regulator(Regulator::exp_b(2.0, 0.7));
  c.integrator = IntegratorConfig::network_defaults(2.0);
  EXPECT_EQ(run_config_from_json(to_json(c)), c);
}

TEST(Config, SchemaErrors) {
  json j = to_json(chua3_benchmark(false));
  json missing = j;
  missing["network"].erase("eta");
  EXPECT_THROW(run_config_from_json(missing), Error);
  json ragged = j;
  ragged["network"]["ocms"][0][1] = {1.0, 2.0};
  EXPECT_THROW(run_config_from_json(ragged), Error);
  json bad_kind = j;
  bad_kind["network"]["regulator"]["kind"] = "cosine";
  EXPECT_THROW(run_config_from_json(bad_kind), Error);
  json wrong_hf = j;
  wrong_hf["dynamics"]["Hf"] = 3.0;
  EXPECT_THROW(run_config_from_json(wrong_hf), Error);
  EXPECT_THROW(parse_json_text("{not json"), Error);
  try {
    run_config_from_json(missing);
  } catch (const Error& e) {
    EXPECT_EQ(exit_status(e.code()), 2);
  }
}

TEST(Csv, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int k = 0; k < 1000; ++k) {
    const double v = std::ldexp(u(rng), static_cast<int>(u(rng)));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Csv, TrajectoryOutputIsDeterministic) {
  RunConfig c = chua3_benchmark(true);
  c.integrator.samples = 20;
  const auto render = [&] {
    std::ostringstream os;
    write_trajectory_csv(os, integrate(c.network, c.dynamics, c.initial_states, c.integrator), true);
    return os.str();
  };
  const std::string a = render();
  EXPECT_EQ(a, render());
  std::istringstream in(a);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,W,E,x_1_1,x_1_2,x_1_3,x_2_1,x_2_2,x_2_3,x_3_1,x_3_2,x_3_3,x0_1,x0_2,x0_3");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 20u);
}

TEST(Cli, BenchmarkConfigValidates) {
  const fs::path cfg = scratch("pinned.json");
  ASSERT_EQ(run_cli("benchmark --pinned --eta 28 --out " + cfg.string()).status, 0);
  EXPECT_EQ(load_run_config(cfg.string()), chua3_benchmark(true, 28.0));
  const CliRun v = run_cli("validate --config " + cfg.string());
  ASSERT_EQ(v.status, 0);
  const json doc = json::parse(v.out);
  EXPECT_NEAR(doc.at("threshold").get<double>(), 27.5386, 1e-3);
  EXPECT_TRUE(doc.at("eta_sufficient").get<bool>());
  EXPECT_TRUE(doc.at("hf_check").at("passed").get<bool>());
}

TEST(Cli, CompetitiveLayerFailsAssumption) {
  // Every layer carries the competitive matrix with unit inner coupling.
  json j = to_json(chua3_benchmark(false));
  const json m3 = j["network"]["ocms"][2];
  const json id = json::array({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  j["network"]["ocms"] = json::array({m3, m3});
  j["network"]["icms"] = json::array({id, id});
  const fs::path cfg = scratch("competitive.json");
  write_text(cfg, j.dump());
  const CliRun v = run_cli("validate --config " + cfg.string());
  EXPECT_EQ(v.status, 3);
  const json doc = json::parse(v.out);
  ASSERT_TRUE(doc.contains("assumption_a1"));
  EXPECT_FALSE(doc["assumption_a1"][0]["holds"].get<bool>());
  EXPECT_EQ(doc["assumption_a1"][0]["reason"].get<std::string>(), "NegativeOffDiagonal");
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  const fs::path cfg = scratch("broken.json");
  write_text(cfg, "{\"network\": {}}");
  EXPECT_EQ(run_cli("validate --config " + cfg.string()).status, 2);
  EXPECT_EQ(run_cli("validate --config " + scratch("absent.json").string()).status, 2);
  EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --param gamma --values 1,2").status, 2);
  EXPECT_EQ(run_cli("no-such-command").status, 2);
}

TEST(Cli, SweepRejectsUnknownParameter) {
  const fs::path cfg = scratch("sweep.json");
  ASSERT_EQ(run_cli("benchmark --out " + cfg.string()).status, 0);
  EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --param gamma --values 1,2").status, 2);
}

TEST(Cli, ScalarOutputMatchesClosedForm) {
  const CliRun r = run_cli("scalar --model power --T 1 --ell 2 --delta 1 --p 0.5 --V0 1 --samples 50");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,V_numeric,V_closed_form");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    double t = 0, num = 0, closed = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &num, &closed), 3) << line;
    EXPECT_NEAR(num, closed, 1e-5 * std::max(closed, 1e-12)) << "t = " << t;
    ++rows;
  }
  EXPECT_EQ(rows, 50u);
  EXPECT_EQ(run_cli("scalar --model power --T 1 --ell 2 --delta 1 --p -1").status, 2);
}

TEST(Cli, SimulateWritesCsvAndSummary) {
  const fs::path cfg = scratch("sim.json");
  ASSERT_EQ(run_cli("benchmark --eta 3 --out " + cfg.string()).status, 0);
  const fs::path csv = scratch("sim.csv");
  const CliRun r = run_cli("simulate --config " + cfg.string() + " --out-csv " + csv.string());
  ASSERT_EQ(r.status, 0);
  const json summary = json::parse(r.out);
  EXPECT_EQ(summary.at("error_metric").get<std::string>(), "E1");
  EXPECT_TRUE(summary.at("monotone_W").get<bool>());
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "t,W,E");
}
