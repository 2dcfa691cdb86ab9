// Acceptance gate: one PASS/FAIL line per criterion.
// Usage: ptsync_acceptance [criterion ...]   (no arguments runs all nine)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ptsync/ptsync.hpp"

using namespace ptsync;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << "\n    [" << (ok ? "ok" : "FAILED") << "] " << what;
  }
  void info(const std::string& what) { detail << "\n    [info] " << what; }
};

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double relative_error(double got, double ref) {
  if (std::abs(ref) < std::numeric_limits<double>::min()) return std::abs(got - ref);
  return std::abs(got - ref) / std::abs(ref);
}

double relative_change(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

const MultiWeightNetwork& sync_net() {
  static const MultiWeightNetwork net = chua3_benchmark(false).network;
  return net;
}

const MultiWeightNetwork& pinned_net() {
  static const MultiWeightNetwork net = chua3_benchmark(true).network;
  return net;
}

// Expected integer blocks, entered by hand.
const double kSumBlocks[3][3][3] = {
    {{-21, 9, 12}, {0, -72, 72}, {90, 0, -90}},
    {{-27, 17, 10}, {0, -55, 55}, {46, 0, -46}},
    {{-30, 16, 14}, {0, -71, 71}, {68, 0, -68}},
};

void criterion1(Check& c) {
  const SumMatrixSet s = build_sum_matrices(pinned_net(), false);
  const SumMatrixSet p = build_sum_matrices(pinned_net(), true);
  const double corner[3] = {-32, -40, -45};
  for (std::size_t d = 0; d < 3; ++d) {
    bool same = true;
    bool pinned_same = true;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        same = same && s.block(d, d)(i, j) == kSumBlocks[d][i][j];
        const double want = (i == 0 && j == 0) ? corner[d] : kSumBlocks[d][i][j];
        pinned_same = pinned_same && p.block(d, d)(i, j) == want;
      }
    c.require(same, "M^[" + std::to_string(d + 1) + std::to_string(d + 1) + "] exact");
    c.require(pinned_same, "pinned (1,1) entry " + num(p.block(d, d)(0, 0)) + " == " + num(corner[d]));
  }
}

void criterion2(Check& c) {
  const std::vector<Vector> psi = compute_nlevecs(build_sum_matrices(sync_net(), false));
  const double reported[3][3] = {{0.7362, 0.0920, 0.1718}, {0.5274, 0.163, 0.3096}, {0.6, 0.1352, 0.2647}};
  for (std::size_t d = 0; d < 3; ++d) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(psi[d][i] - reported[d][i]));
    c.require(worst <= 5e-4, "psi^[" + std::to_string(d + 1) + "] = (" + num(psi[d][0]) + ", " + num(psi[d][1]) +
                                 ", " + num(psi[d][2]) + "), max deviation " + num(worst, 3));
  }
}

void criterion3(Check& c) {
  const double hf = 5.4704;
  const ValidationReport sync = compute_threshold(sync_net(), hf);
  const ValidationReport pin = compute_threshold(pinned_net(), hf);
  c.require(sync.c0 == 9.0 && pin.c0 == 9.0, "C(0) = " + num(sync.c0));
  c.require(std::abs(*sync.lambda2 + 9.9387) <= 1e-3, "lambda2(Mbar) = " + num(*sync.lambda2, 8) + " vs -9.9387");
  c.require(std::abs(*pin.lambda_max + 1.8241) <= 1e-3,
            "lambda_max(Mtilde) = " + num(*pin.lambda_max, 8) + " vs -1.8241");
  c.require(std::abs(sync.threshold - 2.7222) <= 1e-3,
            "synchronization threshold (Hf C(0) + 1)/|lambda2| = " + num(sync.threshold, 8) + " vs 2.7222");
  c.require(std::abs(pin.threshold - 27.5386) <= 1e-3,
            "pinning threshold (Hf C(0) + 1)/|lambda_max| = " + num(pin.threshold, 8) + " vs 27.5386");
  c.info("2.7222 * |lambda2| = " + num(2.7222 * std::abs(*sync.lambda2)) + ", while Hf C(0) + 1 = " +
         num(hf * 9 + 1) + "; 2.7222 corresponds to |lambda2| = " + num((hf * 9 + 1) / 2.7222));
}

void criterion4(Check& c) {
  const NodeDynamics chua = NodeDynamics::chua3();
  const QuadCheck q = verify_quad(chua, 100000, 50.0, 1);
  c.require(q.max_ratio <= 5.4704 + 1e-6,
            "sampled max (x-y).(f(x)-f(y))/|x-y|^2 over 1e5 pairs = " + num(q.max_ratio, 8));
  const double literal = symmetrized_hf(chua);
  c.require(std::abs(literal - 5.4704) <= 1e-3,
            "-1 + lambda_max((A+A^T)/2) = " + num(literal, 8) + " vs 5.4704");
  c.info("lambda_max((D+D^T)/2) + ||A||_2 = " + num(analytic_hf(chua), 8));
}

void criterion5(Check& c) {
  double worst = 0.0;
  bool classes_ok = true;
  for (double ell : {1.0, 2.0, 3.0}) {
    for (double delta : {0.5, 1.0, 2.0}) {
      const ScalarModel m = ScalarModel::lemma2(Regulator::power(1.0, ell), delta, 15.0);
      const ScalarTrajectory tr = simulate_scalar(m, 1e-3, 200);
      double local = 0.0;
      for (std::size_t k = 0; k < tr.times.size(); ++k)
        local = std::max(local, relative_error(tr.values[k], closed_form(m, tr.times[k])));
      worst = std::max(worst, local);

      // Caption rules: l > 1 gives 0; l = 1 gives infinity, V0/T, 0 for delta <, =, > 1.
      PhiValue want = PhiValue::Zero;
      if (ell == 1.0 && delta < 1.0) want = PhiValue::Infinite;
      if (ell == 1.0 && delta == 1.0) want = PhiValue::NonzeroConstant;
      const PhiClass got = classify_phi(m);
      bool ok = got.value == want;
      if (ok && want == PhiValue::NonzeroConstant) ok = got.constant == 15.0;
      classes_ok = classes_ok && ok;
      c.info("l = " + num(ell) + ", delta = " + num(delta) + ": max rel err " + num(local, 3) + ", phi " +
             std::string(to_string(got.value)));
    }
  }
  c.require(worst <= 1e-5, "max relative error over the grid " + num(worst, 3) + " <= 1e-5");
  c.require(classes_ok, "classify_phi matches the rules on all nine cases");
}

RunSummary run(const MultiWeightNetwork& net, const IntegratorConfig& cfg) {
  const RunConfig base = chua3_benchmark(net.pinned());
  return summarize(integrate(net, base.dynamics, base.initial_states, cfg));
}

void criterion6(Check& c) {
  const IntegratorConfig cfg = chua3_benchmark(false).integrator;
  auto timed = [&](const MultiWeightNetwork& net, double& secs) {
    const auto start = std::chrono::steady_clock::now();
    const RunSummary s = run(net, cfg);
    secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
  };
  double ts = 0.0;
  double tp = 0.0;
  const RunSummary s = timed(sync_net().with_eta(3.0), ts);
  c.require(s.ratio < 1e-3, "eta = 3: E1(T-1e-3)/E1(0) = " + num(s.ratio, 3) + " at t = " + num(s.end_time));
  c.require(s.monotone_w, "eta = 3: W strictly decreasing at every sample (until exactly zero)");
  c.require(ts < 10.0, "eta = 3 run " + num(ts, 3) + " s < 10 s");
  const RunSummary p = timed(pinned_net().with_eta(28.0), tp);
  c.require(p.ratio < 1e-3, "pinned eta = 28: E2(T-1e-3)/E2(0) = " + num(p.ratio, 3));
  c.require(tp < 10.0, "pinned eta = 28 run " + num(tp, 3) + " s < 10 s");
  c.info("steps: " + std::to_string(s.steps) + " and " + std::to_string(p.steps));
}

void criterion7(Check& c) {
  const IntegratorConfig cfg = chua3_benchmark(false).integrator;
  for (const MultiWeightNetwork* net : {&sync_net(), &pinned_net()}) {
    const std::string label = net->pinned() ? "E2" : "E1";
    try {
      const RunSummary s = run(*net, cfg);
      c.require(s.error_end < s.error_start, "eta = 0.35: " + label + " from " + num(s.error_start) + " to " +
                                                 num(s.error_end, 3) + " at t = " + num(s.end_time));
    } catch (const Error& e) {
      c.require(false, "eta = 0.35 " + label + " run failed: " + e.what());
    }
  }
}

void criterion8(Check& c) {
  const RunConfig base = chua3_benchmark(false, 3.0);
  const Vector probes = {1.0, 2.0, 3.0 - 1e-3};
  auto endpoint = [&](const MultiWeightNetwork& net, double factor) {
    IntegratorConfig cfg = base.integrator;
    cfg.shrink_factor *= factor;
    cfg.stop_gap *= factor;
    return integrate(net, base.dynamics, base.initial_states, cfg, probes);
  };
  const Trajectory a = endpoint(base.network, 1.0);
  const Trajectory b = endpoint(base.network, 0.5);
  const double ea = a.error[*a.index_of(3.0 - 1e-3)];
  const double eb = b.error[*b.index_of(3.0 - 1e-3)];
  c.require(relative_change(ea, eb) < 0.01, "eta = 3: E1(T-1e-3) " + num(ea, 8) + " vs " + num(eb, 8) +
                                                ", relative change " + num(relative_change(ea, eb), 3));
  for (double eta : {3.0, 0.35}) {
    const Trajectory x = endpoint(base.network.with_eta(eta), 1.0);
    const Trajectory y = endpoint(base.network.with_eta(eta), 0.5);
    for (double t : {1.0, 2.0}) {
      const double u = x.error[*x.index_of(t)];
      const double v = y.error[*y.index_of(t)];
      c.info("eta = " + num(eta) + ", t = " + num(t) + ": E1 " + num(u, 10) + " vs " + num(v, 10) +
             ", relative change " + num(relative_change(u, v), 3));
    }
  }
}

DenseMatrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = g(rng);
  return m;
}

DenseMatrix random_a1(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.1, 5.0);
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) row += (m(i, j) = u(rng));
    m(i, i) = -row;
  }
  return m;
}

void criterion9(Check& c) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  std::normal_distribution<double> g;

  bool rayleigh = true;
  for (int k = 0; k < 200; ++k) {
    const DenseMatrix a = random_symmetric(rng, size(rng));
    const SpectrumResult sp = symmetric_eigen(a);
    Vector x(a.rows());
    for (double& v : x) v = g(rng);
    const double q = dot(x, a * x) / dot(x, x);
    const double slack = 1e-12 * (1.0 + a.max_abs());
    rayleigh = rayleigh && q >= sp.min() - slack && q <= sp.max() + slack;
  }
  c.require(rayleigh, "Rayleigh quotient within [lambda_min, lambda_max] on 200 random matrices");

  bool closure = true;
  bool orthogonal = true;
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = size(rng);
    std::vector<DenseMatrix> ocms = {random_a1(rng, n), random_a1(rng, n), random_a1(rng, n)};
    std::vector<DenseMatrix> icms = {DenseMatrix::diagonal(Vector{1, 2}), DenseMatrix::diagonal(Vector{3, 0.5}),
                                     random_symmetric(rng, 2)};
    for (DenseMatrix& m : icms)
      for (std::size_t d = 0; d < 2; ++d) m(d, d) = std::abs(m(d, d)) + 0.1;
    const MultiWeightNetwork net(ocms, icms, 1.0, Regulator::power(1.0, 1.0));
    const SumMatrixSet s = build_sum_matrices(net, false);
    for (const DenseMatrix& b : s.blocks) closure = closure && is_zero_row_sum(b, 1e-12 * (1.0 + b.max_abs()));
    for (const DenseMatrix& m : ocms) {
      const Vector psi = left_null_vector(m, kStructuralTolerance);
      double sum = 0.0;
      for (double v : psi) {
        sum += v;
        orthogonal = orthogonal && v > 0.0;
      }
      orthogonal = orthogonal && std::abs(sum - 1.0) < 1e-12 &&
                   norm2(m.transpose() * psi) <= 1e-9 * m.frobenius_norm();
    }
  }
  c.require(closure, "sum matrices keep zero row sums (50 random networks)");
  c.require(orthogonal, "psi positive, sums to one and annihilates M from the left");

  const RunConfig bench = chua3_benchmark(false);
  const Vector synced = {3, -1, 2, 3, -1, 2, 3, -1, 2};
  const Trajectory tr = integrate(bench.network, bench.dynamics, synced, bench.integrator);
  double peak = 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    peak = std::max(peak, norm2(tr.states[k]));
    worst = std::max(worst, tr.error[k]);
  }
  c.require(worst <= 1e-8 * (1.0 + peak), "synchronized start keeps E1 <= 1e-8 (1 + |x|): max " + num(worst, 3));

  for (const Regulator& r : {Regulator::power(1.0, 1.0), Regulator::exp_a(1.0, 1.0), Regulator::exp_b(1.0, 1.0)}) {
    double prev = -1.0;
    bool increasing = true;
    for (int k = 3; k <= 9; ++k) {
      const double v = numeric_integral_to(r, r.horizon() - std::pow(10.0, -k));
      increasing = increasing && v > prev;
      prev = v;
    }
    c.require(increasing && prev > 10.0 && classify_divergence(r) == Divergence::diverges,
              std::string(to_string(r.kind())) + ": integral of 1/C up to T-1e-9 = " + num(prev));
  }

  // V = 15 (1 - t)^2 solves V' = -2V/C with C = 1 - t.
  const ScalarModel m = ScalarModel::lemma2(Regulator::power(1.0, 1.0), 2.0, 15.0);
  auto max_error = [&](double cap) {
    IntegratorConfig cfg{0.01, cap, 0.9, 1e9, 2};
    Vector extra;
    for (int k = 1; k < 99; ++k) extra.push_back(k * 0.01);
    const ScalarTrajectory st = simulate_scalar(m, cfg, extra);
    double e = 0.0;
    for (std::size_t k = 0; k < st.times.size(); ++k) {
      const double tau = 1.0 - st.times[k];
      e = std::max(e, std::abs(st.values[k] - 15.0 * tau * tau));
    }
    return e;
  };
  const double ratio = max_error(0.001) / max_error(0.0005);
  c.require(ratio >= 12.0 && ratio <= 20.0, "RK4 error ratio on step halving " + num(ratio, 4) + " in [12, 20]");
}

struct Criterion {
  const char* title;
  double budget_s;
  void (*body)(Check&);
};

const Criterion kCriteria[] = {
    {"sum-matrix reproduction", 1e-3, criterion1},
    {"NLEVec reproduction", 1e-2, criterion2},
    {"spectral reproduction", 0.1, criterion3},
    {"Hf corroboration", 1.0, criterion4},
    {"scalar closed-form equivalence", 1.0, criterion5},
    {"PT synchronization property", 20.0, criterion6},
    {"qualitative eta = 0.35 runs", 10.0, criterion7},
    {"grid-refinement stability", 30.0, criterion8},
    {"property suites", 30.0, criterion9},
};

bool run_criterion(int id) {
  const Criterion& cr = kCriteria[id - 1];
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    cr.body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(secs < cr.budget_s, "runtime " + num(secs, 3) + " s < " + num(cr.budget_s) + " s");
  std::printf("criterion %d: %s  %s%s\n", id, c.pass ? "PASS" : "FAIL", cr.title, c.detail.str().c_str());
  std::fflush(stdout);
  return c.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int k = 1; k < argc; ++k) ids.push_back(std::atoi(argv[k]));
  if (ids.empty())
    for (int k = 1; k <= 9; ++k) ids.push_back(k);
  bool all = true;
  for (int id : ids) {
    if (id < 1 || id > 9) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    all = run_criterion(id) && all;
  }
  return all ? 0 : 1;
}
