/*
 * Copyright 2026 The ESFL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance runner. `esfl_acceptance N` checks criterion N; with no
// argument every criterion runs. One PASS/FAIL line per criterion, nonzero
// exit when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "esfl/cli.hpp"
#include "esfl/optimizer.hpp"
#include "esfl/rng.hpp"
#include "esfl/simulator.hpp"
#include "esfl/split_training.hpp"
#include "esfl/workload.hpp"

namespace {

using namespace esfl;
using namespace esfl::toy;
namespace fs = std::filesystem;

// Pinned tolerances and limits.
constexpr int kEquivalenceCases = 200;
constexpr double kEquivalenceTol = 1e-9;
constexpr int kGradientNets = 40;
constexpr double kGradientTol = 1e-5;
constexpr double kGradientFloor = 1e-8;  // both sides below this count as zero
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr int kResourceInstances = 60;
constexpr int kGridQuanta = 200000;  // 5e-6 of C_total per quantum
constexpr double kResourceObjectiveTol = 5e-3;
constexpr double kSaturationTol = 1e-6;
constexpr double kEqualizationTol = 1e-6;
constexpr int kOracleInstances = 60;
constexpr double kOracleGapLimit = 1.05;
constexpr double kAdmissibilitySlack = 1e-12;
constexpr double kDescentTol = 1e-12;
constexpr int kConvergenceLimit = 9;
constexpr double kNormalizationTol = 1e-12;
constexpr std::uint64_t kRunSeed = 7;
constexpr int kOrderingRounds = 100;

constexpr double kLimitEquivalence = 10.0;
constexpr double kLimitGradient = 10.0;
constexpr double kLimitResource = 30.0;
constexpr double kLimitOracle = 60.0;
constexpr double kLimitConvergence = 60.0;
constexpr double kLimitOrdering = 120.0;
constexpr double kLimitHeterogeneity = 120.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

// Objective sequences gathered from every optimizer run below.
struct TraceLog {
  std::string source;
  std::vector<std::vector<double>> traces;
};

// ---- Shared workloads ----------------------------------------------------

struct OracleRuns {
  std::vector<double> gaps;  // alternate / brute force
  TraceLog log{"oracle-gap instances", {}};
};

ModelArchitecture random_architecture(Rng& rng) {
  ModelArchitecture arch;
  arch.name = "random";
  const int L = 2 + static_cast<int>(rng.uniform_index(4));
  for (int l = 0; l < L; ++l) {
    LayerProfile p;
    p.index = l + 1;
    p.name = "L" + std::to_string(l + 1);
    p.param_count = log_uniform(rng, 1e-3, 5.0);
    p.fwd_flops = log_uniform(rng, 1e-2, 50.0);
    p.activation_count = l == L - 1 ? 0.0 : log_uniform(rng, 1e-4, 1.0);
    arch.layers.push_back(p);
  }
  return arch;
}

std::vector<UserProfile> random_users(Rng& rng, int count) {
  std::vector<UserProfile> users;
  for (int i = 0; i < count; ++i) {
    UserProfile u;
    u.id = i;
    u.samples = rng.uniform(50.0, 1000.0);
    u.compute = log_uniform(rng, 1e10, 1e13);
    const double up = log_uniform(rng, 1e5, 1e9);
    u.rates = {up, up * rng.uniform(0.5, 2.0)};
    u.epochs = 1 + static_cast<int>(rng.uniform_index(5));
    users.push_back(u);
  }
  return users;
}

const OracleRuns& oracle_runs() {
  static const OracleRuns runs = [] {
    OracleRuns r;
    const Rng root(2026);
    for (int t = 0; t < kOracleInstances; ++t) {
      Rng rng = root.split(static_cast<std::uint64_t>(t));
      const ModelArchitecture arch = random_architecture(rng);
      const auto users = random_users(rng, 1 + static_cast<int>(rng.uniform_index(3)));
      const double server = log_uniform(rng, 1e11, 1e14);
      const OptimizationResult alt = alternate(users, arch, server);
      const Allocation best = brute_force_joint(users, arch, server);
      r.gaps.push_back(alt.allocation.objective / best.objective);
      std::vector<double> trace;
      for (const auto& rec : alt.trace) trace.push_back(rec.objective);
      r.log.traces.push_back(std::move(trace));
    }
    return r;
  }();
  return runs;
}

struct ConvergenceRuns {
  std::vector<ConvergenceRow> rows;
  TraceLog log{"convergence study", {}};
};

const ConvergenceRuns& convergence_runs() {
  static const ConvergenceRuns runs = [] {
    ConvergenceRuns r;
    const ModelArchitecture arch = builtin_architecture("vgg19");
    for (const char* name : {"BP", "PR", "RP", "BR"}) {
      ScenarioSpec spec = preset_scenario(name);
      spec.seed = kRunSeed;
      for (auto& row : convergence_study(spec, arch, {100, 200, 400, 800})) {
        r.log.traces.push_back(row.trace);
        r.rows.push_back(std::move(row));
      }
    }
    return r;
  }();
  return runs;
}

struct OrderingRuns {
  std::map<std::string, SimulationReport> reports;
  TraceLog log{"ordering simulations", {}};
};

const OrderingRuns& ordering_runs() {
  static const OrderingRuns runs = [] {
    OrderingRuns r;
    const ModelArchitecture arch = builtin_architecture("vgg19");
    for (const ScenarioSpec& preset : preset_scenarios()) {
      SimulationConfig cfg;
      cfg.scenario = preset;
      cfg.scenario.rounds = kOrderingRounds;
      cfg.scenario.seed = kRunSeed;
      SimulationReport rep = run_simulation(cfg, arch);
      for (const auto& rec : rep.records) r.log.traces.push_back(rec.esfl_trace);
      r.reports.emplace(preset.name, std::move(rep));
    }
    return r;
  }();
  return runs;
}

// ---- Criteria ------------------------------------------------------------

Outcome split_equivalence() {
  Rng rng(kRunSeed);
  const EquivalenceSummary s = check_split_equivalence(kEquivalenceCases, rng);
  return {s.cases >= 100 && s.max_relative_deviation <= kEquivalenceTol,
          fmt("%d cases, max relative parameter deviation %.3g (limit %.0e)", s.cases,
              s.max_relative_deviation, kEquivalenceTol)};
}

Outcome gradient_check() {
  // ReLU is left out: its kink makes central differences unreliable.
  constexpr Activation kSmooth[] = {Activation::kIdentity, Activation::kTanh,
                                    Activation::kSigmoid};
  Rng rng(kRunSeed + 1);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int n = 0; n < kGradientNets; ++n) {
    const std::size_t layers = 1 + rng.uniform_index(3);
    std::vector<std::size_t> dims;
    for (std::size_t l = 0; l <= layers; ++l) dims.push_back(1 + rng.uniform_index(5));
    if (dims.back() < 2) dims.back() = 2;
    std::vector<Activation> acts;
    for (std::size_t l = 0; l < layers; ++l) acts.push_back(kSmooth[rng.uniform_index(3)]);
    const Loss loss = rng.uniform01() < 0.5 ? Loss::kSoftmaxCrossEntropy : Loss::kSquaredError;
    DenseNet net = make_dense_net(dims, acts, loss, rng);

    const std::size_t rows = 1 + rng.uniform_index(6);
    Batch batch{Matrix(rows, dims.front()), Matrix(rows, dims.back())};
    for (double& v : batch.x.values()) v = rng.uniform(-1.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
      if (loss == Loss::kSoftmaxCrossEntropy) {
        batch.y(r, rng.uniform_index(dims.back())) = 1.0;
      } else {
        for (std::size_t c = 0; c < dims.back(); ++c) batch.y(r, c) = rng.uniform(-1.0, 1.0);
      }
    }

    std::vector<double> analytic;
    for (const auto& g : gradients(net, batch)) {
      analytic.insert(analytic.end(), g.weight.values().begin(), g.weight.values().end());
      analytic.insert(analytic.end(), g.bias.begin(), g.bias.end());
    }
    std::vector<double> params = flatten_parameters(net);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double keep = params[k];
      params[k] = keep + kFiniteDifferenceStep;
      assign_parameters(net, params);
      const double up = loss_value(net, batch);
      params[k] = keep - kFiniteDifferenceStep;
      assign_parameters(net, params);
      const double down = loss_value(net, batch);
      params[k] = keep;
      assign_parameters(net, params);
      const double fd = (up - down) / (2.0 * kFiniteDifferenceStep);
      const double scale = std::max(std::abs(fd), std::abs(analytic[k]));
      if (scale < kGradientFloor) continue;
      worst = std::max(worst, std::abs(fd - analytic[k]) / scale);
      ++checked;
    }
  }
  return {worst <= kGradientTol,
          fmt("%d nets, %zu parameters, max relative error %.3g (limit %.0e)", kGradientNets,
              checked, worst, kGradientTol)};
}

// Grid oracle: hand out C_total in equal quanta, each to the user that is
// currently slowest. For min-max of decreasing separable times this greedy
// order is optimal over the grid.
double grid_objective(std::span<const double> a, std::span<const double> b, double total) {
  const double quantum = total / kGridQuanta;
  std::vector<int> units(a.size(), 0);
  auto time = [&](std::size_t i) {
    return units[i] == 0 ? INFINITY : a[i] / (units[i] * quantum) + b[i];
  };
  std::priority_queue<std::pair<double, std::size_t>> heap;
  double floor_time = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) {
      heap.emplace(time(i), i);
    } else {
      floor_time = std::max(floor_time, b[i]);
    }
  }
  for (int q = 0; q < kGridQuanta && !heap.empty(); ++q) {
    const std::size_t i = heap.top().second;
    heap.pop();
    ++units[i];
    heap.emplace(time(i), i);
  }
  return std::max(floor_time, heap.empty() ? 0.0 : heap.top().first);
}

Outcome resource_exactness() {
  Rng rng(kRunSeed + 2);
  double worst_gap = 0.0, worst_saturation = 0.0, worst_equal = 0.0;
  for (int t = 0; t < kResourceInstances; ++t) {
    std::vector<double> a(5), b(5);
    for (std::size_t i = 0; i < 5; ++i) {
      a[i] = rng.uniform01() < 0.15 ? 0.0 : log_uniform(rng, 1e9, 1e14);
      b[i] = rng.uniform(0.0, 100.0);
    }
    if (std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; })) a[0] = 1e12;
    const double total = log_uniform(rng, 1e11, 1e14);
    const ResourceSplit s = allocate_server_compute(a, b, total);
    const double grid = grid_objective(a, b, total);
    worst_gap = std::max(worst_gap, std::abs(s.objective - grid) / grid);
    double used = 0.0;
    for (double c : s.server_compute) used += c;
    worst_saturation = std::max(worst_saturation, std::abs(used - total) / total);
    for (std::size_t i = 0; i < 5; ++i) {
      if (s.server_compute[i] > 0.0) {
        const double t_i = a[i] / s.server_compute[i] + b[i];
        worst_equal = std::max(worst_equal, std::abs(t_i - s.level) / s.level);
      }
    }
  }
  return {worst_gap <= kResourceObjectiveTol && worst_saturation <= kSaturationTol &&
              worst_equal <= kEqualizationTol,
          fmt("%d instances, objective vs grid %.3g (limit %.1e), saturation %.3g, "
              "equalization %.3g (limits %.0e)",
              kResourceInstances, worst_gap, kResourceObjectiveTol, worst_saturation,
              worst_equal, kEqualizationTol)};
}

Outcome oracle_gap() {
  const auto& runs = oracle_runs();
  const double worst = *std::max_element(runs.gaps.begin(), runs.gaps.end());
  const double lowest = *std::min_element(runs.gaps.begin(), runs.gaps.end());
  return {lowest >= 1.0 - kAdmissibilitySlack && worst <= kOracleGapLimit,
          fmt("%zu instances, objective / optimum in [%.6f, %.6f] (limit %.2f)",
              runs.gaps.size(), lowest, worst, kOracleGapLimit)};
}

Outcome monotone_descent() {
  int traces = 0, steps = 0, violations = 0;
  double worst_rise = 0.0;
  for (const TraceLog* log :
       {&oracle_runs().log, &convergence_runs().log, &ordering_runs().log}) {
    for (const auto& trace : log->traces) {
      ++traces;
      for (std::size_t k = 1; k < trace.size(); ++k) {
        ++steps;
        const double rise = (trace[k] - trace[k - 1]) / trace[k - 1];
        worst_rise = std::max(worst_rise, rise);
        if (rise > kDescentTol) ++violations;
      }
    }
  }
  return {violations == 0,
          fmt("%d traces, %d iterations, %d rises beyond %.0e (largest relative step %.3g)",
              traces, steps, violations, kDescentTol, worst_rise)};
}

Outcome convergence_count() {
  const auto& runs = convergence_runs();
  bool ok = true;
  std::string detail;
  for (const auto& row : runs.rows) {
    ok = ok && row.converged && row.iterations <= kConvergenceLimit;
    detail += fmt("%s/%d:%d%s ", row.scenario.c_str(), row.scale, row.iterations,
                  row.converged ? "" : "(not converged)");
  }
  detail += fmt("(limit %d)", kConvergenceLimit);
  return {ok, detail};
}

double mean_time(const SimulationReport& rep, Algorithm a) {
  const AlgorithmSummary* s = rep.summary(a);
  return s ? s->mean_time : NAN;
}

Outcome ordering() {
  bool ok = true;
  std::string detail;
  for (const auto& [name, rep] : ordering_runs().reports) {
    const double esfl = mean_time(rep, Algorithm::kEsfl);
    const double sfl = mean_time(rep, Algorithm::kSfl);
    const double fl = mean_time(rep, Algorithm::kFl);
    const double sl = mean_time(rep, Algorithm::kSl);
    int exceptions = 0;
    for (const auto& rec : rep.records) {
      const auto& e = rec.result(Algorithm::kEsfl);
      const auto& s = rec.result(Algorithm::kSfl);
      if (!e || !s || e->time > s->time) ++exceptions;
    }
    const bool row_ok = esfl < sfl && esfl < fl && sl > std::max({esfl, sfl, fl}) &&
                        exceptions == 0 &&
                        static_cast<int>(rep.records.size()) == kOrderingRounds;
    ok = ok && row_ok;
    detail += fmt("%s[esfl %.4g sfl %.4g fl %.4g sl %.4g x%d]%s ", name.c_str(), esfl, sfl,
                  fl, sl, exceptions, row_ok ? "" : "!");
  }
  return {ok, detail};
}

Outcome heterogeneity() {
  const auto& reports = ordering_runs().reports;
  const SimulationReport& sh = reports.at("SH");
  const SimulationReport& lh = reports.at("LH");
  const double esfl = mean_time(lh, Algorithm::kEsfl) / mean_time(sh, Algorithm::kEsfl);
  const double sfl = mean_time(lh, Algorithm::kSfl) / mean_time(sh, Algorithm::kSfl);
  return {esfl < sfl, fmt("LH/SH mean round time ratio: esfl %.4f, sfl %.4f", esfl, sfl)};
}

Outcome distribution_sanity() {
  const auto& reports = ordering_runs().reports;
  double worst = 0.0;
  int rows = 0;
  for (const auto& [name, rep] : reports) {
    const auto& d = rep.distribution;
    auto check = [&](const std::vector<double>& row) {
      double sum = 0.0;
      for (double p : row) sum += p;
      worst = std::max(worst, std::abs(sum - 1.0));
      ++rows;
    };
    for (const auto& row : d.rows) check(row);
    check(d.pooled);
  }
  const double bp = reports.at("BP").distribution.entropy_variance;
  const double br = reports.at("BR").distribution.entropy_variance;
  return {worst <= kNormalizationTol,
          fmt("%d rows, max |sum - 1| %.3g (limit %.0e); entropy variance BR %.5g vs BP "
              "%.5g (reported)",
              rows, worst, kNormalizationTol, br, bp)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  std::random_device device;
  const fs::path root =
      fs::temp_directory_path() / ("esfl_acceptance_" + std::to_string(device()));
  fs::create_directories(root);
  {
    std::ofstream net(root / "net.txt");
    net << "name: mini\nA 0.1 5 0.01\nB 0.5 8 0.02\nC 1 10 0\n";
    std::ofstream users(root / "users.json");
    users << R"({"arch": ")" << (root / "net.txt").string() << R"(", "server_tflops": 20, "users": [
  {"id": 1, "samples": 300, "tflops": 1.0, "up_kbps": 80},
  {"id": 2, "samples": 600, "tflops": 0.4, "up_kbps": 300, "down_kbps": 500},
  {"id": 3, "samples": 450, "tflops": 2.5, "up_kbps": 40}]})";
  }
  const std::vector<std::vector<std::string>> commands = {
      {"simulate", "--scenario", "LH", "--rounds", "20", "--seed", "11"},
      {"optimize", "--config", (root / "users.json").string(), "--oracle"},
      {"converge", "--scenario", "BP,BR", "--scales", "50,100", "--seed", "11"},
      {"train-toy", "--check-equivalence", "--seed", "11"},
  };
  bool ok = true;
  std::string detail;
  for (const auto& command : commands) {
    std::vector<fs::path> dirs;
    bool ran = true;
    for (const char* run : {"a", "b"}) {
      dirs.push_back(root / (command.front() + "_" + run));
      std::vector<std::string> args = command;
      args.insert(args.end(), {"--out", dirs.back().string()});
      std::ostringstream out, err;
      if (run_cli(args, out, err) != kExitOk) {
        ran = false;
        detail += command.front() + " failed: " + err.str() + " ";
      }
    }
    int files = 0, differing = 0;
    if (ran) {
      for (const auto& entry : fs::directory_iterator(dirs[0])) {
        ++files;
        const fs::path twin = dirs[1] / entry.path().filename();
        if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) ++differing;
      }
      int twin_files = 0;
      for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dirs[1])) ++twin_files;
      if (twin_files != files) ++differing;
      detail += fmt("%s:%d files%s ", command.front().c_str(), files,
                    differing ? " DIFFER" : " identical");
    }
    ok = ok && ran && files > 0 && differing == 0;
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return {ok, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
  std::optional<double> limit_s;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "split/monolithic equivalence", split_equivalence, kLimitEquivalence},
      {2, "gradient check", gradient_check, kLimitGradient},
      {3, "resource-subproblem exactness", resource_exactness, kLimitResource},
      {4, "joint-oracle gap", oracle_gap, kLimitOracle},
      {5, "monotone descent", monotone_descent, std::nullopt},
      {6, "convergence count", convergence_count, kLimitConvergence},
      {7, "ordering", ordering, kLimitOrdering},
      {8, "heterogeneity robustness", heterogeneity, kLimitHeterogeneity},
      {9, "distribution sanity", distribution_sanity, std::nullopt},
      {10, "determinism", determinism, std::nullopt},
  };
  return list;
}

bool run(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = c.check();
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string timing = fmt("%.2f s", elapsed);
  if (c.limit_s) {
    timing += fmt(" of %.0f s", *c.limit_s);
    if (elapsed > *c.limit_s) outcome.pass = false;
  }
  std::printf("%s criterion %d (%s): %s [%s]\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name,
              outcome.detail.c_str(), timing.c_str());
  std::fflush(stdout);
  return outcome.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    std::fprintf(stderr, "usage: %s [criterion]\n", argv[0]);
    return 2;
  }
  bool all_pass = true;
  bool found = false;
  const int only = argc == 2 ? std::atoi(argv[1]) : 0;
  for (const Criterion& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    found = true;
    all_pass = run(c) && all_pass;
  }
  if (!found) {
    std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
    return 2;
  }
  return all_pass ? 0 : 1;
}
