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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esfl/optimizer.hpp"
#include "esfl/rng.hpp"
#include "esfl/time_model.hpp"
#include "esfl/workload.hpp"

namespace esfl {

enum class Algorithm { kEsfl = 0, kFl = 1, kSl = 2, kSfl = 3 };
inline constexpr std::array<Algorithm, 4> kAllAlgorithms = {
    Algorithm::kFl, Algorithm::kSl, Algorithm::kSfl, Algorithm::kEsfl};

std::string_view algorithm_name(Algorithm a);
// Accepts "esfl", "fl", "sl", "sfl" in any case. Throws ConfigError.
Algorithm parse_algorithm(std::string_view name);
// Comma-separated list, duplicates removed, canonical order FL, SL, SFL, ESFL.
std::vector<Algorithm> parse_algorithms(std::string_view list);

enum class ResourceMode {
  kPerRound,  // resources redrawn for every selected user each round
  kSticky,    // drawn once per user for the whole run
};

struct ScenarioSpec {
  std::string name;
  std::vector<double> comm_options;      // KB/s
  std::vector<double> downlink_options;  // KB/s; empty mirrors the uplink draw
  std::vector<double> comp_options;      // TFLOPs
  std::vector<double> data_options{500.0};
  int population = 100;
  int selected_per_round = 10;
  int rounds = 100;
  int epochs = 5;
  double server_tflops = 130.0;
  std::uint64_t seed = 0;
  ResourceMode resource_mode = ResourceMode::kPerRound;
  double bytes_per_kb = 1024.0;
  double storage_bytes = kUnlimited;
  double memory_bytes = kUnlimited;
};

// Throws ConfigError.
void validate_scenario(const ScenarioSpec& spec);

// BP, PR, RP, BR (resource limitation, 500 samples each) and SH, SL, LS, LH
// (heterogeneity, samples from {200, 400, 600, 800}).
std::vector<ScenarioSpec> preset_scenarios();
ScenarioSpec preset_scenario(std::string_view name);

enum class InfeasiblePolicy { kExclude, kAbort };

struct SimulationConfig {
  ScenarioSpec scenario;
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  RoundSettings settings;
  OptimizerConfig optimizer;
  int fixed_cut = 0;  // SFL/SL cut layer; 0 selects default_fixed_cut per round
  InfeasiblePolicy infeasible = InfeasiblePolicy::kExclude;
  // Rounds each algorithm needs to reach the target accuracy; used only to
  // project total training time.
  std::array<int, 4> target_rounds{1500, 1500, 200, 1500};  // by Algorithm value
};

// Users of a run: fixed data amounts, plus fixed resources in sticky mode.
struct Population {
  std::vector<double> samples;
  std::vector<double> up_kbps;
  std::vector<double> down_kbps;
  std::vector<double> tflops;
};

Population make_population(const ScenarioSpec& spec, Rng& rng);

// Uniform sample without replacement of selected_per_round users, returned
// in ascending id order, with resources drawn uniformly from the options.
std::vector<UserProfile> sample_round_users(const ScenarioSpec& spec,
                                            const Population& population, Rng& rng);

struct RoundRecord {
  int round = 0;
  std::vector<UserProfile> users;  // selected and feasible
  std::vector<int> excluded_ids;   // selected but without a feasible cut
  int fixed_cut = 0;
  // Indexed by Algorithm value; empty when not requested or infeasible.
  std::array<std::optional<AlgorithmTiming>, 4> results;
  Allocation esfl_allocation;
  std::vector<double> esfl_trace;  // objective per optimizer iteration
  int esfl_iterations = 0;
  bool esfl_converged = false;

  const std::optional<AlgorithmTiming>& result(Algorithm a) const {
    return results[static_cast<std::size_t>(a)];
  }
};

struct CutLayerDistribution {
  int num_layers = 0;
  std::vector<int> user_ids;
  std::vector<std::vector<double>> rows;  // P_{i,l}, l = 1..L
  std::vector<double> pooled;             // over every (user, round) choice
  std::vector<double> entropy;            // per row, nats
  double entropy_mean = 0.0;
  double entropy_variance = 0.0;
};

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::kEsfl;
  int rounds = 0;
  double total_time = 0.0;
  double mean_time = 0.0;
  double total_comm = 0.0;
  double mean_comm = 0.0;
  int target_rounds = 0;
  double projected_time = 0.0;  // mean_time * target_rounds
  double projected_comm = 0.0;
};

struct ConvergenceSummary {
  double mean_iterations = 0.0;
  int max_iterations = 0;
  int not_converged = 0;
  int descent_violations = 0;  // iterations whose objective rose
};

struct SimulationReport {
  SimulationConfig config;
  std::string arch_name;
  int num_layers = 0;
  std::vector<RoundRecord> records;
  std::vector<AlgorithmSummary> summaries;
  CutLayerDistribution distribution;
  ConvergenceSummary convergence;

  const AlgorithmSummary* summary(Algorithm a) const;
};

RoundRecord run_round(int round, std::vector<UserProfile> users,
                      const SimulationConfig& config, const ModelArchitecture& arch);

SimulationReport run_simulation(const SimulationConfig& config,
                                const ModelArchitecture& arch);

// Empirical cut frequencies from the ESFL allocations of a run.
CutLayerDistribution cut_layer_distribution(const std::vector<RoundRecord>& records,
                                            int num_layers);

struct ConvergenceRow {
  std::string scenario;
  int scale = 0;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<double> trace;
};

// Runs the alternating optimizer once per scale on that many users drawn
// from the scenario, all selected at once.
std::vector<ConvergenceRow> convergence_study(
    const ScenarioSpec& spec, const ModelArchitecture& arch,
    const std::vector<int>& scales = {100, 200, 400, 800},
    const OptimizerConfig& optimizer = {}, const RoundSettings& settings = {});

}  // namespace esfl
