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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esfl/comm.hpp"
#include "esfl/report.hpp"
#include "esfl/simulator.hpp"
#include "esfl/split_training.hpp"

namespace esfl {

enum class Command { kSimulate, kOptimize, kConverge, kTrainToy };

std::string_view command_name(Command c);
// Throws ConfigError.
Command parse_command(std::string_view name);

// One device of an explicit user list. Exactly one of up_kbps and channel.
struct UserSpec {
  int id = 0;
  double samples = 500.0;
  double tflops = 1.0;
  std::optional<double> up_kbps;
  std::optional<double> down_kbps;
  std::optional<ChannelParams> channel;
  int epochs = 5;
  double storage_bytes = kUnlimited;
  double memory_bytes = kUnlimited;
};

struct ToySpec {
  std::vector<std::size_t> dims{4, 8, 8, 3};
  std::vector<toy::Activation> activations{toy::Activation::kTanh, toy::Activation::kRelu,
                                           toy::Activation::kIdentity};
  toy::Loss loss = toy::Loss::kSoftmaxCrossEntropy;
  int users = 2;
  std::size_t samples_per_user = 64;
  std::vector<int> cuts;  // per user; empty cycles through 1..L
  int epochs = 1;
  toy::ToyTrainConfig train;
  double spread = 0.5;
  double center_range = 2.0;
  int equivalence_cases = 100;
};

struct RunConfig {
  Command command = Command::kSimulate;
  std::uint64_t seed = 0;
  std::optional<std::string> output_dir;
  std::string arch = "vgg19";
  std::optional<double> kappa;
  std::optional<double> bytes_per_element;
  double bytes_per_kb = kKibibyte;
  RoundSettings settings;
  OptimizerConfig optimizer;

  // simulate
  ScenarioSpec scenario = preset_scenario("BP");
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  int sfl_cut = 0;
  InfeasiblePolicy infeasible = InfeasiblePolicy::kExclude;
  std::array<int, 4> target_rounds{1500, 1500, 200, 1500};

  // optimize
  double server_tflops = 130.0;
  std::vector<UserSpec> users;
  bool oracle = false;

  // converge
  std::vector<ScenarioSpec> scenarios;  // empty selects BP, PR, RP, BR
  std::vector<int> scales{100, 200, 400, 800};

  // train-toy
  ToySpec toy;
  bool check_equivalence = false;
};

// Strict: any key not understood by the command raises ConfigError.
RunConfig parse_run_config(const Json& doc, Command command);
RunConfig load_run_config(const std::filesystem::path& path, Command command);

// Scenario from a preset name or an object (optionally {"preset": name, ...}).
ScenarioSpec parse_scenario(const Json& value);

// Final values after overrides; embedded in every report.
Json to_json(const RunConfig& config);

// Named profile or file, with the kappa and bytes-per-element overrides.
ModelArchitecture resolve_run_architecture(const RunConfig& config);

// Seed and unit conventions folded into the scenario.
SimulationConfig simulation_config(const RunConfig& config);

std::vector<UserProfile> user_profiles(const RunConfig& config);

std::vector<ScenarioSpec> convergence_scenarios(const RunConfig& config);

}  // namespace esfl
