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

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "esfl/optimizer.hpp"
#include "esfl/simulator.hpp"

namespace esfl {

using Json = nlohmann::ordered_json;

// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

Json to_json(const ScenarioSpec& spec);
Json to_json(const OptimizerConfig& cfg);
Json to_json(const RoundSettings& settings);
Json to_json(const SimulationConfig& config);
Json to_json(const UserProfile& user);
Json to_json(const OptimizationResult& result);
Json to_json(const CutLayerDistribution& dist);
Json to_json(const SimulationReport& report);
Json to_json(const std::vector<ConvergenceRow>& rows);

// Per-algorithm one-round and communication times, then the projection to
// each algorithm's target round count.
std::string summary_table(const SimulationReport& report);

// One row per (round, algorithm).
std::string rounds_csv(const SimulationReport& report);

// One row per user and a final "pooled" row, columns l1..lL plus entropy.
std::string distribution_csv(const CutLayerDistribution& dist);

std::string convergence_table(const std::vector<ConvergenceRow>& rows);

// Per-user cut, server TFLOPs and round time of an allocation, plus the
// optimizer trace.
std::string allocation_table(const OptimizationResult& result,
                             std::span<const UserProfile> users,
                             const ModelArchitecture& arch,
                             const RoundSettings& settings);

}  // namespace esfl
