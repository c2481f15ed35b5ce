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
#include <vector>

#include "esfl/time_model.hpp"
#include "esfl/workload.hpp"

namespace esfl {

// Which time the cut-layer subproblem minimizes: the full round T_i
// (model transfers and all epochs) or a single epoch.
enum class CutObjective { kRound, kEpoch };

struct OptimizerConfig {
  int max_iters = 50;
  // Stop once max_i |C_i^n - C_i^{n-1}| / C_total falls below this.
  double stall_tolerance = 1e-6;
  // Bisection stops once the bracket on K is this narrow relative to K.
  double bisection_tolerance = 1e-9;
  int bisection_max_steps = 200;
  CutObjective objective = CutObjective::kRound;
};

// Server compute split for fixed cuts: user i takes a_i / C_i + b_i seconds.
struct ResourceSplit {
  std::vector<double> server_compute;
  double level = 0.0;      // common time of users with a_i > 0
  double objective = 0.0;  // max over all users, including a_i == 0
  int steps = 0;           // bisection steps taken
};

struct IterationRecord {
  int iteration = 0;
  double cut_step_objective = 0.0;  // after the cut-layer pass
  double objective = 0.0;           // after the resource pass
  double max_change = 0.0;          // relative inf-norm change of C
  std::vector<int> cuts;
  std::vector<double> server_compute;
};

struct OptimizationResult {
  Allocation allocation;  // best allocation seen
  std::vector<IterationRecord> trace;
  int iterations = 0;
  bool converged = false;
};

// Cuts 1..L admitted by the user's storage and memory. Throws
// InfeasibleError when none is.
std::vector<int> feasible_cuts(const UserProfile& user,
                               const ModelArchitecture& arch,
                               const RoundSettings& settings = {});

// Exhaustive scan of the feasible cuts, ties to the smaller index. With
// server_compute == 0 only cuts that leave no server work are candidates.
int best_cut(const UserProfile& user, const ModelArchitecture& arch,
             double server_compute, const RoundSettings& settings = {},
             CutObjective objective = CutObjective::kRound);

// Min-max split of server_total among users with time a_i / C_i + b_i,
// solved by bisection on the common level K. Users with a_i == 0 get 0.
// Throws DomainError for nonpositive server_total or mismatched inputs.
ResourceSplit allocate_server_compute(std::span<const double> a,
                                      std::span<const double> b,
                                      double server_total,
                                      const OptimizerConfig& cfg = {});

// The (a_i, b_i) coefficients of each user's time for fixed cuts.
void server_time_coefficients(std::span<const UserProfile> users,
                              const ModelArchitecture& arch,
                              std::span<const int> cuts,
                              const RoundSettings& settings, CutObjective objective,
                              std::vector<double>& a, std::vector<double>& b);

// Alternates cut-layer and server-compute passes from an equal split until
// the compute vector stalls or max_iters is reached.
OptimizationResult alternate(std::span<const UserProfile> users,
                             const ModelArchitecture& arch, double server_total,
                             const OptimizerConfig& cfg = {},
                             const RoundSettings& settings = {});

// Exact joint optimum by enumerating every cut tuple. Refuses instances
// with more than 3 users or 6 layers (DomainError).
Allocation brute_force_joint(std::span<const UserProfile> users,
                             const ModelArchitecture& arch, double server_total,
                             const OptimizerConfig& cfg = {},
                             const RoundSettings& settings = {});

}  // namespace esfl
