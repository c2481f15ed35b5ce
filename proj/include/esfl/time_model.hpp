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

#include <limits>
#include <span>
#include <vector>

#include "esfl/comm.hpp"
#include "esfl/workload.hpp"

namespace esfl {

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

// One selected device: its data, resources and local epoch count.
struct UserProfile {
  int id = 0;
  double samples = 0.0;  // n_i
  double compute = 0.0;  // c_i, FLOPs/s
  LinkRates rates;       // bytes/s
  double storage_bytes = kUnlimited;
  double memory_bytes = kUnlimited;
  int epochs = 5;
};

// Constants shared by every user in a round.
struct RoundSettings {
  int batch_size = 32;
  double t_agg = 0.0;  // aggregation time, seconds
  bool count_activation_memory = true;
};

struct EpochBreakdown {
  double t_c = 0.0;  // user compute
  double t_b = 0.0;  // activation upload
  double t_C = 0.0;  // server compute
  double t_B = 0.0;  // activation-gradient download
  double total = 0.0;

  double comm() const { return t_b + t_B; }
};

struct RoundBreakdown {
  int cut = 0;
  double t_up = 0.0;    // user-side model upload
  double t_down = 0.0;  // user-side model distribution
  std::vector<EpochBreakdown> epochs;
  double t_agg = 0.0;
  double total = 0.0;

  // Model transfers plus activation traffic of every epoch.
  double comm_time() const;
};

// Per-user cut layer and server compute (FLOPs/s).
struct Allocation {
  std::vector<int> cuts;
  std::vector<double> server_compute;
  double objective = 0.0;  // max_i T_i, seconds
};

// Outcome of one algorithm on one round.
struct AlgorithmTiming {
  double time = 0.0;
  double comm_time = 0.0;
  int straggler = -1;  // index into the user list; -1 for summed rounds
  std::vector<double> user_times;
};

bool cut_fits(const UserProfile& user, const CutWorkload& cw);

// One local epoch. Throws AllocationError when the cut leaves server work
// but server_compute <= 0, and InfeasibleError when a link with traffic has
// zero rate.
EpochBreakdown epoch_time(double samples, double user_compute_rate,
                          const LinkRates& rates, const CutWorkload& cw,
                          double total_compute, double server_compute);

// Full round for one user. Throws InfeasibleError when the cut violates the
// user's storage or memory.
RoundBreakdown round_time(const UserProfile& user, const CutWorkload& cw,
                          double total_compute, double server_compute,
                          double t_agg);
RoundBreakdown round_time(const UserProfile& user, const ModelArchitecture& arch,
                          int cut, double server_compute,
                          const RoundSettings& settings = {});

std::vector<RoundBreakdown> evaluate_allocation(const Allocation& alloc,
                                                std::span<const UserProfile> users,
                                                const ModelArchitecture& arch,
                                                const RoundSettings& settings = {});

// Straggler time of an allocation.
double esfl_round_time(const Allocation& alloc, std::span<const UserProfile> users,
                       const ModelArchitecture& arch,
                       const RoundSettings& settings = {});
AlgorithmTiming esfl_round(const Allocation& alloc,
                           std::span<const UserProfile> users,
                           const ModelArchitecture& arch,
                           const RoundSettings& settings = {});

// Federated learning: whole model trained locally.
AlgorithmTiming fl_round(std::span<const UserProfile> users,
                         const ModelArchitecture& arch,
                         const RoundSettings& settings = {});
double fl_round_time(std::span<const UserProfile> users,
                     const ModelArchitecture& arch,
                     const RoundSettings& settings = {});

// SplitFed: one cut for all users, server compute split evenly.
AlgorithmTiming sfl_round(std::span<const UserProfile> users,
                          const ModelArchitecture& arch, int fixed_cut,
                          double server_total, const RoundSettings& settings = {});
double sfl_round_time(std::span<const UserProfile> users,
                      const ModelArchitecture& arch, int fixed_cut,
                      double server_total, const RoundSettings& settings = {});

// Split learning: users served one after another, each with the whole
// server; aggregation counted once.
AlgorithmTiming sl_round(std::span<const UserProfile> users,
                         const ModelArchitecture& arch, int fixed_cut,
                         double server_total, const RoundSettings& settings = {});
double sl_round_time(std::span<const UserProfile> users,
                     const ModelArchitecture& arch, int fixed_cut,
                     double server_total, const RoundSettings& settings = {});

// Smallest cut that every user's storage and memory admit.
// Throws InfeasibleError when there is none.
int default_fixed_cut(std::span<const UserProfile> users,
                      const ModelArchitecture& arch,
                      const RoundSettings& settings = {});

}  // namespace esfl
