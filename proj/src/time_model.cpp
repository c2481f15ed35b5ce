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

#include "esfl/time_model.hpp"

#include <string>

#include "esfl/errors.hpp"

namespace esfl {

namespace {

double transfer_time(double bytes, double rate, const char* what) {
  if (bytes <= 0.0) return 0.0;
  if (!(rate > 0.0)) {
    throw InfeasibleError(std::string(what) + " has traffic but zero rate");
  }
  return bytes / rate;
}

// Index of the first maximal entry.
int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

AlgorithmTiming max_timing(const std::vector<RoundBreakdown>& rounds) {
  AlgorithmTiming out;
  if (rounds.empty()) return out;
  out.user_times.reserve(rounds.size());
  for (const auto& r : rounds) out.user_times.push_back(r.total);
  out.straggler = argmax(out.user_times);
  out.time = out.user_times[out.straggler];
  out.comm_time = rounds[out.straggler].comm_time();
  return out;
}

}  // namespace

double RoundBreakdown::comm_time() const {
  double c = t_up + t_down;
  for (const auto& e : epochs) c += e.comm();
  return c;
}

bool cut_fits(const UserProfile& user, const CutWorkload& cw) {
  return cw.model_bytes <= user.storage_bytes && cw.mem_bytes <= user.memory_bytes;
}

EpochBreakdown epoch_time(double samples, double user_compute_rate,
                          const LinkRates& rates, const CutWorkload& cw,
                          double total_compute, double server_compute) {
  if (!(user_compute_rate > 0.0)) {
    throw DomainError("user compute rate must be positive");
  }
  EpochBreakdown e;
  e.t_c = cw.user_compute * samples / user_compute_rate;
  e.t_b = transfer_time(cw.act_bytes * samples, rates.up, "uplink");
  const double server_share = total_compute - cw.user_compute;
  if (server_share > 0.0 && samples > 0.0) {
    if (!(server_compute > 0.0)) {
      throw AllocationError("cut " + std::to_string(cw.cut) +
                            " leaves server work but no server compute");
    }
    e.t_C = server_share * samples / server_compute;
  }
  e.t_B = transfer_time(cw.act_bytes * samples, rates.down, "downlink");
  e.total = e.t_c + e.t_b + e.t_C + e.t_B;
  return e;
}

RoundBreakdown round_time(const UserProfile& user, const CutWorkload& cw,
                          double total_compute, double server_compute,
                          double t_agg) {
  if (!cut_fits(user, cw)) {
    throw InfeasibleError("cut " + std::to_string(cw.cut) +
                          " exceeds storage or memory of user " +
                          std::to_string(user.id));
  }
  RoundBreakdown r;
  r.cut = cw.cut;
  r.t_up = transfer_time(cw.model_bytes, user.rates.up, "uplink");
  r.t_down = transfer_time(cw.model_bytes, user.rates.down, "downlink");
  r.t_agg = t_agg;
  r.total = r.t_up + r.t_down;
  if (user.epochs > 0) {
    const EpochBreakdown e = epoch_time(user.samples, user.compute, user.rates,
                                        cw, total_compute, server_compute);
    r.epochs.assign(static_cast<std::size_t>(user.epochs), e);
    for (const auto& ep : r.epochs) r.total += ep.total;
  }
  r.total += r.t_agg;
  return r;
}

RoundBreakdown round_time(const UserProfile& user, const ModelArchitecture& arch,
                          int cut, double server_compute,
                          const RoundSettings& settings) {
  const auto cw = cut_workload(arch, cut, settings.batch_size,
                               settings.count_activation_memory);
  return round_time(user, cw, total_compute(arch), server_compute, settings.t_agg);
}

std::vector<RoundBreakdown> evaluate_allocation(const Allocation& alloc,
                                                std::span<const UserProfile> users,
                                                const ModelArchitecture& arch,
                                                const RoundSettings& settings) {
  if (alloc.cuts.size() != users.size() ||
      alloc.server_compute.size() != users.size()) {
    throw ValidationError("allocation does not cover every user");
  }
  const auto cws = all_cut_workloads(arch, settings.batch_size,
                                     settings.count_activation_memory);
  const double D = cws.back().user_compute;
  std::vector<RoundBreakdown> out;
  out.reserve(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    const int cut = alloc.cuts[i];
    if (cut < 1 || cut > arch.num_layers()) {
      throw DomainError("cut layer " + std::to_string(cut) + " out of range");
    }
    out.push_back(round_time(users[i], cws[static_cast<std::size_t>(cut - 1)], D,
                             alloc.server_compute[i], settings.t_agg));
  }
  return out;
}

AlgorithmTiming esfl_round(const Allocation& alloc,
                           std::span<const UserProfile> users,
                           const ModelArchitecture& arch,
                           const RoundSettings& settings) {
  return max_timing(evaluate_allocation(alloc, users, arch, settings));
}

double esfl_round_time(const Allocation& alloc, std::span<const UserProfile> users,
                       const ModelArchitecture& arch,
                       const RoundSettings& settings) {
  return esfl_round(alloc, users, arch, settings).time;
}

AlgorithmTiming fl_round(std::span<const UserProfile> users,
                         const ModelArchitecture& arch,
                         const RoundSettings& settings) {
  Allocation alloc;
  alloc.cuts.assign(users.size(), arch.num_layers());
  alloc.server_compute.assign(users.size(), 0.0);
  return esfl_round(alloc, users, arch, settings);
}

double fl_round_time(std::span<const UserProfile> users,
                     const ModelArchitecture& arch,
                     const RoundSettings& settings) {
  return fl_round(users, arch, settings).time;
}

AlgorithmTiming sfl_round(std::span<const UserProfile> users,
                          const ModelArchitecture& arch, int fixed_cut,
                          double server_total, const RoundSettings& settings) {
  Allocation alloc;
  alloc.cuts.assign(users.size(), fixed_cut);
  alloc.server_compute.assign(users.size(),
                              server_total / static_cast<double>(users.size()));
  return esfl_round(alloc, users, arch, settings);
}

double sfl_round_time(std::span<const UserProfile> users,
                      const ModelArchitecture& arch, int fixed_cut,
                      double server_total, const RoundSettings& settings) {
  return sfl_round(users, arch, fixed_cut, server_total, settings).time;
}

AlgorithmTiming sl_round(std::span<const UserProfile> users,
                         const ModelArchitecture& arch, int fixed_cut,
                         double server_total, const RoundSettings& settings) {
  RoundSettings no_agg = settings;
  no_agg.t_agg = 0.0;
  Allocation alloc;
  alloc.cuts.assign(users.size(), fixed_cut);
  alloc.server_compute.assign(users.size(), server_total);
  const auto rounds = evaluate_allocation(alloc, users, arch, no_agg);
  AlgorithmTiming out;
  for (const auto& r : rounds) {
    out.user_times.push_back(r.total);
    out.time += r.total;
    out.comm_time += r.comm_time();
  }
  out.time += settings.t_agg;
  return out;
}

double sl_round_time(std::span<const UserProfile> users,
                     const ModelArchitecture& arch, int fixed_cut,
                     double server_total, const RoundSettings& settings) {
  return sl_round(users, arch, fixed_cut, server_total, settings).time;
}

int default_fixed_cut(std::span<const UserProfile> users,
                      const ModelArchitecture& arch,
                      const RoundSettings& settings) {
  const auto cws = all_cut_workloads(arch, settings.batch_size,
                                     settings.count_activation_memory);
  for (const auto& cw : cws) {
    bool ok = true;
    for (const auto& u : users) {
      if (!cut_fits(u, cw)) {
        ok = false;
        break;
      }
    }
    if (ok) return cw.cut;
  }
  throw InfeasibleError("no cut layer fits every selected user");
}

}  // namespace esfl
