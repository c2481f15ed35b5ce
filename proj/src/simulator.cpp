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

#include "esfl/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "esfl/errors.hpp"

namespace esfl {

namespace {

constexpr double kTera = 1e12;

ScenarioSpec make_preset(std::string name, std::vector<double> comm,
                         std::vector<double> comp, std::vector<double> data) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.comm_options = std::move(comm);
  s.comp_options = std::move(comp);
  s.data_options = std::move(data);
  return s;
}

double pick(const std::vector<double>& options, Rng& rng) {
  return options[rng.uniform_index(options.size())];
}

bool has_feasible_cut(const UserProfile& u, const std::vector<CutWorkload>& cws) {
  return std::any_of(cws.begin(), cws.end(),
                     [&](const CutWorkload& cw) { return cut_fits(u, cw); });
}

bool all_fit(const std::vector<UserProfile>& users, const CutWorkload& cw) {
  return std::all_of(users.begin(), users.end(),
                     [&](const UserProfile& u) { return cut_fits(u, cw); });
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kEsfl: return "ESFL";
    case Algorithm::kFl: return "FL";
    case Algorithm::kSl: return "SL";
    case Algorithm::kSfl: return "SFL";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "esfl") return Algorithm::kEsfl;
  if (lower == "fl") return Algorithm::kFl;
  if (lower == "sl") return Algorithm::kSl;
  if (lower == "sfl") return Algorithm::kSfl;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::vector<Algorithm> parse_algorithms(std::string_view list) {
  std::array<bool, 4> wanted{};
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    auto tok = list.substr(pos, comma - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (!tok.empty()) wanted[static_cast<std::size_t>(parse_algorithm(tok))] = true;
    pos = comma + 1;
  }
  std::vector<Algorithm> out;
  for (Algorithm a : kAllAlgorithms) {
    if (wanted[static_cast<std::size_t>(a)]) out.push_back(a);
  }
  if (out.empty()) throw ConfigError("no algorithms selected");
  return out;
}

void validate_scenario(const ScenarioSpec& spec) {
  auto positive_list = [&](const std::vector<double>& v, const char* what,
                           bool allow_empty) {
    if (v.empty() && !allow_empty) {
      throw ConfigError(std::string(what) + " options must be nonempty");
    }
    for (double x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw ConfigError(std::string(what) + " options must be positive");
      }
    }
  };
  positive_list(spec.comm_options, "communication", false);
  positive_list(spec.downlink_options, "downlink", true);
  positive_list(spec.comp_options, "computing", false);
  positive_list(spec.data_options, "data", false);
  if (spec.population < 1) throw ConfigError("population must be positive");
  if (spec.selected_per_round < 1 || spec.selected_per_round > spec.population) {
    throw ConfigError("selected_per_round must lie in [1, population]");
  }
  if (spec.rounds < 1) throw ConfigError("rounds must be at least 1");
  if (spec.epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (!(spec.server_tflops > 0.0)) throw ConfigError("server compute must be positive");
  if (!(spec.bytes_per_kb > 0.0)) throw ConfigError("bytes_per_kb must be positive");
}

std::vector<ScenarioSpec> preset_scenarios() {
  const std::vector<double> poor_comm{10, 15, 20, 25};
  const std::vector<double> rich_comm{50, 75, 100, 125};
  const std::vector<double> poor_comp{1.3, 1.95, 2.6, 3.25};
  const std::vector<double> rich_comp{6.5, 9.75, 13, 16.25};
  const std::vector<double> wide_comm{5, 10, 20, 35};
  const std::vector<double> wide_comp{0.65, 1.3, 2.6, 4.55};
  const std::vector<double> iid{500};
  const std::vector<double> hetero{200, 400, 600, 800};
  return {
      make_preset("BP", poor_comm, poor_comp, iid),
      make_preset("PR", poor_comm, rich_comp, iid),
      make_preset("RP", rich_comm, poor_comp, iid),
      make_preset("BR", rich_comm, rich_comp, iid),
      make_preset("SH", poor_comm, poor_comp, hetero),
      make_preset("SL", poor_comm, wide_comp, hetero),
      make_preset("LS", wide_comm, poor_comp, hetero),
      make_preset("LH", wide_comm, wide_comp, hetero),
  };
}

ScenarioSpec preset_scenario(std::string_view name) {
  for (auto& s : preset_scenarios()) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

Population make_population(const ScenarioSpec& spec, Rng& rng) {
  validate_scenario(spec);
  Population p;
  const auto n = static_cast<std::size_t>(spec.population);
  p.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) p.samples.push_back(pick(spec.data_options, rng));
  if (spec.resource_mode == ResourceMode::kSticky) {
    for (std::size_t i = 0; i < n; ++i) {
      const double up = pick(spec.comm_options, rng);
      p.up_kbps.push_back(up);
      p.down_kbps.push_back(spec.downlink_options.empty()
                                ? up
                                : pick(spec.downlink_options, rng));
      p.tflops.push_back(pick(spec.comp_options, rng));
    }
  }
  return p;
}

std::vector<UserProfile> sample_round_users(const ScenarioSpec& spec,
                                            const Population& population, Rng& rng) {
  const auto n = static_cast<std::size_t>(spec.population);
  const auto k = static_cast<std::size_t>(spec.selected_per_round);
  if (population.samples.size() != n) {
    throw ConfigError("population does not match the scenario");
  }
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());

  const bool sticky = spec.resource_mode == ResourceMode::kSticky;
  std::vector<UserProfile> users;
  users.reserve(k);
  for (int id : ids) {
    const auto idx = static_cast<std::size_t>(id);
    double up, down, tflops;
    if (sticky) {
      up = population.up_kbps[idx];
      down = population.down_kbps[idx];
      tflops = population.tflops[idx];
    } else {
      up = pick(spec.comm_options, rng);
      down = spec.downlink_options.empty() ? up : pick(spec.downlink_options, rng);
      tflops = pick(spec.comp_options, rng);
    }
    UserProfile u;
    u.id = id;
    u.samples = population.samples[idx];
    u.compute = tflops * kTera;
    u.rates = link_rates(DirectRates{up, down}, spec.bytes_per_kb);
    u.storage_bytes = spec.storage_bytes;
    u.memory_bytes = spec.memory_bytes;
    u.epochs = spec.epochs;
    users.push_back(u);
  }
  return users;
}

RoundRecord run_round(int round, std::vector<UserProfile> users,
                      const SimulationConfig& config, const ModelArchitecture& arch) {
  RoundRecord rec;
  rec.round = round;
  const auto cws = all_cut_workloads(arch, config.settings.batch_size,
                                     config.settings.count_activation_memory);
  for (const auto& u : users) {
    if (has_feasible_cut(u, cws)) {
      rec.users.push_back(u);
    } else if (config.infeasible == InfeasiblePolicy::kAbort) {
      throw InfeasibleError("user " + std::to_string(u.id) +
                            " has no feasible cut layer");
    } else {
      rec.excluded_ids.push_back(u.id);
    }
  }
  if (rec.users.empty()) return rec;

  const double server_total = config.scenario.server_tflops * kTera;
  const auto wants = [&](Algorithm a) {
    return std::find(config.algorithms.begin(), config.algorithms.end(), a) !=
           config.algorithms.end();
  };
  auto& results = rec.results;

  if (wants(Algorithm::kEsfl)) {
    auto opt = alternate(rec.users, arch, server_total, config.optimizer,
                         config.settings);
    rec.esfl_allocation = opt.allocation;
    rec.esfl_iterations = opt.iterations;
    rec.esfl_converged = opt.converged;
    for (const auto& it : opt.trace) rec.esfl_trace.push_back(it.objective);
    results[static_cast<std::size_t>(Algorithm::kEsfl)] =
        esfl_round(opt.allocation, rec.users, arch, config.settings);
  }
  if (wants(Algorithm::kFl) && all_fit(rec.users, cws.back())) {
    results[static_cast<std::size_t>(Algorithm::kFl)] =
        fl_round(rec.users, arch, config.settings);
  }
  if (wants(Algorithm::kSfl) || wants(Algorithm::kSl)) {
    int cut = config.fixed_cut;
    if (cut == 0) {
      try {
        cut = default_fixed_cut(rec.users, arch, config.settings);
      } catch (const InfeasibleError&) {
        cut = 0;
      }
    }
    if (cut >= 1 && cut <= arch.num_layers() &&
        all_fit(rec.users, cws[static_cast<std::size_t>(cut - 1)])) {
      rec.fixed_cut = cut;
      if (wants(Algorithm::kSfl)) {
        results[static_cast<std::size_t>(Algorithm::kSfl)] =
            sfl_round(rec.users, arch, cut, server_total, config.settings);
      }
      if (wants(Algorithm::kSl)) {
        results[static_cast<std::size_t>(Algorithm::kSl)] =
            sl_round(rec.users, arch, cut, server_total, config.settings);
      }
    }
  }
  return rec;
}

CutLayerDistribution cut_layer_distribution(const std::vector<RoundRecord>& records,
                                            int num_layers) {
  CutLayerDistribution dist;
  dist.num_layers = num_layers;
  const auto L = static_cast<std::size_t>(num_layers);
  std::map<int, std::vector<double>> counts;
  std::vector<double> pooled(L, 0.0);
  double pooled_total = 0.0;
  for (const auto& rec : records) {
    const auto& cuts = rec.esfl_allocation.cuts;
    for (std::size_t i = 0; i < cuts.size() && i < rec.users.size(); ++i) {
      auto& row = counts[rec.users[i].id];
      row.resize(L, 0.0);
      row[static_cast<std::size_t>(cuts[i] - 1)] += 1.0;
      pooled[static_cast<std::size_t>(cuts[i] - 1)] += 1.0;
      pooled_total += 1.0;
    }
  }
  for (auto& [id, row] : counts) {
    const double n = std::accumulate(row.begin(), row.end(), 0.0);
    double h = 0.0;
    for (auto& p : row) {
      p /= n;
      if (p > 0.0) h -= p * std::log(p);
    }
    dist.user_ids.push_back(id);
    dist.rows.push_back(std::move(row));
    dist.entropy.push_back(h);
  }
  if (pooled_total > 0.0) {
    for (auto& p : pooled) p /= pooled_total;
  }
  dist.pooled = std::move(pooled);
  if (!dist.entropy.empty()) {
    const double m = std::accumulate(dist.entropy.begin(), dist.entropy.end(), 0.0) /
                     static_cast<double>(dist.entropy.size());
    double var = 0.0;
    for (double h : dist.entropy) var += (h - m) * (h - m);
    dist.entropy_mean = m;
    dist.entropy_variance = var / static_cast<double>(dist.entropy.size());
  }
  return dist;
}

const AlgorithmSummary* SimulationReport::summary(Algorithm a) const {
  for (const auto& s : summaries) {
    if (s.algorithm == a) return &s;
  }
  return nullptr;
}

SimulationReport run_simulation(const SimulationConfig& config,
                                const ModelArchitecture& arch) {
  validate_scenario(config.scenario);
  validate_architecture(arch);
  SimulationReport report;
  report.config = config;
  report.arch_name = arch.name;
  report.num_layers = arch.num_layers();

  const Rng root(config.scenario.seed);
  Rng pop_rng = root.split(0);
  const Population population = make_population(config.scenario, pop_rng);
  for (int r = 1; r <= config.scenario.rounds; ++r) {
    Rng round_rng = root.split(static_cast<std::uint64_t>(r));
    auto users = sample_round_users(config.scenario, population, round_rng);
    report.records.push_back(run_round(r, std::move(users), config, arch));
  }

  for (Algorithm a : config.algorithms) {
    AlgorithmSummary s;
    s.algorithm = a;
    for (const auto& rec : report.records) {
      const auto& res = rec.result(a);
      if (!res) continue;
      ++s.rounds;
      s.total_time += res->time;
      s.total_comm += res->comm_time;
    }
    if (s.rounds > 0) {
      s.mean_time = s.total_time / s.rounds;
      s.mean_comm = s.total_comm / s.rounds;
    }
    s.target_rounds = config.target_rounds[static_cast<std::size_t>(a)];
    s.projected_time = s.mean_time * s.target_rounds;
    s.projected_comm = s.mean_comm * s.target_rounds;
    report.summaries.push_back(s);
  }

  report.distribution = cut_layer_distribution(report.records, arch.num_layers());

  auto& conv = report.convergence;
  int runs = 0;
  long total_iters = 0;
  for (const auto& rec : report.records) {
    if (rec.esfl_trace.empty()) continue;
    ++runs;
    total_iters += rec.esfl_iterations;
    conv.max_iterations = std::max(conv.max_iterations, rec.esfl_iterations);
    if (!rec.esfl_converged) ++conv.not_converged;
    for (std::size_t i = 1; i < rec.esfl_trace.size(); ++i) {
      if (rec.esfl_trace[i] > rec.esfl_trace[i - 1] * (1.0 + 1e-12)) {
        ++conv.descent_violations;
      }
    }
  }
  if (runs > 0) conv.mean_iterations = static_cast<double>(total_iters) / runs;
  return report;
}

std::vector<ConvergenceRow> convergence_study(const ScenarioSpec& spec,
                                              const ModelArchitecture& arch,
                                              const std::vector<int>& scales,
                                              const OptimizerConfig& optimizer,
                                              const RoundSettings& settings) {
  std::vector<ConvergenceRow> rows;
  const Rng root(spec.seed);
  for (int scale : scales) {
    ScenarioSpec s = spec;
    s.population = scale;
    s.selected_per_round = scale;
    Rng rng = root.split(static_cast<std::uint64_t>(scale));
    const Population pop = make_population(s, rng);
    const auto users = sample_round_users(s, pop, rng);
    const auto opt = alternate(users, arch, s.server_tflops * kTera, optimizer,
                               settings);
    ConvergenceRow row;
    row.scenario = spec.name;
    row.scale = scale;
    row.iterations = opt.iterations;
    row.converged = opt.converged;
    row.objective = opt.allocation.objective;
    for (const auto& it : opt.trace) row.trace.push_back(it.objective);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace esfl
