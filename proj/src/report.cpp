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


#include "esfl/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace esfl {

namespace {

constexpr double kTera = 1e12;

// Infinite limits are written as null.
Json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// Right-aligned columns, first column left-aligned.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += c == 0 ? pad_right(row[c], width[c]) : pad_left(row[c], width[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string_view mode_name(ResourceMode m) {
  return m == ResourceMode::kSticky ? "sticky" : "per_round";
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json to_json(const ScenarioSpec& spec) {
  Json j;
  j["name"] = spec.name;
  j["comm_kbps"] = spec.comm_options;
  j["downlink_kbps"] = spec.downlink_options;
  j["comp_tflops"] = spec.comp_options;
  j["data_samples"] = spec.data_options;
  j["population"] = spec.population;
  j["selected_per_round"] = spec.selected_per_round;
  j["rounds"] = spec.rounds;
  j["epochs"] = spec.epochs;
  j["server_tflops"] = spec.server_tflops;
  j["seed"] = spec.seed;
  j["resource_mode"] = mode_name(spec.resource_mode);
  j["bytes_per_kb"] = spec.bytes_per_kb;
  j["storage_bytes"] = finite_or_null(spec.storage_bytes);
  j["memory_bytes"] = finite_or_null(spec.memory_bytes);
  return j;
}

Json to_json(const OptimizerConfig& cfg) {
  Json j;
  j["max_iters"] = cfg.max_iters;
  j["stall_tolerance"] = cfg.stall_tolerance;
  j["bisection_tolerance"] = cfg.bisection_tolerance;
  j["bisection_max_steps"] = cfg.bisection_max_steps;
  j["objective"] = cfg.objective == CutObjective::kEpoch ? "epoch" : "round";
  return j;
}

Json to_json(const RoundSettings& settings) {
  Json j;
  j["batch_size"] = settings.batch_size;
  j["t_agg"] = settings.t_agg;
  j["count_activation_memory"] = settings.count_activation_memory;
  return j;
}

Json to_json(const SimulationConfig& config) {
  Json j;
  j["scenario"] = to_json(config.scenario);
  Json algos = Json::array();
  for (Algorithm a : config.algorithms) algos.push_back(algorithm_name(a));
  j["algorithms"] = algos;
  j["settings"] = to_json(config.settings);
  j["optimizer"] = to_json(config.optimizer);
  j["sfl_cut"] = config.fixed_cut;
  j["infeasible"] = config.infeasible == InfeasiblePolicy::kAbort ? "abort" : "exclude";
  Json targets;
  for (Algorithm a : kAllAlgorithms) {
    targets[std::string(algorithm_name(a))] =
        config.target_rounds[static_cast<std::size_t>(a)];
  }
  j["target_rounds"] = targets;
  return j;
}

Json to_json(const UserProfile& user) {
  Json j;
  j["id"] = user.id;
  j["samples"] = user.samples;
  j["tflops"] = user.compute / kTera;
  j["up_bytes_per_s"] = user.rates.up;
  j["down_bytes_per_s"] = user.rates.down;
  j["epochs"] = user.epochs;
  j["storage_bytes"] = finite_or_null(user.storage_bytes);
  j["memory_bytes"] = finite_or_null(user.memory_bytes);
  return j;
}

Json to_json(const OptimizationResult& result) {
  Json j;
  j["objective"] = result.allocation.objective;
  j["cuts"] = result.allocation.cuts;
  Json tflops = Json::array();
  for (double c : result.allocation.server_compute) tflops.push_back(c / kTera);
  j["server_tflops"] = tflops;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  Json trace = Json::array();
  for (const auto& it : result.trace) {
    Json t;
    t["iteration"] = it.iteration;
    t["cut_step_objective"] = it.cut_step_objective;
    t["objective"] = it.objective;
    t["max_change"] = it.max_change;
    t["cuts"] = it.cuts;
    Json c = Json::array();
    for (double v : it.server_compute) c.push_back(v / kTera);
    t["server_tflops"] = c;
    trace.push_back(t);
  }
  j["trace"] = trace;
  return j;
}

Json to_json(const CutLayerDistribution& dist) {
  Json j;
  j["num_layers"] = dist.num_layers;
  Json users = Json::array();
  for (std::size_t i = 0; i < dist.rows.size(); ++i) {
    Json u;
    u["id"] = dist.user_ids[i];
    u["p"] = dist.rows[i];
    u["entropy"] = dist.entropy[i];
    users.push_back(u);
  }
  j["users"] = users;
  j["pooled"] = dist.pooled;
  j["entropy_mean"] = dist.entropy_mean;
  j["entropy_variance"] = dist.entropy_variance;
  return j;
}

Json to_json(const SimulationReport& report) {
  Json j;
  j["config"] = to_json(report.config);
  j["arch"] = report.arch_name;
  j["num_layers"] = report.num_layers;
  Json summaries = Json::array();
  for (const auto& s : report.summaries) {
    Json o;
    o["algorithm"] = algorithm_name(s.algorithm);
    o["rounds"] = s.rounds;
    o["total_time"] = s.total_time;
    o["mean_time"] = s.mean_time;
    o["total_comm"] = s.total_comm;
    o["mean_comm"] = s.mean_comm;
    o["target_rounds"] = s.target_rounds;
    o["projected_time"] = s.projected_time;
    o["projected_comm"] = s.projected_comm;
    summaries.push_back(o);
  }
  j["summaries"] = summaries;
  Json records = Json::array();
  for (const auto& rec : report.records) {
    Json r;
    r["round"] = rec.round;
    Json ids = Json::array();
    for (const auto& u : rec.users) ids.push_back(u.id);
    r["users"] = ids;
    r["excluded"] = rec.excluded_ids;
    r["fixed_cut"] = rec.fixed_cut;
    Json times;
    for (Algorithm a : report.config.algorithms) {
      const auto& res = rec.result(a);
      if (!res) {
        times[std::string(algorithm_name(a))] = nullptr;
        continue;
      }
      Json t;
      t["time"] = res->time;
      t["comm_time"] = res->comm_time;
      t["straggler"] = res->straggler;
      times[std::string(algorithm_name(a))] = t;
    }
    r["results"] = times;
    if (!rec.esfl_allocation.cuts.empty()) {
      Json alloc;
      alloc["cuts"] = rec.esfl_allocation.cuts;
      Json c = Json::array();
      for (double v : rec.esfl_allocation.server_compute) c.push_back(v / kTera);
      alloc["server_tflops"] = c;
      alloc["objective"] = rec.esfl_allocation.objective;
      alloc["iterations"] = rec.esfl_iterations;
      alloc["converged"] = rec.esfl_converged;
      alloc["trace"] = rec.esfl_trace;
      r["esfl"] = alloc;
    }
    records.push_back(r);
  }
  j["records"] = records;
  j["distribution"] = to_json(report.distribution);
  Json conv;
  conv["mean_iterations"] = report.convergence.mean_iterations;
  conv["max_iterations"] = report.convergence.max_iterations;
  conv["not_converged"] = report.convergence.not_converged;
  conv["descent_violations"] = report.convergence.descent_violations;
  j["convergence"] = conv;
  return j;
}

Json to_json(const std::vector<ConvergenceRow>& rows) {
  Json out = Json::array();
  for (const auto& row : rows) {
    Json j;
    j["scenario"] = row.scenario;
    j["scale"] = row.scale;
    j["iterations"] = row.iterations;
    j["converged"] = row.converged;
    j["objective"] = row.objective;
    j["trace"] = row.trace;
    out.push_back(j);
  }
  return out;
}

std::string summary_table(const SimulationReport& report) {
  const auto& sc = report.config.scenario;
  std::ostringstream os;
  os << "scenario " << sc.name << "  arch " << report.arch_name << "  rounds "
     << sc.rounds << "  seed " << sc.seed << "\n\n";
  std::vector<std::vector<std::string>> rows{
      {"algorithm", "rounds", "round_time_s", "comm_time_s", "target_rounds",
       "total_time_s", "total_comm_s"}};
  for (const auto& s : report.summaries) {
    rows.push_back({std::string(algorithm_name(s.algorithm)), std::to_string(s.rounds),
                    fixed(s.mean_time, 3), fixed(s.mean_comm, 3),
                    std::to_string(s.target_rounds), fixed(s.projected_time, 1),
                    fixed(s.projected_comm, 1)});
  }
  os << render_table(rows);
  const auto& conv = report.convergence;
  if (report.summary(Algorithm::kEsfl)) {
    os << "\noptimizer iterations: mean " << fixed(conv.mean_iterations, 2) << ", max "
       << conv.max_iterations << ", not converged " << conv.not_converged
       << ", descent violations " << conv.descent_violations << "\n";
    os << "cut-layer entropy across users: mean "
       << fixed(report.distribution.entropy_mean, 4) << ", variance "
       << fixed(report.distribution.entropy_variance, 6) << "\n";
  }
  return os.str();
}

std::string rounds_csv(const SimulationReport& report) {
  std::ostringstream os;
  os << "round,algorithm,time_s,comm_time_s,straggler,users,excluded\n";
  for (const auto& rec : report.records) {
    for (Algorithm a : report.config.algorithms) {
      const auto& res = rec.result(a);
      os << rec.round << ',' << algorithm_name(a) << ',';
      if (res) {
        os << format_number(res->time) << ',' << format_number(res->comm_time) << ','
           << res->straggler;
      } else {
        os << ",,";
      }
      os << ',' << rec.users.size() << ',' << rec.excluded_ids.size() << "\n";
    }
  }
  return os.str();
}

std::string distribution_csv(const CutLayerDistribution& dist) {
  std::ostringstream os;
  os << "user";
  for (int l = 1; l <= dist.num_layers; ++l) os << ",l" << l;
  os << ",entropy\n";
  for (std::size_t i = 0; i < dist.rows.size(); ++i) {
    os << dist.user_ids[i];
    for (double p : dist.rows[i]) os << ',' << format_number(p);
    os << ',' << format_number(dist.entropy[i]) << "\n";
  }
  os << "pooled";
  double h = 0.0;
  for (double p : dist.pooled) {
    os << ',' << format_number(p);
    if (p > 0.0) h -= p * std::log(p);
  }
  os << ',' << format_number(h) << "\n";
  return os.str();
}

std::string convergence_table(const std::vector<ConvergenceRow>& rows) {
  std::vector<std::vector<std::string>> table{
      {"scenario", "users", "iterations", "converged", "objective_s"}};
  for (const auto& r : rows) {
    table.push_back({r.scenario, std::to_string(r.scale), std::to_string(r.iterations),
                     r.converged ? "yes" : "no", fixed(r.objective, 3)});
  }
  return render_table(table);
}

std::string allocation_table(const OptimizationResult& result,
                             std::span<const UserProfile> users,
                             const ModelArchitecture& arch,
                             const RoundSettings& settings) {
  const auto& alloc = result.allocation;
  const auto breakdowns = evaluate_allocation(alloc, users, arch, settings);
  std::vector<std::vector<std::string>> rows{
      {"user", "cut", "layer", "server_tflops", "round_time_s", "comm_time_s"}};
  for (std::size_t i = 0; i < users.size(); ++i) {
    const int cut = alloc.cuts[i];
    rows.push_back({std::to_string(users[i].id), std::to_string(cut),
                    arch.layers[static_cast<std::size_t>(cut - 1)].name,
                    fixed(alloc.server_compute[i] / kTera, 4),
                    fixed(breakdowns[i].total, 3), fixed(breakdowns[i].comm_time(), 3)});
  }
  std::ostringstream os;
  os << render_table(rows);
  os << "\nobjective " << fixed(alloc.objective, 6) << " s, iterations "
     << result.iterations << (result.converged ? ", converged" : ", not converged")
     << "\n\n";
  std::vector<std::vector<std::string>> trace{
      {"iteration", "after_cut_pass_s", "after_resource_pass_s", "max_change"}};
  for (const auto& it : result.trace) {
    trace.push_back({std::to_string(it.iteration), fixed(it.cut_step_objective, 6),
                     fixed(it.objective, 6), format_number(it.max_change)});
  }
  os << render_table(trace);
  return os.str();
}

}  // namespace esfl
