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


#include "esfl/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "esfl/errors.hpp"

namespace esfl {

namespace {

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view context) {
  if (!obj.is_object()) throw ConfigError(std::string(context) + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(context));
    }
  }
}

double get_number(const Json& v, std::string_view key) {
  if (!v.is_number()) throw ConfigError("'" + std::string(key) + "' must be a number");
  return v.get<double>();
}

int get_int(const Json& v, std::string_view key) {
  if (!v.is_number_integer()) {
    throw ConfigError("'" + std::string(key) + "' must be an integer");
  }
  return v.get<int>();
}

bool get_bool(const Json& v, std::string_view key) {
  if (!v.is_boolean()) throw ConfigError("'" + std::string(key) + "' must be a boolean");
  return v.get<bool>();
}

std::string get_string(const Json& v, std::string_view key) {
  if (!v.is_string()) throw ConfigError("'" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(const Json& v, std::string_view key) {
  if (!v.is_array()) throw ConfigError("'" + std::string(key) + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(get_number(x, key));
  return out;
}

// null stands for no limit.
double get_limit(const Json& v, std::string_view key) {
  return v.is_null() ? kUnlimited : get_number(v, key);
}

toy::Activation parse_activation(const std::string& s) {
  if (s == "identity") return toy::Activation::kIdentity;
  if (s == "relu") return toy::Activation::kRelu;
  if (s == "tanh") return toy::Activation::kTanh;
  if (s == "sigmoid") return toy::Activation::kSigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

std::string_view activation_name(toy::Activation a) {
  switch (a) {
    case toy::Activation::kIdentity: return "identity";
    case toy::Activation::kRelu: return "relu";
    case toy::Activation::kTanh: return "tanh";
    case toy::Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

ChannelParams parse_channel(const Json& j) {
  check_keys(j, {"bandwidth_hz", "uplink_power_w", "downlink_power_w", "uplink_gain",
                 "downlink_gain", "noise_density"},
             "channel");
  ChannelParams c;
  for (const auto& [key, v] : j.items()) {
    const double x = get_number(v, key);
    if (key == "bandwidth_hz") c.bandwidth_hz = x;
    else if (key == "uplink_power_w") c.uplink_power_w = x;
    else if (key == "downlink_power_w") c.downlink_power_w = x;
    else if (key == "uplink_gain") c.uplink_gain = x;
    else if (key == "downlink_gain") c.downlink_gain = x;
    else c.noise_density = x;
  }
  return c;
}

UserSpec parse_user(const Json& j, int index) {
  check_keys(j, {"id", "samples", "tflops", "up_kbps", "down_kbps", "channel", "epochs",
                 "storage_bytes", "memory_bytes"},
             "user");
  UserSpec u;
  u.id = index;
  for (const auto& [key, v] : j.items()) {
    if (key == "id") u.id = get_int(v, key);
    else if (key == "samples") u.samples = get_number(v, key);
    else if (key == "tflops") u.tflops = get_number(v, key);
    else if (key == "up_kbps") u.up_kbps = get_number(v, key);
    else if (key == "down_kbps") u.down_kbps = get_number(v, key);
    else if (key == "channel") u.channel = parse_channel(v);
    else if (key == "epochs") u.epochs = get_int(v, key);
    else if (key == "storage_bytes") u.storage_bytes = get_limit(v, key);
    else u.memory_bytes = get_limit(v, key);
  }
  if (u.up_kbps.has_value() == u.channel.has_value()) {
    throw ConfigError("user " + std::to_string(u.id) +
                      ": give exactly one of 'up_kbps' and 'channel'");
  }
  if (u.down_kbps && !u.up_kbps) {
    throw ConfigError("user " + std::to_string(u.id) + ": 'down_kbps' needs 'up_kbps'");
  }
  return u;
}

void parse_units(const Json& j, RunConfig& cfg) {
  check_keys(j, {"kappa", "bytes_per_element", "t_agg", "kb", "batch_size",
                 "count_activation_memory"},
             "units");
  for (const auto& [key, v] : j.items()) {
    if (key == "kappa") cfg.kappa = get_number(v, key);
    else if (key == "bytes_per_element") cfg.bytes_per_element = get_number(v, key);
    else if (key == "t_agg") cfg.settings.t_agg = get_number(v, key);
    else if (key == "kb") cfg.bytes_per_kb = get_number(v, key);
    else if (key == "batch_size") cfg.settings.batch_size = get_int(v, key);
    else cfg.settings.count_activation_memory = get_bool(v, key);
  }
}

void parse_optimizer(const Json& j, OptimizerConfig& opt) {
  check_keys(j, {"max_iters", "stall_tolerance", "bisection_tolerance",
                 "bisection_max_steps", "objective"},
             "optimizer");
  for (const auto& [key, v] : j.items()) {
    if (key == "max_iters") opt.max_iters = get_int(v, key);
    else if (key == "stall_tolerance") opt.stall_tolerance = get_number(v, key);
    else if (key == "bisection_tolerance") opt.bisection_tolerance = get_number(v, key);
    else if (key == "bisection_max_steps") opt.bisection_max_steps = get_int(v, key);
    else {
      const auto s = get_string(v, key);
      if (s == "round") opt.objective = CutObjective::kRound;
      else if (s == "epoch") opt.objective = CutObjective::kEpoch;
      else throw ConfigError("optimizer objective must be 'round' or 'epoch'");
    }
  }
}

void parse_toy(const Json& j, ToySpec& toy) {
  check_keys(j, {"dims", "activations", "loss", "users", "samples_per_user", "cuts",
                 "epochs", "rounds", "eta", "rho0", "rho_decay_rounds", "batch_size",
                 "spread", "center_range", "equivalence_cases"},
             "toy");
  for (const auto& [key, v] : j.items()) {
    if (key == "dims") {
      toy.dims.clear();
      for (double d : get_numbers(v, key)) {
        if (!(d >= 1.0) || d != std::floor(d)) throw ConfigError("dims must be positive integers");
        toy.dims.push_back(static_cast<std::size_t>(d));
      }
    } else if (key == "activations") {
      if (!v.is_array()) throw ConfigError("'activations' must be an array");
      toy.activations.clear();
      for (const auto& a : v) toy.activations.push_back(parse_activation(get_string(a, key)));
    } else if (key == "loss") {
      const auto s = get_string(v, key);
      if (s == "cross_entropy") toy.loss = toy::Loss::kSoftmaxCrossEntropy;
      else if (s == "squared") toy.loss = toy::Loss::kSquaredError;
      else throw ConfigError("loss must be 'cross_entropy' or 'squared'");
    } else if (key == "users") {
      toy.users = get_int(v, key);
    } else if (key == "samples_per_user") {
      const int n = get_int(v, key);
      if (n < 1) throw ConfigError("samples_per_user must be positive");
      toy.samples_per_user = static_cast<std::size_t>(n);
    } else if (key == "cuts") {
      if (!v.is_array()) throw ConfigError("'cuts' must be an array");
      toy.cuts.clear();
      for (const auto& c : v) toy.cuts.push_back(get_int(c, key));
    } else if (key == "epochs") {
      toy.epochs = get_int(v, key);
    } else if (key == "rounds") {
      toy.train.rounds = get_int(v, key);
    } else if (key == "eta") {
      toy.train.eta = get_number(v, key);
    } else if (key == "rho0") {
      toy.train.rho0 = get_number(v, key);
    } else if (key == "rho_decay_rounds") {
      toy.train.rho_decay_rounds = get_number(v, key);
    } else if (key == "batch_size") {
      const int n = get_int(v, key);
      if (n < 1) throw ConfigError("toy batch_size must be positive");
      toy.train.batch_size = static_cast<std::size_t>(n);
    } else if (key == "spread") {
      toy.spread = get_number(v, key);
    } else if (key == "center_range") {
      toy.center_range = get_number(v, key);
    } else {
      toy.equivalence_cases = get_int(v, key);
    }
  }
}

ScenarioSpec scenario_from(const Json& v) {
  if (v.is_string()) return preset_scenario(v.get<std::string>());
  return parse_scenario(v);
}

}  // namespace

std::string_view command_name(Command c) {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kOptimize: return "optimize";
    case Command::kConverge: return "converge";
    case Command::kTrainToy: return "train-toy";
  }
  return "?";
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::kSimulate, Command::kOptimize, Command::kConverge,
                    Command::kTrainToy}) {
    if (command_name(c) == name) return c;
  }
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

ScenarioSpec parse_scenario(const Json& value) {
  if (value.is_string()) return preset_scenario(value.get<std::string>());
  check_keys(value, {"preset", "name", "comm_kbps", "downlink_kbps", "comp_tflops",
                     "data_samples", "population", "selected_per_round", "rounds",
                     "epochs", "server_tflops", "resource_mode", "storage_bytes",
                     "memory_bytes"},
             "scenario");
  ScenarioSpec s;
  s.name = "custom";
  if (value.contains("preset")) s = preset_scenario(get_string(value["preset"], "preset"));
  for (const auto& [key, v] : value.items()) {
    if (key == "preset") continue;
    if (key == "name") s.name = get_string(v, key);
    else if (key == "comm_kbps") s.comm_options = get_numbers(v, key);
    else if (key == "downlink_kbps") s.downlink_options = get_numbers(v, key);
    else if (key == "comp_tflops") s.comp_options = get_numbers(v, key);
    else if (key == "data_samples") s.data_options = get_numbers(v, key);
    else if (key == "population") s.population = get_int(v, key);
    else if (key == "selected_per_round") s.selected_per_round = get_int(v, key);
    else if (key == "rounds") s.rounds = get_int(v, key);
    else if (key == "epochs") s.epochs = get_int(v, key);
    else if (key == "server_tflops") s.server_tflops = get_number(v, key);
    else if (key == "resource_mode") {
      const auto m = get_string(v, key);
      if (m == "per_round") s.resource_mode = ResourceMode::kPerRound;
      else if (m == "sticky") s.resource_mode = ResourceMode::kSticky;
      else throw ConfigError("resource_mode must be 'per_round' or 'sticky'");
    } else if (key == "storage_bytes") s.storage_bytes = get_limit(v, key);
    else s.memory_bytes = get_limit(v, key);
  }
  return s;
}

RunConfig parse_run_config(const Json& doc, Command command) {
  RunConfig cfg;
  cfg.command = command;
  switch (command) {
    case Command::kSimulate:
      check_keys(doc, {"command", "seed", "output_dir", "arch", "units", "optimizer",
                       "scenario", "algorithms", "sfl_cut", "infeasible",
                       "target_rounds"},
                 "simulate config");
      break;
    case Command::kOptimize:
      check_keys(doc, {"command", "seed", "output_dir", "arch", "units", "optimizer",
                       "server_tflops", "users", "oracle"},
                 "optimize config");
      break;
    case Command::kConverge:
      check_keys(doc, {"command", "seed", "output_dir", "arch", "units", "optimizer",
                       "scenarios", "scales"},
                 "converge config");
      break;
    case Command::kTrainToy:
      check_keys(doc, {"command", "seed", "output_dir", "toy", "check_equivalence"},
                 "train-toy config");
      break;
  }

  for (const auto& [key, v] : doc.items()) {
    if (key == "command") {
      if (parse_command(get_string(v, key)) != command) {
        throw ConfigError("config is for '" + v.get<std::string>() + "', not '" +
                          std::string(command_name(command)) + "'");
      }
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError("'seed' must be a nonnegative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "output_dir") {
      cfg.output_dir = get_string(v, key);
    } else if (key == "arch") {
      cfg.arch = get_string(v, key);
    } else if (key == "units") {
      parse_units(v, cfg);
    } else if (key == "optimizer") {
      parse_optimizer(v, cfg.optimizer);
    } else if (key == "scenario") {
      cfg.scenario = scenario_from(v);
    } else if (key == "algorithms") {
      if (v.is_string()) {
        cfg.algorithms = parse_algorithms(v.get<std::string>());
      } else if (v.is_array()) {
        std::string joined;
        for (const auto& a : v) joined += get_string(a, key) + ",";
        cfg.algorithms = parse_algorithms(joined);
      } else {
        throw ConfigError("'algorithms' must be a string or an array");
      }
    } else if (key == "sfl_cut") {
      cfg.sfl_cut = get_int(v, key);
    } else if (key == "infeasible") {
      const auto s = get_string(v, key);
      if (s == "exclude") cfg.infeasible = InfeasiblePolicy::kExclude;
      else if (s == "abort") cfg.infeasible = InfeasiblePolicy::kAbort;
      else throw ConfigError("'infeasible' must be 'exclude' or 'abort'");
    } else if (key == "target_rounds") {
      check_keys(v, {"FL", "SL", "SFL", "ESFL", "fl", "sl", "sfl", "esfl"},
                 "target_rounds");
      for (const auto& [name, n] : v.items()) {
        cfg.target_rounds[static_cast<std::size_t>(parse_algorithm(name))] =
            get_int(n, name);
      }
    } else if (key == "server_tflops") {
      cfg.server_tflops = get_number(v, key);
    } else if (key == "users") {
      if (!v.is_array()) throw ConfigError("'users' must be an array");
      int index = 0;
      for (const auto& u : v) cfg.users.push_back(parse_user(u, index++));
    } else if (key == "oracle") {
      cfg.oracle = get_bool(v, key);
    } else if (key == "scenarios") {
      if (!v.is_array()) throw ConfigError("'scenarios' must be an array");
      for (const auto& s : v) cfg.scenarios.push_back(scenario_from(s));
    } else if (key == "scales") {
      cfg.scales.clear();
      if (!v.is_array()) throw ConfigError("'scales' must be an array");
      for (const auto& s : v) cfg.scales.push_back(get_int(s, key));
    } else if (key == "toy") {
      parse_toy(v, cfg.toy);
    } else if (key == "check_equivalence") {
      cfg.check_equivalence = get_bool(v, key);
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, Command command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return parse_run_config(doc, command);
}

Json to_json(const RunConfig& config) {
  Json j;
  j["command"] = command_name(config.command);
  j["seed"] = config.seed;
  switch (config.command) {
    case Command::kSimulate: {
      j["arch"] = config.arch;
      j["simulation"] = to_json(simulation_config(config));
      break;
    }
    case Command::kOptimize: {
      j["arch"] = config.arch;
      j["server_tflops"] = config.server_tflops;
      Json users = Json::array();
      for (const auto& u : user_profiles(config)) users.push_back(to_json(u));
      j["users"] = users;
      j["oracle"] = config.oracle;
      break;
    }
    case Command::kConverge: {
      j["arch"] = config.arch;
      Json sc = Json::array();
      for (const auto& s : convergence_scenarios(config)) sc.push_back(to_json(s));
      j["scenarios"] = sc;
      j["scales"] = config.scales;
      break;
    }
    case Command::kTrainToy: {
      const auto& t = config.toy;
      Json toy;
      toy["dims"] = t.dims;
      Json acts = Json::array();
      for (auto a : t.activations) acts.push_back(activation_name(a));
      toy["activations"] = acts;
      toy["loss"] = t.loss == toy::Loss::kSquaredError ? "squared" : "cross_entropy";
      toy["users"] = t.users;
      toy["samples_per_user"] = t.samples_per_user;
      toy["cuts"] = t.cuts;
      toy["epochs"] = t.epochs;
      toy["rounds"] = t.train.rounds;
      toy["eta"] = t.train.eta;
      toy["rho0"] = t.train.rho0;
      toy["rho_decay_rounds"] = t.train.rho_decay_rounds;
      toy["batch_size"] = t.train.batch_size;
      toy["spread"] = t.spread;
      toy["center_range"] = t.center_range;
      toy["equivalence_cases"] = t.equivalence_cases;
      j["toy"] = toy;
      j["check_equivalence"] = config.check_equivalence;
      return j;
    }
  }
  Json units;
  if (config.kappa) units["kappa"] = *config.kappa;
  if (config.bytes_per_element) units["bytes_per_element"] = *config.bytes_per_element;
  units["kb"] = config.bytes_per_kb;
  units["settings"] = to_json(config.settings);
  j["units"] = units;
  j["optimizer"] = to_json(config.optimizer);
  return j;
}

ModelArchitecture resolve_run_architecture(const RunConfig& config) {
  ModelArchitecture arch = resolve_architecture(config.arch);
  if (config.kappa) {
    if (!(*config.kappa >= 0.0)) throw ConfigError("kappa must be nonnegative");
    arch.bwd_multiplier = *config.kappa;
  }
  if (config.bytes_per_element) {
    if (!(*config.bytes_per_element > 0.0)) {
      throw ConfigError("bytes_per_element must be positive");
    }
    arch.bytes_per_element = *config.bytes_per_element;
  }
  return arch;
}

SimulationConfig simulation_config(const RunConfig& config) {
  SimulationConfig sim;
  sim.scenario = config.scenario;
  sim.scenario.seed = config.seed;
  sim.scenario.bytes_per_kb = config.bytes_per_kb;
  sim.algorithms = config.algorithms;
  sim.settings = config.settings;
  sim.optimizer = config.optimizer;
  sim.fixed_cut = config.sfl_cut;
  sim.infeasible = config.infeasible;
  sim.target_rounds = config.target_rounds;
  return sim;
}

std::vector<UserProfile> user_profiles(const RunConfig& config) {
  std::vector<UserProfile> out;
  std::set<int> ids;
  for (const auto& u : config.users) {
    if (!ids.insert(u.id).second) {
      throw ConfigError("duplicate user id " + std::to_string(u.id));
    }
    if (!(u.samples > 0.0) || !(u.tflops > 0.0) || u.epochs < 0) {
      throw ConfigError("user " + std::to_string(u.id) +
                        ": samples and tflops must be positive, epochs nonnegative");
    }
    UserProfile p;
    p.id = u.id;
    p.samples = u.samples;
    p.compute = u.tflops * 1e12;
    if (u.up_kbps) {
      p.rates = link_rates(DirectRates{*u.up_kbps, u.down_kbps}, config.bytes_per_kb);
    } else {
      p.rates = link_rates(*u.channel);
    }
    p.epochs = u.epochs;
    p.storage_bytes = u.storage_bytes;
    p.memory_bytes = u.memory_bytes;
    out.push_back(p);
  }
  return out;
}

std::vector<ScenarioSpec> convergence_scenarios(const RunConfig& config) {
  std::vector<ScenarioSpec> out = config.scenarios;
  if (out.empty()) {
    for (const char* name : {"BP", "PR", "RP", "BR"}) out.push_back(preset_scenario(name));
  }
  for (auto& s : out) {
    s.seed = config.seed;
    s.bytes_per_kb = config.bytes_per_kb;
  }
  return out;
}

}  // namespace esfl
