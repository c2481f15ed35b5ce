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


#include "esfl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "esfl/config.hpp"
#include "esfl/errors.hpp"
#include "esfl/optimizer.hpp"
#include "esfl/report.hpp"
#include "esfl/simulator.hpp"
#include "esfl/split_training.hpp"

namespace esfl {

namespace {

namespace fs = std::filesystem;

using OutputFiles = std::vector<std::pair<std::string, std::string>>;

// Command-line overrides; unset options leave the config value alone.
struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> arch;
  std::optional<double> kappa, bytes_per_element, t_agg, kb;
  std::optional<int> max_iters;
  std::optional<std::string> objective;

  // simulate
  std::optional<std::string> scenario;
  std::optional<std::string> algos;
  std::optional<int> rounds, epochs, population, selected, sfl_cut;
  std::optional<double> server_tflops;
  bool sticky = false;

  // optimize
  bool oracle = false;

  // converge
  std::vector<std::string> scenarios;
  std::vector<int> scales;

  // train-toy
  bool check_equivalence = false;
  std::optional<double> rho0, eta;
  std::optional<int> toy_rounds;
};

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

fs::path output_directory(const Flags& flags, const RunConfig& cfg) {
  if (!flags.out.empty()) return flags.out;
  if (cfg.output_dir) return *cfg.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "esfl_output";
}

// Every file goes to a temporary name first, then all are renamed.
void write_outputs(const fs::path& dir, const OutputFiles& files) {
  fs::create_directories(dir);
  std::vector<std::pair<fs::path, fs::path>> staged;
  for (const auto& [name, text] : files) {
    const fs::path target = dir / name;
    const fs::path tmp = dir / (name + ".tmp");
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    os << text;
    os.close();
    if (!os) {
      for (const auto& s : staged) fs::remove(s.first);
      fs::remove(tmp);
      throw std::runtime_error("cannot write '" + tmp.string() + "'");
    }
    staged.emplace_back(tmp, target);
  }
  for (const auto& [tmp, target] : staged) fs::rename(tmp, target);
}

RunConfig base_config(const Flags& flags, Command command) {
  RunConfig cfg = flags.config.empty() ? parse_run_config(Json::object(), command)
                                       : load_run_config(flags.config, command);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.arch) cfg.arch = *flags.arch;
  if (flags.kappa) cfg.kappa = *flags.kappa;
  if (flags.bytes_per_element) cfg.bytes_per_element = *flags.bytes_per_element;
  if (flags.t_agg) cfg.settings.t_agg = *flags.t_agg;
  if (flags.kb) cfg.bytes_per_kb = *flags.kb;
  if (flags.max_iters) cfg.optimizer.max_iters = *flags.max_iters;
  if (flags.objective) {
    if (*flags.objective == "round") cfg.optimizer.objective = CutObjective::kRound;
    else if (*flags.objective == "epoch") cfg.optimizer.objective = CutObjective::kEpoch;
    else throw ConfigError("--objective must be 'round' or 'epoch'");
  }
  if (cfg.optimizer.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(cfg.bytes_per_kb > 0.0)) throw ConfigError("kb must be positive");
  if (cfg.settings.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(cfg.settings.t_agg >= 0.0)) throw ConfigError("t_agg must be nonnegative");
  return cfg;
}

void cmd_simulate(const Flags& flags, std::ostream& out) {
  RunConfig cfg = base_config(flags, Command::kSimulate);
  if (flags.scenario) cfg.scenario = preset_scenario(*flags.scenario);
  if (flags.algos) cfg.algorithms = parse_algorithms(*flags.algos);
  if (flags.rounds) cfg.scenario.rounds = *flags.rounds;
  if (flags.epochs) cfg.scenario.epochs = *flags.epochs;
  if (flags.population) cfg.scenario.population = *flags.population;
  if (flags.selected) cfg.scenario.selected_per_round = *flags.selected;
  if (flags.server_tflops) cfg.scenario.server_tflops = *flags.server_tflops;
  if (flags.sfl_cut) cfg.sfl_cut = *flags.sfl_cut;
  if (flags.sticky) cfg.scenario.resource_mode = ResourceMode::kSticky;

  const ModelArchitecture arch = resolve_run_architecture(cfg);
  const SimulationConfig sim = simulation_config(cfg);
  validate_scenario(sim.scenario);
  if (sim.fixed_cut < 0 || sim.fixed_cut > arch.num_layers()) {
    throw ConfigError("sfl_cut must lie in [0, " + std::to_string(arch.num_layers()) + "]");
  }
  const SimulationReport report = run_simulation(sim, arch);

  Json doc = to_json(report);
  doc["config"] = to_json(cfg);
  const std::string summary = summary_table(report);
  write_outputs(output_directory(flags, cfg),
                {{"report.json", json_text(doc)},
                 {"summary.txt", summary},
                 {"rounds.csv", rounds_csv(report)},
                 {"cut_distribution.csv", distribution_csv(report.distribution)}});
  out << summary;
}

void cmd_optimize(const Flags& flags, std::ostream& out) {
  RunConfig cfg = base_config(flags, Command::kOptimize);
  if (flags.server_tflops) cfg.server_tflops = *flags.server_tflops;
  if (flags.oracle) cfg.oracle = true;
  if (cfg.users.empty()) throw ConfigError("optimize needs a nonempty 'users' list");
  if (!(cfg.server_tflops > 0.0)) throw ConfigError("server_tflops must be positive");

  const ModelArchitecture arch = resolve_run_architecture(cfg);
  const auto users = user_profiles(cfg);
  const double server_total = cfg.server_tflops * 1e12;
  const OptimizationResult result =
      alternate(users, arch, server_total, cfg.optimizer, cfg.settings);

  Json doc;
  doc["config"] = to_json(cfg);
  doc["arch"] = arch.name;
  doc["result"] = to_json(result);
  std::string text = allocation_table(result, users, arch, cfg.settings);
  if (cfg.oracle) {
    const Allocation best =
        brute_force_joint(users, arch, server_total, cfg.optimizer, cfg.settings);
    const double gap = result.allocation.objective / best.objective - 1.0;
    Json o;
    o["objective"] = best.objective;
    o["cuts"] = best.cuts;
    Json c = Json::array();
    for (double v : best.server_compute) c.push_back(v / 1e12);
    o["server_tflops"] = c;
    o["gap"] = gap;
    doc["oracle"] = o;
    std::ostringstream os;
    os << "\noracle objective " << format_number(best.objective) << " s, gap "
       << format_number(gap) << "\n";
    text += os.str();
  }
  write_outputs(output_directory(flags, cfg),
                {{"allocation.json", json_text(doc)}, {"allocation.txt", text}});
  out << text;
}

void cmd_converge(const Flags& flags, std::ostream& out) {
  RunConfig cfg = base_config(flags, Command::kConverge);
  if (!flags.scenarios.empty()) {
    cfg.scenarios.clear();
    for (const auto& s : flags.scenarios) cfg.scenarios.push_back(preset_scenario(s));
  }
  if (!flags.scales.empty()) cfg.scales = flags.scales;
  if (cfg.scales.empty()) throw ConfigError("no scales given");
  for (int s : cfg.scales) {
    if (s < 1) throw ConfigError("scales must be positive");
  }

  const ModelArchitecture arch = resolve_run_architecture(cfg);
  std::vector<ConvergenceRow> rows;
  for (const auto& spec : convergence_scenarios(cfg)) {
    validate_scenario(spec);
    auto part = convergence_study(spec, arch, cfg.scales, cfg.optimizer, cfg.settings);
    rows.insert(rows.end(), part.begin(), part.end());
  }

  Json doc;
  doc["config"] = to_json(cfg);
  doc["arch"] = arch.name;
  doc["rows"] = to_json(rows);
  const std::string table = convergence_table(rows);
  write_outputs(output_directory(flags, cfg),
                {{"convergence.json", json_text(doc)}, {"convergence.txt", table}});
  out << table;
}

void cmd_train_toy(const Flags& flags, std::ostream& out) {
  RunConfig cfg = base_config(flags, Command::kTrainToy);
  if (flags.check_equivalence) cfg.check_equivalence = true;
  if (flags.rho0) cfg.toy.train.rho0 = *flags.rho0;
  if (flags.eta) cfg.toy.train.eta = *flags.eta;
  if (flags.toy_rounds) cfg.toy.train.rounds = *flags.toy_rounds;

  const ToySpec& t = cfg.toy;
  if (t.users < 1) throw ConfigError("toy users must be positive");
  if (t.train.rounds < 0 || t.epochs < 0) {
    throw ConfigError("toy rounds and epochs must be nonnegative");
  }
  if (t.dims.size() < 2 || t.activations.size() != t.dims.size() - 1) {
    throw ConfigError("toy needs at least two dims and one activation per layer");
  }
  if (!t.cuts.empty() && t.cuts.size() != static_cast<std::size_t>(t.users)) {
    throw ConfigError("toy cuts must list one cut per user");
  }
  const int L = static_cast<int>(t.activations.size());

  const Rng root(cfg.seed);
  Rng net_rng = root.split(0);
  const toy::DenseNet initial = toy::make_dense_net(t.dims, t.activations, t.loss, net_rng);
  Rng center_rng = root.split(1);
  const toy::Matrix centers =
      toy::make_blob_centers(t.dims.back(), t.dims.front(), t.center_range, center_rng);
  std::vector<toy::ToyUser> users;
  for (int u = 0; u < t.users; ++u) {
    Rng data_rng = root.split(2 + static_cast<std::uint64_t>(u));
    toy::ToyUser user;
    user.data = toy::make_blobs(t.samples_per_user, centers, t.spread, data_rng);
    user.cut = t.cuts.empty() ? u % L + 1 : t.cuts[static_cast<std::size_t>(u)];
    user.epochs = t.epochs;
    users.push_back(std::move(user));
  }
  const toy::ToyTrainResult trained = toy::esfl_train(initial, users, t.train);
  const double drift = toy::max_relative_deviation(toy::flatten_parameters(initial),
                                                   toy::flatten_parameters(trained.model));

  Json doc;
  doc["config"] = to_json(cfg);
  doc["loss_trace"] = trained.loss_trace;
  doc["deviation_from_initial"] = drift;
  std::ostringstream text;
  text << "round  loss\n";
  for (std::size_t r = 0; r < trained.loss_trace.size(); ++r) {
    text << r << "  " << format_number(trained.loss_trace[r]) << "\n";
  }
  text << "max relative deviation from initial parameters: " << format_number(drift)
       << "\n";
  if (cfg.check_equivalence) {
    Rng eq_rng = root.split(1u << 20);
    const auto eq = toy::check_split_equivalence(t.equivalence_cases, eq_rng);
    Json e;
    e["cases"] = eq.cases;
    e["max_relative_deviation"] = eq.max_relative_deviation;
    doc["equivalence"] = e;
    text << "split vs monolithic over " << eq.cases
         << " cases: max relative parameter deviation "
         << format_number(eq.max_relative_deviation) << "\n";
  }
  write_outputs(output_directory(flags, cfg),
                {{"toy.json", json_text(doc)}, {"toy.txt", text.str()}});
  out << text.str();
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Root seed");
}

void add_model(CLI::App* cmd, Flags& f) {
  cmd->add_option("--arch", f.arch, "Builtin profile name or profile file");
  cmd->add_option("--kappa", f.kappa, "Backward/forward compute ratio");
  cmd->add_option("--bytes-per-element", f.bytes_per_element, "Bytes per value");
  cmd->add_option("--t-agg", f.t_agg, "Aggregation time per round, seconds");
  cmd->add_option("--kb", f.kb, "Bytes per KB in rate tables");
  cmd->add_option("--max-iters", f.max_iters, "Optimizer iteration cap");
  cmd->add_option("--objective", f.objective, "Cut objective: round or epoch");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Split federated learning latency simulator", "esfl"};
  app.require_subcommand(1);
  Flags flags;

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo rounds of ESFL and baselines");
  add_common(sim, flags);
  add_model(sim, flags);
  sim->add_option("--scenario", flags.scenario, "Preset scenario name");
  sim->add_option("--algos", flags.algos, "Comma list of esfl, fl, sl, sfl");
  sim->add_option("--rounds", flags.rounds, "Number of rounds");
  sim->add_option("--epochs", flags.epochs, "Local epochs per round");
  sim->add_option("--population", flags.population, "Total users");
  sim->add_option("--selected", flags.selected, "Users selected per round");
  sim->add_option("--server-tflops", flags.server_tflops, "Server compute, TFLOPs");
  sim->add_option("--sfl-cut", flags.sfl_cut, "Cut layer for SFL and SL (0 = smallest feasible)");
  sim->add_flag("--sticky", flags.sticky, "Draw user resources once per run");

  auto* opt = app.add_subcommand("optimize", "Cut layers and server compute for a user list");
  add_common(opt, flags);
  add_model(opt, flags);
  opt->add_option("--server-tflops", flags.server_tflops, "Server compute, TFLOPs");
  opt->add_flag("--oracle", flags.oracle, "Also solve by enumeration and print the gap");

  auto* conv = app.add_subcommand("converge", "Optimizer iterations versus user count");
  add_common(conv, flags);
  add_model(conv, flags);
  conv->add_option("--scenario", flags.scenarios, "Preset scenario (repeatable)")
      ->delimiter(',');
  conv->add_option("--scales", flags.scales, "User counts")->delimiter(',');

  auto* toy = app.add_subcommand("train-toy", "Split training of a small dense network");
  add_common(toy, flags);
  toy->add_flag("--check-equivalence", flags.check_equivalence,
                "Compare split and monolithic updates");
  toy->add_option("--rho0", flags.rho0, "Initial learning rate");
  toy->add_option("--eta", flags.eta, "Aggregation step");
  toy->add_option("--rounds", flags.toy_rounds, "Training rounds");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (sim->parsed()) cmd_simulate(flags, out);
    else if (opt->parsed()) cmd_optimize(flags, out);
    else if (conv->parsed()) cmd_converge(flags, out);
    else cmd_train_toy(flags, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace esfl
