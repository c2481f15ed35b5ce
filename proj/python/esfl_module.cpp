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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "esfl/comm.hpp"
#include "esfl/config.hpp"
#include "esfl/errors.hpp"
#include "esfl/optimizer.hpp"
#include "esfl/report.hpp"
#include "esfl/simulator.hpp"
#include "esfl/split_training.hpp"
#include "esfl/workload.hpp"

namespace py = pybind11;

namespace {

using esfl::Json;

esfl::RunConfig run_config(const std::string& text, esfl::Command command) {
  return esfl::parse_run_config(Json::parse(text), command);
}

std::string architecture_json(const std::string& ref) {
  const auto arch = esfl::resolve_architecture(ref);
  Json j;
  j["name"] = arch.name;
  j["bytes_per_element"] = arch.bytes_per_element;
  j["bwd_multiplier"] = arch.bwd_multiplier;
  Json layers = Json::array();
  for (const auto& l : arch.layers) {
    Json o;
    o["index"] = l.index;
    o["name"] = l.name;
    o["params"] = l.param_count;
    o["fwd_flops"] = l.fwd_flops;
    o["activations"] = l.activation_count;
    layers.push_back(o);
  }
  j["layers"] = layers;
  return j.dump();
}

std::string simulate_json(const std::string& config) {
  const auto cfg = run_config(config, esfl::Command::kSimulate);
  const auto arch = esfl::resolve_run_architecture(cfg);
  const auto report = esfl::run_simulation(esfl::simulation_config(cfg), arch);
  Json doc = esfl::to_json(report);
  doc["config"] = esfl::to_json(cfg);
  return doc.dump();
}

std::string optimize_json(const std::string& config) {
  const auto cfg = run_config(config, esfl::Command::kOptimize);
  const auto arch = esfl::resolve_run_architecture(cfg);
  const auto users = esfl::user_profiles(cfg);
  const double total = cfg.server_tflops * 1e12;
  const auto result = esfl::alternate(users, arch, total, cfg.optimizer, cfg.settings);
  Json doc;
  doc["result"] = esfl::to_json(result);
  if (cfg.oracle) {
    const auto best = esfl::brute_force_joint(users, arch, total, cfg.optimizer, cfg.settings);
    doc["oracle"] = {{"objective", best.objective}, {"cuts", best.cuts}};
  }
  return doc.dump();
}

std::string converge_json(const std::string& config) {
  const auto cfg = run_config(config, esfl::Command::kConverge);
  const auto arch = esfl::resolve_run_architecture(cfg);
  std::vector<esfl::ConvergenceRow> rows;
  for (const auto& spec : esfl::convergence_scenarios(cfg)) {
    auto part = esfl::convergence_study(spec, arch, cfg.scales, cfg.optimizer, cfg.settings);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return esfl::to_json(rows).dump();
}

py::tuple allocate(const std::vector<double>& a, const std::vector<double>& b,
                   double server_total) {
  const auto split = esfl::allocate_server_compute(a, b, server_total);
  return py::make_tuple(split.server_compute, split.level, split.objective);
}

double split_equivalence(int cases, std::uint64_t seed) {
  esfl::Rng rng(seed);
  return esfl::toy::check_split_equivalence(cases, rng).max_relative_deviation;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Split federated learning latency model and optimizer";

  py::register_exception<esfl::Error>(m, "Error", PyExc_RuntimeError);

  m.def("builtin_architectures", &esfl::builtin_architecture_names);
  m.def("architecture_json", &architecture_json, py::arg("ref"));
  m.def("simulate_json", &simulate_json, py::arg("config"));
  m.def("optimize_json", &optimize_json, py::arg("config"));
  m.def("converge_json", &converge_json, py::arg("config"));
  m.def("allocate_server_compute", &allocate, py::arg("a"), py::arg("b"),
        py::arg("server_total"));
  m.def("shannon_rate", &esfl::shannon_rate, py::arg("bandwidth_hz"), py::arg("power_w"),
        py::arg("gain"), py::arg("noise_density"));
  m.def("split_equivalence", &split_equivalence, py::arg("cases"), py::arg("seed") = 0);
}
