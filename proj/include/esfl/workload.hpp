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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace esfl {

// One row of an architecture profile. Values are kept in the profile's raw
// units: param_count and activation_count in 1e6 elements, fwd_flops in
// 1e6 FLOPs per sample.
struct LayerProfile {
  int index = 0;  // 1-based
  std::string name;
  double param_count = 0.0;
  double fwd_flops = 0.0;
  double activation_count = 0.0;
};

struct ModelArchitecture {
  std::string name;
  std::vector<LayerProfile> layers;
  double bytes_per_element = 4.0;
  // Backward compute as a multiple of forward compute.
  double bwd_multiplier = 2.0;

  int num_layers() const { return static_cast<int>(layers.size()); }
};

// Per-sample workload seen by a user whose model is cut after layer l.
struct CutWorkload {
  int cut = 0;
  double user_compute = 0.0;  // FLOPs per sample, forward + backward
  double act_bytes = 0.0;     // activation bytes per sample, each direction
  double model_bytes = 0.0;   // user-side parameter bytes
  double mem_bytes = 0.0;     // user-side training memory bytes
};

// Parses the columnar profile format:
//
//   # comment
//   name: vgg19
//   bytes_per_element: 4
//   bwd_multiplier: 2
//   CONV1 0.0017 1.796 0.0655
//   ...
//   SoftMax \ \ \ (absent values)
//
// Columns may be separated by whitespace or commas. A backslash (or "-")
// stands for an absent value and is only accepted on the final layer.
// Throws ParseError (with line number) or ValidationError.
ModelArchitecture parse_architecture(std::string_view text);
ModelArchitecture load_architecture(const std::filesystem::path& path);

// Shipped profiles: "vgg13", "vgg16", "vgg19". Throws ConfigError otherwise.
ModelArchitecture builtin_architecture(std::string_view name);
std::vector<std::string> builtin_architecture_names();

// Resolves a CLI-style reference: an existing file path, else a builtin name.
ModelArchitecture resolve_architecture(const std::string& ref);

// Inverse of parse_architecture; values print in shortest round-trip form.
std::string serialize_architecture(const ModelArchitecture& arch);

void validate_architecture(const ModelArchitecture& arch);

// Throws DomainError unless 1 <= cut <= L. With count_activation_memory
// false, mem_bytes holds parameter bytes only.
CutWorkload cut_workload(const ModelArchitecture& arch, int cut, int batch_size,
                         bool count_activation_memory = true);

// Workloads for every cut 1..L in one pass, index i holding cut i+1.
std::vector<CutWorkload> all_cut_workloads(const ModelArchitecture& arch,
                                           int batch_size,
                                           bool count_activation_memory = true);

// Training FLOPs per sample of the whole network (symbol D).
double total_compute(const ModelArchitecture& arch);

}  // namespace esfl
