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

#include "esfl/workload.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "esfl/errors.hpp"

namespace esfl {

// Generated from data/*.csv at configure time.
std::string_view builtin_profile_text(std::string_view name);
std::vector<std::string> builtin_profile_names();

namespace {

constexpr double kMega = 1e6;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() &&
           (line[pos] == ' ' || line[pos] == '\t' || line[pos] == ',')) {
      ++pos;
    }
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
           line[end] != ',') {
      ++end;
    }
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

bool is_absent(std::string_view tok) { return tok == "\\" || tok == "-"; }

double parse_number(std::string_view tok, int line) {
  double value = 0.0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  if (!tok.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("not a number: '" + std::string(tok) + "'", line);
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct PendingRow {
  LayerProfile layer;
  int line = 0;
  bool has_absent = false;
};

}  // namespace

ModelArchitecture parse_architecture(std::string_view text) {
  ModelArchitecture arch;
  std::vector<PendingRow> rows;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (auto colon = line.find(':'); colon != std::string_view::npos) {
      const auto key = trim(line.substr(0, colon));
      const auto value = trim(line.substr(colon + 1));
      if (key == "name") {
        arch.name = std::string(value);
      } else if (key == "bytes_per_element") {
        arch.bytes_per_element = parse_number(value, line_no);
      } else if (key == "bwd_multiplier") {
        arch.bwd_multiplier = parse_number(value, line_no);
      } else {
        throw ParseError("unknown header key '" + std::string(key) + "'",
                         line_no);
      }
      continue;
    }

    const auto cols = split_columns(line);
    if (cols.size() != 4) {
      throw ParseError("expected 4 columns (name param fwd_flops activation), got " +
                           std::to_string(cols.size()),
                       line_no);
    }
    PendingRow row;
    row.line = line_no;
    row.layer.index = static_cast<int>(rows.size()) + 1;
    row.layer.name = std::string(cols[0]);
    double* fields[3] = {&row.layer.param_count, &row.layer.fwd_flops,
                         &row.layer.activation_count};
    for (int c = 0; c < 3; ++c) {
      if (is_absent(cols[c + 1])) {
        row.has_absent = true;
        *fields[c] = 0.0;
        continue;
      }
      const double v = parse_number(cols[c + 1], line_no);
      if (v < 0.0) {
        throw ParseError("negative value in layer '" + row.layer.name + "'",
                         line_no);
      }
      *fields[c] = v;
    }
    rows.push_back(std::move(row));
  }

  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].has_absent) {
      throw ParseError("absent value only allowed on the final layer",
                       rows[i].line);
    }
  }
  for (auto& r : rows) arch.layers.push_back(std::move(r.layer));
  validate_architecture(arch);
  return arch;
}

ModelArchitecture load_architecture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open architecture file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto arch = parse_architecture(ss.str());
  if (arch.name.empty()) arch.name = path.stem().string();
  return arch;
}

ModelArchitecture builtin_architecture(std::string_view name) {
  const auto text = builtin_profile_text(name);
  if (text.empty()) {
    throw ConfigError("unknown builtin architecture '" + std::string(name) + "'");
  }
  auto arch = parse_architecture(text);
  if (arch.name.empty()) arch.name = std::string(name);
  return arch;
}

std::vector<std::string> builtin_architecture_names() {
  return builtin_profile_names();
}

ModelArchitecture resolve_architecture(const std::string& ref) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(ref, ec)) return load_architecture(ref);
  if (!builtin_profile_text(ref).empty()) return builtin_architecture(ref);
  throw ConfigError("architecture not found: '" + ref +
                    "' is neither a file nor a builtin profile");
}

std::string serialize_architecture(const ModelArchitecture& arch) {
  std::string out;
  out += "name: " + arch.name + "\n";
  out += "bytes_per_element: " + format_number(arch.bytes_per_element) + "\n";
  out += "bwd_multiplier: " + format_number(arch.bwd_multiplier) + "\n";
  for (const auto& l : arch.layers) {
    out += l.name + " " + format_number(l.param_count) + " " +
           format_number(l.fwd_flops) + " " +
           format_number(l.activation_count) + "\n";
  }
  return out;
}

void validate_architecture(const ModelArchitecture& arch) {
  if (arch.layers.empty()) {
    throw ValidationError("architecture has no layers");
  }
  if (arch.layers.size() < 2) {
    throw ValidationError("architecture needs at least 2 layers to admit a cut");
  }
  if (!(arch.bytes_per_element > 0.0)) {
    throw ValidationError("bytes_per_element must be positive");
  }
  if (!(arch.bwd_multiplier >= 0.0)) {
    throw ValidationError("bwd_multiplier must be nonnegative");
  }
  int prev = 0;
  for (const auto& l : arch.layers) {
    if (l.index <= prev) {
      throw ValidationError("layer indices must be strictly increasing");
    }
    prev = l.index;
    if (l.param_count < 0.0 || l.fwd_flops < 0.0 || l.activation_count < 0.0) {
      throw ValidationError("negative value in layer '" + l.name + "'");
    }
  }
}

std::vector<CutWorkload> all_cut_workloads(const ModelArchitecture& arch,
                                           int batch_size,
                                           bool count_activation_memory) {
  std::vector<CutWorkload> out;
  out.reserve(arch.layers.size());
  const double train_factor = (1.0 + arch.bwd_multiplier) * kMega;
  const double byte_factor = arch.bytes_per_element * kMega;
  double fwd = 0.0, params = 0.0, acts = 0.0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    fwd += layer.fwd_flops;
    params += layer.param_count;
    acts += layer.activation_count;
    CutWorkload cw;
    cw.cut = static_cast<int>(i) + 1;
    cw.user_compute = fwd * train_factor;
    cw.act_bytes = layer.activation_count * byte_factor;
    cw.model_bytes = params * byte_factor;
    cw.mem_bytes = cw.model_bytes;
    if (count_activation_memory) {
      cw.mem_bytes += static_cast<double>(batch_size) * (acts * byte_factor);
    }
    out.push_back(cw);
  }
  return out;
}

CutWorkload cut_workload(const ModelArchitecture& arch, int cut, int batch_size,
                         bool count_activation_memory) {
  if (cut < 1 || cut > arch.num_layers()) {
    throw DomainError("cut layer " + std::to_string(cut) + " outside [1, " +
                      std::to_string(arch.num_layers()) + "]");
  }
  return all_cut_workloads(arch, batch_size,
                           count_activation_memory)[static_cast<std::size_t>(cut - 1)];
}

double total_compute(const ModelArchitecture& arch) {
  return all_cut_workloads(arch, 1).back().user_compute;
}

}  // namespace esfl
