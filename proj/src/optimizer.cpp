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

#include "esfl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "esfl/errors.hpp"

namespace esfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
  std::vector<CutWorkload> cws;
  double D = 0.0;
  std::vector<std::vector<int>> feasible;
};

Problem prepare(std::span<const UserProfile> users, const ModelArchitecture& arch,
                const RoundSettings& settings) {
  Problem p;
  p.cws = all_cut_workloads(arch, settings.batch_size,
                            settings.count_activation_memory);
  p.D = p.cws.back().user_compute;
  p.feasible.reserve(users.size());
  for (const auto& u : users) {
    std::vector<int> cuts;
    for (const auto& cw : p.cws) {
      if (cut_fits(u, cw)) cuts.push_back(cw.cut);
    }
    if (cuts.empty()) {
      throw InfeasibleError("user " + std::to_string(u.id) +
                            " has no feasible cut layer");
    }
    p.feasible.push_back(std::move(cuts));
  }
  return p;
}

// Time minimized by the cut pass; +inf when the cut needs server compute
// the user does not have.
double cut_cost(const UserProfile& user, const CutWorkload& cw, double D,
                double server_compute, double t_agg, CutObjective objective) {
  const bool server_work = D - cw.user_compute > 0.0 && user.samples > 0.0;
  if (server_work && !(server_compute > 0.0)) return kInf;
  if (objective == CutObjective::kEpoch) {
    return epoch_time(user.samples, user.compute, user.rates, cw, D,
                      server_compute)
        .total;
  }
  return round_time(user, cw, D, server_compute, t_agg).total;
}

int scan_cuts(const UserProfile& user, const Problem& p,
              const std::vector<int>& feasible, double server_compute,
              double t_agg, CutObjective objective) {
  int best = -1;
  double best_cost = kInf;
  for (int cut : feasible) {
    const double cost = cut_cost(user, p.cws[static_cast<std::size_t>(cut - 1)],
                                 p.D, server_compute, t_agg, objective);
    if (best < 0 || cost < best_cost) {
      best = cut;
      best_cost = cost;
    }
  }
  return best;
}

void coefficients(std::span<const UserProfile> users, const Problem& p,
                  std::span<const int> cuts, double t_agg, CutObjective objective,
                  std::vector<double>& a, std::vector<double>& b) {
  a.assign(users.size(), 0.0);
  b.assign(users.size(), 0.0);
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& u = users[i];
    const auto& cw = p.cws[static_cast<std::size_t>(cuts[i] - 1)];
    const double share = std::max(0.0, p.D - cw.user_compute);
    // Any positive server rate will do; t_C is discarded.
    EpochBreakdown e = epoch_time(u.samples, u.compute, u.rates, cw, p.D,
                                  share > 0.0 ? 1.0 : 0.0);
    const double epoch_fixed = e.t_c + e.t_b + e.t_B;
    if (objective == CutObjective::kEpoch) {
      a[i] = share * u.samples;
      b[i] = epoch_fixed;
    } else {
      const double eps = static_cast<double>(std::max(u.epochs, 0));
      const auto r = round_time(u, cw, p.D, share > 0.0 ? 1.0 : 0.0, t_agg);
      a[i] = eps * share * u.samples;
      b[i] = r.t_up + r.t_down + eps * epoch_fixed + t_agg;
    }
  }
}

double evaluate(std::span<const UserProfile> users, const Problem& p,
                std::span<const int> cuts, std::span<const double> server_compute,
                double t_agg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& cw = p.cws[static_cast<std::size_t>(cuts[i] - 1)];
    const double t = round_time(users[i], cw, p.D, server_compute[i], t_agg).total;
    worst = std::max(worst, t);
  }
  return worst;
}

double demand(std::span<const double> a, std::span<const double> b, double level) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) s += a[i] / (level - b[i]);
  }
  return s;
}

}  // namespace

std::vector<int> feasible_cuts(const UserProfile& user,
                               const ModelArchitecture& arch,
                               const RoundSettings& settings) {
  const UserProfile one[] = {user};
  return prepare(one, arch, settings).feasible.front();
}

int best_cut(const UserProfile& user, const ModelArchitecture& arch,
             double server_compute, const RoundSettings& settings,
             CutObjective objective) {
  if (server_compute < 0.0) throw DomainError("server compute must be nonnegative");
  const UserProfile one[] = {user};
  const Problem p = prepare(one, arch, settings);
  return scan_cuts(user, p, p.feasible.front(), server_compute, settings.t_agg,
                   objective);
}

ResourceSplit allocate_server_compute(std::span<const double> a,
                                      std::span<const double> b,
                                      double server_total,
                                      const OptimizerConfig& cfg) {
  if (a.size() != b.size()) throw DomainError("coefficient vectors differ in size");
  if (!(server_total > 0.0)) throw DomainError("server compute budget must be positive");

  ResourceSplit out;
  out.server_compute.assign(a.size(), 0.0);
  double a_sum = 0.0;
  double b_floor = -kInf;  // max b over users with server work
  double b_max = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0) throw DomainError("server work must be nonnegative");
    b_max = std::max(b_max, b[i]);
    if (a[i] > 0.0) {
      a_sum += a[i];
      b_floor = std::max(b_floor, b[i]);
    }
  }
  if (a_sum == 0.0) {
    out.level = b_max;
    out.objective = b_max;
    return out;
  }

  // demand(level) is decreasing; it exceeds the budget just above b_floor
  // and is within it at hi.
  double lo = b_floor;
  double hi = b_floor + a_sum / server_total;
  // Width is judged against hi - b_floor too, so the user closest to the
  // level still gets its C resolved to the same relative accuracy.
  while (out.steps < cfg.bisection_max_steps &&
         hi - lo > cfg.bisection_tolerance * std::min(std::abs(hi), hi - b_floor)) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) break;
    ++out.steps;
    if (demand(a, b, mid) > server_total) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  double used = 0.0;
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) {
      const double c = a[i] / (hi - b[i]);
      out.server_compute[i] = c;
      used += c;
      weight_sum += c * (c / a[i]);
    }
  }
  // Hand the leftover budget out in proportion to C_i^2 / a_i, which lowers
  // every time by the same amount to first order.
  const double residual = server_total - used;
  used = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) {
      const double c = out.server_compute[i];
      out.server_compute[i] = c + residual * (c * (c / a[i])) / weight_sum;
      used += out.server_compute[i];
    }
  }
  const double scale = server_total / used;
  out.level = 0.0;
  out.objective = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = b[i];
    if (a[i] > 0.0) {
      out.server_compute[i] *= scale;
      t = a[i] / out.server_compute[i] + b[i];
      out.level = std::max(out.level, t);
    }
    out.objective = std::max(out.objective, t);
  }
  return out;
}

void server_time_coefficients(std::span<const UserProfile> users,
                              const ModelArchitecture& arch,
                              std::span<const int> cuts,
                              const RoundSettings& settings, CutObjective objective,
                              std::vector<double>& a, std::vector<double>& b) {
  if (cuts.size() != users.size()) throw DomainError("one cut per user required");
  const Problem p = prepare(users, arch, settings);
  for (int c : cuts) {
    if (c < 1 || c > arch.num_layers()) throw DomainError("cut layer out of range");
  }
  coefficients(users, p, cuts, settings.t_agg, objective, a, b);
}

OptimizationResult alternate(std::span<const UserProfile> users,
                             const ModelArchitecture& arch, double server_total,
                             const OptimizerConfig& cfg,
                             const RoundSettings& settings) {
  if (users.empty()) throw DomainError("no users to allocate");
  if (!(server_total > 0.0)) throw DomainError("server compute budget must be positive");
  const Problem p = prepare(users, arch, settings);
  const std::size_t S = users.size();

  OptimizationResult result;
  std::vector<double> compute(S, server_total / static_cast<double>(S));
  std::vector<int> cuts(S, 0);
  std::vector<double> a, b;
  double best = kInf;

  auto consider = [&](const std::vector<int>& c, const std::vector<double>& C,
                      double objective) {
    if (objective < best) {
      best = objective;
      result.allocation.cuts = c;
      result.allocation.server_compute = C;
      result.allocation.objective = objective;
    }
  };

  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (std::size_t i = 0; i < S; ++i) {
      cuts[i] = scan_cuts(users[i], p, p.feasible[i], compute[i], settings.t_agg,
                          cfg.objective);
    }
    const double cut_objective = evaluate(users, p, cuts, compute, settings.t_agg);
    consider(cuts, compute, cut_objective);

    coefficients(users, p, cuts, settings.t_agg, cfg.objective, a, b);
    std::vector<double> next = compute;
    double objective = cut_objective;
    if (std::any_of(a.begin(), a.end(), [](double x) { return x > 0.0; })) {
      auto split = allocate_server_compute(a, b, server_total, cfg);
      const double split_objective =
          evaluate(users, p, cuts, split.server_compute, settings.t_agg);
      // The resource pass is an exact minimization; never step uphill on
      // bisection round-off.
      if (split_objective <= cut_objective) {
        next = std::move(split.server_compute);
        objective = split_objective;
      }
    } else {
      std::fill(next.begin(), next.end(), 0.0);
    }
    consider(cuts, next, objective);

    double change = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      change = std::max(change, std::abs(next[i] - compute[i]) / server_total);
    }
    result.trace.push_back({it, cut_objective, objective, change, cuts, next});
    compute = std::move(next);
    result.iterations = it;
    if (change <= cfg.stall_tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Allocation brute_force_joint(std::span<const UserProfile> users,
                             const ModelArchitecture& arch, double server_total,
                             const OptimizerConfig& cfg,
                             const RoundSettings& settings) {
  if (users.empty()) throw DomainError("no users to allocate");
  if (users.size() > 3 || arch.num_layers() > 6) {
    throw DomainError("instance too large for exhaustive search (max 3 users, 6 layers)");
  }
  const Problem p = prepare(users, arch, settings);
  const std::size_t S = users.size();

  Allocation best;
  best.objective = kInf;
  std::vector<std::size_t> pos(S, 0);
  std::vector<int> cuts(S);
  std::vector<double> a, b;
  while (true) {
    for (std::size_t i = 0; i < S; ++i) cuts[i] = p.feasible[i][pos[i]];
    coefficients(users, p, cuts, settings.t_agg, CutObjective::kRound, a, b);
    std::vector<double> compute(S, 0.0);
    if (std::any_of(a.begin(), a.end(), [](double x) { return x > 0.0; })) {
      compute = allocate_server_compute(a, b, server_total, cfg).server_compute;
    }
    const double objective = evaluate(users, p, cuts, compute, settings.t_agg);
    if (objective < best.objective) {
      best.cuts = cuts;
      best.server_compute = compute;
      best.objective = objective;
    }
    // Odometer over the feasible sets, last user fastest.
    std::size_t k = S;
    while (k > 0) {
      --k;
      if (++pos[k] < p.feasible[k].size()) break;
      pos[k] = 0;
      if (k == 0) return best;
    }
  }
}

}  // namespace esfl
