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


#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "esfl/errors.hpp"
#include "esfl/simulator.hpp"

namespace esfl {
namespace {

SimulationConfig config_for(const std::string& preset, int rounds, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.scenario = preset_scenario(preset);
  cfg.scenario.rounds = rounds;
  cfg.scenario.seed = seed;
  return cfg;
}

TEST(Simulator, PresetOptionLists) {
  const auto presets = preset_scenarios();
  ASSERT_EQ(presets.size(), 8u);
  std::vector<std::string> names;
  for (const auto& p : presets) names.push_back(p.name);
  EXPECT_EQ(names, (std::vector<std::string>{"BP", "PR", "RP", "BR", "SH", "SL", "LS", "LH"}));

  const auto bp = preset_scenario("BP");
  EXPECT_EQ(bp.comm_options, (std::vector<double>{10, 15, 20, 25}));
  EXPECT_EQ(bp.comp_options, (std::vector<double>{1.3, 1.95, 2.6, 3.25}));
  EXPECT_EQ(bp.data_options, (std::vector<double>{500}));
  EXPECT_EQ(preset_scenario("PR").comp_options,
            (std::vector<double>{6.5, 9.75, 13, 16.25}));
  EXPECT_EQ(preset_scenario("RP").comm_options, (std::vector<double>{50, 75, 100, 125}));
  const auto lh = preset_scenario("LH");
  EXPECT_EQ(lh.comm_options, (std::vector<double>{5, 10, 20, 35}));
  EXPECT_EQ(lh.comp_options, (std::vector<double>{0.65, 1.3, 2.6, 4.55}));
  EXPECT_EQ(lh.data_options, (std::vector<double>{200, 400, 600, 800}));
  EXPECT_EQ(bp.population, 100);
  EXPECT_EQ(bp.selected_per_round, 10);
  EXPECT_EQ(bp.epochs, 5);
  EXPECT_EQ(bp.server_tflops, 130.0);
  EXPECT_THROW(preset_scenario("XX"), ConfigError);
}

TEST(Simulator, ScenarioValidation) {
  auto s = preset_scenario("BP");
  s.comm_options.clear();
  EXPECT_THROW(validate_scenario(s), ConfigError);
  s = preset_scenario("BP");
  s.selected_per_round = 101;
  EXPECT_THROW(validate_scenario(s), ConfigError);
  s = preset_scenario("BP");
  s.comp_options = {1.0, -2.0};
  EXPECT_THROW(validate_scenario(s), ConfigError);
  s = preset_scenario("BP");
  s.rounds = 0;
  EXPECT_THROW(validate_scenario(s), ConfigError);
}

TEST(Simulator, AlgorithmLists) {
  EXPECT_EQ(parse_algorithms("esfl,sfl,fl,sl"),
            (std::vector<Algorithm>{Algorithm::kFl, Algorithm::kSl, Algorithm::kSfl,
                                    Algorithm::kEsfl}));
  EXPECT_EQ(parse_algorithms("ESFL, esfl"), (std::vector<Algorithm>{Algorithm::kEsfl}));
  EXPECT_THROW(parse_algorithms("esfl,xfl"), ConfigError);
  EXPECT_THROW(parse_algorithms(""), ConfigError);
  EXPECT_EQ(algorithm_name(Algorithm::kSfl), "SFL");
}

TEST(Simulator, RoundSamplingIsUniqueSortedAndFromOptions) {
  const auto spec = preset_scenario("LH");
  Rng rng(4);
  const auto pop = make_population(spec, rng);
  for (int r = 0; r < 50; ++r) {
    const auto users = sample_round_users(spec, pop, rng);
    ASSERT_EQ(users.size(), 10u);
    std::set<int> ids;
    for (std::size_t i = 0; i < users.size(); ++i) {
      ids.insert(users[i].id);
      if (i > 0) {
        EXPECT_LT(users[i - 1].id, users[i].id);
      }
      const auto& u = users[i];
      EXPECT_EQ(u.samples, pop.samples[static_cast<std::size_t>(u.id)]);
      const double up_kbps = u.rates.up / 1024.0;
      EXPECT_NE(std::find(spec.comm_options.begin(), spec.comm_options.end(), up_kbps),
                spec.comm_options.end());
      EXPECT_EQ(u.rates.up, u.rates.down);
      EXPECT_EQ(u.epochs, 5);
    }
    EXPECT_EQ(ids.size(), 10u);
  }
}

TEST(Simulator, StickyResourcesFollowTheUser) {
  auto spec = preset_scenario("LH");
  spec.resource_mode = ResourceMode::kSticky;
  Rng rng(6);
  const auto pop = make_population(spec, rng);
  std::map<int, std::pair<double, double>> seen;
  for (int r = 0; r < 40; ++r) {
    for (const auto& u : sample_round_users(spec, pop, rng)) {
      auto [it, fresh] = seen.emplace(u.id, std::make_pair(u.rates.up, u.compute));
      if (!fresh) {
        EXPECT_EQ(it->second.first, u.rates.up);
        EXPECT_EQ(it->second.second, u.compute);
      }
    }
  }
}

TEST(Simulator, SeparateDownlinkOptions) {
  auto spec = preset_scenario("BP");
  spec.downlink_options = {1000};
  Rng rng(2);
  const auto pop = make_population(spec, rng);
  for (const auto& u : sample_round_users(spec, pop, rng)) {
    EXPECT_EQ(u.rates.down, 1000 * 1024.0);
  }
}

TEST(Simulator, SingleRoundTotalsEqualTheRound) {
  const auto arch = builtin_architecture("vgg19");
  const auto rep = run_simulation(config_for("BP", 1, 3), arch);
  ASSERT_EQ(rep.records.size(), 1u);
  for (const auto& s : rep.summaries) {
    const auto& res = rep.records[0].result(s.algorithm);
    ASSERT_TRUE(res.has_value());
    EXPECT_EQ(s.total_time, res->time);
    EXPECT_EQ(s.mean_time, res->time);
  }
}

TEST(Simulator, TotalsAreSumsOfRecords) {
  const auto arch = builtin_architecture("vgg16");
  auto cfg = config_for("SH", 20, 5);
  cfg.settings.t_agg = 2.0;
  const auto rep = run_simulation(cfg, arch);
  for (const auto& s : rep.summaries) {
    double t = 0, c = 0;
    for (const auto& rec : rep.records) {
      const auto& res = rec.result(s.algorithm);
      ASSERT_TRUE(res.has_value());
      EXPECT_GE(res->time, 0.0);
      EXPECT_LE(res->comm_time, res->time);
      t += res->time;
      c += res->comm_time;
    }
    EXPECT_EQ(s.rounds, 20);
    EXPECT_DOUBLE_EQ(s.total_time, t);
    EXPECT_DOUBLE_EQ(s.total_comm, c);
    EXPECT_DOUBLE_EQ(s.projected_time,
                     s.mean_time * cfg.target_rounds[static_cast<std::size_t>(s.algorithm)]);
  }
}

TEST(Simulator, ReproducibleForSeed) {
  const auto arch = builtin_architecture("vgg19");
  const auto a = run_simulation(config_for("PR", 10, 99), arch);
  const auto b = run_simulation(config_for("PR", 10, 99), arch);
  const auto c = run_simulation(config_for("PR", 10, 100), arch);
  ASSERT_EQ(a.records.size(), b.records.size());
  bool differs = false;
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    for (Algorithm alg : kAllAlgorithms) {
      EXPECT_EQ(a.records[r].result(alg)->time, b.records[r].result(alg)->time);
    }
    EXPECT_EQ(a.records[r].esfl_allocation.cuts, b.records[r].esfl_allocation.cuts);
    differs = differs || a.records[r].result(Algorithm::kEsfl)->time !=
                             c.records[r].result(Algorithm::kEsfl)->time;
  }
  EXPECT_TRUE(differs);
}

TEST(Simulator, PerRecordDominance) {
  const auto arch = builtin_architecture("vgg19");
  const auto rep = run_simulation(config_for("BR", 30, 1), arch);
  for (const auto& rec : rep.records) {
    EXPECT_LE(rec.result(Algorithm::kEsfl)->time, rec.result(Algorithm::kSfl)->time);
    EXPECT_LE(rec.result(Algorithm::kEsfl)->time, rec.result(Algorithm::kFl)->time);
  }
}

TEST(Simulator, OnlyRequestedAlgorithmsRun) {
  const auto arch = builtin_architecture("vgg19");
  auto cfg = config_for("BP", 3, 1);
  cfg.algorithms = {Algorithm::kSfl};
  const auto rep = run_simulation(cfg, arch);
  ASSERT_EQ(rep.summaries.size(), 1u);
  EXPECT_EQ(rep.summary(Algorithm::kEsfl), nullptr);
  for (const auto& rec : rep.records) {
    EXPECT_FALSE(rec.result(Algorithm::kEsfl).has_value());
    EXPECT_TRUE(rec.result(Algorithm::kSfl).has_value());
  }
}

TEST(Simulator, InfeasibleUsersExcludedOrAbort) {
  const auto arch = builtin_architecture("vgg19");
  auto cfg = config_for("BP", 4, 1);
  const auto cws = all_cut_workloads(arch, 32);
  cfg.scenario.storage_bytes = cws[3].model_bytes;
  const auto rep = run_simulation(cfg, arch);
  for (const auto& rec : rep.records) {
    EXPECT_TRUE(rec.excluded_ids.empty());
    for (int c : rec.esfl_allocation.cuts) EXPECT_LE(c, 4);
    EXPECT_FALSE(rec.result(Algorithm::kFl).has_value());
  }
  EXPECT_EQ(rep.summary(Algorithm::kFl)->rounds, 0);

  cfg.scenario.storage_bytes = 1.0;
  const auto none = run_simulation(cfg, arch);
  for (const auto& rec : none.records) {
    EXPECT_TRUE(rec.users.empty());
    EXPECT_EQ(rec.excluded_ids.size(), 10u);
  }
  cfg.infeasible = InfeasiblePolicy::kAbort;
  EXPECT_THROW(run_simulation(cfg, arch), InfeasibleError);
}

TEST(Simulator, DistributionRowsNormalized) {
  const auto arch = builtin_architecture("vgg19");
  const auto rep = run_simulation(config_for("LS", 40, 8), arch);
  const auto& d = rep.distribution;
  EXPECT_EQ(d.num_layers, 20);
  ASSERT_FALSE(d.rows.empty());
  for (const auto& row : d.rows) {
    double s = 0.0;
    for (double p : row) {
      EXPECT_GE(p, 0.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_NEAR(std::accumulate(d.pooled.begin(), d.pooled.end(), 0.0), 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(d.user_ids.begin(), d.user_ids.end()));
}

TEST(Simulator, DistributionFromHandMadeRecords) {
  std::vector<RoundRecord> recs(3);
  UserProfile a, b;
  a.id = 4;
  b.id = 9;
  recs[0].users = {a, b};
  recs[0].esfl_allocation.cuts = {1, 2};
  recs[1].users = {a};
  recs[1].esfl_allocation.cuts = {2};
  recs[2].users = {a};
  recs[2].esfl_allocation.cuts = {2};
  const auto d = cut_layer_distribution(recs, 3);
  EXPECT_EQ(d.user_ids, (std::vector<int>{4, 9}));
  EXPECT_NEAR(d.rows[0][0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.rows[0][1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(d.rows[1], (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_EQ(d.pooled, (std::vector<double>{0.25, 0.75, 0.0}));
  const double h = -(1.0 / 3.0) * std::log(1.0 / 3.0) - (2.0 / 3.0) * std::log(2.0 / 3.0);
  EXPECT_NEAR(d.entropy[0], h, 1e-12);
  EXPECT_EQ(d.entropy[1], 0.0);
  EXPECT_NEAR(d.entropy_mean, h / 2.0, 1e-12);
  EXPECT_NEAR(d.entropy_variance, h * h / 4.0, 1e-12);
}

TEST(Simulator, ConvergenceStudyScales) {
  const auto arch = builtin_architecture("vgg19");
  auto spec = preset_scenario("BP");
  const auto rows = convergence_study(spec, arch);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].scale, 100);
  EXPECT_EQ(rows[3].scale, 800);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(static_cast<int>(r.trace.size()), r.iterations);
  }
  const auto one = convergence_study(spec, arch, {1});
  EXPECT_LE(one[0].iterations, 2);
}

}  // namespace
}  // namespace esfl
