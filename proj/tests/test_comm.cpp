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
#include <vector>

#include "esfl/comm.hpp"
#include "esfl/errors.hpp"

namespace esfl {
namespace {

TEST(Comm, ShannonUnitSnr) {
  // SNR of 1 gives exactly one bit per hertz.
  EXPECT_DOUBLE_EQ(shannon_rate(1e6, 1.0, 1.0, 1e-6), 1e6);
  EXPECT_DOUBLE_EQ(shannon_rate(2e5, 3.0, 1.0, 5e-6), 2e5 * 2.0);
}

TEST(Comm, ShannonClosedForm) {
  const double B = 1.5e6, P = 0.2, g = 1e-7, N0 = 4e-21;
  EXPECT_NEAR(shannon_rate(B, P, g, N0), B * std::log2(1.0 + P * g / (B * N0)), 1e-6);
  EXPECT_EQ(shannon_rate(B, 0.0, g, N0), 0.0);
}

TEST(Comm, ShannonDomainErrors) {
  EXPECT_THROW(shannon_rate(0.0, 1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(shannon_rate(1.0, -1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(shannon_rate(1.0, 1.0, -1.0, 1.0), DomainError);
  EXPECT_THROW(shannon_rate(1.0, 1.0, 1.0, 0.0), DomainError);
}

TEST(Comm, DirectRatesUseKibibytesAndMirror) {
  const auto r = link_rates(DirectRates{10.0, std::nullopt});
  EXPECT_EQ(r.up, 10240.0);
  EXPECT_EQ(r.down, 10240.0);
  const auto s = link_rates(DirectRates{10.0, 20.0}, 1000.0);
  EXPECT_EQ(s.up, 10000.0);
  EXPECT_EQ(s.down, 20000.0);
}

TEST(Comm, ChannelRatesAreBytes) {
  ChannelParams c;
  c.bandwidth_hz = 8e6;
  c.uplink_power_w = 1.0;
  c.downlink_power_w = 3.0;
  c.uplink_gain = 1.0;
  c.downlink_gain = 1.0;
  c.noise_density = 1.0 / 8e6;
  const auto r = link_rates(c);
  EXPECT_DOUBLE_EQ(r.up, 1e6);
  EXPECT_DOUBLE_EQ(r.down, 2e6);
}

TEST(Comm, ModeMustMatchPayload) {
  ChannelParams c{1e6, 1.0, 1.0, 1.0, 1.0, 1e-6};
  EXPECT_THROW(link_rates(RateMode::kDirect, std::nullopt, c), ConfigError);
  EXPECT_THROW(link_rates(RateMode::kShannon, DirectRates{1.0, {}}, std::nullopt),
               ConfigError);
  EXPECT_THROW(link_rates(RateMode::kDirect, DirectRates{1.0, {}}, c), ConfigError);
  EXPECT_EQ(link_rates(RateMode::kDirect, DirectRates{1.0, {}}, std::nullopt).up, 1024.0);
  EXPECT_DOUBLE_EQ(link_rates(RateMode::kShannon, std::nullopt, c).up, 1e6 / 8.0);
}

TEST(Comm, BandwidthBudget) {
  std::vector<ChannelParams> cs(3);
  for (auto& c : cs) c.bandwidth_hz = 1e6;
  EXPECT_NO_THROW(validate_bandwidth_budget(cs, 3e6));
  EXPECT_THROW(validate_bandwidth_budget(cs, 2.5e6), ConfigError);
}

}  // namespace
}  // namespace esfl
