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

#include <optional>
#include <span>

namespace esfl {

// Wireless channel of one user.
struct ChannelParams {
  double bandwidth_hz = 0.0;
  double uplink_power_w = 0.0;
  double downlink_power_w = 0.0;
  double uplink_gain = 0.0;
  double downlink_gain = 0.0;
  double noise_density = 0.0;  // W/Hz
};

// Bytes per second in each direction.
struct LinkRates {
  double up = 0.0;
  double down = 0.0;
};

// Table-style rates in KB/s. A missing downlink mirrors the uplink.
struct DirectRates {
  double up_kbps = 0.0;
  std::optional<double> down_kbps;
};

enum class RateMode { kDirect, kShannon };

// Bytes per "KB" when converting tabulated rates.
inline constexpr double kKibibyte = 1024.0;

// Shannon capacity B*log2(1 + P*gain/(B*N0)) in bits/s.
// Throws DomainError for nonpositive bandwidth or noise density, or a
// negative power or gain.
double shannon_rate(double bandwidth_hz, double power_w, double gain,
                    double noise_density);

LinkRates link_rates(const DirectRates& direct, double bytes_per_kb = kKibibyte);
LinkRates link_rates(const ChannelParams& channel);

// Dispatch on mode; exactly the payload matching the mode must be present,
// otherwise ConfigError.
LinkRates link_rates(RateMode mode, const std::optional<DirectRates>& direct,
                     const std::optional<ChannelParams>& channel,
                     double bytes_per_kb = kKibibyte);

// Checks the sum of per-user bandwidths against the system budget.
// Throws ConfigError when exceeded.
void validate_bandwidth_budget(std::span<const ChannelParams> channels,
                               double total_bandwidth_hz);

}  // namespace esfl
