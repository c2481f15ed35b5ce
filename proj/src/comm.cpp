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

#include "esfl/comm.hpp"

#include <cmath>
#include <string>

#include "esfl/errors.hpp"

namespace esfl {

double shannon_rate(double bandwidth_hz, double power_w, double gain,
                    double noise_density) {
  if (!(bandwidth_hz > 0.0)) throw DomainError("bandwidth must be positive");
  if (!(noise_density > 0.0)) throw DomainError("noise density must be positive");
  if (!(power_w >= 0.0) || !(gain >= 0.0)) {
    throw DomainError("power and gain must be nonnegative");
  }
  const double snr = power_w * gain / (bandwidth_hz * noise_density);
  return bandwidth_hz * std::log2(1.0 + snr);
}

LinkRates link_rates(const DirectRates& direct, double bytes_per_kb) {
  if (!(direct.up_kbps >= 0.0) || (direct.down_kbps && !(*direct.down_kbps >= 0.0))) {
    throw ConfigError("direct rates must be nonnegative");
  }
  const double down = direct.down_kbps.value_or(direct.up_kbps);
  return {direct.up_kbps * bytes_per_kb, down * bytes_per_kb};
}

LinkRates link_rates(const ChannelParams& ch) {
  const double up = shannon_rate(ch.bandwidth_hz, ch.uplink_power_w,
                                 ch.uplink_gain, ch.noise_density);
  const double down = shannon_rate(ch.bandwidth_hz, ch.downlink_power_w,
                                   ch.downlink_gain, ch.noise_density);
  return {up / 8.0, down / 8.0};
}

LinkRates link_rates(RateMode mode, const std::optional<DirectRates>& direct,
                     const std::optional<ChannelParams>& channel,
                     double bytes_per_kb) {
  switch (mode) {
    case RateMode::kDirect:
      if (!direct || channel) {
        throw ConfigError("direct mode requires rates and no channel block");
      }
      return link_rates(*direct, bytes_per_kb);
    case RateMode::kShannon:
      if (!channel || direct) {
        throw ConfigError("shannon mode requires a channel block and no rates");
      }
      return link_rates(*channel);
  }
  throw ConfigError("unknown rate mode");
}

void validate_bandwidth_budget(std::span<const ChannelParams> channels,
                               double total_bandwidth_hz) {
  double sum = 0.0;
  for (const auto& ch : channels) sum += ch.bandwidth_hz;
  if (sum > total_bandwidth_hz) {
    throw ConfigError("allocated bandwidth " + std::to_string(sum) +
                      " Hz exceeds budget " + std::to_string(total_bandwidth_hz) +
                      " Hz");
  }
}

}  // namespace esfl
