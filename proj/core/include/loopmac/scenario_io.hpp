/*
 * Copyright 2026 The loopmac Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <map>
#include <string>
#include <vector>

#include "loopmac/vpp_model.hpp"

namespace loopmac::io {

inline constexpr int kSamplesPerDay = 288;  // 24 h at 5-minute resolution

/// Full-day series at 5-minute resolution. Vectors are empty for devices an
/// agent does not have. pevEnergyRate is kWh per hour of required charging;
/// a window's requirement is its mean rate times the window length.
struct AgentDayProfiles {
  Eigen::VectorXd inflexible;     // kW
  Eigen::VectorXd flMin, flMax, flRef;  // kW
  Eigen::VectorXd tOut;           // degF
  Eigen::VectorXd tRef;           // degF
  Eigen::VectorXd occupied;       // {0,1}
  Eigen::VectorXd irradiance;     // kW/m^2
  Eigen::VectorXd pevEnergyRate;  // kWh/h
};

struct DayProfileSet {
  std::vector<AgentDayProfiles> agents;  // aligned with the fleet
  Eigen::VectorXd schedule;              // kW

  void validate(const std::vector<vpp::AgentSpec>& specs) const;
};

/// Smooth random profiles: low-order sinusoids with seeded phases plus
/// seeded noise, clipped to the documented ranges. The schedule follows the
/// fleet's expected net output so every window of the day admits a feasible
/// dispatch; it sits in the 45..115 kW committed band while PV production
/// supports it and drops to the fleet's natural level otherwise.
DayProfileSet synthesizeDay(const std::vector<vpp::AgentSpec>& specs, uint64_t seed);

// ---------------------------------------------------------------------------
// Scenario directory (agents.conf, profiles.csv, schedule.csv)

void writeScenarioDir(const std::string& dir,
                      const std::vector<vpp::AgentSpec>& specs,
                      const DayProfileSet& day);

std::pair<std::vector<vpp::AgentSpec>, DayProfileSet> loadScenario(
    const std::string& dir);

// ---------------------------------------------------------------------------
// Horizon slicing

/// Chainable initial states for rolling-day simulation, keyed by agent id.
struct RollingState {
  std::map<int, double> soc;
  std::map<int, double> indoorTemp;

  static RollingState dayStart(const std::vector<vpp::AgentSpec>& specs);
};

/// Window [tStart, tStart+H) of the day. Throws OutOfRange when the window
/// does not fit the day.
vpp::ScenarioInput sliceHorizon(const DayProfileSet& day,
                                const std::vector<vpp::AgentSpec>& specs,
                                const RollingState& states, int tStart, int H,
                                double dtHours = 5.0 / 60.0);

/// Same slice with the day treated as periodic, so every 5-minute start of
/// the day yields a window.
vpp::ScenarioInput sliceHorizonWrapped(const DayProfileSet& day,
                                       const std::vector<vpp::AgentSpec>& specs,
                                       const RollingState& states, int tStart,
                                       int H, double dtHours = 5.0 / 60.0);

/// Advance the rolling states by applying the first `applySteps` intervals
/// of a centralized solution for this window.
RollingState advanceStates(const RollingState& states,
                           const std::vector<vpp::AgentSpec>& specs,
                           const vpp::SystemLayout& layout,
                           const vpp::ScenarioInput& scen,
                           const Eigen::VectorXd& uCentral, int applySteps,
                           double dtHours);

}  // namespace loopmac::io
