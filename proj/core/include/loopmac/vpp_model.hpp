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

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loopmac/common.hpp"

namespace loopmac::vpp {

// ---------------------------------------------------------------------------
// Device parameters (time-invariant constants; time series live in the
// scenario input)

struct FlexLoadParams {
  double alpha = 0.1;  // inconvenience cost per kW^2 of deviation
};

struct StorageParams {
  double powerMaxKw = 80.0;  // charge and discharge limit
  double etaCharge = 0.94;
  double etaDischarge = 1.06;
  double capacityKwh = 300.0;
  double socMin = 0.15;
  double socMax = 0.85;
  double socStart = 0.2;  // default initial state at the start of a day
  double alpha = 0.01;    // maintenance cost per kW throughput
};

struct HvacParams {
  double inertia = 0.93;       // thermal inertia factor
  double cop = 2.5;            // coefficient of performance
  double conductance = 0.25;   // thermal conductivity, kW/degF
  double tMin = 75.0;
  double tMax = 79.0;
  double tRef = 77.0;
  double powerMaxKw = 11.5;
  double alpha = 1.0;          // discomfort cost per degF^2
};

struct PevParams {
  double powerMinKw = 0.0;
  double powerMaxKw = 30.0;
  double energyReqKwh = 10.0;  // fallback when the scenario carries none
};

struct PvParams {
  double areaM2 = 1000.0;
  double efficiency = 0.2;
};

struct AgentSpec {
  int id = 0;
  std::string name;
  bool hasInflexible = true;
  std::optional<FlexLoadParams> flexLoad;
  std::optional<StorageParams> storage;
  std::optional<HvacParams> hvac;
  std::optional<PevParams> pev;
  std::optional<PvParams> pv;
  double netMinKw = -200.0;  // utility limits on the agent's net power
  double netMaxKw = 200.0;

  void validate() const;  // throws InfeasibleBounds on bad constants
};

/// The three-agent fleet used throughout the bundled scenarios: one agent
/// with flexible load + storage, one with a plug-in EV, one with HVAC + PV.
std::vector<AgentSpec> referenceFleet();

// ---------------------------------------------------------------------------
// Horizon and scenario input

struct Horizon {
  int tStart = 0;
  int steps = 12;              // H
  double dtHours = 5.0 / 60.0; // binding interval length

  void validate() const;
};

/// Exogenous series for one agent over one horizon window. Vectors are
/// empty unless the corresponding device is present; lengths must equal H.
struct AgentScenario {
  Eigen::VectorXd flMin, flMax, flRef;        // flexible load, kW
  Eigen::VectorXd inflexible;                 // kW
  Eigen::VectorXd tOut, tRefSeries, occupied; // HVAC, degF / {0,1}
  double hvacT0 = 0.0;                        // initial indoor temperature
  Eigen::VectorXd irradiance;                 // kW/m^2
  double soc0 = 0.0;                          // initial state of charge
  double pevEnergyKwh = std::numeric_limits<double>::quiet_NaN();
};

struct ScenarioInput {
  std::vector<AgentScenario> agents;
  Eigen::VectorXd schedule;  // committed VPP output per step, kW

  void validate(const std::vector<AgentSpec>& specs, const Horizon& hz) const;
};

uint64_t hashScenario(const ScenarioInput& scen);

// ---------------------------------------------------------------------------
// Variable indexing

enum class Quantity {
  FlexPower,
  EssCharge,
  EssDischarge,
  EssSoc,
  HvacPower,
  HvacTemp,
  PevPower,
  PvPower,
  NetPower,
};

enum class VarClass { Local, Global, Copy };

/// Flat index map for one agent's decision vector:
/// [device locals | net power (global) | copies, grouped by owner id].
class VariableIndex {
 public:
  static VariableIndex build(const AgentSpec& agent, int steps,
                             std::vector<int> copyOwnerIds);

  int size() const { return total_; }
  int ownSize() const { return copyOffset_; }
  int localCount() const { return globalOffset_; }
  int globalOffset() const { return globalOffset_; }
  int copyOffset() const { return copyOffset_; }
  int steps() const { return steps_; }
  int agentId() const { return agentId_; }

  bool has(Quantity q) const { return offsets_.count(q) > 0; }
  int at(Quantity q, int t) const;
  int atCopy(int ownerId, int t) const;
  VarClass classOf(int idx) const;
  const std::vector<int>& copyOwners() const { return owners_; }

  /// Column indices of state-like quantities (state of charge, temperature,
  /// PV output, net power); preferred pivots during variable elimination.
  std::vector<int> stateColumns() const;

 private:
  int agentId_ = 0;
  int steps_ = 0;
  int globalOffset_ = 0;
  int copyOffset_ = 0;
  int total_ = 0;
  std::map<Quantity, int> offsets_;
  std::vector<int> owners_;
};

// ---------------------------------------------------------------------------
// Compact QP form

/// Canonical assembled form: equalities Aeq u = beq, inequalities G u <= h,
/// objective 1/2 u'diag(q)u + c'u + constant. Scenario data is already
/// folded into beq / h / c.
struct CompactQp {
  Eigen::VectorXd qDiag;
  Eigen::VectorXd c;
  double constant = 0.0;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  std::vector<std::string> eqNames;
  std::vector<std::string> ineqNames;

  int vars() const { return int(c.size()); }
};

double objectiveValue(const CompactQp& qp, const Eigen::VectorXd& u);

struct BuildOptions {
  /// Scale the PEV cumulative-energy requirement by the interval length
  /// (energy balance in kWh). Turning this off reproduces a plain sum of
  /// powers on the left-hand side.
  bool pevEnergyUsesDt = true;
  /// Bound each copy variable by the owner's net-power limits. Keeps every
  /// local feasible set bounded without cutting any consensus-feasible
  /// point.
  bool copyBounds = true;
};

/// Drop equality rows that are linear combinations of earlier rows
/// (rank-revealing elimination, pivot tolerance `tol`). Throws
/// InfeasibleBounds if a dropped row is inconsistent with the rest.
void removeRedundantEqualities(Eigen::MatrixXd& A, Eigen::VectorXd& b,
                               std::vector<std::string>* names,
                               double tol = 1e-10);

CompactQp buildCentralized(const std::vector<AgentSpec>& agents,
                           const ScenarioInput& scen, const Horizon& hz,
                           const BuildOptions& opts = {});

/// Per-agent problem over [own variables; copies] with the local share of
/// the schedule constraint. `agents` supplies neighbours' net-power bounds
/// for the copy rows.
CompactQp buildAgentLocal(const std::vector<AgentSpec>& agents, int self,
                          const ScenarioInput& scen, const Horizon& hz,
                          const VariableIndex& idx,
                          const BuildOptions& opts = {});

// ---------------------------------------------------------------------------
// Selector matrices

/// 0/1 row selector; row r picks column pick[r].
struct SelectorMatrix {
  int cols = 0;
  std::vector<int> pick;

  int rows() const { return int(pick.size()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd dense() const;
};

struct Selectors {
  /// consensus[i] maps the stack of other agents' global blocks to the
  /// vector agent i's copies must equal.
  std::vector<SelectorMatrix> consensus;
  /// mirrored[i] maps the stack of other agents' copy blocks to the copies
  /// that mirror agent i's own globals, ordered by (owner id, t).
  std::vector<SelectorMatrix> mirrored;
};

Selectors buildSelectors(const std::vector<VariableIndex>& indices);

// ---------------------------------------------------------------------------
// System layout helpers

/// Index bookkeeping across the whole fleet: the centralized vector is the
/// concatenation of every agent's own block (no copies).
struct SystemLayout {
  std::vector<VariableIndex> agents;
  std::vector<int> ownOffset;
  int centralSize = 0;

  static SystemLayout build(const std::vector<AgentSpec>& specs, int steps);

  /// Expand one agent's slice of a centralized vector with copies filled
  /// from the true neighbour globals.
  Eigen::VectorXd expandWithCopies(const Eigen::VectorXd& uCentral, int agent) const;

  /// The agent's own block of the centralized vector.
  Eigen::VectorXd ownSlice(const Eigen::VectorXd& uCentral, int agent) const;
};

// ---------------------------------------------------------------------------
// Canonical per-agent input encoding (the x^i vector fed to approximators)

Eigen::VectorXd buildAgentInput(const AgentSpec& agent, const AgentScenario& scen,
                                const Eigen::VectorXd& schedule);
std::vector<std::string> agentInputLayout(const AgentSpec& agent, int steps);

}  // namespace loopmac::vpp
