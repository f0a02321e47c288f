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

#include "loopmac/vpp_model.hpp"

#include <algorithm>
#include <cmath>

namespace loopmac::vpp {

namespace {

void requireLen(const Eigen::VectorXd& v, int len, const std::string& what) {
  if (int(v.size()) != len)
    throw DimensionMismatch(what + " has " + std::to_string(v.size()) +
                            " samples, expected " + std::to_string(len));
}

std::string tag(int agent, const char* what, int t) {
  return "a" + std::to_string(agent) + "." + what + "[" + std::to_string(t) + "]";
}

}  // namespace

// ---------------------------------------------------------------------------

void AgentSpec::validate() const {
  auto bad = [&](const std::string& msg) {
    throw InfeasibleBounds("agent " + std::to_string(id) + ": " + msg);
  };
  if (flexLoad && flexLoad->alpha < 0) bad("flexible-load cost must be >= 0");
  if (storage) {
    const auto& s = *storage;
    if (!(s.etaCharge > 0 && s.etaCharge <= 1.0)) bad("charge efficiency outside (0,1]");
    if (!(s.etaDischarge >= 1.0)) bad("discharge efficiency must be >= 1");
    if (!(s.capacityKwh > 0)) bad("storage capacity must be positive");
    if (!(s.socMin >= 0 && s.socMin < s.socMax && s.socMax <= 1.0))
      bad("state-of-charge limits must satisfy 0 <= min < max <= 1");
    if (!(s.powerMaxKw > 0)) bad("storage power limit must be positive");
    if (s.alpha < 0) bad("storage cost must be >= 0");
    if (!(s.socStart >= 0 && s.socStart <= 1)) bad("initial state of charge outside [0,1]");
  }
  if (hvac) {
    const auto& v = *hvac;
    if (!(v.inertia >= 0 && v.inertia < 1.0)) bad("HVAC inertia outside [0,1)");
    if (!(v.tMin < v.tMax)) bad("comfort band is empty");
    if (!(v.powerMaxKw > 0)) bad("HVAC power limit must be positive");
    if (!(v.conductance > 0)) bad("HVAC conductance must be positive");
    if (!(v.cop > 0)) bad("HVAC coefficient of performance must be positive");
    if (v.alpha < 0) bad("HVAC cost must be >= 0");
  }
  if (pev) {
    if (!(pev->powerMinKw <= pev->powerMaxKw)) bad("PEV power range is empty");
  }
  if (pv) {
    if (!(pv->areaM2 > 0) || !(pv->efficiency > 0)) bad("PV area/efficiency must be positive");
  }
  if (!(netMinKw <= netMaxKw)) bad("net power range is empty");
}

std::vector<AgentSpec> referenceFleet() {
  std::vector<AgentSpec> fleet(3);
  fleet[0].id = 1;
  fleet[0].name = "loads-storage";
  fleet[0].flexLoad = FlexLoadParams{};
  fleet[0].storage = StorageParams{};
  fleet[1].id = 2;
  fleet[1].name = "ev-charging";
  fleet[1].pev = PevParams{};
  fleet[2].id = 3;
  fleet[2].name = "hvac-solar";
  fleet[2].hvac = HvacParams{};
  fleet[2].pv = PvParams{};
  for (auto& a : fleet) a.validate();
  return fleet;
}

void Horizon::validate() const {
  if (steps < 1) throw DimensionMismatch("horizon needs at least one step");
  if (!(dtHours > 0)) throw DimensionMismatch("interval length must be positive");
}

void ScenarioInput::validate(const std::vector<AgentSpec>& specs, const Horizon& hz) const {
  hz.validate();
  if (agents.size() != specs.size())
    throw DimensionMismatch("scenario covers " + std::to_string(agents.size()) +
                            " agents, fleet has " + std::to_string(specs.size()));
  const int H = hz.steps;
  requireLen(schedule, H, "schedule");
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& sp = specs[i];
    const auto& sc = agents[i];
    const std::string who = "agent " + std::to_string(sp.id);
    if (sp.flexLoad) {
      requireLen(sc.flMin, H, who + " flexible-load lower bound");
      requireLen(sc.flMax, H, who + " flexible-load upper bound");
      requireLen(sc.flRef, H, who + " flexible-load reference");
      for (int t = 0; t < H; ++t)
        if (sc.flMin[t] > sc.flMax[t])
          throw InfeasibleBounds(who + " flexible-load bounds cross at step " +
                                 std::to_string(t));
    }
    if (sp.hasInflexible) requireLen(sc.inflexible, H, who + " inflexible load");
    if (sp.hvac) {
      requireLen(sc.tOut, H, who + " outdoor temperature");
      requireLen(sc.tRefSeries, H, who + " reference temperature");
      requireLen(sc.occupied, H, who + " occupancy");
    }
    if (sp.pv) {
      requireLen(sc.irradiance, H, who + " irradiance");
      if (sc.irradiance.size() > 0 && sc.irradiance.minCoeff() < 0)
        throw RangeError(who + " irradiance must be non-negative");
    }
    if (sp.storage) {
      if (!(sc.soc0 >= 0.0 && sc.soc0 <= 1.0))
        throw RangeError(who + " initial state of charge outside [0,1]");
    }
  }
}

uint64_t hashScenario(const ScenarioInput& scen) {
  uint64_t h = 0xcbf29ce484222325ull;
  h = hashVector(scen.schedule, h);
  for (const auto& a : scen.agents) {
    for (const auto* v : {&a.flMin, &a.flMax, &a.flRef, &a.inflexible, &a.tOut,
                          &a.tRefSeries, &a.occupied, &a.irradiance})
      h = hashVector(*v, h);
    double scalars[3] = {a.hvacT0, a.soc0, a.pevEnergyKwh};
    h = fnv1a(scalars, sizeof scalars, h);
  }
  return h;
}

// ---------------------------------------------------------------------------

VariableIndex VariableIndex::build(const AgentSpec& agent, int steps,
                                   std::vector<int> copyOwnerIds) {
  VariableIndex idx;
  idx.agentId_ = agent.id;
  idx.steps_ = steps;
  int at = 0;
  auto add = [&](Quantity q) {
    idx.offsets_[q] = at;
    at += steps;
  };
  if (agent.flexLoad) add(Quantity::FlexPower);
  if (agent.storage) {
    add(Quantity::EssCharge);
    add(Quantity::EssDischarge);
    add(Quantity::EssSoc);
  }
  if (agent.hvac) {
    add(Quantity::HvacPower);
    add(Quantity::HvacTemp);
  }
  if (agent.pev) add(Quantity::PevPower);
  if (agent.pv) add(Quantity::PvPower);
  idx.globalOffset_ = at;
  add(Quantity::NetPower);
  idx.copyOffset_ = at;
  std::sort(copyOwnerIds.begin(), copyOwnerIds.end());
  for (int owner : copyOwnerIds)
    if (owner == agent.id)
      throw TopologyInconsistent("agent " + std::to_string(agent.id) +
                                 " cannot hold a copy of itself");
  idx.owners_ = std::move(copyOwnerIds);
  idx.total_ = at + int(idx.owners_.size()) * steps;
  return idx;
}

int VariableIndex::at(Quantity q, int t) const {
  auto it = offsets_.find(q);
  if (it == offsets_.end())
    throw DimensionMismatch("agent " + std::to_string(agentId_) +
                            " has no such quantity");
  if (t < 0 || t >= steps_) throw OutOfRange("time step " + std::to_string(t));
  return it->second + t;
}

int VariableIndex::atCopy(int ownerId, int t) const {
  auto it = std::find(owners_.begin(), owners_.end(), ownerId);
  if (it == owners_.end())
    throw TopologyInconsistent("agent " + std::to_string(agentId_) +
                               " holds no copy of agent " + std::to_string(ownerId));
  if (t < 0 || t >= steps_) throw OutOfRange("time step " + std::to_string(t));
  return copyOffset_ + int(it - owners_.begin()) * steps_ + t;
}

VarClass VariableIndex::classOf(int idx) const {
  if (idx < 0 || idx >= total_) throw OutOfRange("index " + std::to_string(idx));
  if (idx < globalOffset_) return VarClass::Local;
  if (idx < copyOffset_) return VarClass::Global;
  return VarClass::Copy;
}

std::vector<int> VariableIndex::stateColumns() const {
  std::vector<int> cols;
  for (Quantity q : {Quantity::EssSoc, Quantity::HvacTemp, Quantity::PvPower,
                     Quantity::NetPower}) {
    auto it = offsets_.find(q);
    if (it == offsets_.end()) continue;
    for (int t = 0; t < steps_; ++t) cols.push_back(it->second + t);
  }
  return cols;
}

// ---------------------------------------------------------------------------

double objectiveValue(const CompactQp& qp, const Eigen::VectorXd& u) {
  if (u.size() != qp.c.size())
    throw DimensionMismatch("objective evaluated on a vector of wrong size");
  return 0.5 * u.dot(qp.qDiag.cwiseProduct(u)) + qp.c.dot(u) + qp.constant;
}

void removeRedundantEqualities(Eigen::MatrixXd& A, Eigen::VectorXd& b,
                               std::vector<std::string>* names, double tol) {
  const int m = int(A.rows());
  const int n = int(A.cols());
  Eigen::MatrixXd work(m, n + 1);
  work.leftCols(n) = A;
  work.col(n) = b;

  std::vector<int> kept;
  std::vector<int> pivotCol;
  for (int r = 0; r < m; ++r) {
    Eigen::RowVectorXd row = work.row(r);
    for (size_t p = 0; p < kept.size(); ++p) {
      const int pc = pivotCol[p];
      const double factor = row[pc] / work(kept[p], pc);
      if (factor != 0.0) row -= factor * work.row(kept[p]);
    }
    int best = -1;
    double bestAbs = tol;
    for (int j = 0; j < n; ++j) {
      if (std::abs(row[j]) > bestAbs) {
        bestAbs = std::abs(row[j]);
        best = j;
      }
    }
    if (best < 0) {
      if (std::abs(row[n]) > 1e-8)
        throw InfeasibleBounds("equality rows are inconsistent (row " +
                               std::to_string(r) + ")");
      continue;  // redundant
    }
    work.row(r) = row;
    kept.push_back(r);
    pivotCol.push_back(best);
  }
  if (int(kept.size()) == m) return;

  Eigen::MatrixXd A2(kept.size(), n);
  Eigen::VectorXd b2(kept.size());
  std::vector<std::string> names2;
  for (size_t i = 0; i < kept.size(); ++i) {
    A2.row(i) = A.row(kept[i]);
    b2[i] = b[kept[i]];
    if (names) names2.push_back((*names)[kept[i]]);
  }
  A = std::move(A2);
  b = std::move(b2);
  if (names) *names = std::move(names2);
}

namespace {

struct Cell {
  int row;
  int col;
  double value;
};

/// Incremental assembly of one agent's rows into a target matrix whose
/// columns may be offset (centralized form stacks agents side by side).
struct AgentRows {
  const AgentSpec& spec;
  const AgentScenario& scen;
  const Horizon& hz;
  const VariableIndex& idx;
  const BuildOptions& opts;
  int colOffset = 0;

  std::vector<Cell> eq, ineq;
  std::vector<double> beq, h;
  std::vector<std::string> eqNames, ineqNames;

  int col(Quantity q, int t) const { return colOffset + idx.at(q, t); }

  void eqTerm(double v, Quantity q, int t) {
    eq.push_back({int(beq.size()), col(q, t), v});
  }
  void endEq(double rhs, std::string name) {
    beq.push_back(rhs);
    eqNames.push_back(std::move(name));
  }
  void ineqTerm(double v, int column) {
    ineq.push_back({int(h.size()), column, v});
  }
  void endIneq(double rhs, std::string name) {
    h.push_back(rhs);
    ineqNames.push_back(std::move(name));
  }
  /// lb <= var <= ub as two one-sided rows.
  void bounds(int column, double lb, double ub, const std::string& name) {
    ineqTerm(-1.0, column);
    endIneq(-lb, name + ".lo");
    ineqTerm(1.0, column);
    endIneq(ub, name + ".hi");
  }

  void deviceRows() {
    const int H = hz.steps;
    const int a = spec.id;
    if (spec.storage) {
      const auto& s = *spec.storage;
      const double cC = s.etaCharge * hz.dtHours / s.capacityKwh;
      const double cD = hz.dtHours / (s.etaDischarge * s.capacityKwh);
      for (int t = 0; t < H; ++t) {
        eqTerm(1.0, Quantity::EssSoc, t);
        if (t > 0) eqTerm(-1.0, Quantity::EssSoc, t - 1);
        eqTerm(-cC, Quantity::EssCharge, t);
        eqTerm(cD, Quantity::EssDischarge, t);
        endEq(t == 0 ? scen.soc0 : 0.0, tag(a, "soc", t));
      }
    }
    if (spec.hvac) {
      const auto& v = *spec.hvac;
      const double gain = (1.0 - v.inertia) * v.cop / v.conductance;
      for (int t = 0; t < H; ++t) {
        eqTerm(1.0, Quantity::HvacTemp, t);
        if (t > 0) eqTerm(-v.inertia, Quantity::HvacTemp, t - 1);
        eqTerm(gain, Quantity::HvacPower, t);
        double rhs = (1.0 - v.inertia) * scen.tOut[t] +
                     (t == 0 ? v.inertia * scen.hvacT0 : 0.0);
        endEq(rhs, tag(a, "temp", t));
      }
    }
    if (spec.pv) {
      for (int t = 0; t < H; ++t) {
        eqTerm(1.0, Quantity::PvPower, t);
        endEq(scen.irradiance[t] * spec.pv->areaM2 * spec.pv->efficiency,
              tag(a, "pv", t));
      }
    }
    for (int t = 0; t < H; ++t) {
      eqTerm(1.0, Quantity::NetPower, t);
      if (spec.pv) eqTerm(-1.0, Quantity::PvPower, t);
      if (spec.storage) {
        eqTerm(-1.0, Quantity::EssDischarge, t);
        eqTerm(1.0, Quantity::EssCharge, t);
      }
      if (spec.flexLoad) eqTerm(1.0, Quantity::FlexPower, t);
      if (spec.hvac) eqTerm(1.0, Quantity::HvacPower, t);
      if (spec.pev) eqTerm(1.0, Quantity::PevPower, t);
      endEq(spec.hasInflexible ? -scen.inflexible[t] : 0.0, tag(a, "net", t));
    }

    // inequality rows
    if (spec.flexLoad)
      for (int t = 0; t < H; ++t)
        bounds(col(Quantity::FlexPower, t), scen.flMin[t], scen.flMax[t],
               tag(a, "fl", t));
    if (spec.storage) {
      const auto& s = *spec.storage;
      for (int t = 0; t < H; ++t)
        bounds(col(Quantity::EssCharge, t), 0.0, s.powerMaxKw, tag(a, "essc", t));
      for (int t = 0; t < H; ++t)
        bounds(col(Quantity::EssDischarge, t), 0.0, s.powerMaxKw, tag(a, "essd", t));
      for (int t = 0; t < H; ++t)
        bounds(col(Quantity::EssSoc, t), s.socMin, s.socMax, tag(a, "soc", t));
    }
    if (spec.hvac) {
      const auto& v = *spec.hvac;
      for (int t = 0; t < H; ++t)
        bounds(col(Quantity::HvacTemp, t), v.tMin, v.tMax, tag(a, "temp", t));
      for (int t = 0; t < H; ++t)
        bounds(col(Quantity::HvacPower, t), 0.0, v.powerMaxKw, tag(a, "hvac", t));
    }
    if (spec.pev) {
      const auto& p = *spec.pev;
      for (int t = 0; t < H; ++t)
        bounds(col(Quantity::PevPower, t), p.powerMinKw, p.powerMaxKw,
               tag(a, "pev", t));
      const double need = std::isnan(scen.pevEnergyKwh) ? p.energyReqKwh
                                                        : scen.pevEnergyKwh;
      const double scale = opts.pevEnergyUsesDt ? hz.dtHours : 1.0;
      for (int t = 0; t < H; ++t) ineqTerm(-scale, col(Quantity::PevPower, t));
      endIneq(-need, "a" + std::to_string(a) + ".pev.energy");
    }
    for (int t = 0; t < H; ++t)
      bounds(col(Quantity::NetPower, t), spec.netMinKw, spec.netMaxKw,
             tag(a, "net", t));
  }

  /// Objective pieces on this agent's own variables.
  void objective(Eigen::VectorXd& qDiag, Eigen::VectorXd& c, double& constant) const {
    const int H = hz.steps;
    if (spec.flexLoad) {
      const double alpha = spec.flexLoad->alpha;
      for (int t = 0; t < H; ++t) {
        const int j = col(Quantity::FlexPower, t);
        qDiag[j] += 2.0 * alpha;
        c[j] -= 2.0 * alpha * scen.flRef[t];
        constant += alpha * scen.flRef[t] * scen.flRef[t];
      }
    }
    if (spec.storage) {
      const double alpha = spec.storage->alpha;
      for (int t = 0; t < H; ++t) {
        c[col(Quantity::EssCharge, t)] += alpha;
        c[col(Quantity::EssDischarge, t)] += alpha;
      }
    }
    if (spec.hvac) {
      const double alpha = spec.hvac->alpha;
      for (int t = 0; t < H; ++t) {
        const double w = alpha * scen.occupied[t];
        const int j = col(Quantity::HvacTemp, t);
        qDiag[j] += 2.0 * w;
        c[j] -= 2.0 * w * scen.tRefSeries[t];
        constant += w * scen.tRefSeries[t] * scen.tRefSeries[t];
      }
    }
  }
};

CompactQp assemble(int nVars, std::vector<AgentRows>& parts,
                   const std::vector<Cell>& extraEq,
                   const std::vector<double>& extraBeq,
                   const std::vector<std::string>& extraEqNames,
                   const std::vector<Cell>& extraIneq,
                   const std::vector<double>& extraH,
                   const std::vector<std::string>& extraIneqNames) {
  CompactQp qp;
  qp.qDiag = Eigen::VectorXd::Zero(nVars);
  qp.c = Eigen::VectorXd::Zero(nVars);

  int eqRows = int(extraBeq.size());
  int ineqRows = int(extraH.size());
  for (const auto& p : parts) {
    eqRows += int(p.beq.size());
    ineqRows += int(p.h.size());
  }
  qp.Aeq = Eigen::MatrixXd::Zero(eqRows, nVars);
  qp.beq.resize(eqRows);
  qp.G = Eigen::MatrixXd::Zero(ineqRows, nVars);
  qp.h.resize(ineqRows);

  int eqAt = 0, ineqAt = 0;
  for (auto& p : parts) {
    for (const auto& tr : p.eq) qp.Aeq(eqAt + tr.row, tr.col) = tr.value;
    for (size_t r = 0; r < p.beq.size(); ++r) {
      qp.beq[eqAt + int(r)] = p.beq[r];
      qp.eqNames.push_back(p.eqNames[r]);
    }
    eqAt += int(p.beq.size());
    for (const auto& tr : p.ineq) qp.G(ineqAt + tr.row, tr.col) = tr.value;
    for (size_t r = 0; r < p.h.size(); ++r) {
      qp.h[ineqAt + int(r)] = p.h[r];
      qp.ineqNames.push_back(p.ineqNames[r]);
    }
    ineqAt += int(p.h.size());
    p.objective(qp.qDiag, qp.c, qp.constant);
  }
  for (const auto& tr : extraEq) qp.Aeq(eqAt + tr.row, tr.col) = tr.value;
  for (size_t r = 0; r < extraBeq.size(); ++r) {
    qp.beq[eqAt + int(r)] = extraBeq[r];
    qp.eqNames.push_back(extraEqNames[r]);
  }
  for (const auto& tr : extraIneq) qp.G(ineqAt + tr.row, tr.col) = tr.value;
  for (size_t r = 0; r < extraH.size(); ++r) {
    qp.h[ineqAt + int(r)] = extraH[r];
    qp.ineqNames.push_back(extraIneqNames[r]);
  }

  removeRedundantEqualities(qp.Aeq, qp.beq, &qp.eqNames);
  return qp;
}

}  // namespace

CompactQp buildCentralized(const std::vector<AgentSpec>& agents,
                           const ScenarioInput& scen, const Horizon& hz,
                           const BuildOptions& opts) {
  for (const auto& a : agents) a.validate();
  scen.validate(agents, hz);
  const int H = hz.steps;

  SystemLayout layout = SystemLayout::build(agents, H);
  std::vector<AgentRows> parts;
  parts.reserve(agents.size());
  for (size_t i = 0; i < agents.size(); ++i) {
    parts.push_back(AgentRows{agents[i], scen.agents[i], hz,
                              layout.agents[i], opts, layout.ownOffset[i]});
    parts.back().deviceRows();
  }

  // schedule coupling: sum of net powers equals the committed output
  std::vector<Cell> eq;
  std::vector<double> beq;
  std::vector<std::string> names;
  for (int t = 0; t < H; ++t) {
    for (size_t i = 0; i < agents.size(); ++i)
      eq.push_back({t, layout.ownOffset[i] + layout.agents[i].at(Quantity::NetPower, t), 1.0});
    beq.push_back(scen.schedule[t]);
    names.push_back("sched[" + std::to_string(t) + "]");
  }
  return assemble(layout.centralSize, parts, eq, beq, names, {}, {}, {});
}

CompactQp buildAgentLocal(const std::vector<AgentSpec>& agents, int self,
                          const ScenarioInput& scen, const Horizon& hz,
                          const VariableIndex& idx, const BuildOptions& opts) {
  if (self < 0 || self >= int(agents.size()))
    throw DimensionMismatch("agent index out of range");
  agents[self].validate();
  scen.validate(agents, hz);
  const int H = hz.steps;

  std::vector<AgentRows> parts;
  parts.push_back(AgentRows{agents[self], scen.agents[self], hz, idx, opts, 0});
  parts.back().deviceRows();

  std::vector<Cell> eq, ineq;
  std::vector<double> beq, h;
  std::vector<std::string> eqNames, ineqNames;

  // local share of the schedule constraint: own net power plus the copies
  // of every other agent's net power
  for (int t = 0; t < H; ++t) {
    eq.emplace_back(t, idx.at(Quantity::NetPower, t), 1.0);
    for (int owner : idx.copyOwners()) eq.emplace_back(t, idx.atCopy(owner, t), 1.0);
    beq.push_back(scen.schedule[t]);
    eqNames.push_back("a" + std::to_string(agents[self].id) + ".sched[" +
                      std::to_string(t) + "]");
  }

  if (opts.copyBounds) {
    for (int owner : idx.copyOwners()) {
      const AgentSpec* ospec = nullptr;
      for (const auto& a : agents)
        if (a.id == owner) ospec = &a;
      if (!ospec)
        throw TopologyInconsistent("copy owner " + std::to_string(owner) +
                                   " is not part of the fleet");
      for (int t = 0; t < H; ++t) {
        const int column = idx.atCopy(owner, t);
        ineq.push_back({int(h.size()), column, -1.0});
        h.push_back(-ospec->netMinKw);
        ineqNames.push_back(tag(agents[self].id, "copy", t) + ".lo");
        ineq.push_back({int(h.size()), column, 1.0});
        h.push_back(ospec->netMaxKw);
        ineqNames.push_back(tag(agents[self].id, "copy", t) + ".hi");
      }
    }
  }

  return assemble(idx.size(), parts, eq, beq, eqNames, ineq, h, ineqNames);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd SelectorMatrix::apply(const Eigen::VectorXd& v) const {
  if (int(v.size()) != cols)
    throw DimensionMismatch("selector applied to a vector of wrong size");
  Eigen::VectorXd out(pick.size());
  for (size_t r = 0; r < pick.size(); ++r) out[int(r)] = v[pick[r]];
  return out;
}

Eigen::MatrixXd SelectorMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(int(pick.size()), cols);
  for (size_t r = 0; r < pick.size(); ++r) m(int(r), pick[r]) = 1.0;
  return m;
}

Selectors buildSelectors(const std::vector<VariableIndex>& indices) {
  const int n = int(indices.size());
  Selectors sel;
  sel.consensus.resize(n);
  sel.mirrored.resize(n);

  std::map<int, int> agentPos;  // id -> position
  for (int i = 0; i < n; ++i) agentPos[indices[i].agentId()] = i;

  for (int i = 0; i < n; ++i) {
    const auto& idx = indices[i];
    const int H = idx.steps();

    // stack of other agents' global blocks, in position order
    int globalCols = 0;
    std::map<int, int> globalOffset;  // position -> offset in stack
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      globalOffset[j] = globalCols;
      globalCols += indices[j].steps();
    }
    SelectorMatrix ic;
    ic.cols = globalCols;
    for (int owner : idx.copyOwners()) {
      auto it = agentPos.find(owner);
      if (it == agentPos.end())
        throw TopologyInconsistent("copy owner " + std::to_string(owner) +
                                   " does not exist");
      for (int t = 0; t < H; ++t) ic.pick.push_back(globalOffset[it->second] + t);
    }
    sel.consensus[i] = std::move(ic);

    // stack of other agents' copy blocks, in position order
    int copyCols = 0;
    std::map<int, int> copyOffset;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      copyOffset[j] = copyCols;
      copyCols += indices[j].size() - indices[j].copyOffset();
    }
    SelectorMatrix ig;
    ig.cols = copyCols;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& other = indices[j];
      const auto& owners = other.copyOwners();
      auto it = std::find(owners.begin(), owners.end(), idx.agentId());
      if (it == owners.end()) continue;  // j holds no copy of i
      const int block = int(it - owners.begin());
      for (int t = 0; t < other.steps(); ++t)
        ig.pick.push_back(copyOffset[j] + block * other.steps() + t);
    }
    sel.mirrored[i] = std::move(ig);
  }
  return sel;
}

// ---------------------------------------------------------------------------

SystemLayout SystemLayout::build(const std::vector<AgentSpec>& specs, int steps) {
  SystemLayout layout;
  std::vector<int> ids;
  for (const auto& s : specs) ids.push_back(s.id);
  for (size_t i = 0; i < specs.size(); ++i) {
    std::vector<int> others;
    for (int id : ids)
      if (id != specs[i].id) others.push_back(id);
    layout.agents.push_back(VariableIndex::build(specs[i], steps, others));
    layout.ownOffset.push_back(layout.centralSize);
    layout.centralSize += layout.agents.back().ownSize();
  }
  return layout;
}

Eigen::VectorXd SystemLayout::ownSlice(const Eigen::VectorXd& uCentral, int agent) const {
  return uCentral.segment(ownOffset[agent], agents[agent].ownSize());
}

Eigen::VectorXd SystemLayout::expandWithCopies(const Eigen::VectorXd& uCentral,
                                               int agent) const {
  const auto& idx = agents[agent];
  Eigen::VectorXd out(idx.size());
  out.head(idx.ownSize()) = ownSlice(uCentral, agent);
  for (int owner : idx.copyOwners()) {
    int pos = -1;
    for (size_t j = 0; j < agents.size(); ++j)
      if (agents[j].agentId() == owner) pos = int(j);
    if (pos < 0)
      throw TopologyInconsistent("copy owner " + std::to_string(owner) +
                                 " missing from the layout");
    for (int t = 0; t < idx.steps(); ++t)
      out[idx.atCopy(owner, t)] =
          uCentral[ownOffset[pos] + agents[pos].at(Quantity::NetPower, t)];
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd buildAgentInput(const AgentSpec& agent, const AgentScenario& scen,
                                const Eigen::VectorXd& schedule) {
  std::vector<double> v;
  auto push = [&](const Eigen::VectorXd& series) {
    for (int t = 0; t < series.size(); ++t) v.push_back(series[t]);
  };
  if (agent.flexLoad) {
    push(scen.flMin);
    push(scen.flMax);
    push(scen.flRef);
  }
  if (agent.storage) v.push_back(scen.soc0);
  if (agent.hvac) {
    v.push_back(scen.hvacT0);
    push(scen.tOut);
    push(scen.tRefSeries);
    push(scen.occupied);
  }
  if (agent.pev)
    v.push_back(std::isnan(scen.pevEnergyKwh) ? agent.pev->energyReqKwh
                                              : scen.pevEnergyKwh);
  if (agent.pv) push(scen.irradiance);
  if (agent.hasInflexible) push(scen.inflexible);
  push(schedule);
  return Eigen::Map<Eigen::VectorXd>(v.data(), int(v.size()));
}

std::vector<std::string> agentInputLayout(const AgentSpec& agent, int steps) {
  std::vector<std::string> out;
  auto series = [&](const std::string& base) {
    for (int t = 0; t < steps; ++t) out.push_back(base + "[" + std::to_string(t) + "]");
  };
  if (agent.flexLoad) {
    series("fl.min");
    series("fl.max");
    series("fl.ref");
  }
  if (agent.storage) out.push_back("ess.soc0");
  if (agent.hvac) {
    out.push_back("hvac.t0");
    series("hvac.tout");
    series("hvac.tref");
    series("hvac.occupied");
  }
  if (agent.pev) out.push_back("pev.energy");
  if (agent.pv) series("pv.irradiance");
  if (agent.hasInflexible) series("il.load");
  series("schedule");
  return out;
}

}  // namespace loopmac::vpp
