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

#include "loopmac/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace loopmac::io {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

/// Low-order sinusoids with seeded phases plus circularly smoothed noise,
/// clipped to [lo, hi]. Circular smoothing keeps the series periodic so
/// wrapped slicing stays smooth.
Eigen::VectorXd smoothSeries(Rng& rng, double base, double amp1, double peakHour,
                             double amp2, double amp3, double noiseAmp,
                             double lo, double hi) {
  const int n = kSamplesPerDay;
  const double ph2 = rng.uniform(0.0, kTwoPi);
  const double ph3 = rng.uniform(0.0, kTwoPi);
  Eigen::VectorXd raw(n);
  for (int t = 0; t < n; ++t) raw[t] = rng.normal();
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < n; ++t)
    for (int k = -3; k <= 3; ++k) noise[t] += raw[((t + k) % n + n) % n] / 7.0;

  Eigen::VectorXd out(n);
  for (int t = 0; t < n; ++t) {
    const double tau = t / 12.0;  // hours
    double v = base + amp1 * std::cos(kTwoPi * (tau - peakHour) / 24.0) +
               amp2 * std::sin(2.0 * kTwoPi * tau / 24.0 + ph2) +
               amp3 * std::sin(3.0 * kTwoPi * tau / 24.0 + ph3) +
               noiseAmp * noise[t];
    out[t] = std::min(hi, std::max(lo, v));
  }
  return out;
}

std::string seriesName(int agentId, const char* field) {
  return "agent" + std::to_string(agentId) + "." + field;
}

struct SeriesSpec {
  const char* field;
  const char* unit;
};

const std::map<std::string, SeriesSpec>& knownSeries() {
  static const std::map<std::string, SeriesSpec> m = {
      {"inflexible", {"inflexible", "kW"}},
      {"fl_min", {"fl_min", "kW"}},
      {"fl_max", {"fl_max", "kW"}},
      {"fl_ref", {"fl_ref", "kW"}},
      {"t_out", {"t_out", "degF"}},
      {"t_ref", {"t_ref", "degF"}},
      {"occupied", {"occupied", "flag"}},
      {"irradiance", {"irradiance", "kW/m2"}},
      {"pev_energy", {"pev_energy", "kWh_per_h"}},
  };
  return m;
}

double parseNumber(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": not a number: '" + s + "'");
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void DayProfileSet::validate(const std::vector<vpp::AgentSpec>& specs) const {
  if (agents.size() != specs.size())
    throw DimensionMismatch("profile set covers " + std::to_string(agents.size()) +
                            " agents, fleet has " + std::to_string(specs.size()));
  auto len = [&](const Eigen::VectorXd& v, const std::string& what) {
    if (int(v.size()) != kSamplesPerDay)
      throw SchemaError(what + " must carry " + std::to_string(kSamplesPerDay) +
                        " samples, found " + std::to_string(v.size()));
  };
  len(schedule, "schedule");
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& sp = specs[i];
    const auto& pr = agents[i];
    const std::string who = "agent " + std::to_string(sp.id);
    if (sp.hasInflexible) {
      len(pr.inflexible, who + " inflexible");
      if (pr.inflexible.minCoeff() < 0) throw RangeError(who + " inflexible < 0");
    }
    if (sp.flexLoad) {
      len(pr.flMin, who + " fl_min");
      len(pr.flMax, who + " fl_max");
      len(pr.flRef, who + " fl_ref");
      if ((pr.flMax - pr.flMin).minCoeff() < 0)
        throw RangeError(who + " flexible-load bounds cross");
    }
    if (sp.hvac) {
      len(pr.tOut, who + " t_out");
      len(pr.tRef, who + " t_ref");
      len(pr.occupied, who + " occupied");
      for (int t = 0; t < kSamplesPerDay; ++t)
        if (pr.occupied[t] != 0.0 && pr.occupied[t] != 1.0)
          throw RangeError(who + " occupancy must be 0 or 1");
    }
    if (sp.pv) {
      len(pr.irradiance, who + " irradiance");
      if (pr.irradiance.minCoeff() < 0) throw RangeError(who + " irradiance < 0");
    }
    if (sp.pev) {
      len(pr.pevEnergyRate, who + " pev_energy");
      if (pr.pevEnergyRate.minCoeff() < 0) throw RangeError(who + " pev_energy < 0");
    }
  }
}

DayProfileSet synthesizeDay(const std::vector<vpp::AgentSpec>& specs, uint64_t seed) {
  Rng rng(seed);
  DayProfileSet day;
  day.agents.resize(specs.size());

  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& sp = specs[i];
    auto& pr = day.agents[i];
    if (sp.hasInflexible)
      pr.inflexible = smoothSeries(rng, 16.0, 4.0, 18.0, 1.5, 0.8, 0.8, 10.0, 25.0);
    if (sp.flexLoad) {
      pr.flRef = smoothSeries(rng, 16.0, 4.5, 19.0, 1.2, 0.7, 0.8, 10.0, 25.0);
      pr.flMin = (0.5 * pr.flRef).cwiseMax(0.0);
      pr.flMax = 1.5 * pr.flRef;
    }
    if (sp.hvac) {
      pr.tOut = smoothSeries(rng, 82.0, 8.0, 15.0, 1.0, 0.5, 0.6, 70.0, 95.0);
      pr.tRef = Eigen::VectorXd::Constant(kSamplesPerDay, sp.hvac->tRef);
      pr.occupied = Eigen::VectorXd::Ones(kSamplesPerDay);
    }
    if (sp.pv) {
      Eigen::VectorXd bump = smoothSeries(rng, 0.0, 0.0, 12.0, 0.02, 0.01, 0.02, -0.05, 0.05);
      pr.irradiance = Eigen::VectorXd::Zero(kSamplesPerDay);
      const double peak = rng.uniform(0.9, 1.0);
      for (int t = 0; t < kSamplesPerDay; ++t) {
        const double tau = t / 12.0;
        if (tau <= 6.0 || tau >= 20.0) continue;  // dark outside 06:00-20:00
        double v = peak * std::pow(std::sin(M_PI * (tau - 6.0) / 14.0), 1.3) + bump[t];
        pr.irradiance[t] = std::min(1.05, std::max(0.0, v));
      }
    }
    if (sp.pev)
      pr.pevEnergyRate = smoothSeries(rng, 13.0, 5.0, 13.0, 1.5, 0.8, 0.7, 10.0, 22.0);
  }

  // The committed schedule follows the fleet's expected net output so every
  // window admits a feasible dispatch. Inside the PV window it is pushed
  // into the 45..115 kW committed band; storage headroom absorbs the gap.
  Eigen::VectorXd est = Eigen::VectorXd::Zero(kSamplesPerDay);
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& sp = specs[i];
    const auto& pr = day.agents[i];
    for (int t = 0; t < kSamplesPerDay; ++t) {
      double v = 0.0;
      if (sp.pv) v += pr.irradiance[t] * sp.pv->areaM2 * sp.pv->efficiency;
      if (sp.hasInflexible) v -= pr.inflexible[t];
      if (sp.flexLoad) v -= pr.flRef[t];
      if (sp.pev) v -= pr.pevEnergyRate[t];
      if (sp.hvac)
        v -= std::min(sp.hvac->powerMaxKw,
                      std::max(0.0, (pr.tOut[t] - sp.hvac->tRef) *
                                        sp.hvac->conductance / sp.hvac->cop));
      est[t] += v;
    }
  }
  Eigen::VectorXd smoothEst = Eigen::VectorXd::Zero(kSamplesPerDay);
  for (int t = 0; t < kSamplesPerDay; ++t) {
    for (int k = -4; k <= 4; ++k)
      smoothEst[t] += est[((t + k) % kSamplesPerDay + kSamplesPerDay) % kSamplesPerDay] / 9.0;
  }
  Eigen::VectorXd wiggle = smoothSeries(rng, 0.0, 0.0, 12.0, 1.2, 0.8, 0.8, -4.0, 4.0);
  day.schedule.resize(kSamplesPerDay);
  for (int t = 0; t < kSamplesPerDay; ++t) {
    double raw = smoothEst[t] + wiggle[t];
    day.schedule[t] = raw >= 45.0 ? std::min(raw, 115.0) : raw;
  }

  day.validate(specs);
  return day;
}

// ---------------------------------------------------------------------------
// agents.conf

namespace {

void writeConf(const std::string& path, const std::vector<vpp::AgentSpec>& specs) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write " + path);
  f << "# loopmac agent specification\n";
  f << "schema = 1\n";
  for (const auto& a : specs) {
    f << "\n[agent." << a.id << "]\n";
    if (!a.name.empty()) f << "name = " << a.name << "\n";
    f << "inflexible = " << (a.hasInflexible ? "true" : "false") << "\n";
    f << "net.min_kw = " << fmtDouble(a.netMinKw) << "\n";
    f << "net.max_kw = " << fmtDouble(a.netMaxKw) << "\n";
    if (a.flexLoad) f << "flexload.alpha = " << fmtDouble(a.flexLoad->alpha) << "\n";
    if (a.storage) {
      const auto& s = *a.storage;
      f << "storage.power_max_kw = " << fmtDouble(s.powerMaxKw) << "\n";
      f << "storage.eta_charge = " << fmtDouble(s.etaCharge) << "\n";
      f << "storage.eta_discharge = " << fmtDouble(s.etaDischarge) << "\n";
      f << "storage.capacity_kwh = " << fmtDouble(s.capacityKwh) << "\n";
      f << "storage.soc_min = " << fmtDouble(s.socMin) << "\n";
      f << "storage.soc_max = " << fmtDouble(s.socMax) << "\n";
      f << "storage.soc_start = " << fmtDouble(s.socStart) << "\n";
      f << "storage.alpha = " << fmtDouble(s.alpha) << "\n";
    }
    if (a.hvac) {
      const auto& v = *a.hvac;
      f << "hvac.inertia = " << fmtDouble(v.inertia) << "\n";
      f << "hvac.cop = " << fmtDouble(v.cop) << "\n";
      f << "hvac.conductance = " << fmtDouble(v.conductance) << "\n";
      f << "hvac.t_min = " << fmtDouble(v.tMin) << "\n";
      f << "hvac.t_max = " << fmtDouble(v.tMax) << "\n";
      f << "hvac.t_ref = " << fmtDouble(v.tRef) << "\n";
      f << "hvac.power_max_kw = " << fmtDouble(v.powerMaxKw) << "\n";
      f << "hvac.alpha = " << fmtDouble(v.alpha) << "\n";
    }
    if (a.pev) {
      const auto& p = *a.pev;
      f << "pev.power_min_kw = " << fmtDouble(p.powerMinKw) << "\n";
      f << "pev.power_max_kw = " << fmtDouble(p.powerMaxKw) << "\n";
      f << "pev.energy_req_kwh = " << fmtDouble(p.energyReqKwh) << "\n";
    }
    if (a.pv) {
      f << "pv.area_m2 = " << fmtDouble(a.pv->areaM2) << "\n";
      f << "pv.efficiency = " << fmtDouble(a.pv->efficiency) << "\n";
    }
  }
}

std::vector<vpp::AgentSpec> parseConf(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot read " + path);

  std::map<int, std::map<std::string, std::string>> sections;
  int currentAgent = -1;
  bool schemaSeen = false;
  std::string line;
  int lineNo = 0;
  while (std::getline(f, line)) {
    ++lineNo;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineNo);
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + ": unterminated section");
      std::string sec = line.substr(1, line.size() - 2);
      if (sec.rfind("agent.", 0) != 0)
        throw SchemaError(where + ": unknown section [" + sec + "]");
      currentAgent = int(parseNumber(sec.substr(6), where));
      if (sections.count(currentAgent))
        throw SchemaError(where + ": duplicate section [" + sec + "]");
      sections[currentAgent] = {};
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (currentAgent < 0) {
      if (key == "schema") {
        if (value != "1") throw SchemaError(where + ": unsupported schema " + value);
        schemaSeen = true;
        continue;
      }
      throw SchemaError(where + ": key '" + key + "' outside any [agent.*] section");
    }
    sections[currentAgent][key] = value;
  }
  if (!schemaSeen) throw SchemaError(path + ": missing 'schema = 1'");
  if (sections.empty()) throw SchemaError(path + ": no [agent.*] sections");

  std::vector<vpp::AgentSpec> specs;
  for (auto& [id, kv] : sections) {
    vpp::AgentSpec a;
    a.id = id;
    const std::string who = "agent " + std::to_string(id);
    auto take = [&](const char* key) -> std::optional<std::string> {
      auto it = kv.find(key);
      if (it == kv.end()) return std::nullopt;
      std::string v = it->second;
      kv.erase(it);
      return v;
    };
    auto need = [&](const char* key) -> double {
      auto v = take(key);
      if (!v) throw SchemaError(who + ": missing " + key);
      return parseNumber(*v, who + " " + key);
    };
    auto hasPrefix = [&](const char* prefix) {
      for (const auto& [k, v] : kv)
        if (k.rfind(prefix, 0) == 0) return true;
      return false;
    };

    if (auto v = take("name")) a.name = *v;
    if (auto v = take("inflexible")) {
      if (*v != "true" && *v != "false")
        throw SchemaError(who + ": inflexible must be true or false");
      a.hasInflexible = (*v == "true");
    }
    if (auto v = take("net.min_kw")) a.netMinKw = parseNumber(*v, who + " net.min_kw");
    if (auto v = take("net.max_kw")) a.netMaxKw = parseNumber(*v, who + " net.max_kw");

    if (hasPrefix("flexload.")) {
      vpp::FlexLoadParams fl;
      fl.alpha = need("flexload.alpha");
      a.flexLoad = fl;
    }
    if (hasPrefix("storage.")) {
      vpp::StorageParams s;
      s.powerMaxKw = need("storage.power_max_kw");
      s.etaCharge = need("storage.eta_charge");
      s.etaDischarge = need("storage.eta_discharge");
      s.capacityKwh = need("storage.capacity_kwh");
      s.socMin = need("storage.soc_min");
      s.socMax = need("storage.soc_max");
      s.socStart = need("storage.soc_start");
      s.alpha = need("storage.alpha");
      a.storage = s;
    }
    if (hasPrefix("hvac.")) {
      vpp::HvacParams v;
      v.inertia = need("hvac.inertia");
      v.cop = need("hvac.cop");
      v.conductance = need("hvac.conductance");
      v.tMin = need("hvac.t_min");
      v.tMax = need("hvac.t_max");
      v.tRef = need("hvac.t_ref");
      v.powerMaxKw = need("hvac.power_max_kw");
      v.alpha = need("hvac.alpha");
      a.hvac = v;
    }
    if (hasPrefix("pev.")) {
      vpp::PevParams p;
      p.powerMinKw = need("pev.power_min_kw");
      p.powerMaxKw = need("pev.power_max_kw");
      p.energyReqKwh = need("pev.energy_req_kwh");
      a.pev = p;
    }
    if (hasPrefix("pv.")) {
      vpp::PvParams p;
      p.areaM2 = need("pv.area_m2");
      p.efficiency = need("pv.efficiency");
      a.pv = p;
    }
    if (!kv.empty()) throw SchemaError(who + ": unknown key '" + kv.begin()->first + "'");
    a.validate();
    specs.push_back(std::move(a));
  }
  return specs;
}

void writeSeriesCsv(std::ofstream& f, const std::string& name,
                    const Eigen::VectorXd& v, const char* unit) {
  for (int t = 0; t < v.size(); ++t)
    f << t << "," << name << "," << fmtDouble(v[t]) << "," << unit << "\n";
}

}  // namespace

void writeScenarioDir(const std::string& dir,
                      const std::vector<vpp::AgentSpec>& specs,
                      const DayProfileSet& day) {
  day.validate(specs);
  fs::create_directories(dir);
  writeConf((fs::path(dir) / "agents.conf").string(), specs);

  std::ofstream pf(fs::path(dir) / "profiles.csv");
  if (!pf) throw ParseError("cannot write profiles.csv under " + dir);
  pf << "t,series,value,unit\n";
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& sp = specs[i];
    const auto& pr = day.agents[i];
    if (sp.hasInflexible)
      writeSeriesCsv(pf, seriesName(sp.id, "inflexible"), pr.inflexible, "kW");
    if (sp.flexLoad) {
      writeSeriesCsv(pf, seriesName(sp.id, "fl_min"), pr.flMin, "kW");
      writeSeriesCsv(pf, seriesName(sp.id, "fl_max"), pr.flMax, "kW");
      writeSeriesCsv(pf, seriesName(sp.id, "fl_ref"), pr.flRef, "kW");
    }
    if (sp.hvac) {
      writeSeriesCsv(pf, seriesName(sp.id, "t_out"), pr.tOut, "degF");
      writeSeriesCsv(pf, seriesName(sp.id, "t_ref"), pr.tRef, "degF");
      writeSeriesCsv(pf, seriesName(sp.id, "occupied"), pr.occupied, "flag");
    }
    if (sp.pv)
      writeSeriesCsv(pf, seriesName(sp.id, "irradiance"), pr.irradiance, "kW/m2");
    if (sp.pev)
      writeSeriesCsv(pf, seriesName(sp.id, "pev_energy"), pr.pevEnergyRate, "kWh_per_h");
  }

  std::ofstream sf(fs::path(dir) / "schedule.csv");
  if (!sf) throw ParseError("cannot write schedule.csv under " + dir);
  sf << "t,series,value,unit\n";
  writeSeriesCsv(sf, "schedule", day.schedule, "kW");
}

std::pair<std::vector<vpp::AgentSpec>, DayProfileSet> loadScenario(
    const std::string& dir) {
  const fs::path base(dir);
  if (!fs::exists(base / "agents.conf"))
    throw ParseError("missing " + (base / "agents.conf").string());
  auto specs = parseConf((base / "agents.conf").string());

  std::map<int, size_t> byId;
  for (size_t i = 0; i < specs.size(); ++i) byId[specs[i].id] = i;

  DayProfileSet day;
  day.agents.resize(specs.size());

  auto readCsv = [&](const std::string& path, bool scheduleFile) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot read " + path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    if (trim(line) != "t,series,value,unit")
      throw SchemaError(path + ": header must be 't,series,value,unit'");
    std::map<std::string, std::vector<std::pair<int, double>>> rows;
    std::map<std::string, std::string> units;
    int lineNo = 1;
    while (std::getline(f, line)) {
      ++lineNo;
      if (trim(line).empty()) continue;
      auto cells = splitCsv(line);
      const std::string where = path + ":" + std::to_string(lineNo);
      if (cells.size() != 4) throw ParseError(where + ": expected 4 columns");
      int t = int(parseNumber(cells[0], where));
      std::string series = trim(cells[1]);
      double value = parseNumber(cells[2], where);
      rows[series].emplace_back(t, value);
      auto [it, inserted] = units.emplace(series, trim(cells[3]));
      if (!inserted && it->second != trim(cells[3]))
        throw SchemaError(where + ": unit changed within series " + series);
    }
    for (auto& [series, samples] : rows) {
      Eigen::VectorXd v = Eigen::VectorXd::Constant(kSamplesPerDay,
                                                    std::numeric_limits<double>::quiet_NaN());
      for (auto& [t, value] : samples) {
        if (t < 0 || t >= kSamplesPerDay)
          throw RangeError(path + ": sample index " + std::to_string(t) +
                           " outside the day");
        v[t] = value;
      }
      for (int t = 0; t < kSamplesPerDay; ++t)
        if (std::isnan(v[t]))
          throw SchemaError(path + ": series " + series + " missing sample " +
                            std::to_string(t));

      if (scheduleFile) {
        if (series != "schedule")
          throw SchemaError(path + ": unknown series " + series);
        if (units[series] != "kW")
          throw SchemaError(path + ": schedule must be in kW");
        day.schedule = v;
        continue;
      }
      auto dot = series.find('.');
      if (dot == std::string::npos || series.rfind("agent", 0) != 0)
        throw SchemaError(path + ": unknown series " + series);
      int id = int(parseNumber(series.substr(5, dot - 5), path));
      auto agentIt = byId.find(id);
      if (agentIt == byId.end())
        throw SchemaError(path + ": series " + series + " names an unknown agent");
      std::string field = series.substr(dot + 1);
      auto specIt = knownSeries().find(field);
      if (specIt == knownSeries().end())
        throw SchemaError(path + ": unknown series " + series);
      if (units[series] != specIt->second.unit)
        throw SchemaError(path + ": series " + series + " must be in " +
                          specIt->second.unit);
      auto& pr = day.agents[agentIt->second];
      if (field == "inflexible") pr.inflexible = v;
      else if (field == "fl_min") pr.flMin = v;
      else if (field == "fl_max") pr.flMax = v;
      else if (field == "fl_ref") pr.flRef = v;
      else if (field == "t_out") pr.tOut = v;
      else if (field == "t_ref") pr.tRef = v;
      else if (field == "occupied") pr.occupied = v;
      else if (field == "irradiance") pr.irradiance = v;
      else if (field == "pev_energy") pr.pevEnergyRate = v;
    }
  };

  readCsv((base / "profiles.csv").string(), false);
  readCsv((base / "schedule.csv").string(), true);

  // defaults for optional HVAC series
  for (size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].hvac) {
      if (day.agents[i].tRef.size() == 0)
        day.agents[i].tRef = Eigen::VectorXd::Constant(kSamplesPerDay, specs[i].hvac->tRef);
      if (day.agents[i].occupied.size() == 0)
        day.agents[i].occupied = Eigen::VectorXd::Ones(kSamplesPerDay);
    }
  }
  if (day.schedule.size() == 0) throw SchemaError(dir + ": schedule.csv carries no schedule");
  day.validate(specs);
  return {std::move(specs), std::move(day)};
}

// ---------------------------------------------------------------------------

RollingState RollingState::dayStart(const std::vector<vpp::AgentSpec>& specs) {
  RollingState st;
  for (const auto& a : specs) {
    if (a.storage) st.soc[a.id] = a.storage->socStart;
    if (a.hvac) st.indoorTemp[a.id] = a.hvac->tRef;
  }
  return st;
}

namespace {

vpp::ScenarioInput sliceImpl(const DayProfileSet& day,
                             const std::vector<vpp::AgentSpec>& specs,
                             const RollingState& states, int tStart, int H,
                             double dtHours, bool wrap) {
  if (H < 1) throw OutOfRange("window length must be positive");
  if (!wrap && (tStart < 0 || tStart + H > kSamplesPerDay))
    throw OutOfRange("window [" + std::to_string(tStart) + ", " +
                     std::to_string(tStart + H) + ") does not fit the day");
  if (wrap && (tStart < 0 || tStart >= kSamplesPerDay))
    throw OutOfRange("window start " + std::to_string(tStart) +
                     " outside the day");
  day.validate(specs);

  auto slice = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(H);
    for (int t = 0; t < H; ++t) out[t] = v[(tStart + t) % kSamplesPerDay];
    return out;
  };

  vpp::ScenarioInput scen;
  scen.schedule = slice(day.schedule);
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& sp = specs[i];
    const auto& pr = day.agents[i];
    vpp::AgentScenario a;
    if (sp.hasInflexible) a.inflexible = slice(pr.inflexible);
    if (sp.flexLoad) {
      a.flMin = slice(pr.flMin);
      a.flMax = slice(pr.flMax);
      a.flRef = slice(pr.flRef);
    }
    if (sp.hvac) {
      a.tOut = slice(pr.tOut);
      a.tRefSeries = slice(pr.tRef);
      a.occupied = slice(pr.occupied);
      auto it = states.indoorTemp.find(sp.id);
      a.hvacT0 = it != states.indoorTemp.end() ? it->second : sp.hvac->tRef;
    }
    if (sp.pv) a.irradiance = slice(pr.irradiance);
    if (sp.storage) {
      auto it = states.soc.find(sp.id);
      a.soc0 = it != states.soc.end() ? it->second : sp.storage->socStart;
    }
    if (sp.pev) {
      const Eigen::VectorXd rate = slice(pr.pevEnergyRate);
      a.pevEnergyKwh = rate.mean() * double(H) * dtHours;
    }
    scen.agents.push_back(std::move(a));
  }
  return scen;
}

}  // namespace

vpp::ScenarioInput sliceHorizon(const DayProfileSet& day,
                                const std::vector<vpp::AgentSpec>& specs,
                                const RollingState& states, int tStart, int H,
                                double dtHours) {
  return sliceImpl(day, specs, states, tStart, H, dtHours, false);
}

vpp::ScenarioInput sliceHorizonWrapped(const DayProfileSet& day,
                                       const std::vector<vpp::AgentSpec>& specs,
                                       const RollingState& states, int tStart,
                                       int H, double dtHours) {
  return sliceImpl(day, specs, states, tStart, H, dtHours, true);
}

RollingState advanceStates(const RollingState& states,
                           const std::vector<vpp::AgentSpec>& specs,
                           const vpp::SystemLayout& layout,
                           const vpp::ScenarioInput& scen,
                           const Eigen::VectorXd& uCentral, int applySteps,
                           double dtHours) {
  RollingState next = states;
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& sp = specs[i];
    const auto& idx = layout.agents[i];
    const int off = layout.ownOffset[i];
    if (sp.storage) {
      const auto& s = *sp.storage;
      double soc = scen.agents[i].soc0;
      for (int t = 0; t < applySteps; ++t) {
        const double pc = uCentral[off + idx.at(vpp::Quantity::EssCharge, t)];
        const double pd = uCentral[off + idx.at(vpp::Quantity::EssDischarge, t)];
        soc += (pc * s.etaCharge - pd / s.etaDischarge) * dtHours / s.capacityKwh;
      }
      next.soc[sp.id] = soc;
    }
    if (sp.hvac) {
      const auto& v = *sp.hvac;
      double temp = scen.agents[i].hvacT0;
      for (int t = 0; t < applySteps; ++t) {
        const double p = uCentral[off + idx.at(vpp::Quantity::HvacPower, t)];
        temp = v.inertia * temp +
               (1.0 - v.inertia) * (scen.agents[i].tOut[t] - v.cop / v.conductance * p);
      }
      next.indoorTemp[sp.id] = temp;
    }
  }
  return next;
}

}  // namespace loopmac::io
