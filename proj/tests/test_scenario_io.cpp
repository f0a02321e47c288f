#include <doctest.h>

#include <loopmac/qp.hpp>
#include <loopmac/scenario_io.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace loopmac;
using namespace loopmac::io;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("loopmac_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

qp::Solution solveWindow(const std::vector<vpp::AgentSpec>& fleet,
                         const vpp::ScenarioInput& scen, const vpp::Horizon& hz) {
  auto c = vpp::buildCentralized(fleet, scen, hz);
  qp::Problem p{c.qDiag, c.c, c.Aeq, c.beq, c.G, c.h};
  return qp::solve(p);
}

}  // namespace

TEST_CASE("synthesized day stays in the documented ranges") {
  auto fleet = vpp::referenceFleet();
  auto day = synthesizeDay(fleet, 7);

  for (size_t i = 0; i < fleet.size(); ++i) {
    if (!fleet[i].hasInflexible) continue;
    CHECK(day.agents[i].inflexible.minCoeff() >= 10.0);
    CHECK(day.agents[i].inflexible.maxCoeff() <= 25.0);
  }
  CHECK(day.agents[0].flRef.minCoeff() >= 10.0);
  CHECK(day.agents[0].flRef.maxCoeff() <= 25.0);
  CHECK(day.agents[1].pevEnergyRate.minCoeff() >= 10.0);
  CHECK(day.agents[1].pevEnergyRate.maxCoeff() <= 22.0);

  // dark at midnight, zero outside 06:00-20:00, peak near noon
  const auto& irr = day.agents[2].irradiance;
  CHECK(irr[0] == 0.0);
  CHECK(irr[12 * 5] == 0.0);
  CHECK(irr[12 * 21] == 0.0);
  CHECK(irr.maxCoeff() > 0.5);
  CHECK(irr.minCoeff() >= 0.0);

  // committed band holds while PV output is strong
  for (int t = 11 * 12; t <= 15 * 12; ++t) {
    CHECK(day.schedule[t] >= 45.0);
    CHECK(day.schedule[t] <= 115.0);
  }
}

TEST_CASE("synthesis is deterministic under the seed") {
  auto fleet = vpp::referenceFleet();
  auto a = synthesizeDay(fleet, 123);
  auto b = synthesizeDay(fleet, 123);
  CHECK(a.schedule == b.schedule);
  for (size_t i = 0; i < fleet.size(); ++i) {
    CHECK(a.agents[i].inflexible == b.agents[i].inflexible);
    CHECK(a.agents[i].irradiance == b.agents[i].irradiance);
  }
  auto c = synthesizeDay(fleet, 124);
  CHECK(a.schedule != c.schedule);
}

TEST_CASE("scenario directory round-trips losslessly") {
  auto fleet = vpp::referenceFleet();
  auto day = synthesizeDay(fleet, 99);
  TempDir tmp;
  writeScenarioDir(tmp.path.string(), fleet, day);

  auto [specs2, day2] = loadScenario(tmp.path.string());
  REQUIRE(specs2.size() == fleet.size());
  CHECK(day2.schedule == day.schedule);
  for (size_t i = 0; i < fleet.size(); ++i) {
    CHECK(day2.agents[i].inflexible == day.agents[i].inflexible);
    CHECK(day2.agents[i].flMin == day.agents[i].flMin);
    CHECK(day2.agents[i].flMax == day.agents[i].flMax);
    CHECK(day2.agents[i].flRef == day.agents[i].flRef);
    CHECK(day2.agents[i].tOut == day.agents[i].tOut);
    CHECK(day2.agents[i].irradiance == day.agents[i].irradiance);
    CHECK(day2.agents[i].pevEnergyRate == day.agents[i].pevEnergyRate);
  }
  CHECK(specs2[0].storage->etaCharge == fleet[0].storage->etaCharge);
  CHECK(specs2[2].hvac->inertia == fleet[2].hvac->inertia);
  CHECK(specs2[2].pv->areaM2 == fleet[2].pv->areaM2);
}

TEST_CASE("missing required key is named in the error") {
  auto fleet = vpp::referenceFleet();
  auto day = synthesizeDay(fleet, 5);
  TempDir tmp;
  writeScenarioDir(tmp.path.string(), fleet, day);

  // drop the charge-efficiency line from agents.conf
  auto confPath = tmp.path / "agents.conf";
  std::ifstream in(confPath);
  std::stringstream keep;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("storage.eta_charge", 0) != 0) keep << line << "\n";
  in.close();
  std::ofstream(confPath) << keep.str();

  try {
    loadScenario(tmp.path.string());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("storage.eta_charge") != std::string::npos);
  }
}

TEST_CASE("reference fleet carries the documented constants") {
  auto fleet = vpp::referenceFleet();
  TempDir tmp;
  writeScenarioDir(tmp.path.string(), fleet, synthesizeDay(fleet, 3));
  auto [specs, day] = loadScenario(tmp.path.string());

  const auto& s = *specs[0].storage;
  CHECK(s.powerMaxKw == 80.0);
  CHECK(s.etaCharge == 0.94);
  CHECK(s.etaDischarge == 1.06);
  CHECK(s.capacityKwh == 300.0);
  CHECK(s.socMin == 0.15);
  CHECK(s.socMax == 0.85);
  CHECK(s.socStart == 0.2);
  CHECK(s.alpha == 0.01);
  CHECK(specs[0].flexLoad->alpha == 0.1);
  const auto& v = *specs[2].hvac;
  CHECK(v.cop == 2.5);
  CHECK(v.conductance == 0.25);
  CHECK(v.inertia == 0.93);
  CHECK(v.powerMaxKw == 11.5);
  CHECK(v.tMin == 75.0);
  CHECK(v.tMax == 79.0);
  CHECK(v.tRef == 77.0);
  CHECK(v.alpha == 1.0);
  CHECK(specs[2].pv->areaM2 == 1000.0);
  CHECK(specs[2].pv->efficiency == 0.2);
}

TEST_CASE("slicing windows") {
  auto fleet = vpp::referenceFleet();
  auto day = synthesizeDay(fleet, 17);
  auto st = RollingState::dayStart(fleet);

  SUBCASE("lengths match the window") {
    auto scen = sliceHorizon(day, fleet, st, 96, 12);
    CHECK(scen.schedule.size() == 12);
    CHECK(scen.agents[0].flMin.size() == 12);
    CHECK(scen.agents[2].tOut.size() == 12);
  }
  SUBCASE("window past the end of the day is rejected") {
    CHECK_THROWS_AS(sliceHorizon(day, fleet, st, 287, 12), OutOfRange);
  }
  SUBCASE("wrapped slicing accepts any start of the day") {
    auto scen = sliceHorizonWrapped(day, fleet, st, 287, 12);
    CHECK(scen.schedule[0] == day.schedule[287]);
    CHECK(scen.schedule[1] == day.schedule[0]);
    CHECK_THROWS_AS(sliceHorizonWrapped(day, fleet, st, 288, 12), OutOfRange);
  }
}

TEST_CASE("rolling chain carries realized states across tiled windows") {
  auto fleet = vpp::referenceFleet();
  auto day = synthesizeDay(fleet, 29);
  const int H = 12;
  vpp::Horizon hz{0, H, 5.0 / 60.0};
  auto layout = vpp::SystemLayout::build(fleet, H);
  auto st = RollingState::dayStart(fleet);

  for (int window = 0; window < 3; ++window) {
    auto scen = sliceHorizon(day, fleet, st, window * H, H);
    auto sol = solveWindow(fleet, scen, hz);
    REQUIRE(sol.status == qp::Status::Optimal);
    auto next = advanceStates(st, fleet, layout, scen, sol.x, H, hz.dtHours);

    // realized end-of-window state of charge equals the solver's last state
    const auto& idx = layout.agents[0];
    const double socEnd =
        sol.x[layout.ownOffset[0] + idx.at(vpp::Quantity::EssSoc, H - 1)];
    CHECK(next.soc.at(fleet[0].id) == doctest::Approx(socEnd).epsilon(1e-7));
    const auto& idx3 = layout.agents[2];
    const double tEnd =
        sol.x[layout.ownOffset[2] + idx3.at(vpp::Quantity::HvacTemp, H - 1)];
    CHECK(next.indoorTemp.at(fleet[2].id) == doctest::Approx(tEnd).epsilon(1e-6));
    st = next;
  }
}

TEST_CASE("windows across the whole day admit a feasible dispatch") {
  auto fleet = vpp::referenceFleet();
  auto day = synthesizeDay(fleet, 41);
  const int H = 12;
  vpp::Horizon hz{0, H, 5.0 / 60.0};
  auto st = RollingState::dayStart(fleet);
  for (int tStart : {0, 48, 96, 144, 192, 240, 276}) {
    auto scen = sliceHorizon(day, fleet, st, tStart, H);
    auto sol = solveWindow(fleet, scen, hz);
    INFO("window start ", tStart);
    CHECK(sol.status == qp::Status::Optimal);
  }
}
