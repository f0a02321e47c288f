// Shared test helpers: independent oracles and random-instance generators.
// Everything here is deliberately written against the problem statements
// only, never against the library internals it is used to check.
#pragma once

#include <loopmac/common.hpp>
#include <loopmac/qp.hpp>
#include <loopmac/vpp_model.hpp>

namespace loopmac::testutil {

/// A small feasible scenario for the reference fleet: constant mid-range
/// series, daytime irradiance, a comfortably reachable schedule.
inline vpp::ScenarioInput simpleScenario(const std::vector<vpp::AgentSpec>& specs,
                                         int H, double schedKw = 20.0) {
  vpp::ScenarioInput scen;
  scen.schedule = VectorXd::Constant(H, schedKw);
  for (const auto& sp : specs) {
    vpp::AgentScenario a;
    if (sp.flexLoad) {
      a.flMin = VectorXd::Constant(H, 8.0);
      a.flMax = VectorXd::Constant(H, 25.0);
      a.flRef = VectorXd::Constant(H, 15.0);
    }
    if (sp.hasInflexible) a.inflexible = VectorXd::Constant(H, 15.0);
    if (sp.hvac) {
      a.tOut = VectorXd::Constant(H, 86.0);
      a.tRefSeries = VectorXd::Constant(H, sp.hvac->tRef);
      a.occupied = VectorXd::Ones(H);
      a.hvacT0 = 77.0;
    }
    if (sp.pv) a.irradiance = VectorXd::Constant(H, 0.3);
    if (sp.storage) a.soc0 = sp.storage->socStart;
    if (sp.pev) a.pevEnergyKwh = 1.0;
    scen.agents.push_back(std::move(a));
  }
  return scen;
}

/// Projected-gradient solve of  min 1/2 x'diag(q)x + c'x  s.t. lo <= x <= hi.
/// Requires strictly positive q. Fixed step 1/max(q), run to a tight
/// fixed-point tolerance.
inline VectorXd projectedGradientBoxQp(const VectorXd& q, const VectorXd& c,
                                       const VectorXd& lo, const VectorXd& hi,
                                       double tol = 1e-10, int maxIter = 2000000) {
  const double step = 1.0 / q.maxCoeff();
  VectorXd x = (lo + hi) / 2.0;
  for (int k = 0; k < maxIter; ++k) {
    VectorXd g = q.cwiseProduct(x) + c;
    VectorXd xn = (x - step * g).cwiseMax(lo).cwiseMin(hi);
    double move = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    if (move <= tol) break;
  }
  return x;
}

/// Brute-force inscribed-ball search on a 2-D polytope by scanning a grid of
/// candidate centers; the radius at a point is min_i (h_i - g_i'x)/|g_i|.
inline std::pair<VectorXd, double> gridSearchChebyshev2d(const MatrixXd& G,
                                                         const VectorXd& h,
                                                         double span,
                                                         int cells) {
  VectorXd best(2);
  double bestR = -1.0;
  for (int i = 0; i <= cells; ++i) {
    for (int j = 0; j <= cells; ++j) {
      VectorXd x(2);
      x << -span + 2.0 * span * i / cells, -span + 2.0 * span * j / cells;
      double r = std::numeric_limits<double>::infinity();
      for (int row = 0; row < G.rows(); ++row) {
        double nrm = G.row(row).norm();
        if (nrm < 1e-300) continue;
        r = std::min(r, (h[row] - G.row(row).dot(x)) / nrm);
      }
      if (r > bestR) {
        bestR = r;
        best = x;
      }
    }
  }
  return {best, bestR};
}

/// Random convex QP with a known interior-feasible point. Bounded by
/// construction (every variable gets box rows); the quadratic diagonal mixes
/// strictly convex and flat directions.
inline qp::Problem randomFeasibleQp(Rng& rng, int maxVars, bool withEq = true) {
  const int n = 2 + rng.uniformInt(std::max(1, maxVars - 1));
  qp::Problem p;
  p.qDiag.resize(n);
  p.c.resize(n);
  VectorXd x0(n);
  for (int i = 0; i < n; ++i) {
    p.qDiag[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.05, 3.0);
    p.c[i] = rng.uniform(-1.0, 1.0);
    x0[i] = rng.uniform(-1.0, 1.0);
  }
  const int meq = withEq ? rng.uniformInt(n / 3 + 1) : 0;
  p.Aeq.resize(meq, n);
  p.beq.resize(meq);
  for (int r = 0; r < meq; ++r) {
    for (int j = 0; j < n; ++j) p.Aeq(r, j) = rng.uniform(-1.0, 1.0);
    p.beq[r] = p.Aeq.row(r).dot(x0);
  }
  const int extra = rng.uniformInt(n + 1);
  p.G.resize(2 * n + extra, n);
  p.h.resize(2 * n + extra);
  p.G.setZero();
  for (int i = 0; i < n; ++i) {
    p.G(2 * i, i) = 1.0;
    p.h[2 * i] = x0[i] + rng.uniform(0.2, 2.0);
    p.G(2 * i + 1, i) = -1.0;
    p.h[2 * i + 1] = -x0[i] + rng.uniform(0.2, 2.0);
  }
  for (int r = 0; r < extra; ++r) {
    for (int j = 0; j < n; ++j) p.G(2 * n + r, j) = rng.uniform(-1.0, 1.0);
    p.h[2 * n + r] = p.G.row(2 * n + r).dot(x0) + rng.uniform(0.05, 2.0);
  }
  return p;
}

inline double objective(const qp::Problem& p, const VectorXd& x) {
  return 0.5 * x.dot(p.qDiag.cwiseProduct(x)) + p.c.dot(x);
}

}  // namespace loopmac::testutil
