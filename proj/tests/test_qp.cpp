#include <doctest.h>

#include <loopmac/qp.hpp>

#include "test_util.hpp"

using namespace loopmac;
using testutil::objective;

TEST_CASE("active bound: min (x-1)^2 s.t. x >= 2") {
  qp::Problem p;
  p.qDiag = VectorXd::Constant(1, 2.0);
  p.c = VectorXd::Constant(1, -2.0);
  p.Aeq.resize(0, 1);
  p.beq.resize(0);
  p.G = MatrixXd::Constant(1, 1, -1.0);
  p.h = VectorXd::Constant(1, -2.0);

  auto s = qp::solve(p);
  REQUIRE(s.status == qp::Status::Optimal);
  CHECK(s.x[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(qp::verifyKkt(p, s).pass(1e-8, 1e-6, 1e-6));
}

TEST_CASE("symmetry: min x1^2+x2^2 s.t. x1+x2 = 2") {
  qp::Problem p;
  p.qDiag = VectorXd::Constant(2, 2.0);
  p.c = VectorXd::Zero(2);
  p.Aeq = MatrixXd::Constant(1, 2, 1.0);
  p.beq = VectorXd::Constant(1, 2.0);
  p.G.resize(0, 2);
  p.h.resize(0);

  auto s = qp::solve(p);
  REQUIRE(s.status == qp::Status::Optimal);
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.x[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("random box QPs match the projected-gradient oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 10;
    VectorXd q(n), c(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      q[i] = rng.uniform(0.1, 2.0);
      c[i] = rng.uniform(-2.0, 2.0);
      lo[i] = rng.uniform(-2.0, 0.0);
      hi[i] = lo[i] + rng.uniform(0.5, 3.0);
    }
    VectorXd xOracle = testutil::projectedGradientBoxQp(q, c, lo, hi, 1e-10);

    qp::Problem p;
    p.qDiag = q;
    p.c = c;
    p.Aeq.resize(0, n);
    p.beq.resize(0);
    p.G.resize(2 * n, n);
    p.G.setZero();
    p.h.resize(2 * n);
    for (int i = 0; i < n; ++i) {
      p.G(2 * i, i) = 1.0;
      p.h[2 * i] = hi[i];
      p.G(2 * i + 1, i) = -1.0;
      p.h[2 * i + 1] = -lo[i];
    }
    auto s = qp::solve(p);
    REQUIRE(s.status == qp::Status::Optimal);
    CHECK((s.x - xOracle).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("KKT certificate holds on random feasible instances") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    auto p = testutil::randomFeasibleQp(rng, 20);
    auto s = qp::solve(p);
    REQUIRE(s.status == qp::Status::Optimal);
    auto rep = qp::verifyKkt(p, s);
    CHECK(rep.eqResidual <= 1e-6);
    CHECK(rep.ineqViolation <= 1e-6);
    CHECK(rep.stationarity <= 1e-6);
    CHECK(rep.complementarity <= 1e-6);
    CHECK(rep.dualNegativity <= 1e-6);
  }
}

TEST_CASE("solver is deterministic") {
  Rng rng(11);
  auto p = testutil::randomFeasibleQp(rng, 15);
  auto a = qp::solve(p);
  auto b = qp::solve(p);
  REQUIRE(a.status == qp::Status::Optimal);
  CHECK(a.iterations == b.iterations);
  CHECK(a.x == b.x);
  CHECK(a.dualEq == b.dualEq);
  CHECK(a.dualIneq == b.dualIneq);
}

TEST_CASE("merit history is non-increasing") {
  Rng rng(13);
  auto p = testutil::randomFeasibleQp(rng, 30);
  qp::Settings st;
  st.polish = false;  // keep the iteration running long enough to observe
  st.tolAbs = 1e-10;
  st.maxIter = 4000;
  qp::Solver solver(p, st);
  solver.solve();
  const auto& m = solver.meritHistory();
  REQUIRE(m.size() > 3);
  for (size_t i = 1; i < m.size(); ++i) CHECK(m[i] <= m[i - 1]);
}

TEST_CASE("primal infeasibility is detected") {
  // x <= 0 and x >= 1
  qp::Problem p;
  p.qDiag = VectorXd::Zero(1);
  p.c = VectorXd::Constant(1, 0.5);
  p.Aeq.resize(0, 1);
  p.beq.resize(0);
  p.G.resize(2, 1);
  p.G << 1.0, -1.0;
  p.h.resize(2);
  p.h << 0.0, -1.0;

  auto s = qp::solve(p);
  CHECK(s.status == qp::Status::Infeasible);
}

TEST_CASE("resolve reuses the factorization and stays correct") {
  Rng rng(17);
  auto p = testutil::randomFeasibleQp(rng, 12);
  qp::Solver solver(p);
  auto s0 = solver.solve();
  REQUIRE(s0.status == qp::Status::Optimal);

  VectorXd c2 = p.c;
  c2.array() += 0.1;
  auto s1 = solver.resolve(c2, p.beq, p.h);
  REQUIRE(s1.status == qp::Status::Optimal);
  qp::Problem p2 = p;
  p2.c = c2;
  CHECK(qp::verifyKkt(p2, s1).pass(1e-8, 1e-6, 1e-6));

  // warm resolve of the identical problem agrees with a cold solve
  auto s2 = solver.resolve(p.c, p.beq, p.h);
  auto sCold = qp::solve(p);
  CHECK(std::abs(objective(p, s2.x) - objective(p, sCold.x)) <=
        1e-6 * (1.0 + std::abs(objective(p, sCold.x))));
}

TEST_CASE("chebyshev center: unit box") {
  MatrixXd G(4, 2);
  G << 1, 0, -1, 0, 0, 1, 0, -1;
  VectorXd h = VectorXd::Ones(4);
  auto [x0, r] = qp::chebyshevCenter(G, h);
  CHECK(r == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(x0.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("chebyshev center: triangle vs grid-search oracle") {
  MatrixXd G(3, 2);
  G << -1, 0, 0, -1, 1, 1;
  VectorXd h(3);
  h << 0, 0, 1;
  auto [x0, r] = qp::chebyshevCenter(G, h);
  const double analytic = 1.0 / (2.0 + std::sqrt(2.0));
  CHECK(r == doctest::Approx(analytic).epsilon(1e-6));

  auto [gx, gr] = testutil::gridSearchChebyshev2d(G, h, 1.0, 400);
  CHECK(std::abs(gr - r) <= 5e-3);
  CHECK((gx - x0).norm() <= 2e-2);
}

TEST_CASE("chebyshev center: empty interior") {
  MatrixXd G(2, 1);
  G << 1, -1;
  VectorXd h = VectorXd::Zero(2);
  CHECK_THROWS_AS(qp::chebyshevCenter(G, h), EmptyInterior);
}

TEST_CASE("dimension validation") {
  qp::Problem p;
  p.qDiag = VectorXd::Zero(2);
  p.c = VectorXd::Zero(3);
  p.Aeq.resize(0, 3);
  p.beq.resize(0);
  p.G.resize(0, 3);
  p.h.resize(0);
  CHECK_THROWS_AS(p.validate(), DimensionMismatch);
}
