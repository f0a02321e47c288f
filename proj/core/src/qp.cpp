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

#include "loopmac/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace loopmac::qp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void Problem::validate() const {
  const int n = vars();
  if (qDiag.size() != n)
    throw DimensionMismatch("qDiag has " + std::to_string(qDiag.size()) +
                            " entries, expected " + std::to_string(n));
  if (Aeq.rows() != beq.size())
    throw DimensionMismatch("Aeq rows vs beq: " + std::to_string(Aeq.rows()) +
                            " vs " + std::to_string(beq.size()));
  if (G.rows() != h.size())
    throw DimensionMismatch("G rows vs h: " + std::to_string(G.rows()) +
                            " vs " + std::to_string(h.size()));
  if (Aeq.rows() > 0 && Aeq.cols() != n)
    throw DimensionMismatch("Aeq has " + std::to_string(Aeq.cols()) +
                            " columns, expected " + std::to_string(n));
  if (G.rows() > 0 && G.cols() != n)
    throw DimensionMismatch("G has " + std::to_string(G.cols()) +
                            " columns, expected " + std::to_string(n));
  if (qDiag.size() > 0 && qDiag.minCoeff() < 0.0)
    throw InfeasibleBounds("negative entry on the quadratic diagonal");
}

const char* statusName(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::MaxIter: return "MaxIter";
  }
  return "?";
}

KktReport verifyKkt(const Problem& p, const Solution& s) {
  KktReport r;
  if (p.eqRows() > 0)
    r.eqResidual = (p.Aeq * s.x - p.beq).cwiseAbs().maxCoeff();
  VectorXd slack;
  if (p.ineqRows() > 0) {
    slack = p.G * s.x - p.h;
    r.ineqViolation = std::max(0.0, slack.maxCoeff());
  }
  VectorXd g = p.qDiag.cwiseProduct(s.x) + p.c;
  if (p.eqRows() > 0) g += p.Aeq.transpose() * s.dualEq;
  if (p.ineqRows() > 0) {
    g += p.G.transpose() * s.dualIneq;
    r.dualNegativity = std::max(0.0, -s.dualIneq.minCoeff());
    r.complementarity = s.dualIneq.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  if (g.size() > 0) r.stationarity = g.cwiseAbs().maxCoeff();
  return r;
}

Solver::Solver(Problem p, Settings s) : p_(std::move(p)), s_(s) {
  p_.validate();
  const int n = p_.vars();
  const int meq = p_.eqRows();
  const int mineq = p_.ineqRows();
  const int m = meq + mineq;

  A_.resize(m, n);
  if (meq > 0) A_.topRows(meq) = p_.Aeq;
  if (mineq > 0) A_.bottomRows(mineq) = p_.G;
  lo_.resize(m);
  up_.resize(m);
  rho_.resize(m);
  for (int i = 0; i < meq; ++i) {
    lo_[i] = up_[i] = p_.beq[i];
    rho_[i] = s_.rhoEq;
  }
  for (int i = 0; i < mineq; ++i) {
    lo_[meq + i] = -kInf;
    up_[meq + i] = p_.h[i];
    rho_[meq + i] = s_.rhoIneq;
  }

  MatrixXd M = (rho_.asDiagonal() * A_).transpose() * A_;
  M.diagonal() += p_.qDiag;
  M.diagonal().array() += s_.sigma;
  llt_.compute(M);
  if (llt_.info() != Eigen::Success)
    throw SolverFailure("reduced KKT matrix is not positive definite");
  coldStart();
}

void Solver::coldStart() {
  x_ = VectorXd::Zero(p_.vars());
  z_ = VectorXd::Zero(A_.rows());
  y_ = VectorXd::Zero(A_.rows());
  warm_ = false;
}

Solution Solver::resolve(const VectorXd& c, const VectorXd& beq, const VectorXd& h) {
  if (c.size() != p_.c.size() || beq.size() != p_.beq.size() || h.size() != p_.h.size())
    throw DimensionMismatch("resolve vectors do not match the stored structure");
  p_.c = c;
  p_.beq = beq;
  p_.h = h;
  const int meq = p_.eqRows();
  for (int i = 0; i < meq; ++i) lo_[i] = up_[i] = beq[i];
  for (int i = 0; i < p_.ineqRows(); ++i) up_[meq + i] = h[i];
  return run();
}

Solution Solver::solve() { return run(); }

bool Solver::polish(Solution& sol) const {
  const int n = p_.vars();
  const int meq = p_.eqRows();
  const int mineq = p_.ineqRows();

  std::vector<int> active;
  if (mineq > 0) {
    VectorXd slack = p_.h - p_.G * sol.x;
    for (int i = 0; i < mineq; ++i) {
      double tol = std::max(1e-7, 10 * s_.tolAbs) * (1.0 + std::abs(p_.h[i]));
      if (slack[i] <= tol || sol.dualIneq[i] > 1e-9) active.push_back(i);
    }
  }

  for (int attempt = 0; attempt < 2; ++attempt) {
    const int ma = int(active.size());
    const int dim = n + meq + ma;
    MatrixXd K = MatrixXd::Zero(dim, dim);
    for (int i = 0; i < n; ++i) K(i, i) = p_.qDiag[i] + s_.polishDelta;
    if (meq > 0) {
      K.block(n, 0, meq, n) = p_.Aeq;
      K.block(0, n, n, meq) = p_.Aeq.transpose();
    }
    for (int r = 0; r < ma; ++r) {
      K.row(n + meq + r).head(n) = p_.G.row(active[r]);
      K.col(n + meq + r).head(n) = p_.G.row(active[r]).transpose();
    }
    for (int i = n; i < dim; ++i) K(i, i) = -s_.polishDelta;

    VectorXd rhs(dim);
    rhs.head(n) = -p_.c;
    rhs.segment(n, meq) = p_.beq;
    for (int r = 0; r < ma; ++r) rhs[n + meq + r] = p_.h[active[r]];

    Eigen::PartialPivLU<MatrixXd> lu(K);
    VectorXd sol0 = lu.solve(rhs);
    // two rounds of iterative refinement
    for (int it = 0; it < 2; ++it) {
      VectorXd resid = rhs - K * sol0;
      sol0 += lu.solve(resid);
    }

    Solution cand;
    cand.x = sol0.head(n);
    cand.dualEq = sol0.segment(n, meq);
    cand.dualIneq = VectorXd::Zero(mineq);
    bool negDual = false;
    for (int r = 0; r < ma; ++r) {
      double zr = sol0[n + meq + r];
      if (zr < -1e-9) negDual = true;
      cand.dualIneq[active[r]] = std::max(0.0, zr);
    }
    KktReport rep = verifyKkt(p_, cand);
    if (rep.pass(s_.tolAbs, s_.tolStationarity, s_.tolComplementarity)) {
      cand.status = Status::Optimal;
      cand.iterations = sol.iterations;
      cand.primalResidual = std::max(rep.eqResidual, rep.ineqViolation);
      cand.dualResidual = rep.stationarity;
      sol = cand;
      return true;
    }
    if (!negDual) break;
    // drop rows that came back with negative multipliers and retry once
    std::vector<int> keep;
    for (int r = 0; r < ma; ++r)
      if (sol0[n + meq + r] >= -1e-9) keep.push_back(active[r]);
    if (keep.size() == active.size()) break;
    active = std::move(keep);
  }
  return false;
}

Solution Solver::run() {
  const int n = p_.vars();
  const int meq = p_.eqRows();
  const int mineq = p_.ineqRows();
  const int m = meq + mineq;

  VectorXd x = warm_ ? x_ : VectorXd::Zero(n);
  VectorXd z = warm_ ? z_ : VectorXd::Zero(m);
  VectorXd y = warm_ ? y_ : VectorXd::Zero(m);

  merit_.clear();
  double bestMerit = kInf;
  VectorXd bestX = x, bestY = y;
  double lastPolishMerit = kInf;
  double yNormAtWindowStart = 0.0;
  double meritAtWindowStart = kInf;
  int windowStart = 0;

  Solution out;
  out.status = Status::MaxIter;

  auto extractDuals = [&](const VectorXd& yv, Solution& s) {
    s.dualEq = yv.head(meq);
    s.dualIneq = yv.tail(mineq).cwiseMax(0.0);
  };

  int k = 0;
  for (; k < s_.maxIter; ++k) {
    // x update through the cached factorization
    VectorXd rhs = s_.sigma * x - p_.c;
    if (m > 0) rhs.noalias() += A_.transpose() * (rho_.cwiseProduct(z) - y);
    VectorXd xt = llt_.solve(rhs);
    VectorXd zt = m > 0 ? VectorXd(A_ * xt) : VectorXd(0);

    VectorXd xNew = s_.relaxAlpha * xt + (1.0 - s_.relaxAlpha) * x;
    VectorXd yPrev = y;
    if (m > 0) {
      VectorXd zc = s_.relaxAlpha * zt + (1.0 - s_.relaxAlpha) * z +
                    y.cwiseQuotient(rho_);
      VectorXd zNew = zc.cwiseMax(lo_).cwiseMin(up_);
      y = rho_.cwiseProduct(zc - zNew);
      z = zNew;
    }
    x = xNew;

    if ((k + 1) % s_.checkEvery != 0 && k + 1 != s_.maxIter) continue;

    // candidate residuals
    Solution cand;
    cand.x = x;
    extractDuals(y, cand);
    KktReport rep = verifyKkt(p_, cand);
    double merit = std::max({rep.eqResidual, rep.ineqViolation,
                             rep.stationarity, rep.complementarity});
    if (merit < bestMerit) {
      bestMerit = merit;
      bestX = x;
      bestY = y;
    }
    merit_.push_back(bestMerit);

    if (rep.pass(s_.tolAbs, s_.tolStationarity, s_.tolComplementarity)) {
      cand.status = Status::Optimal;
      cand.iterations = k + 1;
      cand.primalResidual = std::max(rep.eqResidual, rep.ineqViolation);
      cand.dualResidual = rep.stationarity;
      out = cand;
      break;
    }

    // try to polish once the iterates are in the right neighbourhood
    if (s_.polish && merit < 0.25 * lastPolishMerit) {
      lastPolishMerit = merit;
      Solution cand2;
      cand2.x = x;
      extractDuals(y, cand2);
      cand2.iterations = k + 1;
      if (polish(cand2)) {
        out = cand2;
        break;
      }
    }

    // primal infeasibility certificate from the dual increment
    if (m > 0) {
      VectorXd dy = y - yPrev;
      double dyNorm = dy.cwiseAbs().maxCoeff();
      if (dyNorm > 1e-12) {
        VectorXd e = dy / dyNorm;
        double atE = (A_.transpose() * e).cwiseAbs().maxCoeff();
        bool valid = true;
        double support = 0.0;
        for (int i = 0; i < m; ++i) {
          double epos = std::max(e[i], 0.0), eneg = std::min(e[i], 0.0);
          if (up_[i] == kInf) {
            if (epos > 1e-10) { valid = false; break; }
          } else {
            support += up_[i] * epos;
          }
          if (lo_[i] == -kInf) {
            if (eneg < -1e-10) { valid = false; break; }
          } else {
            support += lo_[i] * eneg;
          }
        }
        if (valid && atE <= 1e-8 && support < -1e-8) {
          out.status = Status::Infeasible;
          out.x = x;
          extractDuals(y, out);
          out.iterations = k + 1;
          break;
        }
      }

      // divergence backstop over a fixed window: residual stalls while the
      // multipliers keep growing without bound
      if (k - windowStart >= s_.divergenceWindow) {
        double yNorm = y.cwiseAbs().maxCoeff();
        if (meritAtWindowStart != kInf && bestMerit > 0.99 * meritAtWindowStart &&
            yNorm > 1e8 && yNorm > 10.0 * (yNormAtWindowStart + 1.0)) {
          out.status = Status::Infeasible;
          out.x = x;
          extractDuals(y, out);
          out.iterations = k + 1;
          break;
        }
        windowStart = k;
        yNormAtWindowStart = yNorm;
        meritAtWindowStart = bestMerit;
      }
    }
  }

  if (out.status == Status::MaxIter) {
    out.x = bestX;
    extractDuals(bestY, out);
    out.iterations = k;
    KktReport rep = verifyKkt(p_, out);
    out.primalResidual = std::max(rep.eqResidual, rep.ineqViolation);
    out.dualResidual = rep.stationarity;
    if (s_.polish) {
      Solution cand = out;
      if (polish(cand)) out = cand;
    }
  }

  // keep the final iterates as the warm start for the next resolve
  x_ = x;
  z_ = z;
  y_ = y;
  warm_ = true;
  return out;
}

Solution solve(const Problem& p, double tolAbs, double tolRel, int maxIter) {
  Settings s;
  s.tolAbs = tolAbs;
  s.tolRel = tolRel;
  s.maxIter = maxIter;
  Solver solver(p, s);
  return solver.solve();
}

std::pair<VectorXd, double> chebyshevCenter(const MatrixXd& G, const VectorXd& h) {
  if (G.rows() != h.size())
    throw DimensionMismatch("chebyshevCenter: G rows vs h");
  const int n = int(G.cols());
  const int m = int(G.rows());

  Problem p;
  p.qDiag = VectorXd::Constant(n + 1, 1e-9);
  p.c = VectorXd::Zero(n + 1);
  p.c[n] = -1.0;  // maximize the radius
  p.Aeq.resize(0, n + 1);
  p.beq.resize(0);
  p.G = MatrixXd::Zero(m + 1, n + 1);
  p.h.resize(m + 1);
  for (int i = 0; i < m; ++i) {
    p.G.row(i).head(n) = G.row(i);
    p.G(i, n) = G.row(i).norm();
    p.h[i] = h[i];
  }
  p.G(m, n) = -1.0;  // r >= 0
  p.h[m] = 0.0;

  Solution s = solve(p);
  if (s.status != Status::Optimal)
    throw SolverFailure(std::string("chebyshevCenter: ") + statusName(s.status));
  double radius = s.x[n];
  if (!(radius > 1e-9))
    throw EmptyInterior("polytope interior radius " + fmtDouble(radius));
  if (radius > 1e7)
    throw SolverFailure("chebyshevCenter: polytope appears unbounded");
  return {s.x.head(n), radius};
}

}  // namespace loopmac::qp
