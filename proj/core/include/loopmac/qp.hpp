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

#include <optional>
#include <utility>
#include <vector>

#include "loopmac/common.hpp"

namespace loopmac::qp {

/// Dense convex QP:  min 1/2 x'diag(q)x + c'x  s.t.  Aeq x = beq,  G x <= h.
/// Q is diagonal PSD by construction; zero rows are allowed.
struct Problem {
  VectorXd qDiag;
  VectorXd c;
  MatrixXd Aeq;
  VectorXd beq;
  MatrixXd G;
  VectorXd h;

  int vars() const { return int(c.size()); }
  int eqRows() const { return int(Aeq.rows()); }
  int ineqRows() const { return int(G.rows()); }
  void validate() const;  // throws DimensionMismatch
};

enum class Status { Optimal, Infeasible, MaxIter };

const char* statusName(Status s);

struct Solution {
  VectorXd x;
  VectorXd dualEq;    // multipliers for Aeq x = beq (free sign)
  VectorXd dualIneq;  // multipliers for G x <= h (>= 0)
  Status status = Status::MaxIter;
  int iterations = 0;
  double primalResidual = 0.0;
  double dualResidual = 0.0;
};

struct Settings {
  double tolAbs = 1e-8;
  double tolRel = 1e-8;
  int maxIter = 20000;
  double tolStationarity = 1e-6;
  double tolComplementarity = 1e-6;
  // operator-splitting internals
  double sigma = 1e-6;
  double rhoEq = 1e3;
  double rhoIneq = 1e1;
  double relaxAlpha = 1.6;
  int checkEvery = 25;
  bool polish = true;
  double polishDelta = 1e-9;
  double infeasTol = 1e-12;
  int divergenceWindow = 100;
};

/// Direct KKT check, independent of the solve path. All quantities are
/// infinity norms; complementarity is max_i |z_i * (Gx - h)_i|.
struct KktReport {
  double eqResidual = 0.0;
  double ineqViolation = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
  double dualNegativity = 0.0;

  bool pass(double tolFeas, double tolStat, double tolComp) const {
    return eqResidual <= tolFeas && ineqViolation <= tolFeas &&
           stationarity <= tolStat && complementarity <= tolComp &&
           dualNegativity <= tolStat;
  }
};

KktReport verifyKkt(const Problem& p, const Solution& s);

/// Reusable solver. The factorization depends only on (qDiag, Aeq, G)
/// structure and values, so solving a sequence of problems that differ in
/// (c, beq, h) re-uses it and warm-starts from the previous solution.
class Solver {
 public:
  explicit Solver(Problem p, Settings s = {});

  const Problem& problem() const { return p_; }
  Settings& settings() { return s_; }

  /// Solve with the stored vectors.
  Solution solve();

  /// Solve after replacing the linear parts. Dimensions must match the
  /// stored structure.
  Solution resolve(const VectorXd& c, const VectorXd& beq, const VectorXd& h);

  void coldStart();

  /// Residual history of the last solve; entries are the best (accepted)
  /// combined residual so far, hence non-increasing.
  const std::vector<double>& meritHistory() const { return merit_; }

 private:
  Solution run();
  bool polish(Solution& sol) const;

  Problem p_;
  Settings s_;
  VectorXd rho_;      // per-row penalty
  MatrixXd A_;        // [Aeq; G]
  VectorXd lo_, up_;  // row bounds: eq rows lo=up=beq, ineq rows (-inf, h]
  Eigen::LLT<MatrixXd> llt_;
  VectorXd x_, z_, y_;  // iterates (kept for warm starts)
  bool warm_ = false;
  std::vector<double> merit_;
};

/// One-shot convenience wrapper.
Solution solve(const Problem& p, double tolAbs = 1e-8, double tolRel = 1e-8,
               int maxIter = 20000);

/// Largest inscribed ball of {x : Gx <= h}: returns (center, radius).
/// Solved as an epsilon-regularized LP through the QP path; throws
/// EmptyInterior when the radius is not positive.
std::pair<VectorXd, double> chebyshevCenter(const MatrixXd& G, const VectorXd& h);

}  // namespace loopmac::qp
