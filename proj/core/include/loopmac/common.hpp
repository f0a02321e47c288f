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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace loopmac {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define LOOPMAC_ERROR_TYPE(NAME)                                  \
  struct NAME : Error {                                           \
    explicit NAME(const std::string& what) : Error(#NAME ": " + what) {} \
  }

// model assembly
LOOPMAC_ERROR_TYPE(DimensionMismatch);
LOOPMAC_ERROR_TYPE(InfeasibleBounds);
LOOPMAC_ERROR_TYPE(TopologyInconsistent);
// qp solver
LOOPMAC_ERROR_TYPE(EmptyInterior);
LOOPMAC_ERROR_TYPE(SolverFailure);
// consensus engine
LOOPMAC_ERROR_TYPE(StaleMessage);
LOOPMAC_ERROR_TYPE(SubproblemInfeasible);
LOOPMAC_ERROR_TYPE(MissingReference);
// approximator
LOOPMAC_ERROR_TYPE(SingularBasis);
LOOPMAC_ERROR_TYPE(OutOfBall);
LOOPMAC_ERROR_TYPE(BadShift);
LOOPMAC_ERROR_TYPE(ShapeMismatch);
LOOPMAC_ERROR_TYPE(NonFiniteActivation);
// training
LOOPMAC_ERROR_TYPE(NonFiniteLoss);
LOOPMAC_ERROR_TYPE(Diverged);
// io
LOOPMAC_ERROR_TYPE(ParseError);
LOOPMAC_ERROR_TYPE(SchemaError);
LOOPMAC_ERROR_TYPE(RangeError);
LOOPMAC_ERROR_TYPE(OutOfRange);
// cli
LOOPMAC_ERROR_TYPE(UsageError);
LOOPMAC_ERROR_TYPE(WeightsMissing);

#undef LOOPMAC_ERROR_TYPE

/// Deterministic PRNG (xoshiro256++), identical streams on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    // splitmix64 expansion of the seed into the state
    uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      s = z ^ (z >> 31);
    }
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (deterministic pair consumption).
  double normal() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    haveSpare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n).
  int uniformInt(int n) { return int(next() % uint64_t(n)); }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
  double spare_ = 0.0;
  bool haveSpare_ = false;
};

/// FNV-1a over raw bytes; used for content-addressed caches.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t hashVector(const VectorXd& v, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(v.data(), sizeof(double) * size_t(v.size()), h);
}

/// Shortest decimal that round-trips a double exactly.
inline std::string fmtDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline bool allFinite(const VectorXd& v) { return v.allFinite(); }

}  // namespace loopmac
