// shmm/rng.h

// Copyright 2026  the shmm-aud authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SHMM_RNG_H_
#define SHMM_RNG_H_

#include <cstdint>
#include <random>
#include <span>

namespace shmm {

/// Deterministic random source. std::mt19937_64 is fully specified by the
/// standard; the distributions below are hand-rolled (Box-Muller, modulo)
/// because the std::*_distribution classes are implementation-defined and
/// would break the bit-reproducibility contract across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; caches the second deviate.
  double Normal();

  void FillNormal(std::span<double> out) {
    for (double &x : out) x = Normal();
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  uint64_t Integer(uint64_t bound) { return engine_() % bound; }

  uint64_t Raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace shmm

#endif  // SHMM_RNG_H_
