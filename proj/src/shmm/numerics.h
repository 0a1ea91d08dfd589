// shmm/numerics.h

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

#ifndef SHMM_NUMERICS_H_
#define SHMM_NUMERICS_H_

#include <cstdint>
#include <span>

#include "shmm/common.h"

namespace shmm {

/// log sum_i exp(values_i), computed with the max shifted out so finite
/// inputs never overflow. Entries may be -inf; if all of them are, the
/// result is -inf. Empty input is a usage error.
double LogSumExp(std::span<const double> values);

/// Log-density of a diagonal-covariance Gaussian:
///   -1/2 sum_f [ log 2pi + log_var_f + (x_f - mean_f)^2 exp(-log_var_f) ].
double DiagGaussianLogPdf(std::span<const double> x,
                          std::span<const double> mean,
                          std::span<const double> log_var);

/// KL( N(mean_q, exp(log_var_q)) || N(mean_p, exp(log_var_p)) ) for
/// diagonal Gaussians, summed over dimensions. Always >= 0.
double KlDiagGaussians(std::span<const double> mean_q,
                       std::span<const double> log_var_q,
                       std::span<const double> mean_p,
                       std::span<const double> log_var_p);

/// ADAM state for gradient ASCENT. Step() mutates the state and the
/// parameter vector in place; single writer only.
struct AdamState {
  Vec first_moment;
  Vec second_moment;
  int64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState Create(size_t dim, double learning_rate = 1e-3,
                          double beta1 = 0.9, double beta2 = 0.999,
                          double epsilon = 1e-8);

  /// One bias-corrected ascent step: params += lr * m_hat / (sqrt(v_hat) + eps).
  void Step(std::span<double> params, std::span<const double> gradient);
};

}  // namespace shmm

#endif  // SHMM_NUMERICS_H_
