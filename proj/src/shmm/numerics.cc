// shmm/numerics.cc

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

#include "shmm/numerics.h"

#include <algorithm>
#include <cmath>

namespace shmm {

double LogSumExp(std::span<const double> values) {
  if (values.empty()) throw UsageError("LogSumExp: empty input");
  double max = *std::max_element(values.begin(), values.end());
  if (max == kLogZero) return kLogZero;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - max);
  return max + std::log(acc);
}

double DiagGaussianLogPdf(std::span<const double> x,
                          std::span<const double> mean,
                          std::span<const double> log_var) {
  if (x.size() != mean.size() || x.size() != log_var.size() || x.empty())
    throw UsageError("DiagGaussianLogPdf: dimension mismatch");
  constexpr double kLog2Pi = 1.8378770664093454836;
  double acc = 0.0;
  for (size_t f = 0; f < x.size(); ++f) {
    double d = x[f] - mean[f];
    acc += kLog2Pi + log_var[f] + d * d * std::exp(-log_var[f]);
  }
  return -0.5 * acc;
}

double KlDiagGaussians(std::span<const double> mean_q,
                       std::span<const double> log_var_q,
                       std::span<const double> mean_p,
                       std::span<const double> log_var_p) {
  size_t n = mean_q.size();
  if (log_var_q.size() != n || mean_p.size() != n || log_var_p.size() != n)
    throw UsageError("KlDiagGaussians: dimension mismatch");
  double acc = 0.0;
  for (size_t f = 0; f < n; ++f) {
    double d = mean_p[f] - mean_q[f];
    acc += std::exp(log_var_q[f] - log_var_p[f]) +
           d * d * std::exp(-log_var_p[f]) - 1.0 + log_var_p[f] - log_var_q[f];
  }
  return 0.5 * acc;
}

AdamState AdamState::Create(size_t dim, double learning_rate, double beta1,
                            double beta2, double epsilon) {
  AdamState s;
  s.first_moment.assign(dim, 0.0);
  s.second_moment.assign(dim, 0.0);
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void AdamState::Step(std::span<double> params, std::span<const double> gradient) {
  if (params.size() != first_moment.size() || gradient.size() != params.size())
    throw UsageError("AdamState::Step: dimension mismatch");
  ++step_count;
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    double g = gradient[i];
    first_moment[i] = beta1 * first_moment[i] + (1.0 - beta1) * g;
    second_moment[i] = beta2 * second_moment[i] + (1.0 - beta2) * g * g;
    double m_hat = first_moment[i] / c1;
    double v_hat = second_moment[i] / c2;
    params[i] += learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

}  // namespace shmm
