// shmm/training.h

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

#ifndef SHMM_TRAINING_H_
#define SHMM_TRAINING_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shmm/common.h"
#include "shmm/gsm.h"
#include "shmm/hmm.h"

namespace shmm {

// Variational training alternates two coordinate moves: the state
// posteriors phi have a closed-form optimum (forward-backward on the
// sample-averaged log-likelihoods), the Gaussian posterior zeta over
// the subspace parameters is ascended by ADAM on the reparameterized
// Monte-Carlo ELBO gradient. Gradients are analytic; the finite
// difference suite is the correctness anchor.

struct TrainingConfig {
  int num_samples = 10;            // L
  int phi_update_interval = 1000;  // zeta steps between phi re-estimations
  int pretrain_updates = 15000;
  int outer_iterations = 30;
  int minibatch_size = 100;  // utterances
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 0;
  int num_threads = 1;

  void Validate() const;
};

struct Utterance {
  std::string id;
  Matrix features;               // N x F
  const DecodeGraph *graph = nullptr;
};

using Corpus = std::vector<Utterance>;

struct ElboReport {
  double expected_loglike = 0.0;  // batch-scaled, averaged over samples
  double kl_term = 0.0;           // full-corpus KL, never scaled
  double elbo = 0.0;              // expected_loglike - kl_term
  double batch_scale = 1.0;
};

/// One utterance plus its fixed responsibilities.
struct BatchItem {
  const Utterance *utterance;
  const StatePosteriors *phi;
};

/// Monte-Carlo ELBO at fixed responsibilities:
///   (corpus_size / |batch|) * (1/L) sum_l sum_{u,n,s} gamma[n,s] ll_l[n,s]
///   minus KL(q(Theta) || p(Theta)).
ElboReport EstimateElbo(std::span<const BatchItem> batch, size_t corpus_size,
                        const SubspacePosterior &zeta,
                        const SubspacePrior &prior,
                        const ParameterLayout &layout,
                        const std::vector<Vec> &noise_draws,
                        int num_threads = 1);

struct GradientResult {
  ElboReport report;
  Vec grad_m;       // d elbo / d m
  Vec grad_lambda;  // d elbo / d lambda
};

/// Analytic gradient of EstimateElbo with respect to (m, lambda) at
/// fixed gamma and fixed noise: chain rule through the reparameterized
/// sample, the affine subspace map, the link f, and the
/// responsibility-weighted mixture log-density, plus the closed-form KL
/// gradient.
GradientResult ZetaGradient(std::span<const BatchItem> batch,
                            size_t corpus_size, const SubspacePosterior &zeta,
                            const SubspacePrior &prior,
                            const ParameterLayout &layout,
                            const std::vector<Vec> &noise_draws,
                            int num_threads = 1,
                            size_t trainable_from = 0);

/// Coordinate update of q(Xi): per utterance, forward-backward on the
/// L-sample-averaged expected log-likelihood matrix. Deterministic given
/// the noise draws. Infeasible alignments are reported with the
/// utterance id attached.
std::vector<StatePosteriors> UpdatePhi(const Corpus &corpus,
                                       const SubspacePosterior &zeta,
                                       const ParameterLayout &layout,
                                       const std::vector<Vec> &noise_draws,
                                       int num_threads = 1);

/// Uniform responsibilities over feasible states, the discovery-phase
/// initializer.
std::vector<StatePosteriors> UniformPhi(const Corpus &corpus);

struct RoundStats {
  int round = 0;
  double elbo = 0.0;
  double expected_loglike = 0.0;  // sum of per-utterance log-evidence
  double kl_term = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  SubspacePosterior zeta;
  std::vector<StatePosteriors> phi;
  std::vector<RoundStats> trace;
};

/// Full schedule: pretrain_updates zeta steps against the initial phi,
/// then outer_iterations rounds of [UpdatePhi; phi_update_interval zeta
/// steps]. The reported per-round ELBO is the log-evidence form (exact
/// at the phi coordinate optimum). Reproducible from config.seed.
/// trainable_from freezes every coordinate below it (pass
/// zeta.EmbeddingOffset() to keep W and b fixed).
TrainResult Train(const Corpus &corpus, const SubspacePosterior &zeta0,
                  const SubspacePrior &prior, const ParameterLayout &layout,
                  const TrainingConfig &config, size_t trainable_from = 0,
                  const std::function<void(const RoundStats &)> &on_round = {});

}  // namespace shmm

#endif  // SHMM_TRAINING_H_
