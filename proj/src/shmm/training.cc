// shmm/training.cc

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

#include "shmm/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "shmm/numerics.h"
#include "shmm/rng.h"

namespace shmm {

void TrainingConfig::Validate() const {
  if (num_samples < 1) throw UsageError("TrainingConfig: num_samples must be >= 1");
  if (phi_update_interval < 1 || minibatch_size < 1)
    throw UsageError("TrainingConfig: counters must be >= 1");
  if (pretrain_updates < 0 || outer_iterations < 0)
    throw UsageError("TrainingConfig: negative schedule");
  if (num_threads < 1) throw UsageError("TrainingConfig: num_threads must be >= 1");
}

namespace {

// Static block partition; fn(first, last, thread_index). Thread count
// only affects summation grouping, never the per-item work.
void ParallelFor(size_t n_items, int n_threads,
                 const std::function<void(size_t, size_t, int)> &fn) {
  int usable = std::max(1, std::min<int>(n_threads, static_cast<int>(n_items)));
  if (usable == 1) {
    fn(0, n_items, 0);
    return;
  }
  size_t chunk = (n_items + usable - 1) / usable;
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < usable; ++t) {
    size_t first = t * chunk;
    size_t last = std::min(n_items, first + chunk);
    pool.emplace_back([&, first, last, t] {
      try {
        if (first < last) fn(first, last, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (std::thread &th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Per-sample emission parameters for every unit, in evaluation-ready
// form. Index order: [unit][state][component].
struct PreparedSample {
  Vec theta;
  std::vector<UnitParams> params;                    // per unit
  std::vector<std::vector<Vec>> log_weights;         // [unit][state] -> K
  std::vector<std::vector<std::vector<Vec>>> inv_var;  // [unit][state][comp]
  std::vector<std::vector<Vec>> log_norm;            // [unit][state] -> K
};

PreparedSample PrepareSample(const SubspacePosterior &zeta,
                             const ParameterLayout &layout,
                             std::span<const double> noise) {
  PreparedSample prep;
  prep.theta = zeta.Sample(noise);
  ThetaView view(prep.theta, zeta.subspace_dim(), zeta.psi_dim());
  size_t num_units = zeta.num_units();
  int K = layout.num_components;
  int F = layout.feature_dim;
  constexpr double kLog2Pi = 1.8378770664093454836;
  prep.params.reserve(num_units);
  prep.log_weights.resize(num_units);
  prep.inv_var.resize(num_units);
  prep.log_norm.resize(num_units);
  for (size_t u = 0; u < num_units; ++u) {
    Vec psi = view.Psi(u);
    prep.params.push_back(MapToStandard(psi, layout));
    const UnitParams &p = prep.params.back();
    prep.log_weights[u].resize(layout.num_states);
    prep.inv_var[u].resize(layout.num_states);
    prep.log_norm[u].resize(layout.num_states);
    for (int i = 0; i < layout.num_states; ++i) {
      prep.log_weights[u][i].resize(K);
      prep.log_norm[u][i].resize(K);
      prep.inv_var[u][i].resize(K);
      for (int j = 0; j < K; ++j) {
        prep.log_weights[u][i][j] = std::log(p.weights[i][j]);
        prep.inv_var[u][i][j].resize(F);
        double log_det = 0.0;
        for (int f = 0; f < F; ++f) {
          double var = p.variances[i][j][f];
          prep.inv_var[u][i][j][f] = 1.0 / var;
          log_det += std::log(var);
        }
        prep.log_norm[u][i][j] = -0.5 * (F * kLog2Pi + log_det);
      }
    }
  }
  return prep;
}

// Folds gamma over graph states sharing an emission class, so repeated
// units in an alignment graph are evaluated once per frame.
struct ClassIndex {
  std::vector<size_t> unit_pos;   // per class
  std::vector<int> unit_state;    // per class
};

ClassIndex BuildClassIndex(const DecodeGraph &graph,
                           const SubspacePosterior &zeta) {
  ClassIndex idx;
  idx.unit_pos.reserve(graph.emission_classes.size());
  idx.unit_state.reserve(graph.emission_classes.size());
  const std::vector<std::string> &ids = zeta.unit_ids();
  for (const auto &[unit_id, state] : graph.emission_classes) {
    auto it = std::find(ids.begin(), ids.end(), unit_id);
    if (it == ids.end())
      throw UsageError("training: graph references unknown unit '" + unit_id +
                       "'");
    idx.unit_pos.push_back(static_cast<size_t>(it - ids.begin()));
    idx.unit_state.push_back(state);
  }
  return idx;
}

// Data-term contribution of one utterance under one sample, and
// optionally the psi-space gradient accumulated into grad_psi (one
// D-vector per unit).
double UtteranceObjective(const Utterance &utt, const StatePosteriors &phi,
                          const PreparedSample &prep, const ClassIndex &cls,
                          const ParameterLayout &layout,
                          std::vector<Vec> *grad_psi) {
  const DecodeGraph &graph = *utt.graph;
  int n_classes = graph.NumClasses();
  int n_states = graph.NumStates();
  int64_t n_frames = utt.features.rows();
  int K = layout.num_components;
  int F = layout.feature_dim;
  if (phi.gamma.rows() != n_frames || phi.gamma.cols() != n_states)
    throw UsageError("training: responsibilities do not match utterance '" +
                     utt.id + "'");

  // gamma folded to emission classes.
  Vec gamma_class(n_classes);
  Vec terms(K), resp(K);
  double acc = 0.0;
  for (int64_t n = 0; n < n_frames; ++n) {
    std::span<const double> x = utt.features.row(n);
    std::fill(gamma_class.begin(), gamma_class.end(), 0.0);
    for (int s = 0; s < n_states; ++s)
      gamma_class[graph.states[s].emission_class] += phi.gamma(n, s);
    for (int c = 0; c < n_classes; ++c) {
      double g = gamma_class[c];
      if (g == 0.0) continue;
      size_t u = cls.unit_pos[c];
      int i = cls.unit_state[c];
      const Vec &lw = prep.log_weights[u][i];
      const Vec &ln = prep.log_norm[u][i];
      for (int j = 0; j < K; ++j) {
        const Vec &mu = prep.params[u].means[i][j];
        const Vec &iv = prep.inv_var[u][i][j];
        double maha = 0.0;
        for (int f = 0; f < F; ++f) {
          double d = x[f] - mu[f];
          maha += d * d * iv[f];
        }
        terms[j] = lw[j] + ln[j] - 0.5 * maha;
      }
      double ll = LogSumExp(terms);
      acc += g * ll;
      if (grad_psi == nullptr || g == 0.0) continue;
      Vec &gp = (*grad_psi)[u];
      const Vec &weights = prep.params[u].weights[i];
      for (int j = 0; j < K; ++j) resp[j] = std::exp(terms[j] - ll);
      for (int j = 0; j + 1 < K; ++j)
        gp[layout.WeightOffset(i) + j] += g * (resp[j] - weights[j]);
      for (int j = 0; j < K; ++j) {
        double gr = g * resp[j];
        if (gr == 0.0) continue;
        const Vec &mu = prep.params[u].means[i][j];
        const Vec &iv = prep.inv_var[u][i][j];
        double *gmu = gp.data() + layout.MeanOffset(i, j);
        double *glv = gp.data() + layout.LogVarOffset(i, j);
        for (int f = 0; f < F; ++f) {
          double d = x[f] - mu[f];
          double q = d * iv[f];
          gmu[f] += gr * q;
          glv[f] += gr * 0.5 * (d * q - 1.0);
        }
      }
    }
  }
  return acc;
}

struct ObjectiveOptions {
  bool want_gradient = false;
  size_t trainable_from = 0;  // skip W/b chain when >= EmbeddingOffset()
  int num_threads = 1;
};

GradientResult BatchObjective(std::span<const BatchItem> batch,
                              size_t corpus_size,
                              const SubspacePosterior &zeta,
                              const SubspacePrior &prior,
                              const ParameterLayout &layout,
                              const std::vector<Vec> &noise_draws,
                              const ObjectiveOptions &opts) {
  if (batch.empty()) throw UsageError("training: empty batch");
  if (noise_draws.empty()) throw UsageError("training: no noise draws");
  for (const Vec &eps : noise_draws)
    if (eps.size() != zeta.dim())
      throw UsageError("training: noise length does not match zeta");
  layout.Validate();
  if (zeta.psi_dim() != layout.PsiDim())
    throw UsageError("training: layout does not match zeta");

  size_t L = noise_draws.size();
  size_t dim = zeta.dim();
  int S = zeta.subspace_dim();
  int D = zeta.psi_dim();
  size_t num_units = zeta.num_units();
  double batch_scale =
      static_cast<double>(corpus_size) / static_cast<double>(batch.size());
  bool subspace_grad = opts.trainable_from < zeta.EmbeddingOffset();

  // Class indices are graph-shape dependent; cache per distinct graph.
  std::vector<const DecodeGraph *> graph_keys;
  std::vector<ClassIndex> graph_cls;
  std::vector<size_t> item_cls(batch.size());
  for (size_t b = 0; b < batch.size(); ++b) {
    const DecodeGraph *g = batch[b].utterance->graph;
    auto it = std::find(graph_keys.begin(), graph_keys.end(), g);
    if (it == graph_keys.end()) {
      graph_keys.push_back(g);
      graph_cls.push_back(BuildClassIndex(*g, zeta));
      item_cls[b] = graph_keys.size() - 1;
    } else {
      item_cls[b] = static_cast<size_t>(it - graph_keys.begin());
    }
  }

  GradientResult result;
  if (opts.want_gradient) {
    result.grad_m.assign(dim, 0.0);
    result.grad_lambda.assign(dim, 0.0);
  }

  int n_threads = std::max(1, opts.num_threads);
  double data_term = 0.0;
  for (size_t l = 0; l < L; ++l) {
    PreparedSample prep = PrepareSample(zeta, layout, noise_draws[l]);
    std::vector<double> partial_obj(n_threads, 0.0);
    std::vector<std::vector<Vec>> partial_psi;
    if (opts.want_gradient)
      partial_psi.assign(n_threads,
                         std::vector<Vec>(num_units, Vec(D, 0.0)));
    ParallelFor(batch.size(), n_threads, [&](size_t first, size_t last, int t) {
      std::vector<Vec> *gp = opts.want_gradient ? &partial_psi[t] : nullptr;
      for (size_t b = first; b < last; ++b)
        partial_obj[t] +=
            UtteranceObjective(*batch[b].utterance, *batch[b].phi, prep,
                               graph_cls[item_cls[b]], layout, gp);
    });
    for (double v : partial_obj) data_term += v;
    if (!opts.want_gradient) continue;

    // Reduce psi-space gradients, then chain into (m, lambda).
    std::vector<Vec> &grad_psi = partial_psi[0];
    for (int t = 1; t < n_threads; ++t)
      for (size_t u = 0; u < num_units; ++u)
        for (int c = 0; c < D; ++c) grad_psi[u][c] += partial_psi[t][u][c];

    double scale = batch_scale / static_cast<double>(L);
    ThetaView view(prep.theta, S, D);
    Vec grad_theta(dim, 0.0);
    size_t b_off = zeta.BOffset();
    size_t emb_off = zeta.EmbeddingOffset();
    for (size_t u = 0; u < num_units; ++u) {
      const Vec &gp = grad_psi[u];
      std::span<const double> h = view.h(u);
      if (subspace_grad) {
        for (int r = 0; r < S; ++r) {
          double hr = h[r];
          double *gw = grad_theta.data() + static_cast<size_t>(r) * D;
          for (int c = 0; c < D; ++c) gw[c] += hr * gp[c];
        }
        for (int c = 0; c < D; ++c) grad_theta[b_off + c] += gp[c];
      }
      double *gh = grad_theta.data() + emb_off + u * S;
      for (int r = 0; r < S; ++r) {
        std::span<const double> w_row = view.w_row(r);
        double acc = 0.0;
        for (int c = 0; c < D; ++c) acc += w_row[c] * gp[c];
        gh[r] += acc;
      }
    }
    std::span<const double> lambda = zeta.lambda();
    const Vec &eps = noise_draws[l];
    for (size_t i = 0; i < dim; ++i) {
      double g = scale * grad_theta[i];
      result.grad_m[i] += g;
      result.grad_lambda[i] += g * 0.5 * std::exp(0.5 * lambda[i]) * eps[i];
    }
  }

  result.report.batch_scale = batch_scale;
  result.report.expected_loglike =
      batch_scale * data_term / static_cast<double>(L);
  result.report.kl_term = zeta.KlToPrior(prior);
  result.report.elbo = result.report.expected_loglike - result.report.kl_term;

  if (opts.want_gradient) {
    std::span<const double> m = zeta.m();
    std::span<const double> lambda = zeta.lambda();
    for (size_t i = 0; i < dim; ++i) {
      double pv = zeta.PriorVariance(i, prior);
      result.grad_m[i] -= m[i] / pv;
      result.grad_lambda[i] -= 0.5 * (std::exp(lambda[i]) / pv - 1.0);
    }
  }
  return result;
}

}  // namespace

ElboReport EstimateElbo(std::span<const BatchItem> batch, size_t corpus_size,
                        const SubspacePosterior &zeta,
                        const SubspacePrior &prior,
                        const ParameterLayout &layout,
                        const std::vector<Vec> &noise_draws, int num_threads) {
  ObjectiveOptions opts;
  opts.num_threads = num_threads;
  return BatchObjective(batch, corpus_size, zeta, prior, layout, noise_draws,
                        opts)
      .report;
}

GradientResult ZetaGradient(std::span<const BatchItem> batch,
                            size_t corpus_size, const SubspacePosterior &zeta,
                            const SubspacePrior &prior,
                            const ParameterLayout &layout,
                            const std::vector<Vec> &noise_draws,
                            int num_threads, size_t trainable_from) {
  ObjectiveOptions opts;
  opts.want_gradient = true;
  opts.num_threads = num_threads;
  opts.trainable_from = trainable_from;
  return BatchObjective(batch, corpus_size, zeta, prior, layout, noise_draws,
                        opts);
}

std::vector<StatePosteriors> UpdatePhi(const Corpus &corpus,
                                       const SubspacePosterior &zeta,
                                       const ParameterLayout &layout,
                                       const std::vector<Vec> &noise_draws,
                                       int num_threads) {
  if (noise_draws.empty()) throw UsageError("UpdatePhi: no noise draws");
  size_t L = noise_draws.size();
  std::vector<PreparedSample> prepared;
  prepared.reserve(L);
  for (const Vec &eps : noise_draws)
    prepared.push_back(PrepareSample(zeta, layout, eps));

  std::vector<const DecodeGraph *> graph_keys;
  std::vector<ClassIndex> graph_cls;
  std::vector<size_t> utt_cls(corpus.size());
  for (size_t u = 0; u < corpus.size(); ++u) {
    auto it = std::find(graph_keys.begin(), graph_keys.end(), corpus[u].graph);
    if (it == graph_keys.end()) {
      graph_keys.push_back(corpus[u].graph);
      graph_cls.push_back(BuildClassIndex(*corpus[u].graph, zeta));
      utt_cls[u] = graph_keys.size() - 1;
    } else {
      utt_cls[u] = static_cast<size_t>(it - graph_keys.begin());
    }
  }

  std::vector<StatePosteriors> result(corpus.size());
  int K = layout.num_components;
  int F = layout.feature_dim;
  ParallelFor(corpus.size(), num_threads, [&](size_t first, size_t last, int) {
    Vec terms(K);
    for (size_t u = first; u < last; ++u) {
      const Utterance &utt = corpus[u];
      const DecodeGraph &graph = *utt.graph;
      const ClassIndex &cls = graph_cls[utt_cls[u]];
      int64_t n_frames = utt.features.rows();
      int n_classes = graph.NumClasses();
      // Average of per-sample log-likelihoods: the Monte-Carlo estimate
      // of <ln p(x | .)> that the phi optimum conditions on.
      Matrix class_ll(n_frames, n_classes, 0.0);
      for (size_t l = 0; l < L; ++l) {
        const PreparedSample &prep = prepared[l];
        for (int64_t n = 0; n < n_frames; ++n) {
          std::span<const double> x = utt.features.row(n);
          for (int c = 0; c < n_classes; ++c) {
            size_t up = cls.unit_pos[c];
            int i = cls.unit_state[c];
            for (int j = 0; j < K; ++j) {
              const Vec &mu = prep.params[up].means[i][j];
              const Vec &iv = prep.inv_var[up][i][j];
              double maha = 0.0;
              for (int f = 0; f < F; ++f) {
                double d = x[f] - mu[f];
                maha += d * d * iv[f];
              }
              terms[j] =
                  prep.log_weights[up][i][j] + prep.log_norm[up][i][j] -
                  0.5 * maha;
            }
            class_ll(n, c) += LogSumExp(terms);
          }
        }
      }
      Matrix loglikes(n_frames, graph.NumStates());
      double inv_l = 1.0 / static_cast<double>(L);
      for (int64_t n = 0; n < n_frames; ++n)
        for (int s = 0; s < graph.NumStates(); ++s)
          loglikes(n, s) = class_ll(n, graph.states[s].emission_class) * inv_l;
      try {
        result[u] = ForwardBackward(loglikes, graph);
      } catch (const InfeasibleAlignmentError &e) {
        throw InfeasibleAlignmentError("utterance '" + utt.id +
                                       "': " + e.what());
      }
    }
  });
  return result;
}

std::vector<StatePosteriors> UniformPhi(const Corpus &corpus) {
  std::vector<StatePosteriors> result(corpus.size());
  for (size_t u = 0; u < corpus.size(); ++u) {
    const Utterance &utt = corpus[u];
    int64_t n_frames = utt.features.rows();
    Matrix mask = FeasibleStateMask(n_frames, *utt.graph);
    StatePosteriors post;
    post.gamma = Matrix(n_frames, utt.graph->NumStates());
    for (int64_t n = 0; n < n_frames; ++n) {
      double row = 0.0;
      for (int s = 0; s < utt.graph->NumStates(); ++s) row += mask(n, s);
      if (row == 0.0)
        throw InfeasibleAlignmentError("utterance '" + utt.id +
                                       "': no feasible path of length " +
                                       std::to_string(n_frames));
      for (int s = 0; s < utt.graph->NumStates(); ++s)
        post.gamma(n, s) = mask(n, s) / row;
    }
    result[u] = std::move(post);
  }
  return result;
}

TrainResult Train(const Corpus &corpus, const SubspacePosterior &zeta0,
                  const SubspacePrior &prior, const ParameterLayout &layout,
                  const TrainingConfig &config, size_t trainable_from,
                  const std::function<void(const RoundStats &)> &on_round) {
  config.Validate();
  if (corpus.empty()) throw UsageError("Train: empty corpus");
  if (trainable_from >= zeta0.dim())
    throw UsageError("Train: nothing to train");

  TrainResult result;
  result.zeta = zeta0;
  result.phi = UniformPhi(corpus);

  size_t dim = result.zeta.dim();
  size_t train_len = dim - trainable_from;
  AdamState adam_m = AdamState::Create(train_len, config.learning_rate,
                                       config.beta1, config.beta2,
                                       config.epsilon);
  AdamState adam_lambda = adam_m;

  Rng rng(config.seed);
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a shuffle on first use
  size_t batch_size = std::min<size_t>(config.minibatch_size, corpus.size());
  std::vector<Vec> noise(config.num_samples, Vec(dim));

  auto draw_noise = [&] {
    for (Vec &eps : noise) rng.FillNormal(eps);
  };

  auto zeta_step = [&] {
    std::vector<BatchItem> batch;
    batch.reserve(batch_size);
    for (size_t i = 0; i < batch_size; ++i) {
      if (cursor == order.size()) {
        // Fisher-Yates; the stream position only depends on the schedule.
        for (size_t j = order.size() - 1; j > 0; --j)
          std::swap(order[j], order[rng.Integer(j + 1)]);
        cursor = 0;
      }
      size_t u = order[cursor++];
      batch.push_back({&corpus[u], &result.phi[u]});
    }
    draw_noise();
    GradientResult grad = ZetaGradient(batch, corpus.size(), result.zeta,
                                       prior, layout, noise,
                                       config.num_threads, trainable_from);
    adam_m.Step(result.zeta.m().subspan(trainable_from),
                std::span<const double>(grad.grad_m).subspan(trainable_from));
    adam_lambda.Step(
        result.zeta.lambda().subspan(trainable_from),
        std::span<const double>(grad.grad_lambda).subspan(trainable_from));
  };

  for (int step = 0; step < config.pretrain_updates; ++step) zeta_step();

  for (int round = 1; round <= config.outer_iterations; ++round) {
    auto start = std::chrono::steady_clock::now();
    draw_noise();
    result.phi = UpdatePhi(corpus, result.zeta, layout, noise,
                           config.num_threads);
    RoundStats stats;
    stats.round = round;
    for (const StatePosteriors &phi : result.phi)
      stats.expected_loglike += phi.log_evidence;
    stats.kl_term = result.zeta.KlToPrior(prior);
    stats.elbo = stats.expected_loglike - stats.kl_term;
    if (!std::isfinite(stats.elbo))
      throw DataError("Train: ELBO became non-finite at round " +
                      std::to_string(round));
    for (int step = 0; step < config.phi_update_interval; ++step) zeta_step();
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    result.trace.push_back(stats);
    if (on_round) on_round(stats);
  }
  return result;
}

}  // namespace shmm
