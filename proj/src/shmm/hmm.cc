// shmm/hmm.cc

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

#include "shmm/hmm.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "shmm/numerics.h"

namespace shmm {

std::vector<UnitFragment::Arc> UnitFragment::Arcs() const {
  double lp_self = std::log(self_loop_prob);
  double lp_fwd = std::log1p(-self_loop_prob);
  return {{0, 0, lp_self}, {0, 1, lp_fwd},  {1, 1, lp_self},
          {1, 2, lp_fwd},  {2, 2, lp_self}, {2, kExit, lp_fwd}};
}

UnitFragment BuildUnitHmm(const std::string &unit_id, double self_loop_prob) {
  if (!(self_loop_prob > 0.0 && self_loop_prob < 1.0))
    throw UsageError("BuildUnitHmm: self_loop_prob must be in (0, 1)");
  return UnitFragment{unit_id, self_loop_prob};
}

void DecodeGraph::Validate() const {
  int n = NumStates();
  if (static_cast<int>(initial_logp.size()) != n ||
      static_cast<int>(final_logp.size()) != n ||
      static_cast<int>(arcs_from.size()) != n ||
      static_cast<int>(arcs_into.size()) != n)
    throw UsageError("DecodeGraph: inconsistent table sizes");
  for (int s = 0; s < n; ++s) {
    Vec out;
    for (const Arc &a : arcs_from[s]) {
      out.push_back(a.log_prob);
      // Left-to-right inside a unit: no backward arcs.
      if (states[a.to].unit_id == states[s].unit_id &&
          states[a.to].unit_state < states[s].unit_state &&
          !(states[s].unit_state == 2 && states[a.to].unit_state == 0))
        throw UsageError("DecodeGraph: backward arc inside a unit");
    }
    if (final_logp[s] != kLogZero) out.push_back(final_logp[s]);
    if (out.empty()) throw UsageError("DecodeGraph: dead-end state");
    if (std::abs(LogSumExp(out)) > 1e-10)
      throw UsageError("DecodeGraph: state " + std::to_string(s) +
                       " outgoing mass does not normalize");
  }
}

namespace {

// Lays down one fragment's states and internal arcs; returns the index
// of its s0. Exit handling is left to the caller.
int AppendFragment(DecodeGraph *g, const UnitFragment &frag,
                   std::map<std::pair<std::string, int>, int> *class_index) {
  int base = g->NumStates();
  for (int i = 0; i < 3; ++i) {
    auto key = std::make_pair(frag.unit_id, i);
    auto [it, inserted] = class_index->try_emplace(
        key, static_cast<int>(g->emission_classes.size()));
    if (inserted) g->emission_classes.push_back(key);
    g->states.push_back({frag.unit_id, i, it->second});
    g->initial_logp.push_back(kLogZero);
    g->final_logp.push_back(kLogZero);
    g->arcs_from.emplace_back();
    g->arcs_into.emplace_back();
  }
  for (const UnitFragment::Arc &a : frag.Arcs()) {
    if (a.to == UnitFragment::kExit) continue;
    g->arcs_from[base + a.from].push_back({base + a.to, a.log_prob});
  }
  return base;
}

void FinishArcs(DecodeGraph *g) {
  for (int s = 0; s < g->NumStates(); ++s)
    for (const DecodeGraph::Arc &a : g->arcs_from[s])
      g->arcs_into[a.to].push_back({s, a.log_prob});
}

}  // namespace

DecodeGraph BuildPhoneLoop(std::span<const std::string> unit_ids,
                           double self_loop_prob) {
  if (unit_ids.empty()) throw UsageError("BuildPhoneLoop: no units");
  size_t num_units = unit_ids.size();
  DecodeGraph g;
  std::map<std::pair<std::string, int>, int> class_index;
  std::vector<int> entries;
  entries.reserve(num_units);
  for (const std::string &id : unit_ids)
    entries.push_back(
        AppendFragment(&g, BuildUnitHmm(id, self_loop_prob), &class_index));

  double entry_lp = -std::log(static_cast<double>(num_units));
  // Exit mass splits uniformly over the P re-entry targets plus
  // termination.
  double slot_lp = std::log1p(-self_loop_prob) -
                   std::log(static_cast<double>(num_units) + 1.0);
  for (size_t u = 0; u < num_units; ++u) {
    int s0 = entries[u];
    int s2 = s0 + 2;
    g.initial_logp[s0] = entry_lp;
    g.final_logp[s2] = slot_lp;
    for (int target : entries) g.arcs_from[s2].push_back({target, slot_lp});
  }
  FinishArcs(&g);
  g.Validate();
  return g;
}

DecodeGraph BuildAlignmentGraph(std::span<const std::string> transcript,
                                double self_loop_prob) {
  if (transcript.empty()) throw UsageError("BuildAlignmentGraph: empty transcript");
  DecodeGraph g;
  std::map<std::pair<std::string, int>, int> class_index;
  double exit_lp = std::log1p(-self_loop_prob);
  int prev_s2 = -1;
  for (const std::string &id : transcript) {
    int s0 = AppendFragment(&g, BuildUnitHmm(id, self_loop_prob), &class_index);
    if (prev_s2 >= 0) g.arcs_from[prev_s2].push_back({s0, exit_lp});
    prev_s2 = s0 + 2;
  }
  g.initial_logp[0] = 0.0;
  g.final_logp[prev_s2] = exit_lp;
  FinishArcs(&g);
  g.Validate();
  return g;
}

EmissionTable EmissionTable::Build(const DecodeGraph &graph,
                                   const std::map<std::string, UnitParams> &units,
                                   const ParameterLayout &layout) {
  EmissionTable t;
  t.layout = layout;
  int K = layout.num_components;
  int F = layout.feature_dim;
  for (const auto &[unit_id, state] : graph.emission_classes) {
    auto it = units.find(unit_id);
    if (it == units.end())
      throw UsageError("EmissionTable: no parameters for unit '" + unit_id + "'");
    const UnitParams &p = it->second;
    Vec lw(K), ln(K);
    std::vector<Vec> mu(K), iv(K);
    for (int j = 0; j < K; ++j) {
      lw[j] = std::log(p.weights[state][j]);
      mu[j] = p.means[state][j];
      iv[j].resize(F);
      double log_det = 0.0;
      for (int f = 0; f < F; ++f) {
        double var = p.variances[state][j][f];
        iv[j][f] = 1.0 / var;
        log_det += std::log(var);
      }
      constexpr double kLog2Pi = 1.8378770664093454836;
      ln[j] = -0.5 * (F * kLog2Pi + log_det);
    }
    t.log_weights.push_back(std::move(lw));
    t.means.push_back(std::move(mu));
    t.inv_variances.push_back(std::move(iv));
    t.log_norm.push_back(std::move(ln));
  }
  return t;
}

double ClassLogLike(const EmissionTable &table, int cls,
                    std::span<const double> x,
                    std::span<double> component_log_post) {
  int K = table.layout.num_components;
  int F = table.layout.feature_dim;
  if (static_cast<int>(x.size()) != F)
    throw UsageError("ClassLogLike: feature dimension mismatch");
  double terms[64];
  Vec big;
  double *t = terms;
  if (K > 64) {
    big.resize(K);
    t = big.data();
  }
  for (int j = 0; j < K; ++j) {
    const Vec &mu = table.means[cls][j];
    const Vec &iv = table.inv_variances[cls][j];
    double maha = 0.0;
    for (int f = 0; f < F; ++f) {
      double d = x[f] - mu[f];
      maha += d * d * iv[f];
    }
    t[j] = table.log_weights[cls][j] + table.log_norm[cls][j] - 0.5 * maha;
  }
  double total = LogSumExp({t, static_cast<size_t>(K)});
  if (!component_log_post.empty()) {
    for (int j = 0; j < K; ++j) component_log_post[j] = t[j] - total;
  }
  return total;
}

Matrix PerFrameLogLikes(const Matrix &features,
                        const std::map<std::string, UnitParams> &units,
                        const DecodeGraph &graph,
                        const ParameterLayout &layout) {
  if (features.cols() != layout.feature_dim)
    throw UsageError("PerFrameLogLikes: feature dimension mismatch");
  EmissionTable table = EmissionTable::Build(graph, units, layout);
  int64_t n_frames = features.rows();
  Matrix by_class(n_frames, graph.NumClasses());
  for (int64_t n = 0; n < n_frames; ++n)
    for (int c = 0; c < graph.NumClasses(); ++c)
      by_class(n, c) = ClassLogLike(table, c, features.row(n));
  Matrix out(n_frames, graph.NumStates());
  for (int64_t n = 0; n < n_frames; ++n)
    for (int s = 0; s < graph.NumStates(); ++s)
      out(n, s) = by_class(n, graph.states[s].emission_class);
  return out;
}

FrameScores PerFrameLogLikesWithComponents(
    const Matrix &features, const std::map<std::string, UnitParams> &units,
    const DecodeGraph &graph, const ParameterLayout &layout) {
  if (features.cols() != layout.feature_dim)
    throw UsageError("PerFrameLogLikes: feature dimension mismatch");
  EmissionTable table = EmissionTable::Build(graph, units, layout);
  int K = layout.num_components;
  int64_t n_frames = features.rows();
  Matrix class_ll(n_frames, graph.NumClasses());
  Matrix class_post(n_frames, static_cast<int64_t>(graph.NumClasses()) * K);
  for (int64_t n = 0; n < n_frames; ++n)
    for (int c = 0; c < graph.NumClasses(); ++c)
      class_ll(n, c) = ClassLogLike(table, c, features.row(n),
                                    class_post.row(n).subspan(c * K, K));
  FrameScores scores;
  scores.loglikes = Matrix(n_frames, graph.NumStates());
  scores.component_log_post =
      Matrix(n_frames, static_cast<int64_t>(graph.NumStates()) * K);
  for (int64_t n = 0; n < n_frames; ++n)
    for (int s = 0; s < graph.NumStates(); ++s) {
      int c = graph.states[s].emission_class;
      scores.loglikes(n, s) = class_ll(n, c);
      for (int j = 0; j < K; ++j)
        scores.component_log_post(n, s * K + j) = class_post(n, c * K + j);
    }
  return scores;
}

StatePosteriors ForwardBackward(const Matrix &loglikes,
                                const DecodeGraph &graph) {
  int64_t n_frames = loglikes.rows();
  int n_states = graph.NumStates();
  if (n_frames < 1) throw UsageError("ForwardBackward: empty utterance");
  if (loglikes.cols() != n_states)
    throw UsageError("ForwardBackward: loglike/state count mismatch");

  Matrix alpha(n_frames, n_states, kLogZero);
  Matrix beta(n_frames, n_states, kLogZero);
  Vec work(n_states);

  for (int s = 0; s < n_states; ++s)
    alpha(0, s) = graph.initial_logp[s] + loglikes(0, s);
  for (int64_t n = 1; n < n_frames; ++n)
    for (int s = 0; s < n_states; ++s) {
      size_t cnt = 0;
      for (const DecodeGraph::Arc &a : graph.arcs_into[s]) {
        double v = alpha(n - 1, a.to) + a.log_prob;
        if (v != kLogZero) work[cnt++] = v;
      }
      alpha(n, s) = cnt == 0 ? kLogZero
                             : loglikes(n, s) + LogSumExp({work.data(), cnt});
    }

  for (int s = 0; s < n_states; ++s) beta(n_frames - 1, s) = graph.final_logp[s];
  for (int64_t n = n_frames - 2; n >= 0; --n)
    for (int s = 0; s < n_states; ++s) {
      size_t cnt = 0;
      for (const DecodeGraph::Arc &a : graph.arcs_from[s]) {
        double v = a.log_prob + loglikes(n + 1, a.to) + beta(n + 1, a.to);
        if (v != kLogZero) work[cnt++] = v;
      }
      beta(n, s) = cnt == 0 ? kLogZero : LogSumExp({work.data(), cnt});
    }

  size_t cnt = 0;
  for (int s = 0; s < n_states; ++s) {
    double v = alpha(n_frames - 1, s) + graph.final_logp[s];
    if (v != kLogZero) work[cnt++] = v;
  }
  if (cnt == 0)
    throw InfeasibleAlignmentError(
        "ForwardBackward: no feasible path of length " +
        std::to_string(n_frames));
  double log_evidence = LogSumExp({work.data(), cnt});
  if (!std::isfinite(log_evidence))
    throw InfeasibleAlignmentError("ForwardBackward: non-finite evidence");

  StatePosteriors post;
  post.log_evidence = log_evidence;
  post.gamma = Matrix(n_frames, n_states);
  for (int64_t n = 0; n < n_frames; ++n) {
    double row_sum = 0.0;
    for (int s = 0; s < n_states; ++s) {
      double v = alpha(n, s) + beta(n, s);
      double g = v == kLogZero ? 0.0 : std::exp(v - log_evidence);
      post.gamma(n, s) = g;
      row_sum += g;
    }
    // Row renormalization only mops up rounding; the mass is already 1
    // up to accumulated logsumexp error.
    for (int s = 0; s < n_states; ++s) post.gamma(n, s) /= row_sum;
  }
  return post;
}

void AttachComponentPosteriors(const FrameScores &scores,
                               StatePosteriors *post) {
  int64_t n_frames = post->gamma.rows();
  int64_t n_states = post->gamma.cols();
  int64_t k = scores.component_log_post.cols() / n_states;
  post->component_gamma = Matrix(n_frames, n_states * k);
  for (int64_t n = 0; n < n_frames; ++n)
    for (int64_t s = 0; s < n_states; ++s)
      for (int64_t j = 0; j < k; ++j)
        post->component_gamma(n, s * k + j) =
            post->gamma(n, s) *
            std::exp(scores.component_log_post(n, s * k + j));
}

Matrix FeasibleStateMask(int64_t num_frames, const DecodeGraph &graph) {
  int n_states = graph.NumStates();
  // Zero-emission forward-backward: a state is feasible at frame n when
  // it is both reachable from an initial state and co-reachable to a
  // final weight in exactly the remaining frames.
  Matrix reach(num_frames, n_states, 0.0);
  Matrix coreach(num_frames, n_states, 0.0);
  for (int s = 0; s < n_states; ++s) {
    reach(0, s) = graph.initial_logp[s] != kLogZero ? 1.0 : 0.0;
    coreach(num_frames - 1, s) = graph.final_logp[s] != kLogZero ? 1.0 : 0.0;
  }
  for (int64_t n = 1; n < num_frames; ++n)
    for (int s = 0; s < n_states; ++s)
      for (const DecodeGraph::Arc &a : graph.arcs_into[s])
        if (reach(n - 1, a.to) > 0.0) {
          reach(n, s) = 1.0;
          break;
        }
  for (int64_t n = num_frames - 2; n >= 0; --n)
    for (int s = 0; s < n_states; ++s)
      for (const DecodeGraph::Arc &a : graph.arcs_from[s])
        if (coreach(n + 1, a.to) > 0.0) {
          coreach(n, s) = 1.0;
          break;
        }
  Matrix mask(num_frames, n_states, 0.0);
  for (int64_t n = 0; n < num_frames; ++n)
    for (int s = 0; s < n_states; ++s)
      mask(n, s) = reach(n, s) * coreach(n, s);
  return mask;
}

ViterbiResult Viterbi(const Matrix &loglikes, const DecodeGraph &graph) {
  int64_t n_frames = loglikes.rows();
  int n_states = graph.NumStates();
  if (n_frames < 1) throw UsageError("Viterbi: empty utterance");
  if (loglikes.cols() != n_states)
    throw UsageError("Viterbi: loglike/state count mismatch");

  Matrix score(n_frames, n_states, kLogZero);
  std::vector<std::vector<int>> back(
      n_frames, std::vector<int>(n_states, -1));
  for (int s = 0; s < n_states; ++s)
    score(0, s) = graph.initial_logp[s] + loglikes(0, s);
  for (int64_t n = 1; n < n_frames; ++n)
    for (int s = 0; s < n_states; ++s) {
      double best = kLogZero;
      int best_prev = -1;
      for (const DecodeGraph::Arc &a : graph.arcs_into[s]) {
        double v = score(n - 1, a.to) + a.log_prob;
        // Ties go to the lowest-index predecessor.
        if (v > best || (v == best && v != kLogZero && a.to < best_prev)) {
          best = v;
          best_prev = a.to;
        }
      }
      if (best_prev >= 0) {
        score(n, s) = best + loglikes(n, s);
        back[n][s] = best_prev;
      }
    }

  double best = kLogZero;
  int best_state = -1;
  for (int s = 0; s < n_states; ++s) {
    double v = score(n_frames - 1, s) + graph.final_logp[s];
    if (v != kLogZero && (best_state < 0 || v > best)) {
      best = v;
      best_state = s;
    }
  }
  if (best_state < 0)
    throw InfeasibleAlignmentError("Viterbi: no feasible path of length " +
                                   std::to_string(n_frames));

  ViterbiResult result;
  result.log_prob = best;
  result.state_path.assign(n_frames, 0);
  int cur = best_state;
  for (int64_t n = n_frames - 1; n >= 0; --n) {
    result.state_path[n] = cur;
    cur = back[n][cur];
  }

  // Collapse frames into unit instances. A drop in unit_state signals
  // re-entry, i.e. a new instance of the same unit.
  int64_t span_start = 0;
  for (int64_t n = 1; n <= n_frames; ++n) {
    bool boundary = n == n_frames;
    if (!boundary) {
      const DecodeGraph::State &prev = graph.states[result.state_path[n - 1]];
      const DecodeGraph::State &curs = graph.states[result.state_path[n]];
      boundary = prev.unit_id != curs.unit_id ||
                 curs.unit_state < prev.unit_state;
    }
    if (boundary) {
      result.spans.push_back(
          {graph.states[result.state_path[span_start]].unit_id, span_start, n});
      span_start = n;
    }
  }
  return result;
}

}  // namespace shmm
