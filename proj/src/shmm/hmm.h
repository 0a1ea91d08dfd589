// shmm/hmm.h

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

#ifndef SHMM_HMM_H_
#define SHMM_HMM_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "shmm/common.h"
#include "shmm/gsm.h"

namespace shmm {

/// One 3-state left-to-right unit: states s0 -> s1 -> s2, each with a
/// self loop. The six arcs are (3 self, 2 forward, 1 exit); the exit
/// arc's mass is folded into the enclosing graph by the builders.
struct UnitFragment {
  std::string unit_id;
  double self_loop_prob = 0.5;

  struct Arc {
    int from;  // 0..2
    int to;    // 0..2 or kExit
    double log_prob;
  };
  static constexpr int kExit = -1;

  std::vector<Arc> Arcs() const;
};

UnitFragment BuildUnitHmm(const std::string &unit_id, double self_loop_prob);

/// Finite-state decode graph. Every state's outgoing mass (arcs plus
/// final weight) sums to 1 in probability domain; arcs inside a unit
/// only go left to right.
struct DecodeGraph {
  struct State {
    std::string unit_id;
    int unit_state = 0;      // 0..2 within the unit fragment
    int emission_class = 0;  // index into emission_classes
  };
  struct Arc {
    int32_t to;
    double log_prob;
  };

  std::vector<State> states;
  // Distinct (unit, unit_state) pairs; graphs that repeat a unit share
  // emission columns through this table.
  std::vector<std::pair<std::string, int>> emission_classes;
  Vec initial_logp;
  Vec final_logp;
  std::vector<std::vector<Arc>> arcs_from;
  std::vector<std::vector<Arc>> arcs_into;  // Arc.to is the SOURCE state here

  int NumStates() const { return static_cast<int>(states.size()); }
  int NumClasses() const { return static_cast<int>(emission_classes.size()); }

  /// Checks stochasticity of every state's outgoing mass (1e-10) and the
  /// left-to-right property inside units.
  void Validate() const;
};

/// Pseudo-phone loop: uniform 1/P entry into every unit's s0; each
/// unit's exit mass is split uniformly over the P re-entry targets plus
/// termination.
DecodeGraph BuildPhoneLoop(std::span<const std::string> unit_ids,
                           double self_loop_prob);

/// Forced-alignment chain: the transcript's fragments concatenated in
/// order; entry at the first fragment, exit only from the last.
DecodeGraph BuildAlignmentGraph(std::span<const std::string> transcript,
                                double self_loop_prob);

/// Per-state GMM tables in the natural units the frame loop wants:
/// log weights, means, inverse variances and the Gaussian log-normalizer.
struct EmissionTable {
  ParameterLayout layout;
  // Indexed [class][component]; class order matches the graph's.
  std::vector<Vec> log_weights;
  std::vector<std::vector<Vec>> means;
  std::vector<std::vector<Vec>> inv_variances;
  std::vector<Vec> log_norm;  // -1/2 (F log 2pi + sum log var) per component

  static EmissionTable Build(const DecodeGraph &graph,
                             const std::map<std::string, UnitParams> &units,
                             const ParameterLayout &layout);
};

/// Log-likelihood of frame x under emission class c, plus (optionally)
/// the per-component log posteriors.
double ClassLogLike(const EmissionTable &table, int cls,
                    std::span<const double> x,
                    std::span<double> component_log_post = {});

/// entry (n, s) = log sum_j pi_{s,j} N(x_n; mu_{s,j}, Sigma_{s,j}),
/// expanded from emission classes to graph states.
Matrix PerFrameLogLikes(const Matrix &features,
                        const std::map<std::string, UnitParams> &units,
                        const DecodeGraph &graph,
                        const ParameterLayout &layout);

/// Same, plus per frame-state component log-posteriors
/// (N x (num_states*K), softmax of the inner mixture terms).
struct FrameScores {
  Matrix loglikes;            // N x |states|
  Matrix component_log_post;  // N x (|states| * K)
};
FrameScores PerFrameLogLikesWithComponents(
    const Matrix &features, const std::map<std::string, UnitParams> &units,
    const DecodeGraph &graph, const ParameterLayout &layout);

/// Posterior state occupancies from forward-backward. component_gamma is
/// filled only by AttachComponentPosteriors.
struct StatePosteriors {
  Matrix gamma;               // N x |states|, rows sum to 1
  double log_evidence = 0.0;
  Matrix component_gamma;     // N x (|states| * K), optional

  bool operator==(const StatePosteriors &o) const = default;
};

/// Exact graph posterior of the state sequence given per-frame
/// log-likelihoods, log-domain throughout. Throws
/// InfeasibleAlignmentError when no length-N path reaches a final state.
StatePosteriors ForwardBackward(const Matrix &loglikes,
                                const DecodeGraph &graph);

/// gamma[n,s] * softmax_j(inner mixture terms), so each K-block sums to
/// the owning gamma entry.
void AttachComponentPosteriors(const FrameScores &scores,
                               StatePosteriors *post);

/// Feasibility mask: entry (n, s) is 1 when some complete length-N path
/// passes through state s at frame n.
Matrix FeasibleStateMask(int64_t num_frames, const DecodeGraph &graph);

/// Best path and its unit segmentation. Consecutive frames of one unit
/// instance collapse into one span; ties prefer the lowest-index
/// predecessor state.
struct ViterbiResult {
  std::vector<int> state_path;
  std::vector<LabeledSpan> spans;
  double log_prob = 0.0;
};
ViterbiResult Viterbi(const Matrix &loglikes, const DecodeGraph &graph);

}  // namespace shmm

#endif  // SHMM_HMM_H_
