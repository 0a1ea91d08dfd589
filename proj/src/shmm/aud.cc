// shmm/aud.cc

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

#include "shmm/aud.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "shmm/hmm.h"

namespace shmm {

namespace {

std::string JoinTranscript(const std::vector<std::string> &symbols) {
  std::string key;
  for (const std::string &s : symbols) {
    key += s;
    key += '\x1f';
  }
  return key;
}

// Centers the bias posterior mean on global feature moments: the mean
// slices get the global mean, the log-variance slices the global
// log-variance, the weight logits stay 0. A zero embedding then decodes
// to a unit sitting on the data cloud, which is where gradient ascent
// wants to start from.
void CenterBias(SubspacePosterior *zeta, const ParameterLayout &layout,
                const std::vector<const Matrix *> &features) {
  int f_dim = layout.feature_dim;
  Vec mean(f_dim, 0.0), var(f_dim, 0.0);
  int64_t total = 0;
  for (const Matrix *m : features) {
    for (int64_t n = 0; n < m->rows(); ++n) {
      std::span<const double> row = m->row(n);
      for (int f = 0; f < f_dim; ++f) mean[f] += row[f];
    }
    total += m->rows();
  }
  if (total == 0) return;
  for (int f = 0; f < f_dim; ++f) mean[f] /= static_cast<double>(total);
  for (const Matrix *m : features)
    for (int64_t n = 0; n < m->rows(); ++n) {
      std::span<const double> row = m->row(n);
      for (int f = 0; f < f_dim; ++f) {
        double d = row[f] - mean[f];
        var[f] += d * d;
      }
    }
  for (int f = 0; f < f_dim; ++f)
    var[f] = std::max(var[f] / static_cast<double>(total), 1e-6);

  std::span<double> m = zeta->m();
  size_t b_off = zeta->BOffset();
  for (int i = 0; i < layout.num_states; ++i)
    for (int j = 0; j < layout.num_components; ++j)
      for (int f = 0; f < f_dim; ++f) {
        m[b_off + layout.MeanOffset(i, j) + f] = mean[f];
        m[b_off + layout.LogVarOffset(i, j) + f] = std::log(var[f]);
      }
}

}  // namespace

SubspaceResult EstimateSubspace(
    const std::vector<LabeledCorpus> &corpora, const ParameterLayout &layout,
    const SubspaceOptions &options,
    const std::function<void(const RoundStats &)> &on_round) {
  layout.Validate();
  if (corpora.empty()) throw UsageError("EstimateSubspace: no corpora");
  int subspace_dim = options.subspace_dim;
  if (subspace_dim == 0) {
    size_t n = corpora.size();
    subspace_dim = n <= 1 ? 35 : (n == 2 ? 70 : 100);
  }
  if (subspace_dim < 1 || subspace_dim > layout.PsiDim())
    throw UsageError("EstimateSubspace: subspace_dim out of range");

  // One embedding per namespaced (language, phone); inventories are
  // per-language by construction.
  SubspacePosterior zeta = SubspacePosterior::Create(subspace_dim, layout);
  std::set<std::string> inventory;
  for (const LabeledCorpus &corpus : corpora)
    for (const LabeledUtterance &utt : corpus.utterances) {
      if (utt.transcript.empty())
        throw DataError("EstimateSubspace: empty transcript for '" + utt.id +
                        "'");
      for (const std::string &sym : utt.transcript)
        inventory.insert(corpus.language + ":" + sym);
    }
  for (const std::string &unit : inventory) zeta.AddUnit(unit);

  // Alignment graphs are shared between utterances with identical
  // namespaced transcripts.
  std::map<std::string, std::unique_ptr<DecodeGraph>> graphs;
  Corpus train_corpus;
  std::vector<const Matrix *> all_features;
  for (const LabeledCorpus &corpus : corpora)
    for (const LabeledUtterance &utt : corpus.utterances) {
      std::vector<std::string> units;
      units.reserve(utt.transcript.size());
      for (const std::string &sym : utt.transcript)
        units.push_back(corpus.language + ":" + sym);
      if (utt.features.rows() <
          3 * static_cast<int64_t>(utt.transcript.size()))
        throw DataError("EstimateSubspace: utterance '" + utt.id +
                        "' too short for its transcript");
      if (utt.features.cols() != layout.feature_dim)
        throw DataError("EstimateSubspace: utterance '" + utt.id +
                        "' feature dim mismatch");
      std::string key = JoinTranscript(units);
      auto it = graphs.find(key);
      if (it == graphs.end())
        it = graphs
                 .emplace(key, std::make_unique<DecodeGraph>(BuildAlignmentGraph(
                                   units, options.self_loop_prob)))
                 .first;
      Utterance u;
      u.id = utt.id;
      u.features = utt.features;
      u.graph = it->second.get();
      train_corpus.push_back(std::move(u));
      all_features.push_back(&train_corpus.back().features);
    }

  if (options.init_b_from_stats) CenterBias(&zeta, layout, all_features);

  SubspacePrior prior{options.sigma2_w};
  TrainResult trained = Train(train_corpus, zeta, prior, layout,
                              options.training, 0, on_round);
  return {std::move(trained.zeta), std::move(trained.trace)};
}

SubspacePosterior PrepareDiscovery(const SubspacePosterior &subspace, int p) {
  if (p < 1) throw UsageError("PrepareDiscovery: P must be >= 1");
  SubspacePosterior zeta = subspace;
  std::vector<std::string> old_units = zeta.unit_ids();
  for (const std::string &unit : old_units) zeta.RemoveUnit(unit);
  for (int u = 1; u <= p; ++u) zeta.AddUnit("au" + std::to_string(u));
  return zeta;
}

DiscoveryResult DiscoverUnits(
    const std::vector<TargetUtterance> &target,
    const SubspacePosterior &subspace, const ParameterLayout &layout,
    const DiscoveryOptions &options,
    const std::function<void(const RoundStats &)> &on_round) {
  layout.Validate();
  if (target.empty()) throw DataError("DiscoverUnits: empty corpus");
  if (subspace.num_units() == 0)
    throw UsageError("DiscoverUnits: subspace has no pseudo-phone units; "
                     "run PrepareDiscovery first");

  DecodeGraph loop =
      BuildPhoneLoop(subspace.unit_ids(), options.self_loop_prob);
  Corpus corpus;
  corpus.reserve(target.size());
  for (const TargetUtterance &utt : target) {
    if (utt.features.cols() != layout.feature_dim)
      throw DataError("DiscoverUnits: utterance '" + utt.id +
                      "' feature dim mismatch");
    Utterance u;
    u.id = utt.id;
    u.features = utt.features;
    u.graph = &loop;
    corpus.push_back(std::move(u));
  }

  SubspacePrior prior{options.sigma2_w};
  size_t trainable_from =
      options.freeze_subspace ? subspace.EmbeddingOffset() : 0;
  TrainResult trained = Train(corpus, subspace, prior, layout,
                              options.training, trainable_from, on_round);

  DiscoveryResult result;
  result.unit_inventory = trained.zeta.unit_ids();
  result.zeta = std::move(trained.zeta);
  result.trace = std::move(trained.trace);
  result.alignments =
      DecodeCorpus(target, result.zeta, layout, options.self_loop_prob);
  return result;
}

AlignmentMap DecodeCorpus(const std::vector<TargetUtterance> &features,
                          const SubspacePosterior &zeta,
                          const ParameterLayout &layout,
                          double self_loop_prob) {
  layout.Validate();
  DecodeGraph loop = BuildPhoneLoop(zeta.unit_ids(), self_loop_prob);
  // Posterior-mean parameters: epsilon = 0.
  ThetaView view(zeta.m(), zeta.subspace_dim(), zeta.psi_dim());
  std::map<std::string, UnitParams> units;
  for (size_t u = 0; u < zeta.num_units(); ++u)
    units.emplace(zeta.unit_ids()[u], MapToStandard(view.Psi(u), layout));

  AlignmentMap alignments;
  for (const TargetUtterance &utt : features) {
    Matrix loglikes = PerFrameLogLikes(utt.features, units, loop, layout);
    ViterbiResult decoded = Viterbi(loglikes, loop);
    alignments.emplace(utt.id, std::move(decoded.spans));
  }
  return alignments;
}

}  // namespace shmm
