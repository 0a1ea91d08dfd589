// shmm/aud.h

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

#ifndef SHMM_AUD_H_
#define SHMM_AUD_H_

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "shmm/gsm.h"
#include "shmm/text_formats.h"
#include "shmm/training.h"

namespace shmm {

// Two-phase acoustic unit discovery. Phase one estimates the phonetic
// subspace from labeled source languages with forced-alignment graphs
// (one embedding per namespaced "LANG:phone" symbol; inventories are
// never merged across languages). Phase two drops the source embeddings,
// seeds P fresh pseudo-phone embeddings, and clusters the unlabeled
// target language against a shared phone loop with the subspace held
// fixed.

struct LabeledUtterance {
  std::string id;
  Matrix features;
  std::vector<std::string> transcript;  // raw per-language phone symbols
};

struct LabeledCorpus {
  std::string language;
  std::vector<LabeledUtterance> utterances;
};

struct SubspaceOptions {
  int subspace_dim = 0;  // 0 = auto per the shipped 35/70/100 rule
  double sigma2_w = 1.0;
  double self_loop_prob = 0.5;
  bool init_b_from_stats = true;
  TrainingConfig training;
};

struct SubspaceResult {
  SubspacePosterior zeta;
  std::vector<RoundStats> trace;
};

/// Phase one. Transcription symbols outside a corpus's observed
/// inventory never arise (the inventory IS the observed symbol set);
/// utterances too short for their alignment graph are an error.
SubspaceResult EstimateSubspace(
    const std::vector<LabeledCorpus> &corpora, const ParameterLayout &layout,
    const SubspaceOptions &options,
    const std::function<void(const RoundStats &)> &on_round = {});

/// Drops every source embedding and appends P prior-initialized
/// pseudo-phone embeddings ("au1" .. "auP"). W and b are untouched.
SubspacePosterior PrepareDiscovery(const SubspacePosterior &subspace, int p);

struct DiscoveryOptions {
  int num_units = 100;  // P
  double sigma2_w = 1.0;
  double self_loop_prob = 0.5;
  bool freeze_subspace = true;
  TrainingConfig training;
};

struct DiscoveryResult {
  std::vector<std::string> unit_inventory;
  AlignmentMap alignments;  // final Viterbi pass, tiles each utterance
  SubspacePosterior zeta;
  std::vector<RoundStats> trace;
};

struct TargetUtterance {
  std::string id;
  Matrix features;
};

/// Phase two. subspace must come from PrepareDiscovery (or provide
/// exactly the pseudo-phone units to use).
DiscoveryResult DiscoverUnits(
    const std::vector<TargetUtterance> &target,
    const SubspacePosterior &subspace, const ParameterLayout &layout,
    const DiscoveryOptions &options,
    const std::function<void(const RoundStats &)> &on_round = {});

/// Posterior-mean Viterbi decode over the phone loop of zeta's units;
/// deterministic.
AlignmentMap DecodeCorpus(const std::vector<TargetUtterance> &features,
                          const SubspacePosterior &zeta,
                          const ParameterLayout &layout,
                          double self_loop_prob = 0.5);

}  // namespace shmm

#endif  // SHMM_AUD_H_
