// shmm/synth.h

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

#ifndef SHMM_SYNTH_H_
#define SHMM_SYNTH_H_

#include <string>
#include <vector>

#include "shmm/config.h"
#include "shmm/gsm.h"

namespace shmm {

// Samples a ground-truth subspace model (W, b elementwise Gaussian,
// one standard-normal embedding per phone), maps each phone through the
// link f, and emits utterances by walking the 3-state left-to-right
// topology at the configured self-loop probability. The written corpus
// is the oracle for the recovery experiments: per-language archives,
// transcripts, reference alignments and the true-parameter checkpoint.

struct SynthLanguage {
  std::string name;
  int num_phones = 0;
  int num_utterances = 0;
};

struct SynthSpec {
  int subspace_dim = 4;
  ParameterLayout layout;
  double sigma2_w = 1.0;
  double self_loop_prob = 0.5;
  std::vector<SynthLanguage> sources;
  SynthLanguage target;
  int min_phones_per_utt = 3;
  int max_phones_per_utt = 8;
  uint64_t seed = 0;

  /// From the gen.* config keys ("name:phones:utts" lists).
  static SynthSpec FromConfig(const PipelineConfig &config);
};

struct SynthOutput {
  std::vector<std::string> archive_paths;     // per source language
  std::vector<std::string> transcript_paths;  // per source language
  std::vector<std::string> language_names;
  std::string target_archive_path;
  std::string target_alignment_path;  // true phone segmentation
  std::string truth_checkpoint_path;  // W, b and all true embeddings
};

/// Writes the corpus under out_dir; byte-identical for a fixed spec.
SynthOutput GenerateSynthetic(const SynthSpec &spec, const std::string &out_dir);

}  // namespace shmm

#endif  // SHMM_SYNTH_H_
