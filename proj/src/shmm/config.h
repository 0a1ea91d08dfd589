// shmm/config.h

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

#ifndef SHMM_CONFIG_H_
#define SHMM_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>

#include "shmm/common.h"
#include "shmm/gsm.h"
#include "shmm/training.h"

namespace shmm {

/// Flat "key = value" text configuration. Unknown keys are rejected at
/// resolution time so typos surface immediately. Resolution is pure:
/// the same file plus the same overrides always yields the same
/// PipelineConfig.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile Load(const std::string &path);

  void Set(const std::string &key, const std::string &value);
  bool Has(const std::string &key) const { return values_.count(key) != 0; }
  const std::string &Get(const std::string &key) const;
  const std::map<std::string, std::string> &values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Everything the pipeline stages need, with the shipped defaults.
struct PipelineConfig {
  ParameterLayout layout;        // num_states fixed 3; K default 4
  int subspace_dim = 0;          // 0 = auto (35/70/100 by language count)
  int num_units = 100;           // P, the phone-loop truncation
  double sigma2_w = 1.0;
  double self_loop_prob = 0.5;
  TrainingConfig training;
  bool freeze_subspace = true;
  bool init_b_from_stats = true;
  bool collapse_repeats = true;
  int tolerance_frames = 2;
  uint32_t frame_rate = 100;
  bool log_wall_time = true;

  // Synthetic-corpus generation (the gen.* keys).
  struct Synth {
    int subspace_dim = 4;
    int num_components = 2;
    int feature_dim = 8;
    std::string languages = "src1:8:200,src2:8:200";  // name:phones:utts
    std::string target = "tgt:5:100";
    int min_phones_per_utt = 3;
    int max_phones_per_utt = 8;
    uint64_t seed = 0;
  } synth;

  /// Throws UsageError (naming the key) on bad values or unknown keys.
  static PipelineConfig Resolve(const ConfigFile &file);

  /// The shipped subspace-dimension rule when subspace_dim is auto.
  int SubspaceDimFor(size_t num_languages) const;
};

}  // namespace shmm

#endif  // SHMM_CONFIG_H_
