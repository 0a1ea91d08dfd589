// shmm/eval.h

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

#ifndef SHMM_EVAL_H_
#define SHMM_EVAL_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shmm/common.h"
#include "shmm/text_formats.h"

namespace shmm {

/// The designated label for units that never overlap a reference frame.
inline constexpr const char *kUnmappedSymbol = "unk";

/// Majority-overlap association, accumulated corpus-wide: each unit maps
/// to the reference phone it co-occurs with for the most frames. Ties
/// break to the lexicographically smallest phone; zero-overlap units map
/// to kUnmappedSymbol.
std::map<std::string, std::string> MapUnitsToPhones(const AlignmentMap &hyp,
                                                    const AlignmentMap &ref);

struct EditCounts {
  int64_t distance = 0;
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
};

/// Unit-cost edit distance with counts from one canonical backtrace
/// (substitution preferred over insert+delete on ties, then deletion
/// over insertion).
EditCounts Levenshtein(std::span<const std::string> ref,
                       std::span<const std::string> hyp);

struct UtteranceScore {
  std::string utterance_id;
  EditCounts edits;
  int64_t ref_length = 0;
};

struct PerReport {
  double eq_per = 0.0;  // percent
  int64_t total_distance = 0;
  int64_t total_ref_length = 0;
  std::map<std::string, std::string> unit_to_phone;
  std::vector<UtteranceScore> per_utterance;
};

/// Equivalent phone error rate: units are mapped to their
/// majority-overlap phones on this same corpus, consecutive identical
/// mapped symbols collapse (on both sides, when collapse_repeats), both
/// sequences are reduced through the phone map, and the pooled edit
/// distance is divided by the pooled reference length.
PerReport EquivalentPer(const AlignmentMap &hyp, const AlignmentMap &ref,
                        const PhoneMap &phone_map, bool collapse_repeats = true);

struct BoundaryScore {
  double recall = 0.0;
  double precision = 0.0;
  double f_score = 0.0;
  int64_t matched = 0;
  int64_t num_ref = 0;
  int64_t num_hyp = 0;
};

/// Segmentation scoring: boundaries are the deduplicated span edges;
/// hypothesis boundaries greedily match the nearest unmatched reference
/// boundary within +-tolerance, left to right.
BoundaryScore BoundaryPrf(const AlignmentMap &hyp, const AlignmentMap &ref,
                          int tolerance_frames);

}  // namespace shmm

#endif  // SHMM_EVAL_H_
