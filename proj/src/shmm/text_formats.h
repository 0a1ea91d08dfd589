// shmm/text_formats.h

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

#ifndef SHMM_TEXT_FORMATS_H_
#define SHMM_TEXT_FORMATS_H_

#include <map>
#include <string>
#include <vector>

#include "shmm/common.h"

namespace shmm {

// All text files are UTF-8 with LF line endings.

using TranscriptMap = std::map<std::string, std::vector<std::string>>;
using AlignmentMap = std::map<std::string, std::vector<LabeledSpan>>;

/// Lines "utt_id<TAB>sym1 sym2 ...". Duplicate ids and empty symbol
/// lists are rejected (an alignment graph needs at least one unit).
TranscriptMap ReadTranscripts(const std::string &path);
void WriteTranscripts(const std::string &path, const TranscriptMap &transcripts);

/// Lines "utt_id<TAB>label<TAB>start_frame<TAB>end_frame", grouped per
/// utterance and sorted by start on read. Overlaps are always rejected;
/// gaps only pass when require_tiling is false (reference mode).
AlignmentMap ReadAlignments(const std::string &path, bool require_tiling);
void WriteAlignments(const std::string &path, const AlignmentMap &alignments);

/// Phone reduction table, lines "fine<TAB>reduced"; a reduced symbol of
/// "-" deletes the fine phone from scoring.
struct PhoneMap {
  std::map<std::string, std::string> fine_to_reduced;
  static constexpr const char *kDelete = "-";

  /// Identity map: reduction is a no-op.
  static PhoneMap Identity() { return PhoneMap{}; }
  bool IsIdentity() const { return fine_to_reduced.empty(); }

  /// Applies the reduction to a sequence, dropping deleted symbols.
  /// Symbols outside the table map to themselves.
  std::vector<std::string> Reduce(const std::vector<std::string> &seq) const;
};

PhoneMap ReadPhoneMap(const std::string &path);

}  // namespace shmm

#endif  // SHMM_TEXT_FORMATS_H_
