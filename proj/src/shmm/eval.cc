// shmm/eval.cc

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

#include "shmm/eval.h"

#include <algorithm>
#include <cmath>

namespace shmm {

namespace {

void RequireSharedUtterances(const AlignmentMap &hyp, const AlignmentMap &ref) {
  std::string missing;
  for (const auto &[utt, spans] : ref)
    if (!hyp.count(utt)) missing += " " + utt;
  for (const auto &[utt, spans] : hyp)
    if (!ref.count(utt)) missing += " " + utt;
  if (!missing.empty())
    throw UsageError("scoring: utterances not shared by both sides:" + missing);
}

std::vector<std::string> Labels(const std::vector<LabeledSpan> &spans) {
  std::vector<std::string> out;
  out.reserve(spans.size());
  for (const LabeledSpan &s : spans) out.push_back(s.label);
  return out;
}

std::vector<std::string> CollapseRuns(const std::vector<std::string> &seq) {
  std::vector<std::string> out;
  for (const std::string &s : seq)
    if (out.empty() || out.back() != s) out.push_back(s);
  return out;
}

}  // namespace

std::map<std::string, std::string> MapUnitsToPhones(const AlignmentMap &hyp,
                                                    const AlignmentMap &ref) {
  RequireSharedUtterances(hyp, ref);
  // overlap[unit][phone] = frames of co-occurrence, pooled corpus-wide.
  std::map<std::string, std::map<std::string, int64_t>> overlap;
  for (const auto &[utt, hyp_spans] : hyp) {
    const std::vector<LabeledSpan> &ref_spans = ref.at(utt);
    for (const LabeledSpan &h : hyp_spans) {
      auto &counts = overlap[h.label];
      for (const LabeledSpan &r : ref_spans) {
        int64_t frames =
            std::min(h.end, r.end) - std::max(h.start, r.start);
        if (frames > 0) counts[r.label] += frames;
      }
    }
  }
  std::map<std::string, std::string> mapping;
  for (const auto &[unit, counts] : overlap) {
    std::string best = kUnmappedSymbol;
    int64_t best_frames = 0;
    for (const auto &[phone, frames] : counts) {
      // std::map iterates phones in lexicographic order, so strict >
      // keeps the smallest phone on ties.
      if (frames > best_frames) {
        best = phone;
        best_frames = frames;
      }
    }
    mapping[unit] = best;
  }
  return mapping;
}

EditCounts Levenshtein(std::span<const std::string> ref,
                       std::span<const std::string> hyp) {
  size_t nr = ref.size(), nh = hyp.size();
  Matrix dp(nr + 1, nh + 1);
  for (size_t i = 0; i <= nr; ++i) dp(i, 0) = static_cast<double>(i);
  for (size_t j = 0; j <= nh; ++j) dp(0, j) = static_cast<double>(j);
  for (size_t i = 1; i <= nr; ++i)
    for (size_t j = 1; j <= nh; ++j) {
      double diag = dp(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0.0 : 1.0);
      double del = dp(i - 1, j) + 1.0;
      double ins = dp(i, j - 1) + 1.0;
      dp(i, j) = std::min({diag, del, ins});
    }

  EditCounts counts;
  counts.distance = static_cast<int64_t>(dp(nr, nh));
  // Canonical backtrace: diagonal first (substitution beats an
  // insert+delete pair of equal cost), then deletion, then insertion.
  size_t i = nr, j = nh;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      double diag = dp(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0.0 : 1.0);
      if (dp(i, j) == diag) {
        if (ref[i - 1] != hyp[j - 1]) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && dp(i, j) == dp(i - 1, j) + 1.0) {
      ++counts.deletions;
      --i;
      continue;
    }
    ++counts.insertions;
    --j;
  }
  return counts;
}

PerReport EquivalentPer(const AlignmentMap &hyp, const AlignmentMap &ref,
                        const PhoneMap &phone_map, bool collapse_repeats) {
  RequireSharedUtterances(hyp, ref);
  PerReport report;
  report.unit_to_phone = MapUnitsToPhones(hyp, ref);
  for (const auto &[utt, hyp_spans] : hyp) {
    std::vector<std::string> hyp_seq;
    hyp_seq.reserve(hyp_spans.size());
    for (const LabeledSpan &s : hyp_spans)
      hyp_seq.push_back(report.unit_to_phone.at(s.label));
    std::vector<std::string> ref_seq = Labels(ref.at(utt));
    if (collapse_repeats) {
      hyp_seq = CollapseRuns(hyp_seq);
      ref_seq = CollapseRuns(ref_seq);
    }
    hyp_seq = phone_map.Reduce(hyp_seq);
    ref_seq = phone_map.Reduce(ref_seq);
    UtteranceScore score;
    score.utterance_id = utt;
    score.edits = Levenshtein(ref_seq, hyp_seq);
    score.ref_length = static_cast<int64_t>(ref_seq.size());
    report.total_distance += score.edits.distance;
    report.total_ref_length += score.ref_length;
    report.per_utterance.push_back(std::move(score));
  }
  if (report.total_ref_length == 0)
    throw DataError("scoring: reference is empty after reduction");
  report.eq_per = 100.0 * static_cast<double>(report.total_distance) /
                  static_cast<double>(report.total_ref_length);
  return report;
}

BoundaryScore BoundaryPrf(const AlignmentMap &hyp, const AlignmentMap &ref,
                          int tolerance_frames) {
  if (tolerance_frames < 0)
    throw UsageError("BoundaryPrf: tolerance must be >= 0");
  RequireSharedUtterances(hyp, ref);
  BoundaryScore score;
  for (const auto &[utt, hyp_spans] : hyp) {
    auto edges = [](const std::vector<LabeledSpan> &spans) {
      std::vector<int64_t> b;
      for (const LabeledSpan &s : spans) {
        b.push_back(s.start);
        b.push_back(s.end);
      }
      std::sort(b.begin(), b.end());
      b.erase(std::unique(b.begin(), b.end()), b.end());
      return b;
    };
    std::vector<int64_t> hyp_b = edges(hyp_spans);
    std::vector<int64_t> ref_b = edges(ref.at(utt));
    std::vector<bool> used(ref_b.size(), false);
    for (int64_t h : hyp_b) {
      int best = -1;
      int64_t best_dist = static_cast<int64_t>(tolerance_frames) + 1;
      for (size_t r = 0; r < ref_b.size(); ++r) {
        if (used[r]) continue;
        int64_t dist = std::abs(ref_b[r] - h);
        // Strict < keeps the leftmost reference boundary on ties.
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<int>(r);
        }
      }
      if (best >= 0) {
        used[best] = true;
        ++score.matched;
      }
    }
    score.num_ref += static_cast<int64_t>(ref_b.size());
    score.num_hyp += static_cast<int64_t>(hyp_b.size());
  }
  score.recall = score.num_ref > 0
                     ? static_cast<double>(score.matched) / score.num_ref
                     : 0.0;
  score.precision = score.num_hyp > 0
                        ? static_cast<double>(score.matched) / score.num_hyp
                        : 0.0;
  double pr = score.precision + score.recall;
  score.f_score = pr > 0.0 ? 2.0 * score.precision * score.recall / pr : 0.0;
  return score;
}

}  // namespace shmm
