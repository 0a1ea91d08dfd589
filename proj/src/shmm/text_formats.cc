// shmm/text_formats.cc

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

#include "shmm/text_formats.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace shmm {

namespace {

[[noreturn]] void Malformed(const std::string &path, size_t line_no,
                            const std::string &what) {
  throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

int64_t ParseFrame(const std::string &s, const std::string &path,
                   size_t line_no) {
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value < 0)
    Malformed(path, line_no, "bad frame index '" + s + "'");
  return value;
}

std::ifstream OpenText(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace

TranscriptMap ReadTranscripts(const std::string &path) {
  std::ifstream in = OpenText(path);
  TranscriptMap out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 2 || fields[0].empty())
      Malformed(path, line_no, "expected 'utt_id<TAB>symbols'");
    if (out.count(fields[0]))
      Malformed(path, line_no, "duplicate utterance '" + fields[0] + "'");
    std::vector<std::string> symbols;
    std::istringstream ss(fields[1]);
    std::string sym;
    while (ss >> sym) symbols.push_back(sym);
    if (symbols.empty())
      Malformed(path, line_no, "empty transcript for '" + fields[0] + "'");
    out.emplace(fields[0], std::move(symbols));
  }
  return out;
}

void WriteTranscripts(const std::string &path, const TranscriptMap &transcripts) {
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot open " + path + " for writing");
  for (const auto &[utt, symbols] : transcripts) {
    outf << utt << '\t';
    for (size_t i = 0; i < symbols.size(); ++i) {
      if (i) outf << ' ';
      outf << symbols[i];
    }
    outf << '\n';
  }
  if (!outf) throw DataError("write failed for " + path);
}

AlignmentMap ReadAlignments(const std::string &path, bool require_tiling) {
  std::ifstream in = OpenText(path);
  AlignmentMap out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 4 || fields[0].empty() || fields[1].empty())
      Malformed(path, line_no,
                "expected 'utt_id<TAB>label<TAB>start<TAB>end'");
    LabeledSpan span;
    span.label = fields[1];
    span.start = ParseFrame(fields[2], path, line_no);
    span.end = ParseFrame(fields[3], path, line_no);
    if (span.end <= span.start)
      Malformed(path, line_no, "span end must exceed start");
    out[fields[0]].push_back(std::move(span));
  }
  for (auto &[utt, spans] : out) {
    std::stable_sort(spans.begin(), spans.end(),
                     [](const LabeledSpan &a, const LabeledSpan &b) {
                       return a.start < b.start;
                     });
    for (size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].start < spans[i - 1].end)
        throw DataError(path + ": overlapping spans in utterance '" + utt +
                        "'");
      if (require_tiling && spans[i].start != spans[i - 1].end)
        throw DataError(path + ": gap in hypothesis alignment of '" + utt +
                        "'");
    }
    if (require_tiling && spans.front().start != 0)
      throw DataError(path + ": hypothesis alignment of '" + utt +
                      "' does not start at frame 0");
  }
  return out;
}

void WriteAlignments(const std::string &path, const AlignmentMap &alignments) {
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot open " + path + " for writing");
  for (const auto &[utt, spans] : alignments)
    for (const LabeledSpan &span : spans)
      outf << utt << '\t' << span.label << '\t' << span.start << '\t'
           << span.end << '\n';
  if (!outf) throw DataError("write failed for " + path);
}

std::vector<std::string> PhoneMap::Reduce(
    const std::vector<std::string> &seq) const {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (const std::string &sym : seq) {
    auto it = fine_to_reduced.find(sym);
    if (it == fine_to_reduced.end()) {
      out.push_back(sym);
    } else if (it->second != kDelete) {
      out.push_back(it->second);
    }
  }
  return out;
}

PhoneMap ReadPhoneMap(const std::string &path) {
  std::ifstream in = OpenText(path);
  PhoneMap map;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      Malformed(path, line_no, "expected 'fine<TAB>reduced'");
    auto [it, inserted] = map.fine_to_reduced.emplace(fields[0], fields[1]);
    if (!inserted)
      Malformed(path, line_no, "duplicate phone '" + fields[0] + "'");
  }
  return map;
}

}  // namespace shmm
