// shmm/synth.cc

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

#include "shmm/synth.h"

#include <cmath>
#include <filesystem>

#include "shmm/feature_archive.h"
#include "shmm/rng.h"
#include "shmm/text_formats.h"

namespace shmm {

namespace {

SynthLanguage ParseLanguage(const std::string &chunk) {
  size_t c1 = chunk.find(':');
  size_t c2 = chunk.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw UsageError("gen.languages: expected 'name:phones:utts', got '" +
                     chunk + "'");
  SynthLanguage lang;
  lang.name = chunk.substr(0, c1);
  try {
    lang.num_phones = std::stoi(chunk.substr(c1 + 1, c2 - c1 - 1));
    lang.num_utterances = std::stoi(chunk.substr(c2 + 1));
  } catch (const std::exception &) {
    throw UsageError("gen.languages: bad counts in '" + chunk + "'");
  }
  if (lang.name.empty() || lang.num_phones < 1 || lang.num_utterances < 1)
    throw UsageError("gen.languages: bad entry '" + chunk + "'");
  return lang;
}

}  // namespace

SynthSpec SynthSpec::FromConfig(const PipelineConfig &config) {
  SynthSpec spec;
  spec.subspace_dim = config.synth.subspace_dim;
  spec.layout.num_components = config.synth.num_components;
  spec.layout.feature_dim = config.synth.feature_dim;
  spec.sigma2_w = config.sigma2_w;
  spec.self_loop_prob = config.self_loop_prob;
  spec.min_phones_per_utt = config.synth.min_phones_per_utt;
  spec.max_phones_per_utt = config.synth.max_phones_per_utt;
  spec.seed = config.synth.seed;
  std::string list = config.synth.languages;
  size_t start = 0;
  while (start < list.size()) {
    size_t comma = list.find(',', start);
    if (comma == std::string::npos) comma = list.size();
    spec.sources.push_back(ParseLanguage(list.substr(start, comma - start)));
    start = comma + 1;
  }
  if (spec.sources.empty()) throw UsageError("gen.languages: empty list");
  spec.target = ParseLanguage(config.synth.target);
  return spec;
}

SynthOutput GenerateSynthetic(const SynthSpec &spec,
                              const std::string &out_dir) {
  spec.layout.Validate();
  if (spec.subspace_dim < 1) throw UsageError("synth: subspace_dim must be >= 1");
  if (spec.min_phones_per_utt < 1 ||
      spec.max_phones_per_utt < spec.min_phones_per_utt)
    throw UsageError("synth: bad phones-per-utterance range");
  std::filesystem::create_directories(out_dir);

  Rng rng(spec.seed);
  int S = spec.subspace_dim;
  int D = spec.layout.PsiDim();

  // Ground-truth subspace and embeddings, in checkpoint layout. The
  // posterior variances are pinned tiny so the truth file decodes
  // deterministically at its mean.
  SubspacePosterior truth = SubspacePosterior::Create(S, spec.layout);
  double sigma_w = std::sqrt(spec.sigma2_w);
  for (size_t i = 0; i < truth.WSize(); ++i) truth.m()[i] = sigma_w * rng.Normal();
  for (int c = 0; c < D; ++c) truth.m()[truth.BOffset() + c] = rng.Normal();

  std::vector<SynthLanguage> languages = spec.sources;
  languages.push_back(spec.target);
  for (const SynthLanguage &lang : languages)
    for (int p = 0; p < lang.num_phones; ++p) {
      std::string unit = lang.name + ":p" + std::to_string(p);
      truth.AddUnit(unit);
      size_t off = truth.UnitOffset(unit);
      for (int r = 0; r < S; ++r) truth.m()[off + r] = rng.Normal();
    }
  for (size_t i = 0; i < truth.dim(); ++i) truth.lambda()[i] = -30.0;

  // Standard parameters per unit, at the true values.
  ThetaView view(truth.m(), S, D);
  std::vector<UnitParams> params;
  params.reserve(truth.num_units());
  for (size_t u = 0; u < truth.num_units(); ++u)
    params.push_back(MapToStandard(view.Psi(u), spec.layout));

  SynthOutput output;
  int K = spec.layout.num_components;
  int F = spec.layout.feature_dim;
  auto emit_phone = [&](size_t unit_pos, std::vector<Vec> *rows) {
    const UnitParams &p = params[unit_pos];
    int64_t produced = 0;
    for (int state = 0; state < 3; ++state) {
      // At least one frame per state, then geometric continuation.
      do {
        Vec frame(F);
        double pick = rng.Uniform();
        int comp = K - 1;
        double cum = 0.0;
        for (int j = 0; j < K; ++j) {
          cum += p.weights[state][j];
          if (pick < cum) {
            comp = j;
            break;
          }
        }
        for (int f = 0; f < F; ++f)
          frame[f] = p.means[state][comp][f] +
                     std::sqrt(p.variances[state][comp][f]) * rng.Normal();
        rows->push_back(std::move(frame));
        ++produced;
      } while (rng.Uniform() < spec.self_loop_prob);
    }
    return produced;
  };

  auto unit_pos_of = [&](const std::string &unit) {
    const std::vector<std::string> &ids = truth.unit_ids();
    for (size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == unit) return i;
    throw UsageError("synth: unknown unit " + unit);
  };

  for (size_t li = 0; li < languages.size(); ++li) {
    const SynthLanguage &lang = languages[li];
    bool is_target = li + 1 == languages.size();
    std::string base = out_dir + "/" + lang.name;
    FeatureArchiveWriter writer(base + ".sfea", static_cast<uint32_t>(F));
    TranscriptMap transcripts;
    AlignmentMap alignments;
    for (int u = 0; u < lang.num_utterances; ++u) {
      std::string utt_id = lang.name + "_u" + std::to_string(u);
      int num_phones =
          spec.min_phones_per_utt +
          static_cast<int>(rng.Integer(static_cast<uint64_t>(
              spec.max_phones_per_utt - spec.min_phones_per_utt + 1)));
      std::vector<std::string> symbols;
      std::vector<LabeledSpan> spans;
      std::vector<Vec> rows;
      int64_t cursor = 0;
      for (int k = 0; k < num_phones; ++k) {
        int phone = static_cast<int>(
            rng.Integer(static_cast<uint64_t>(lang.num_phones)));
        std::string sym = "p" + std::to_string(phone);
        std::string unit = lang.name + ":" + sym;
        int64_t produced = emit_phone(unit_pos_of(unit), &rows);
        symbols.push_back(sym);
        spans.push_back({sym, cursor, cursor + produced});
        cursor += produced;
      }
      Matrix frames(static_cast<int64_t>(rows.size()), F);
      for (size_t n = 0; n < rows.size(); ++n)
        for (int f = 0; f < F; ++f)
          frames(static_cast<int64_t>(n), f) = rows[n][f];
      writer.Add(utt_id, frames);
      transcripts.emplace(utt_id, std::move(symbols));
      alignments.emplace(utt_id, std::move(spans));
    }
    writer.Close();
    if (is_target) {
      output.target_archive_path = base + ".sfea";
      output.target_alignment_path = base + ".ali";
      WriteAlignments(output.target_alignment_path, alignments);
    } else {
      output.archive_paths.push_back(base + ".sfea");
      output.transcript_paths.push_back(base + ".trn");
      output.language_names.push_back(lang.name);
      WriteTranscripts(base + ".trn", transcripts);
      WriteAlignments(base + ".ali", alignments);
    }
  }

  output.truth_checkpoint_path = out_dir + "/truth.shmm";
  SaveCheckpoint(output.truth_checkpoint_path, truth, spec.layout);
  return output;
}

}  // namespace shmm
