// capi/shmm_c.cc

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

#include "shmm/shmm.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "shmm/aud.h"
#include "shmm/common.h"
#include "shmm/config.h"
#include "shmm/eval.h"
#include "shmm/feature_archive.h"
#include "shmm/gsm.h"
#include "shmm/synth.h"
#include "shmm/text_formats.h"

namespace {

thread_local std::string g_last_error = "no error";

void SetError(const std::string &msg) { g_last_error = msg; }

// Exceptions from the core map onto the C status codes at this boundary.
template <typename Fn>
shmm_status Guard(Fn &&fn) {
  try {
    fn();
    return SHMM_OK;
  } catch (const shmm::UsageError &e) {
    SetError(e.what());
    return SHMM_USAGE_ERROR;
  } catch (const shmm::DataError &e) {
    SetError(e.what());
    return SHMM_DATA_ERROR;
  } catch (const std::exception &e) {
    SetError(e.what());
    return SHMM_INTERNAL_ERROR;
  } catch (...) {
    SetError("unknown error");
    return SHMM_INTERNAL_ERROR;
  }
}

shmm_status CopyString(const std::string &value, char *buf, size_t buflen) {
  if (!buf || buflen < value.size() + 1)
    throw shmm::UsageError("buffer too small (" + std::to_string(value.size() + 1) +
                           " bytes needed)");
  std::memcpy(buf, value.c_str(), value.size() + 1);
  return SHMM_OK;
}

std::vector<shmm::TargetUtterance> LoadArchive(
    const shmm::FeatureArchiveReader &reader) {
  std::vector<shmm::TargetUtterance> out;
  out.reserve(reader.NumUtterances());
  for (size_t i = 0; i < reader.NumUtterances(); ++i)
    out.push_back({reader.Index()[i].utterance_id, reader.Read(i)});
  return out;
}

// Per-round training log: tab-separated, one line per phi round.
class RoundLogger {
 public:
  RoundLogger(const char *path, bool log_wall_time)
      : log_wall_time_(log_wall_time) {
    if (path) {
      out_.open(path);
      if (!out_) throw shmm::DataError(std::string("cannot open log ") + path);
      out_ << "round\telbo\texpected_loglike\tkl_term\twall_seconds\n";
    }
  }
  void operator()(const shmm::RoundStats &stats) {
    if (!out_.is_open()) return;
    char line[256];
    std::snprintf(line, sizeof line, "%d\t%.12g\t%.12g\t%.12g\t%.3f\n",
                  stats.round, stats.elbo, stats.expected_loglike,
                  stats.kl_term, log_wall_time_ ? stats.wall_seconds : 0.0);
    out_ << line;
  }
  void Finish() {
    if (out_.is_open()) {
      out_.flush();
      if (!out_) throw shmm::DataError("training log write failed");
    }
  }

 private:
  std::ofstream out_;
  bool log_wall_time_;
};

shmm::PipelineConfig Resolve(const shmm_config *cfg);

}  // namespace

struct shmm_config {
  shmm::ConfigFile file;
};

struct shmm_model {
  shmm::Checkpoint checkpoint;
};

struct shmm_archive {
  explicit shmm_archive(const char *path) : reader(path) {}
  shmm::FeatureArchiveReader reader;
};

namespace {

shmm::PipelineConfig Resolve(const shmm_config *cfg) {
  static const shmm::ConfigFile kEmpty;
  return shmm::PipelineConfig::Resolve(cfg ? cfg->file : kEmpty);
}

}  // namespace

extern "C" {

const char *shmm_last_error(void) { return g_last_error.c_str(); }

shmm_config *shmm_config_create(void) {
  try {
    return new shmm_config();
  } catch (...) {
    SetError("out of memory");
    return nullptr;
  }
}

shmm_config *shmm_config_load(const char *path) {
  shmm_config *cfg = nullptr;
  shmm_status rc = Guard([&] {
    if (!path) throw shmm::UsageError("config path is NULL");
    cfg = new shmm_config{shmm::ConfigFile::Load(path)};
    // Resolve eagerly so bad files fail at load time.
    shmm::PipelineConfig::Resolve(cfg->file);
  });
  if (rc != SHMM_OK) {
    delete cfg;
    return nullptr;
  }
  return cfg;
}

shmm_status shmm_config_set(shmm_config *cfg, const char *key,
                            const char *value) {
  return Guard([&] {
    if (!cfg || !key || !value)
      throw shmm::UsageError("shmm_config_set: NULL argument");
    shmm::ConfigFile probe = cfg->file;
    probe.Set(key, value);
    shmm::PipelineConfig::Resolve(probe);  // throws on unknown key/bad value
    cfg->file = std::move(probe);
  });
}

shmm_status shmm_config_get(const shmm_config *cfg, const char *key, char *buf,
                            size_t buflen) {
  return Guard([&] {
    if (!cfg || !key) throw shmm::UsageError("shmm_config_get: NULL argument");
    CopyString(cfg->file.Get(key), buf, buflen);
  });
}

void shmm_config_free(shmm_config *cfg) { delete cfg; }

shmm_model *shmm_model_load(const char *path) {
  shmm_model *model = nullptr;
  shmm_status rc = Guard([&] {
    if (!path) throw shmm::UsageError("model path is NULL");
    model = new shmm_model{shmm::LoadCheckpoint(path)};
  });
  if (rc != SHMM_OK) {
    delete model;
    return nullptr;
  }
  return model;
}

shmm_status shmm_model_save(const shmm_model *model, const char *path) {
  return Guard([&] {
    if (!model || !path) throw shmm::UsageError("shmm_model_save: NULL argument");
    shmm::SaveCheckpoint(path, model->checkpoint.posterior,
                         model->checkpoint.layout);
  });
}

shmm_status shmm_model_info(const shmm_model *model, uint32_t *num_states,
                            uint32_t *num_components, uint32_t *feature_dim,
                            uint32_t *subspace_dim, uint32_t *psi_dim,
                            uint32_t *num_units) {
  return Guard([&] {
    if (!model) throw shmm::UsageError("shmm_model_info: NULL model");
    const shmm::Checkpoint &c = model->checkpoint;
    if (num_states) *num_states = c.layout.num_states;
    if (num_components) *num_components = c.layout.num_components;
    if (feature_dim) *feature_dim = c.layout.feature_dim;
    if (subspace_dim) *subspace_dim = c.posterior.subspace_dim();
    if (psi_dim) *psi_dim = c.posterior.psi_dim();
    if (num_units) *num_units = static_cast<uint32_t>(c.posterior.num_units());
  });
}

shmm_status shmm_model_unit_id(const shmm_model *model, uint32_t index,
                               char *buf, size_t buflen) {
  return Guard([&] {
    if (!model) throw shmm::UsageError("shmm_model_unit_id: NULL model");
    if (index >= model->checkpoint.posterior.num_units())
      throw shmm::UsageError("shmm_model_unit_id: index out of range");
    CopyString(model->checkpoint.posterior.unit_ids()[index], buf, buflen);
  });
}

void shmm_model_free(shmm_model *model) { delete model; }

shmm_archive *shmm_archive_open(const char *path) {
  shmm_archive *archive = nullptr;
  shmm_status rc = Guard([&] {
    if (!path) throw shmm::UsageError("archive path is NULL");
    archive = new shmm_archive(path);
  });
  if (rc != SHMM_OK) {
    delete archive;
    return nullptr;
  }
  return archive;
}

shmm_status shmm_archive_info(const shmm_archive *archive,
                              uint32_t *feature_dim, uint32_t *frame_rate,
                              uint64_t *num_utterances) {
  return Guard([&] {
    if (!archive) throw shmm::UsageError("shmm_archive_info: NULL archive");
    if (feature_dim) *feature_dim = archive->reader.feature_dim();
    if (frame_rate) *frame_rate = archive->reader.frame_rate();
    if (num_utterances) *num_utterances = archive->reader.NumUtterances();
  });
}

shmm_status shmm_archive_utterance_id(const shmm_archive *archive,
                                      uint64_t index, char *buf,
                                      size_t buflen) {
  return Guard([&] {
    if (!archive) throw shmm::UsageError("shmm_archive_utterance_id: NULL archive");
    if (index >= archive->reader.NumUtterances())
      throw shmm::UsageError("shmm_archive_utterance_id: index out of range");
    CopyString(archive->reader.Index()[index].utterance_id, buf, buflen);
  });
}

shmm_status shmm_archive_num_frames(const shmm_archive *archive,
                                    uint64_t index, uint64_t *num_frames) {
  return Guard([&] {
    if (!archive || !num_frames)
      throw shmm::UsageError("shmm_archive_num_frames: NULL argument");
    if (index >= archive->reader.NumUtterances())
      throw shmm::UsageError("shmm_archive_num_frames: index out of range");
    *num_frames = archive->reader.Index()[index].num_frames;
  });
}

shmm_status shmm_archive_read(const shmm_archive *archive,
                              const char *utterance_id, double *frames,
                              size_t capacity) {
  return Guard([&] {
    if (!archive || !utterance_id || !frames)
      throw shmm::UsageError("shmm_archive_read: NULL argument");
    shmm::Matrix m = archive->reader.Read(utterance_id);
    size_t needed = static_cast<size_t>(m.rows()) * m.cols();
    if (capacity < needed)
      throw shmm::UsageError("shmm_archive_read: buffer too small");
    std::memcpy(frames, m.data(), needed * sizeof(double));
  });
}

void shmm_archive_close(shmm_archive *archive) { delete archive; }

shmm_status shmm_train_subspace(const shmm_config *cfg, size_t num_corpora,
                                const char *const *feature_paths,
                                const char *const *transcript_paths,
                                const char *const *language_names,
                                const char *checkpoint_out,
                                const char *log_path) {
  return Guard([&] {
    if (num_corpora == 0 || !feature_paths || !transcript_paths ||
        !language_names || !checkpoint_out)
      throw shmm::UsageError("shmm_train_subspace: missing arguments");
    shmm::PipelineConfig config = Resolve(cfg);

    std::vector<shmm::LabeledCorpus> corpora;
    int feature_dim = -1;
    for (size_t i = 0; i < num_corpora; ++i) {
      shmm::FeatureArchiveReader reader(feature_paths[i]);
      if (feature_dim < 0)
        feature_dim = static_cast<int>(reader.feature_dim());
      else if (feature_dim != static_cast<int>(reader.feature_dim()))
        throw shmm::DataError("corpora disagree on feature dimension");
      shmm::TranscriptMap transcripts =
          shmm::ReadTranscripts(transcript_paths[i]);
      shmm::LabeledCorpus corpus;
      corpus.language = language_names[i];
      for (const auto &entry : reader.Index()) {
        auto it = transcripts.find(entry.utterance_id);
        if (it == transcripts.end())
          throw shmm::DataError("no transcript for utterance '" +
                                entry.utterance_id + "'");
        corpus.utterances.push_back(
            {entry.utterance_id, reader.Read(entry.utterance_id), it->second});
      }
      corpora.push_back(std::move(corpus));
    }
    config.layout.feature_dim = feature_dim;

    shmm::SubspaceOptions options;
    options.subspace_dim = config.subspace_dim;
    options.sigma2_w = config.sigma2_w;
    options.self_loop_prob = config.self_loop_prob;
    options.init_b_from_stats = config.init_b_from_stats;
    options.training = config.training;

    RoundLogger logger(log_path, config.log_wall_time);
    shmm::SubspaceResult result = shmm::EstimateSubspace(
        corpora, config.layout, options, std::ref(logger));
    logger.Finish();
    shmm::SaveCheckpoint(checkpoint_out, result.zeta, config.layout);
  });
}

shmm_status shmm_discover(const shmm_config *cfg, const char *checkpoint_in,
                          const char *target_features,
                          const char *checkpoint_out,
                          const char *alignments_out,
                          const char *inventory_out, const char *log_path) {
  return Guard([&] {
    if (!checkpoint_in || !target_features || !checkpoint_out ||
        !alignments_out)
      throw shmm::UsageError("shmm_discover: missing arguments");
    shmm::PipelineConfig config = Resolve(cfg);
    shmm::Checkpoint ckpt = shmm::LoadCheckpoint(checkpoint_in);
    shmm::FeatureArchiveReader reader(target_features);
    if (static_cast<int>(reader.feature_dim()) != ckpt.layout.feature_dim)
      throw shmm::DataError("target features do not match the checkpoint");
    std::vector<shmm::TargetUtterance> target = LoadArchive(reader);

    shmm::SubspacePosterior prepared =
        shmm::PrepareDiscovery(ckpt.posterior, config.num_units);

    shmm::DiscoveryOptions options;
    options.num_units = config.num_units;
    options.sigma2_w = config.sigma2_w;
    options.self_loop_prob = config.self_loop_prob;
    options.freeze_subspace = config.freeze_subspace;
    options.training = config.training;

    RoundLogger logger(log_path, config.log_wall_time);
    shmm::DiscoveryResult result = shmm::DiscoverUnits(
        target, prepared, ckpt.layout, options, std::ref(logger));
    logger.Finish();

    shmm::SaveCheckpoint(checkpoint_out, result.zeta, ckpt.layout);
    shmm::WriteAlignments(alignments_out, result.alignments);
    if (inventory_out) {
      std::ofstream inv(inventory_out);
      if (!inv)
        throw shmm::DataError(std::string("cannot open ") + inventory_out);
      for (const std::string &unit : result.unit_inventory) inv << unit << '\n';
      if (!inv)
        throw shmm::DataError(std::string("write failed for ") + inventory_out);
    }
  });
}

shmm_status shmm_decode(const shmm_config *cfg, const char *checkpoint_in,
                        const char *features, const char *alignments_out) {
  return Guard([&] {
    if (!checkpoint_in || !features || !alignments_out)
      throw shmm::UsageError("shmm_decode: missing arguments");
    shmm::PipelineConfig config = Resolve(cfg);
    shmm::Checkpoint ckpt = shmm::LoadCheckpoint(checkpoint_in);
    shmm::FeatureArchiveReader reader(features);
    if (static_cast<int>(reader.feature_dim()) != ckpt.layout.feature_dim)
      throw shmm::DataError("features do not match the checkpoint");
    std::vector<shmm::TargetUtterance> target = LoadArchive(reader);
    shmm::AlignmentMap alignments = shmm::DecodeCorpus(
        target, ckpt.posterior, ckpt.layout, config.self_loop_prob);
    shmm::WriteAlignments(alignments_out, alignments);
  });
}

shmm_status shmm_score_per(const shmm_config *cfg, const char *hyp_alignments,
                           const char *ref_alignments,
                           const char *phone_map_path, const char *report_out,
                           double *eq_per) {
  return Guard([&] {
    if (!hyp_alignments || !ref_alignments)
      throw shmm::UsageError("shmm_score_per: missing arguments");
    shmm::PipelineConfig config = Resolve(cfg);
    shmm::AlignmentMap hyp = shmm::ReadAlignments(hyp_alignments, true);
    shmm::AlignmentMap ref = shmm::ReadAlignments(ref_alignments, false);
    shmm::PhoneMap map = phone_map_path ? shmm::ReadPhoneMap(phone_map_path)
                                        : shmm::PhoneMap::Identity();
    shmm::PerReport report =
        shmm::EquivalentPer(hyp, ref, map, config.collapse_repeats);
    if (eq_per) *eq_per = report.eq_per;
    if (report_out) {
      std::ofstream out(report_out);
      if (!out) throw shmm::DataError(std::string("cannot open ") + report_out);
      char line[256];
      std::snprintf(line, sizeof line, "eq.PER\t%.2f\t%lld\t%lld\n",
                    report.eq_per,
                    static_cast<long long>(report.total_distance),
                    static_cast<long long>(report.total_ref_length));
      out << line;
      for (const shmm::UtteranceScore &u : report.per_utterance) {
        std::snprintf(
            line, sizeof line, "%s\t%lld\t%lld\t%lld\t%lld\t%lld\n",
            u.utterance_id.c_str(), static_cast<long long>(u.edits.distance),
            static_cast<long long>(u.edits.substitutions),
            static_cast<long long>(u.edits.insertions),
            static_cast<long long>(u.edits.deletions),
            static_cast<long long>(u.ref_length));
        out << line;
      }
      if (!out)
        throw shmm::DataError(std::string("write failed for ") + report_out);
    }
  });
}

shmm_status shmm_score_boundaries(const shmm_config *cfg,
                                  const char *hyp_alignments,
                                  const char *ref_alignments,
                                  int tolerance_frames, const char *report_out,
                                  double *recall, double *precision,
                                  double *f_score) {
  return Guard([&] {
    if (!hyp_alignments || !ref_alignments)
      throw shmm::UsageError("shmm_score_boundaries: missing arguments");
    shmm::PipelineConfig config = Resolve(cfg);
    int tolerance =
        tolerance_frames >= 0 ? tolerance_frames : config.tolerance_frames;
    shmm::AlignmentMap hyp = shmm::ReadAlignments(hyp_alignments, true);
    shmm::AlignmentMap ref = shmm::ReadAlignments(ref_alignments, false);
    shmm::BoundaryScore score = shmm::BoundaryPrf(hyp, ref, tolerance);
    if (recall) *recall = score.recall;
    if (precision) *precision = score.precision;
    if (f_score) *f_score = score.f_score;
    if (report_out) {
      std::ofstream out(report_out);
      if (!out) throw shmm::DataError(std::string("cannot open ") + report_out);
      char line[256];
      std::snprintf(line, sizeof line,
                    "recall\t%.4f\nprecision\t%.4f\nf_score\t%.4f\n"
                    "matched\t%lld\nref_boundaries\t%lld\nhyp_boundaries\t%lld\n",
                    score.recall, score.precision, score.f_score,
                    static_cast<long long>(score.matched),
                    static_cast<long long>(score.num_ref),
                    static_cast<long long>(score.num_hyp));
      out << line;
      if (!out)
        throw shmm::DataError(std::string("write failed for ") + report_out);
    }
  });
}

shmm_status shmm_generate_synthetic(const shmm_config *cfg,
                                    const char *out_dir) {
  return Guard([&] {
    if (!out_dir) throw shmm::UsageError("shmm_generate_synthetic: NULL out_dir");
    shmm::PipelineConfig config = Resolve(cfg);
    shmm::SynthSpec spec = shmm::SynthSpec::FromConfig(config);
    shmm::GenerateSynthetic(spec, out_dir);
  });
}

}  // extern "C"
