/* shmm/shmm.h — C API for the subspace-HMM acoustic unit discovery library.
 *
 * Copyright 2026  the shmm-aud authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
 * WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
 * MERCHANTABLITY OR NON-INFRINGEMENT.
 * See the Apache 2 License for the specific language governing permissions and
 * limitations under the License.
 *
 * All functions return shmm_status (or NULL for constructors) on failure;
 * shmm_last_error() holds a thread-local message describing the most
 * recent failure on the calling thread. Handles are opaque and must be
 * released with their _free/_close function.
 */

#ifndef SHMM_SHMM_H_
#define SHMM_SHMM_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum shmm_status {
  SHMM_OK = 0,
  SHMM_USAGE_ERROR = 1, /* bad arguments or precondition violations */
  SHMM_DATA_ERROR = 2,  /* unreadable or malformed data/files */
  SHMM_INTERNAL_ERROR = 3
} shmm_status;

/* Message for the last failure on this thread; never NULL. */
const char *shmm_last_error(void);

/* ---- configuration ------------------------------------------------- */

typedef struct shmm_config shmm_config;

shmm_config *shmm_config_create(void);
shmm_config *shmm_config_load(const char *path);
shmm_status shmm_config_set(shmm_config *cfg, const char *key,
                            const char *value);
/* Copies the value into buf (NUL-terminated). Fails with
 * SHMM_USAGE_ERROR if the key is unknown or buf is too small. */
shmm_status shmm_config_get(const shmm_config *cfg, const char *key, char *buf,
                            size_t buflen);
void shmm_config_free(shmm_config *cfg);

/* ---- model checkpoints ---------------------------------------------- */

typedef struct shmm_model shmm_model;

shmm_model *shmm_model_load(const char *path);
shmm_status shmm_model_save(const shmm_model *model, const char *path);
shmm_status shmm_model_info(const shmm_model *model, uint32_t *num_states,
                            uint32_t *num_components, uint32_t *feature_dim,
                            uint32_t *subspace_dim, uint32_t *psi_dim,
                            uint32_t *num_units);
shmm_status shmm_model_unit_id(const shmm_model *model, uint32_t index,
                               char *buf, size_t buflen);
void shmm_model_free(shmm_model *model);

/* ---- feature archives ------------------------------------------------ */

typedef struct shmm_archive shmm_archive;

shmm_archive *shmm_archive_open(const char *path);
shmm_status shmm_archive_info(const shmm_archive *archive,
                              uint32_t *feature_dim, uint32_t *frame_rate,
                              uint64_t *num_utterances);
shmm_status shmm_archive_utterance_id(const shmm_archive *archive,
                                      uint64_t index, char *buf,
                                      size_t buflen);
shmm_status shmm_archive_num_frames(const shmm_archive *archive,
                                    uint64_t index, uint64_t *num_frames);
/* Reads one utterance into frames (row-major, num_frames x feature_dim
 * doubles, caller-allocated). */
shmm_status shmm_archive_read(const shmm_archive *archive,
                              const char *utterance_id, double *frames,
                              size_t capacity);
void shmm_archive_close(shmm_archive *archive);

/* ---- pipeline stages -------------------------------------------------- */

/* Supervised phase: one (features, transcripts, language) triple per
 * source corpus. Writes the trained subspace checkpoint and, when
 * log_path is non-NULL, the per-round training log. */
shmm_status shmm_train_subspace(const shmm_config *cfg, size_t num_corpora,
                                const char *const *feature_paths,
                                const char *const *transcript_paths,
                                const char *const *language_names,
                                const char *checkpoint_out,
                                const char *log_path);

/* Unsupervised phase: drops source embeddings, clusters the target
 * archive into num_units pseudo-phones against the frozen subspace.
 * Writes the final checkpoint, the Viterbi alignments and the unit
 * inventory listing (one id per line). */
shmm_status shmm_discover(const shmm_config *cfg, const char *checkpoint_in,
                          const char *target_features,
                          const char *checkpoint_out,
                          const char *alignments_out,
                          const char *inventory_out, const char *log_path);

/* Posterior-mean Viterbi decode of an archive. */
shmm_status shmm_decode(const shmm_config *cfg, const char *checkpoint_in,
                        const char *features, const char *alignments_out);

/* Equivalent PER. phone_map_path may be NULL (identity reduction);
 * report_out may be NULL. *eq_per receives the percentage. */
shmm_status shmm_score_per(const shmm_config *cfg, const char *hyp_alignments,
                           const char *ref_alignments,
                           const char *phone_map_path, const char *report_out,
                           double *eq_per);

/* Boundary recall/precision/F within +-tolerance frames (pass -1 for
 * the configured default). */
shmm_status shmm_score_boundaries(const shmm_config *cfg,
                                  const char *hyp_alignments,
                                  const char *ref_alignments,
                                  int tolerance_frames, const char *report_out,
                                  double *recall, double *precision,
                                  double *f_score);

/* Synthetic oracle corpus from the gen.* keys, written under out_dir. */
shmm_status shmm_generate_synthetic(const shmm_config *cfg,
                                    const char *out_dir);

#ifdef __cplusplus
}
#endif

#endif /* SHMM_SHMM_H_ */
