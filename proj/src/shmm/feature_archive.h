// shmm/feature_archive.h

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

#ifndef SHMM_FEATURE_ARCHIVE_H_
#define SHMM_FEATURE_ARCHIVE_H_

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "shmm/common.h"

namespace shmm {

// Flat binary container of per-utterance frame sequences. Layout: a
// fixed header (magic "SFEA", version, frame rate, feature dim), the
// float32 little-endian row-major payload blocks, then an index footer
// and a trailing footer-offset word so readers can seek straight to the
// index. Payload is 32-bit by contract; everything downstream computes
// in 64-bit.

struct ArchiveEntry {
  std::string utterance_id;
  uint64_t offset = 0;      // absolute byte offset of the payload
  uint64_t num_frames = 0;
};

class FeatureArchiveWriter {
 public:
  FeatureArchiveWriter(const std::string &path, uint32_t feature_dim,
                       uint32_t frame_rate = 100);
  ~FeatureArchiveWriter();
  FeatureArchiveWriter(const FeatureArchiveWriter &) = delete;
  FeatureArchiveWriter &operator=(const FeatureArchiveWriter &) = delete;

  /// Appends one utterance; frames are converted to float32.
  void Add(const std::string &utterance_id, const Matrix &frames);
  /// Writes the index footer. Called by the destructor if needed.
  void Close();

 private:
  std::string path_;
  std::FILE *file_ = nullptr;
  uint32_t feature_dim_;
  std::vector<ArchiveEntry> index_;
};

/// Random-access reader. Utterance payloads are read on demand, so a
/// single utterance can be streamed without loading the archive.
class FeatureArchiveReader {
 public:
  explicit FeatureArchiveReader(const std::string &path);
  ~FeatureArchiveReader();
  FeatureArchiveReader(const FeatureArchiveReader &) = delete;
  FeatureArchiveReader &operator=(const FeatureArchiveReader &) = delete;

  uint32_t feature_dim() const { return feature_dim_; }
  uint32_t frame_rate() const { return frame_rate_; }
  size_t NumUtterances() const { return index_.size(); }
  const std::vector<ArchiveEntry> &Index() const { return index_; }

  bool Has(const std::string &utterance_id) const;
  /// Frames widened to double.
  Matrix Read(const std::string &utterance_id) const;
  Matrix Read(size_t index) const;

 private:
  std::string path_;
  std::FILE *file_ = nullptr;
  uint32_t feature_dim_ = 0;
  uint32_t frame_rate_ = 0;
  std::vector<ArchiveEntry> index_;
};

}  // namespace shmm

#endif  // SHMM_FEATURE_ARCHIVE_H_
