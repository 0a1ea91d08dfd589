// shmm/feature_archive.cc

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

#include "shmm/feature_archive.h"

#include <bit>
#include <cstring>

static_assert(std::endian::native == std::endian::little,
              "archive format assumes a little-endian host");

namespace shmm {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'E', 'A'};
constexpr uint32_t kVersion = 1;

[[noreturn]] void Corrupt(const std::string &path, const std::string &what,
                          long offset) {
  throw DataError("feature archive " + path + ": " + what + " at byte " +
                  std::to_string(offset));
}

void WriteBytes(std::FILE *f, const void *p, size_t n, const std::string &path) {
  if (std::fwrite(p, 1, n, f) != n)
    throw DataError("feature archive " + path + ": short write");
}

void ReadBytes(std::FILE *f, void *p, size_t n, const std::string &path,
               const std::string &what) {
  long at = std::ftell(f);
  if (std::fread(p, 1, n, f) != n) Corrupt(path, "truncated " + what, at);
}

template <typename T>
void WritePod(std::FILE *f, T v, const std::string &path) {
  WriteBytes(f, &v, sizeof v, path);
}

template <typename T>
T ReadPod(std::FILE *f, const std::string &path, const std::string &what) {
  T v;
  ReadBytes(f, &v, sizeof v, path, what);
  return v;
}

}  // namespace

FeatureArchiveWriter::FeatureArchiveWriter(const std::string &path,
                                           uint32_t feature_dim,
                                           uint32_t frame_rate)
    : path_(path), feature_dim_(feature_dim) {
  if (feature_dim == 0)
    throw UsageError("feature archive: feature_dim must be positive");
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw DataError("feature archive: cannot open " + path);
  WriteBytes(file_, kMagic, 4, path_);
  WritePod<uint32_t>(file_, kVersion, path_);
  WritePod<uint32_t>(file_, frame_rate, path_);
  WritePod<uint32_t>(file_, feature_dim, path_);
}

FeatureArchiveWriter::~FeatureArchiveWriter() {
  try {
    Close();
  } catch (...) {
    // Destructor must not throw; an explicit Close() reports failures.
  }
}

void FeatureArchiveWriter::Add(const std::string &utterance_id,
                               const Matrix &frames) {
  if (!file_) throw UsageError("feature archive: writer already closed");
  if (frames.cols() != feature_dim_)
    throw UsageError("feature archive: frame dim mismatch for '" +
                     utterance_id + "'");
  if (frames.rows() < 1)
    throw UsageError("feature archive: empty utterance '" + utterance_id + "'");
  for (const ArchiveEntry &e : index_)
    if (e.utterance_id == utterance_id)
      throw UsageError("feature archive: duplicate utterance '" +
                       utterance_id + "'");
  ArchiveEntry entry;
  entry.utterance_id = utterance_id;
  entry.offset = static_cast<uint64_t>(std::ftell(file_));
  entry.num_frames = static_cast<uint64_t>(frames.rows());
  std::vector<float> row(feature_dim_);
  for (int64_t n = 0; n < frames.rows(); ++n) {
    for (uint32_t f = 0; f < feature_dim_; ++f)
      row[f] = static_cast<float>(frames(n, f));
    WriteBytes(file_, row.data(), row.size() * sizeof(float), path_);
  }
  index_.push_back(std::move(entry));
}

void FeatureArchiveWriter::Close() {
  if (!file_) return;
  uint64_t footer_offset = static_cast<uint64_t>(std::ftell(file_));
  WritePod<uint64_t>(file_, static_cast<uint64_t>(index_.size()), path_);
  for (const ArchiveEntry &e : index_) {
    WritePod<uint32_t>(file_, static_cast<uint32_t>(e.utterance_id.size()),
                       path_);
    WriteBytes(file_, e.utterance_id.data(), e.utterance_id.size(), path_);
    WritePod<uint64_t>(file_, e.offset, path_);
    WritePod<uint64_t>(file_, e.num_frames, path_);
  }
  WritePod<uint64_t>(file_, footer_offset, path_);
  int rc = std::fclose(file_);
  file_ = nullptr;
  if (rc != 0) throw DataError("feature archive: close failed for " + path_);
}

FeatureArchiveReader::FeatureArchiveReader(const std::string &path)
    : path_(path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (!file_) throw DataError("feature archive: cannot open " + path);
  char magic[4];
  ReadBytes(file_, magic, 4, path_, "header");
  if (std::memcmp(magic, kMagic, 4) != 0) Corrupt(path_, "bad magic", 0);
  uint32_t version = ReadPod<uint32_t>(file_, path_, "header");
  if (version != kVersion)
    Corrupt(path_, "unsupported version " + std::to_string(version), 4);
  frame_rate_ = ReadPod<uint32_t>(file_, path_, "header");
  feature_dim_ = ReadPod<uint32_t>(file_, path_, "header");
  if (feature_dim_ == 0) Corrupt(path_, "zero feature dim", 12);

  if (std::fseek(file_, 0, SEEK_END) != 0)
    throw DataError("feature archive: seek failed in " + path);
  long file_size = std::ftell(file_);
  if (file_size < 24) Corrupt(path_, "file too small for footer", file_size);
  std::fseek(file_, file_size - 8, SEEK_SET);
  uint64_t footer_offset = ReadPod<uint64_t>(file_, path_, "footer offset");
  if (footer_offset < 16 || footer_offset >= static_cast<uint64_t>(file_size))
    Corrupt(path_, "footer offset out of range", file_size - 8);
  std::fseek(file_, static_cast<long>(footer_offset), SEEK_SET);
  uint64_t count = ReadPod<uint64_t>(file_, path_, "index");
  uint64_t payload_cursor = 16;  // end of the fixed header
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t len = ReadPod<uint32_t>(file_, path_, "index entry");
    if (len == 0 || len > 4096) Corrupt(path_, "bad utterance id length",
                                        std::ftell(file_) - 4);
    ArchiveEntry e;
    e.utterance_id.resize(len);
    ReadBytes(file_, e.utterance_id.data(), len, path_, "index entry");
    e.offset = ReadPod<uint64_t>(file_, path_, "index entry");
    e.num_frames = ReadPod<uint64_t>(file_, path_, "index entry");
    if (e.num_frames == 0)
      throw DataError("feature archive " + path_ + ": utterance '" +
                      e.utterance_id + "' has no frames");
    // Offsets must tile the payload region without overlap.
    if (e.offset != payload_cursor)
      throw DataError("feature archive " + path_ + ": utterance '" +
                      e.utterance_id + "' payload offset " +
                      std::to_string(e.offset) + " overlaps or leaves a gap");
    payload_cursor = e.offset + e.num_frames * feature_dim_ * sizeof(float);
    if (payload_cursor > footer_offset)
      throw DataError("feature archive " + path_ + ": utterance '" +
                      e.utterance_id + "' payload is cut at byte " +
                      std::to_string(footer_offset));
    index_.push_back(std::move(e));
  }
  if (Has("")) Corrupt(path_, "empty utterance id", 0);
}

FeatureArchiveReader::~FeatureArchiveReader() {
  if (file_) std::fclose(file_);
}

bool FeatureArchiveReader::Has(const std::string &utterance_id) const {
  for (const ArchiveEntry &e : index_)
    if (e.utterance_id == utterance_id) return true;
  return false;
}

Matrix FeatureArchiveReader::Read(size_t index) const {
  if (index >= index_.size())
    throw UsageError("feature archive: utterance index out of range");
  const ArchiveEntry &e = index_[index];
  Matrix frames(static_cast<int64_t>(e.num_frames), feature_dim_);
  std::fseek(file_, static_cast<long>(e.offset), SEEK_SET);
  std::vector<float> row(feature_dim_);
  for (uint64_t n = 0; n < e.num_frames; ++n) {
    ReadBytes(file_, row.data(), row.size() * sizeof(float), path_,
              "payload of utterance '" + e.utterance_id + "'");
    for (uint32_t f = 0; f < feature_dim_; ++f)
      frames(static_cast<int64_t>(n), f) = static_cast<double>(row[f]);
  }
  return frames;
}

Matrix FeatureArchiveReader::Read(const std::string &utterance_id) const {
  for (size_t i = 0; i < index_.size(); ++i)
    if (index_[i].utterance_id == utterance_id) return Read(i);
  throw DataError("feature archive " + path_ + ": no utterance '" +
                  utterance_id + "'");
}

}  // namespace shmm
