// shmm/gsm.cc

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

#include "shmm/gsm.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "shmm/numerics.h"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace shmm {

void ParameterLayout::Validate() const {
  if (num_states != 3)
    throw UsageError("ParameterLayout: unit topology is fixed at 3 states");
  if (num_components < 1) throw UsageError("ParameterLayout: K must be >= 1");
  if (feature_dim < 1) throw UsageError("ParameterLayout: F must be >= 1");
}

Vec ComputePsi(const Matrix &w, std::span<const double> b,
               std::span<const double> h) {
  if (w.rows() != static_cast<int64_t>(h.size()) ||
      w.cols() != static_cast<int64_t>(b.size()))
    throw UsageError("ComputePsi: dimension mismatch");
  Vec psi(b.begin(), b.end());
  for (int64_t r = 0; r < w.rows(); ++r) {
    double hr = h[r];
    std::span<const double> row = w.row(r);
    for (int64_t c = 0; c < w.cols(); ++c) psi[c] += hr * row[c];
  }
  return psi;
}

Vec ThetaView::Psi(size_t unit_pos) const {
  std::span<const double> bv = b();
  std::span<const double> hv = h(unit_pos);
  Vec psi(bv.begin(), bv.end());
  for (int r = 0; r < s_; ++r) {
    double hr = hv[r];
    std::span<const double> row = w_row(r);
    for (int c = 0; c < d_; ++c) psi[c] += hr * row[c];
  }
  return psi;
}

UnitParams MapToStandard(std::span<const double> psi,
                         const ParameterLayout &layout) {
  layout.Validate();
  if (static_cast<int>(psi.size()) != layout.PsiDim())
    throw UsageError("MapToStandard: psi length does not match layout");
  int K = layout.num_components;
  int F = layout.feature_dim;
  UnitParams params;
  params.weights.resize(layout.num_states);
  params.means.resize(layout.num_states);
  params.variances.resize(layout.num_states);
  for (int i = 0; i < layout.num_states; ++i) {
    // Pinned-logit softmax: logits are (psi_1, ..., psi_{K-1}, 0). The
    // max is shifted out so large logits cannot overflow.
    std::span<const double> logits = psi.subspan(layout.WeightOffset(i), K - 1);
    double max_logit = 0.0;
    for (double v : logits) max_logit = std::max(max_logit, v);
    double z = std::exp(-max_logit);
    for (double v : logits) z += std::exp(v - max_logit);
    Vec &w = params.weights[i];
    w.resize(K);
    for (int j = 0; j < K - 1; ++j) w[j] = std::exp(logits[j] - max_logit) / z;
    w[K - 1] = std::exp(-max_logit) / z;

    params.means[i].resize(K);
    params.variances[i].resize(K);
    for (int j = 0; j < K; ++j) {
      std::span<const double> mu = psi.subspan(layout.MeanOffset(i, j), F);
      std::span<const double> lv = psi.subspan(layout.LogVarOffset(i, j), F);
      params.means[i][j].assign(mu.begin(), mu.end());
      Vec &var = params.variances[i][j];
      var.resize(F);
      for (int f = 0; f < F; ++f) var[f] = std::exp(lv[f]);
    }
  }
  return params;
}

SubspacePosterior SubspacePosterior::Create(int subspace_dim,
                                            const ParameterLayout &layout) {
  layout.Validate();
  if (subspace_dim < 1)
    throw UsageError("SubspacePosterior: subspace_dim must be >= 1");
  SubspacePosterior p;
  p.subspace_dim_ = subspace_dim;
  p.psi_dim_ = layout.PsiDim();
  size_t n = static_cast<size_t>(subspace_dim) * p.psi_dim_ + p.psi_dim_;
  p.m_.assign(n, 0.0);
  p.lambda_.assign(n, 0.0);
  return p;
}

size_t SubspacePosterior::UnitOffset(const std::string &unit_id) const {
  auto it = unit_index_.find(unit_id);
  if (it == unit_index_.end())
    throw UsageError("SubspacePosterior: unknown unit '" + unit_id + "'");
  return EmbeddingOffset() + it->second * subspace_dim_;
}

void SubspacePosterior::AddUnit(const std::string &unit_id) {
  if (unit_index_.count(unit_id))
    throw UsageError("SubspacePosterior: duplicate unit '" + unit_id + "'");
  unit_index_[unit_id] = unit_ids_.size();
  unit_ids_.push_back(unit_id);
  m_.insert(m_.end(), subspace_dim_, 0.0);
  lambda_.insert(lambda_.end(), subspace_dim_, 0.0);
}

void SubspacePosterior::RemoveUnit(const std::string &unit_id) {
  auto it = unit_index_.find(unit_id);
  if (it == unit_index_.end())
    throw UsageError("SubspacePosterior: unknown unit '" + unit_id + "'");
  size_t pos = it->second;
  size_t begin = EmbeddingOffset() + pos * subspace_dim_;
  m_.erase(m_.begin() + begin, m_.begin() + begin + subspace_dim_);
  lambda_.erase(lambda_.begin() + begin, lambda_.begin() + begin + subspace_dim_);
  unit_ids_.erase(unit_ids_.begin() + pos);
  unit_index_.erase(it);
  for (auto &[id, idx] : unit_index_)
    if (idx > pos) --idx;
}

Vec SubspacePosterior::Sample(std::span<const double> noise) const {
  if (noise.size() != m_.size())
    throw UsageError("SubspacePosterior::Sample: noise length mismatch");
  Vec theta(m_.size());
  for (size_t i = 0; i < m_.size(); ++i)
    theta[i] = m_[i] + std::exp(0.5 * lambda_[i]) * noise[i];
  return theta;
}

double SubspacePosterior::KlToPrior(const SubspacePrior &prior) const {
  if (prior.sigma2_w <= 0.0)
    throw UsageError("SubspacePrior: sigma2_w must be positive");
  double log_var_w = std::log(prior.sigma2_w);
  double acc = 0.0;
  size_t w_size = WSize();
  for (size_t i = 0; i < m_.size(); ++i) {
    double pv_log = i < w_size ? log_var_w : 0.0;
    double pv = i < w_size ? prior.sigma2_w : 1.0;
    acc += std::exp(lambda_[i] - pv_log) + m_[i] * m_[i] / pv - 1.0 + pv_log -
           lambda_[i];
  }
  return 0.5 * acc;
}

namespace {

constexpr char kMagic[4] = {'S', 'H', 'M', 'M'};
constexpr uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE *f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void WriteBytes(std::FILE *f, const void *p, size_t n, const std::string &path) {
  if (std::fwrite(p, 1, n, f) != n)
    throw DataError("checkpoint: short write to " + path);
}

void ReadBytes(std::FILE *f, void *p, size_t n, const std::string &path) {
  if (std::fread(p, 1, n, f) != n)
    throw DataError("checkpoint: truncated file " + path);
}

template <typename T>
void WritePod(std::FILE *f, T v, const std::string &path) {
  WriteBytes(f, &v, sizeof v, path);
}

template <typename T>
T ReadPod(std::FILE *f, const std::string &path) {
  T v;
  ReadBytes(f, &v, sizeof v, path);
  return v;
}

}  // namespace

void SaveCheckpoint(const std::string &path, const SubspacePosterior &posterior,
                    const ParameterLayout &layout) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw DataError("checkpoint: cannot open " + path + " for writing");
  WriteBytes(f.get(), kMagic, 4, path);
  WritePod<uint32_t>(f.get(), kVersion, path);
  WritePod<uint32_t>(f.get(), layout.num_states, path);
  WritePod<uint32_t>(f.get(), layout.num_components, path);
  WritePod<uint32_t>(f.get(), layout.feature_dim, path);
  WritePod<uint32_t>(f.get(), posterior.subspace_dim(), path);
  WritePod<uint64_t>(f.get(), posterior.num_units(), path);
  for (const std::string &id : posterior.unit_ids()) {
    WritePod<uint32_t>(f.get(), static_cast<uint32_t>(id.size()), path);
    WriteBytes(f.get(), id.data(), id.size(), path);
  }
  WriteBytes(f.get(), posterior.m().data(), posterior.dim() * sizeof(double),
             path);
  WriteBytes(f.get(), posterior.lambda().data(),
             posterior.dim() * sizeof(double), path);
  if (std::fflush(f.get()) != 0)
    throw DataError("checkpoint: flush failed for " + path);
}

Checkpoint LoadCheckpoint(const std::string &path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("checkpoint: cannot open " + path);
  char magic[4];
  ReadBytes(f.get(), magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint: bad magic in " + path);
  uint32_t version = ReadPod<uint32_t>(f.get(), path);
  if (version != kVersion)
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(version) + " in " + path);
  Checkpoint ckpt;
  ckpt.layout.num_states = static_cast<int>(ReadPod<uint32_t>(f.get(), path));
  ckpt.layout.num_components = static_cast<int>(ReadPod<uint32_t>(f.get(), path));
  ckpt.layout.feature_dim = static_cast<int>(ReadPod<uint32_t>(f.get(), path));
  uint32_t subspace_dim = ReadPod<uint32_t>(f.get(), path);
  ckpt.layout.Validate();
  ckpt.posterior = SubspacePosterior::Create(static_cast<int>(subspace_dim),
                                             ckpt.layout);
  uint64_t num_units = ReadPod<uint64_t>(f.get(), path);
  for (uint64_t u = 0; u < num_units; ++u) {
    uint32_t len = ReadPod<uint32_t>(f.get(), path);
    std::string id(len, '\0');
    ReadBytes(f.get(), id.data(), len, path);
    ckpt.posterior.AddUnit(id);
  }
  ReadBytes(f.get(), ckpt.posterior.m().data(),
            ckpt.posterior.dim() * sizeof(double), path);
  ReadBytes(f.get(), ckpt.posterior.lambda().data(),
            ckpt.posterior.dim() * sizeof(double), path);
  return ckpt;
}

}  // namespace shmm
