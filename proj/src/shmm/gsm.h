// shmm/gsm.h

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

#ifndef SHMM_GSM_H_
#define SHMM_GSM_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shmm/common.h"

namespace shmm {

// The generalized subspace model ties every acoustic unit's HMM-GMM
// parameters to a low-dimensional embedding h through the affine map
// psi = W^T h + b followed by a fixed link f onto (weights, means,
// variances). Unit u's per-state parameter vector psi decomposes, per
// state, into K-1 mixture-weight logits (the K-th logit is pinned to 0
// so the weights are identifiable), K mean vectors and K log-variance
// vectors.

/// Maps the flat psi vector onto per-state slices. num_states is fixed
/// at 3 (left-to-right unit topology).
struct ParameterLayout {
  int num_states = 3;
  int num_components = 4;  // K
  int feature_dim = 0;     // F

  int PsiDim() const {
    return num_states *
           ((num_components - 1) + 2 * num_components * feature_dim);
  }
  int StateBlockSize() const {
    return (num_components - 1) + 2 * num_components * feature_dim;
  }
  // Offsets into the psi vector.
  int WeightOffset(int state) const { return state * StateBlockSize(); }
  int MeanOffset(int state, int comp) const {
    return state * StateBlockSize() + (num_components - 1) +
           comp * feature_dim;
  }
  int LogVarOffset(int state, int comp) const {
    return state * StateBlockSize() + (num_components - 1) +
           num_components * feature_dim + comp * feature_dim;
  }
  void Validate() const;

  bool operator==(const ParameterLayout &o) const = default;
};

/// Priors over the subspace parameters: W elementwise N(0, sigma2_w),
/// b and every embedding standard normal.
struct SubspacePrior {
  double sigma2_w = 1.0;
};

/// Standard-parameter form of one unit: per state, a K-simplex of
/// mixture weights and K diagonal Gaussians.
struct UnitParams {
  // Indexed [state][component].
  std::vector<Vec> weights;                  // [state] -> K
  std::vector<std::vector<Vec>> means;       // [state][comp] -> F
  std::vector<std::vector<Vec>> variances;   // [state][comp] -> F
};

/// psi = W^T h + b with W of shape S x D (row-major, row = subspace dim).
Vec ComputePsi(const Matrix &w, std::span<const double> b,
               std::span<const double> h);

/// The link f: psi -> (pi, mu, Sigma). Weights are the pinned-logit
/// softmax, means the identity, variances the elementwise exponential.
UnitParams MapToStandard(std::span<const double> psi,
                         const ParameterLayout &layout);

/// Diagonal-Gaussian variational posterior over all subspace parameters
/// jointly: q(Theta) = N(m, Diag(exp lambda)) with Theta the flattened
/// (W, b, h_1, ..., h_P). Coordinate order: W row-major (S*D), then b
/// (D), then one S-block per unit in insertion order.
class SubspacePosterior {
 public:
  SubspacePosterior() = default;

  /// Posterior over W and b only, initialized at the prior mean with
  /// unit posterior variance (m = 0, lambda = 0).
  static SubspacePosterior Create(int subspace_dim,
                                  const ParameterLayout &layout);

  int subspace_dim() const { return subspace_dim_; }
  int psi_dim() const { return psi_dim_; }
  size_t dim() const { return m_.size(); }
  size_t num_units() const { return unit_ids_.size(); }
  const std::vector<std::string> &unit_ids() const { return unit_ids_; }

  size_t WSize() const {
    return static_cast<size_t>(subspace_dim_) * psi_dim_;
  }
  size_t BOffset() const { return WSize(); }
  /// First coordinate of the embedding region (all unit blocks).
  size_t EmbeddingOffset() const { return WSize() + psi_dim_; }
  size_t UnitOffset(const std::string &unit_id) const;
  bool HasUnit(const std::string &unit_id) const {
    return unit_index_.count(unit_id) != 0;
  }

  std::span<double> m() { return m_; }
  std::span<const double> m() const { return m_; }
  std::span<double> lambda() { return lambda_; }
  std::span<const double> lambda() const { return lambda_; }

  /// Appends a prior-initialized embedding block (m = 0, lambda = 0).
  void AddUnit(const std::string &unit_id);
  void RemoveUnit(const std::string &unit_id);

  /// Reparameterized draw: m + exp(lambda/2) .* noise. noise length must
  /// equal dim(); injected by the caller for determinism.
  Vec Sample(std::span<const double> noise) const;

  /// KL(q(Theta) || p(Theta)) summed over the W, b and embedding blocks.
  double KlToPrior(const SubspacePrior &prior) const;

  /// Prior variance of coordinate i (sigma2_w inside the W block, 1
  /// elsewhere).
  double PriorVariance(size_t i, const SubspacePrior &prior) const {
    return i < WSize() ? prior.sigma2_w : 1.0;
  }

  bool operator==(const SubspacePosterior &o) const = default;

 private:
  int subspace_dim_ = 0;
  int psi_dim_ = 0;
  std::vector<std::string> unit_ids_;
  std::unordered_map<std::string, size_t> unit_index_;  // id -> position
  Vec m_;
  Vec lambda_;
};

/// View of one flattened Theta sample (or of the posterior mean).
class ThetaView {
 public:
  ThetaView(std::span<const double> theta, int subspace_dim, int psi_dim)
      : theta_(theta), s_(subspace_dim), d_(psi_dim) {}

  double w(int r, int c) const { return theta_[static_cast<size_t>(r) * d_ + c]; }
  std::span<const double> w_row(int r) const {
    return theta_.subspan(static_cast<size_t>(r) * d_, d_);
  }
  std::span<const double> b() const {
    return theta_.subspan(static_cast<size_t>(s_) * d_, d_);
  }
  std::span<const double> h(size_t unit_pos) const {
    return theta_.subspan(static_cast<size_t>(s_) * d_ + d_ + unit_pos * s_, s_);
  }
  /// psi for the unit at position unit_pos: W^T h + b.
  Vec Psi(size_t unit_pos) const;

 private:
  std::span<const double> theta_;
  int s_;
  int d_;
};

/// Binary model checkpoint, bit-exact round trip. Layout: magic "SHMM",
/// version, (num_states, K, F, S), unit-id table, then m and lambda as
/// little-endian 64-bit floats.
void SaveCheckpoint(const std::string &path, const SubspacePosterior &posterior,
                    const ParameterLayout &layout);
struct Checkpoint {
  ParameterLayout layout;
  SubspacePosterior posterior;
};
Checkpoint LoadCheckpoint(const std::string &path);

}  // namespace shmm

#endif  // SHMM_GSM_H_
