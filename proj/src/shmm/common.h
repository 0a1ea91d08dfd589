// shmm/common.h

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

#ifndef SHMM_COMMON_H_
#define SHMM_COMMON_H_

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shmm {

using Vec = std::vector<double>;

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Caller broke a documented precondition (bad argument, bad CLI usage).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Input data or file format is invalid.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

/// A decode graph admits no state path of the requested length.
class InfeasibleAlignmentError : public DataError {
 public:
  explicit InfeasibleAlignmentError(const std::string &msg) : DataError(msg) {}
};

/// Dense row-major matrix of doubles. Rows are exposed as spans so the
/// per-frame code paths never copy.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int64_t rows, int64_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols), fill) {}

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }

  double &operator()(int64_t r, int64_t c) { return data_[r * cols_ + c]; }
  double operator()(int64_t r, int64_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(int64_t r) {
    return {data_.data() + r * cols_, static_cast<size_t>(cols_)};
  }
  std::span<const double> row(int64_t r) const {
    return {data_.data() + r * cols_, static_cast<size_t>(cols_)};
  }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  void fill(double v) { data_.assign(data_.size(), v); }

  bool operator==(const Matrix &o) const = default;

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  std::vector<double> data_;
};

/// One labeled time span, [start, end) in frames.
struct LabeledSpan {
  std::string label;
  int64_t start = 0;
  int64_t end = 0;

  bool operator==(const LabeledSpan &o) const = default;
};

}  // namespace shmm

#endif  // SHMM_COMMON_H_
