#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace simulst {

/// Dense row-major matrix of doubles. Indices are 0-based; source position j
/// in the math (1-based) is column j-1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  double row_sum(std::size_t i) const;
  double max_abs() const;  // NaN if any entry is NaN
  bool all_finite() const;

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const Matrix& a, const Matrix& b);

/// Expected (or hard) monotonic alignment over target x source.
using AlignmentMatrix = Matrix;

/// Write probabilities p_{i,j}: every entry in (0,1], last column exactly 1.
class StepwiseProbMatrix {
 public:
  /// Validates the invariants; throws ShapeError / ConfigError.
  explicit StepwiseProbMatrix(Matrix values);

  /// Copies `values` and overwrites the last column with 1.
  static StepwiseProbMatrix with_terminal_column(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  std::size_t target_len() const noexcept { return values_.rows(); }
  std::size_t source_len() const noexcept { return values_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }

 private:
  Matrix values_;
};

/// Attention energies u_{i,j}; all entries finite.
class EnergyMatrix {
 public:
  explicit EnergyMatrix(Matrix values);
  const Matrix& values() const noexcept { return values_; }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }

 private:
  Matrix values_;
};

void to_json(nlohmann::json& j, const Matrix& m);
void from_json(const nlohmann::json& j, Matrix& m);

}  // namespace simulst
