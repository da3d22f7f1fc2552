#include "simulst/matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "simulst/error.hpp"

namespace simulst {

double Matrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (double v : row(i)) s += v;
  return s;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) {
    if (std::isnan(v)) return std::numeric_limits<double>::quiet_NaN();
    m = std::max(m, std::abs(v));
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols())
      throw ShapeError("ragged matrix: row " + std::to_string(i) + " has " +
                       std::to_string(rows[i].size()) + " columns, expected " +
                       std::to_string(m.cols()));
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double d = std::abs(a(i, j) - b(i, j));
      if (std::isnan(d)) return std::numeric_limits<double>::infinity();
      m = std::max(m, d);
    }
  return m;
}

StepwiseProbMatrix::StepwiseProbMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.cols() == 0)
    throw ShapeError("stepwise probability matrix must be non-empty");
  for (std::size_t i = 0; i < values_.rows(); ++i) {
    for (std::size_t j = 0; j < values_.cols(); ++j) {
      const double v = values_(i, j);
      if (!(v > 0.0 && v <= 1.0))
        throw ConfigError("p[" + std::to_string(i) + "][" + std::to_string(j) +
                          "] = " + std::to_string(v) + " is outside (0,1]");
    }
    if (values_(i, values_.cols() - 1) != 1.0)
      throw ConfigError("p[" + std::to_string(i) + "] last column must equal 1");
  }
}

StepwiseProbMatrix StepwiseProbMatrix::with_terminal_column(Matrix values) {
  for (std::size_t i = 0; i < values.rows(); ++i) values(i, values.cols() - 1) = 1.0;
  return StepwiseProbMatrix(std::move(values));
}

EnergyMatrix::EnergyMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.all_finite()) throw ConfigError("energy matrix has non-finite entries");
}

void to_json(nlohmann::json& j, const Matrix& m) { j = m.to_rows(); }

void from_json(const nlohmann::json& j, Matrix& m) {
  if (!j.is_array()) throw ShapeError("matrix JSON must be an array of rows");
  m = Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

}  // namespace simulst
