#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smpp {

// Thrown when an iterative numerical routine fails to converge or a
// computation produces a non-finite result that cannot be recovered.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kUnitClamp = 1e-12;  // open-interval guard for (0,1)

// Clamp a value into [kUnitClamp, 1 - kUnitClamp].
inline double clamp_unit(double x) {
  return std::min(1.0 - kUnitClamp, std::max(kUnitClamp, x));
}

inline double neg_inf() { return -std::numeric_limits<double>::infinity(); }

// log(sum_i exp(x_i)) with max shift; -inf inputs are allowed.
inline double log_sum_exp(std::span<const double> x) {
  double m = neg_inf();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
  const double x[2] = {a, b};
  return log_sum_exp(std::span<const double>(x, 2));
}

// Dense row-major matrix of doubles. Value type; just enough for the
// atom grids (component j by period k) used throughout.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace smpp
