#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace treeattn {

class Rng;

enum class Axis { Tokens, Heads, Subnetworks, Features };

/// Dense row-major matrix of doubles. The axis tags document what rows and columns
/// index; arithmetic does not enforce them.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0, Axis row_axis = Axis::Tokens,
         Axis col_axis = Axis::Features);
  Tensor(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor identity(std::size_t n);
  static Tensor uniform(std::size_t rows, std::size_t cols, double bound, Rng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  Axis row_axis() const { return row_axis_; }
  Axis col_axis() const { return col_axis_; }
  Tensor& with_axes(Axis row_axis, Axis col_axis);

  bool all_finite() const;
  void fill(double v);

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  Axis row_axis_ = Axis::Tokens;
  Axis col_axis_ = Axis::Features;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);

/// a * b
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// acc += a^T * b
void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& acc);
Tensor transpose(const Tensor& a);

double max_abs_diff(const Tensor& a, const Tensor& b);

/// Throws NumericalError naming `what` if any entry is NaN or Inf.
void require_finite(const Tensor& t, const char* what);

}  // namespace treeattn
