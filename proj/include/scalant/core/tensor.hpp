#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scalant {

/// Thrown for every contract violation detected at runtime (bad shapes,
/// invalid configs, malformed files).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of 64-bit reals.
///
/// A tensor is a value: copies are deep and a const tensor can be shared
/// freely between threads. Every dimension is positive and every element is
/// finite at construction.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);
  Tensor(Shape shape, double fill);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t dim(std::size_t axis) const;

  /// Leading dimensions collapsed: a rank-1 tensor is one row.
  std::size_t rows() const noexcept;
  /// Last dimension.
  std::size_t cols() const noexcept;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  /// Same data, different shape with the same element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;
  void check_finite(const char* where) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Bitwise comparison; distinguishes -0.0 from 0.0 unlike operator==.
bool bitwise_equal(const Tensor& a, const Tensor& b);

double max_abs_diff(const Tensor& a, const Tensor& b);

/// Non-owning strided window onto a row-major matrix.
template <typename T>
class BasicMatrixView {
 public:
  BasicMatrixView(T* data, std::size_t rows, std::size_t cols, std::size_t stride)
      : data_(data), rows_(rows), cols_(cols), stride_(stride) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t stride() const noexcept { return stride_; }
  T* data() const noexcept { return data_; }
  T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * stride_ + c]; }

  /// Dense copy of the window.
  Tensor to_tensor() const {
    Tensor out({rows_, cols_});
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out.at(r, c) = (*this)(r, c);
    return out;
  }

 private:
  T* data_;
  std::size_t rows_, cols_, stride_;
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

/// Top-left `rows` x `cols` block of `full` (rank 1 tensors are one row).
/// Writes through the view land in `full`.
MatrixView crop_matrix(Tensor& full, std::size_t rows, std::size_t cols);
ConstMatrixView crop_matrix(const Tensor& full, std::size_t rows, std::size_t cols);

}  // namespace scalant
