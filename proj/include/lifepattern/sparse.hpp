#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lifepattern {

/// Sorted sparse vector.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  double sum() const;
  double squared_norm() const;
};

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  DenseMatrix transposed() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Nonnegative sparse matrix kept in both compressed-column and
/// compressed-row form, so column- and row-oriented kernels can each run
/// without scattered writes.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::vector<SparseVector> columns);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return col_ptr_.empty() ? 0 : col_ptr_.size() - 1; }
  std::size_t nnz() const { return col_values_.size(); }

  SparseVector column(std::size_t j) const;
  std::span<const std::uint32_t> column_indices(std::size_t j) const {
    return {col_rows_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::span<const double> column_values(std::size_t j) const {
    return {col_values_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::span<const std::uint32_t> row_indices(std::size_t i) const {
    return {row_cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {row_values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  double squared_frobenius() const;
  bool all_zero() const;
  DenseMatrix to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::uint32_t> col_rows_;
  std::vector<double> col_values_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> row_cols_;
  std::vector<double> row_values_;
};

}  // namespace lifepattern
