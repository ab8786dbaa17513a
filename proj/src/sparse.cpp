#include "lifepattern/sparse.hpp"

#include <stdexcept>

#include "lifepattern/errors.hpp"

namespace lifepattern {

double SparseVector::sum() const {
  double s = 0.0;
  for (double v : value) s += v;
  return s;
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (double v : value) s += v * v;
  return s;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::vector<SparseVector> columns) : rows_(rows) {
  col_ptr_.reserve(columns.size() + 1);
  std::vector<std::size_t> row_count(rows, 0);
  for (const auto& col : columns) {
    if (col.index.size() != col.value.size()) throw InvariantError("sparse column size mismatch");
    for (std::size_t p = 0; p < col.index.size(); ++p) {
      if (col.index[p] >= rows) throw InvariantError("sparse row index out of range");
      if (p > 0 && col.index[p] <= col.index[p - 1]) throw InvariantError("sparse column not sorted");
      col_rows_.push_back(col.index[p]);
      col_values_.push_back(col.value[p]);
      ++row_count[col.index[p]];
    }
    col_ptr_.push_back(col_rows_.size());
  }

  row_ptr_.assign(rows + 1, 0);
  for (std::size_t i = 0; i < rows; ++i) row_ptr_[i + 1] = row_ptr_[i] + row_count[i];
  row_cols_.resize(col_rows_.size());
  row_values_.resize(col_values_.size());
  std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
  for (std::size_t j = 0; j + 1 < col_ptr_.size(); ++j)
    for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      const auto i = col_rows_[p];
      row_cols_[fill[i]] = static_cast<std::uint32_t>(j);
      row_values_[fill[i]] = col_values_[p];
      ++fill[i];
    }
}

SparseVector SparseMatrix::column(std::size_t j) const {
  const auto idx = column_indices(j);
  const auto val = column_values(j);
  return {{idx.begin(), idx.end()}, {val.begin(), val.end()}};
}

double SparseMatrix::squared_frobenius() const {
  double s = 0.0;
  for (double v : col_values_) s += v * v;
  return s;
}

bool SparseMatrix::all_zero() const {
  for (double v : col_values_)
    if (v != 0.0) return false;
  return true;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols());
  for (std::size_t j = 0; j < cols(); ++j) {
    const auto idx = column_indices(j);
    const auto val = column_values(j);
    for (std::size_t p = 0; p < idx.size(); ++p) d(idx[p], j) = val[p];
  }
  return d;
}

}  // namespace lifepattern
