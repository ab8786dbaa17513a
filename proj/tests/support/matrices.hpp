#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "lifepattern/sparse.hpp"

namespace oracle {

/// Dense uniform [0,1) entries.
inline lifepattern::SparseMatrix random_matrix(std::size_t n, std::size_t u, std::mt19937_64& rng,
                                               double zero_prob = 0.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<lifepattern::SparseVector> cols(u);
  for (std::size_t j = 0; j < u; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double v = unit(rng);
      if (unit(rng) < zero_prob || v == 0.0) continue;
      cols[j].index.push_back(static_cast<std::uint32_t>(i));
      cols[j].value.push_back(v);
    }
  return {n, std::move(cols)};
}

struct LowRank {
  lifepattern::DenseMatrix w;  // n x k
  lifepattern::DenseMatrix h;  // k x u
  lifepattern::SparseMatrix t;
};

/// T = W H with uniform factor entries, each zeroed with probability
/// `zero_prob`.
inline LowRank low_rank_product(std::size_t n, std::size_t u, std::size_t k, std::mt19937_64& rng,
                                double zero_prob) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LowRank out{lifepattern::DenseMatrix(n, k), lifepattern::DenseMatrix(k, u), {}};
  for (auto& v : out.w.data()) v = unit(rng) < zero_prob ? 0.0 : unit(rng);
  for (auto& v : out.h.data()) v = unit(rng) < zero_prob ? 0.0 : unit(rng);
  std::vector<lifepattern::SparseVector> cols(u);
  for (std::size_t j = 0; j < u; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0.0;
      for (std::size_t c = 0; c < k; ++c) x += out.w(i, c) * out.h(c, j);
      if (x == 0.0) continue;
      cols[j].index.push_back(static_cast<std::uint32_t>(i));
      cols[j].value.push_back(x);
    }
  out.t = lifepattern::SparseMatrix(n, std::move(cols));
  return out;
}

/// ||T - W H||_F / ||T||_F from dense products.
inline double dense_relative_error(const lifepattern::SparseMatrix& t, const lifepattern::DenseMatrix& w,
                                   const lifepattern::DenseMatrix& h) {
  const auto d = t.to_dense();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j) {
      double x = 0.0;
      for (std::size_t c = 0; c < w.cols(); ++c) x += w(i, c) * h(c, j);
      num += (d(i, j) - x) * (d(i, j) - x);
      den += d(i, j) * d(i, j);
    }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

}  // namespace oracle
