#include "lifepattern/nmf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"
#include "lifepattern/parallel.hpp"
#include "lifepattern/seed.hpp"

namespace lifepattern {

void NmfConfig::validate() const {
  if (rank < 1) throw ConfigError("nmf.rank must be >= 1");
  if (max_iters < 1) throw ConfigError("nmf.max_iters must be >= 1");
  if (inner_iters < 1) throw ConfigError("nmf.inner_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw ConfigError("nmf.rel_tol must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("nmf.epsilon must be > 0");
}

void NmfConfig::validate(std::size_t n, std::size_t u) const {
  validate();
  if (static_cast<std::size_t>(rank) > std::min(n, u))
    throw ConfigError(fmt::format("nmf.rank {} exceeds min(n, u) = {}", rank, std::min(n, u)));
}

std::vector<double> Factorization::coordinate(std::size_t j) const {
  std::vector<double> c(H.rows());
  for (std::size_t r = 0; r < H.rows(); ++r) c[r] = H(r, j);
  return c;
}

namespace {

// Symmetric k x k product M^T M of a row-major m x k matrix.
DenseMatrix gram(const DenseMatrix& m) {
  const std::size_t k = m.cols();
  const auto sums = blocked_sum(m.rows(), k * k, [&](std::size_t i, double* acc) {
    const auto row = m.row(i);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) acc[a * k + b] += row[a] * row[b];
  });
  DenseMatrix g(k, k);
  std::copy(sums.begin(), sums.end(), g.data().begin());
  return g;
}

// Rows j of the result hold (W^T T)[:, j].
DenseMatrix w_t_times(const SparseMatrix& t, const DenseMatrix& w) {
  const std::size_t k = w.cols();
  DenseMatrix out(t.cols(), k);
  parallel_for(t.cols(), [&](std::size_t j) {
    auto dst = out.row(j);
    const auto idx = t.column_indices(j);
    const auto val = t.column_values(j);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const auto src = w.row(idx[p]);
      for (std::size_t c = 0; c < k; ++c) dst[c] += val[p] * src[c];
    }
  });
  return out;
}

// Rows i of the result hold (T H^T)[i, :], with H given transposed (u x k).
DenseMatrix t_times_ht(const SparseMatrix& t, const DenseMatrix& ht) {
  const std::size_t k = ht.cols();
  DenseMatrix out(t.rows(), k);
  parallel_for(t.rows(), [&](std::size_t i) {
    auto dst = out.row(i);
    const auto idx = t.row_indices(i);
    const auto val = t.row_values(i);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const auto src = ht.row(idx[p]);
      for (std::size_t c = 0; c < k; ++c) dst[c] += val[p] * src[c];
    }
  });
  return out;
}

// X <- X * num / (X * G + eps), row by row.
void multiplicative_update(DenseMatrix& x, const DenseMatrix& num, const DenseMatrix& g, double eps) {
  const std::size_t k = x.cols();
  parallel_for(x.rows(), [&](std::size_t r) {
    auto row = x.row(r);
    const auto nr = num.row(r);
    constexpr std::size_t kStack = 16;
    std::array<double, kStack> small{};
    std::vector<double> large(k > kStack ? k : 0);
    double* den = k > kStack ? large.data() : small.data();
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t d = 0; d < k; ++d) acc += row[d] * g(d, c);
      den[c] = acc + eps;
    }
    for (std::size_t c = 0; c < k; ++c) row[c] *= nr[c] / den[c];
  });
}

double objective(double t_norm2, const DenseMatrix& wtt, const DenseMatrix& ht, const DenseMatrix& wtw,
                 const DenseMatrix& hht) {
  const std::size_t k = ht.cols();
  const double cross = blocked_sum(ht.rows(), 1, [&](std::size_t j, double* acc) {
    const auto a = wtt.row(j);
    const auto b = ht.row(j);
    for (std::size_t c = 0; c < k; ++c) acc[0] += a[c] * b[c];
  })[0];
  double quad = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) quad += wtw(a, b) * hht(a, b);
  return std::max(0.0, t_norm2 - 2.0 * cross + quad);
}

bool converged(double prev, double cur, double rel_tol) {
  return cur == 0.0 || prev - cur < rel_tol * prev;
}

}  // namespace

Factorization nmf(const SparseMatrix& t, const NmfConfig& cfg) {
  const std::size_t n = t.rows();
  const std::size_t u = t.cols();
  cfg.validate(n, u);
  const auto k = static_cast<std::size_t>(cfg.rank);

  Factorization f;
  if (t.all_zero()) {
    f.W = DenseMatrix(n, k);
    f.H = DenseMatrix(k, u);
    f.objective_trace = {0.0};
    return f;
  }

  std::mt19937_64 rng(derive_seed(cfg.seed, "nmf.init"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DenseMatrix w(n, k);
  for (auto& v : w.data()) v = 1.0 - unit(rng);
  DenseMatrix h(k, u);
  for (auto& v : h.data()) v = 1.0 - unit(rng);
  DenseMatrix ht = h.transposed();

  const double t_norm2 = t.squared_frobenius();
  DenseMatrix wtt = w_t_times(t, w);
  DenseMatrix wtw = gram(w);
  DenseMatrix hht = gram(ht);
  f.objective_trace.push_back(objective(t_norm2, wtt, ht, wtw, hht));

  for (int it = 0; it < cfg.max_iters; ++it) {
    for (int r = 0; r < cfg.inner_iters; ++r) multiplicative_update(ht, wtt, wtw, cfg.epsilon);
    hht = gram(ht);
    const DenseMatrix tht = t_times_ht(t, ht);
    for (int r = 0; r < cfg.inner_iters; ++r) multiplicative_update(w, tht, hht, cfg.epsilon);
    wtw = gram(w);
    wtt = w_t_times(t, w);
    const double prev = f.objective_trace.back();
    const double cur = objective(t_norm2, wtt, ht, wtw, hht);
    f.objective_trace.push_back(cur);
    if (converged(prev, cur, cfg.rel_tol)) break;
  }
  f.W = std::move(w);
  f.H = ht.transposed();
  return f;
}

double relative_error(const SparseMatrix& t, const Factorization& f) {
  const double t_norm2 = t.squared_frobenius();
  if (t_norm2 == 0.0) return 0.0;
  const std::size_t n = t.rows();
  const std::size_t k = f.W.cols();
  const auto err = blocked_sum(t.cols(), 1, [&](std::size_t j, double* acc) {
    std::vector<double> col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c) col[i] += f.W(i, c) * f.H(c, j);
    const auto idx = t.column_indices(j);
    const auto val = t.column_values(j);
    for (std::size_t p = 0; p < idx.size(); ++p) col[idx[p]] -= val[p];
    for (double v : col) acc[0] += v * v;
  })[0];
  return std::sqrt(err / t_norm2);
}

namespace {

std::vector<double> embed_with_gram(std::span<const std::uint32_t> idx, std::span<const double> val,
                                    const DenseMatrix& w, const DenseMatrix& wtw, const NmfConfig& cfg) {
  const std::size_t k = w.cols();
  std::vector<double> wtt(k, 0.0);
  double t_norm2 = 0.0;
  for (std::size_t p = 0; p < idx.size(); ++p) {
    if (idx[p] >= w.rows()) throw InvariantError("embed: column longer than basis");
    const auto src = w.row(idx[p]);
    for (std::size_t c = 0; c < k; ++c) wtt[c] += val[p] * src[c];
    t_norm2 += val[p] * val[p];
  }
  std::vector<double> h(k, 1.0);
  std::vector<double> gh(k);
  auto update_gh = [&] {
    for (std::size_t c = 0; c < k; ++c) {
      gh[c] = 0.0;
      for (std::size_t d = 0; d < k; ++d) gh[c] += wtw(c, d) * h[d];
    }
  };
  auto obj = [&] {
    double cross = 0.0, quad = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      cross += wtt[c] * h[c];
      quad += h[c] * gh[c];
    }
    return std::max(0.0, t_norm2 - 2.0 * cross + quad);
  };
  update_gh();
  double prev = obj();
  for (int it = 0; it < cfg.max_iters; ++it) {
    for (std::size_t c = 0; c < k; ++c) h[c] *= wtt[c] / (gh[c] + cfg.epsilon);
    update_gh();
    const double cur = obj();
    if (converged(prev, cur, cfg.rel_tol)) break;
    prev = cur;
  }
  return h;
}

}  // namespace

std::vector<double> embed(const SparseVector& column, const DenseMatrix& w, const NmfConfig& cfg) {
  return embed_with_gram(column.index, column.value, w, gram(w), cfg);
}

DenseMatrix embed_columns(const SparseMatrix& t, const DenseMatrix& w, const NmfConfig& cfg) {
  if (t.rows() != w.rows())
    throw InvariantError(fmt::format("embed: matrix has {} rows, basis has {}", t.rows(), w.rows()));
  const DenseMatrix wtw = gram(w);
  DenseMatrix h(w.cols(), t.cols());
  parallel_for(t.cols(), [&](std::size_t j) {
    const auto c = embed_with_gram(t.column_indices(j), t.column_values(j), w, wtw, cfg);
    for (std::size_t r = 0; r < c.size(); ++r) h(r, j) = c[r];
  });
  return h;
}

std::vector<RankScanEntry> rank_scan(const SparseMatrix& t, const NmfConfig& cfg, int max_rank) {
  std::vector<RankScanEntry> out;
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(max_rank), std::min(t.rows(), t.cols()));
  for (std::size_t r = 1; r <= limit; ++r) {
    NmfConfig c = cfg;
    c.rank = static_cast<int>(r);
    const auto f = nmf(t, c);
    out.push_back({c.rank, relative_error(t, f), f.iterations()});
  }
  return out;
}

std::vector<StrongEdge> strong_pattern(std::span<const double> basis_column, const SupportGraph& g,
                                       double threshold) {
  if (basis_column.size() != g.size()) throw InvariantError("basis column length differs from graph size");
  std::vector<StrongEdge> out;
  for (std::size_t i = 0; i < basis_column.size(); ++i)
    if (basis_column[i] > threshold) out.push_back({static_cast<std::uint32_t>(i), basis_column[i]});
  std::sort(out.begin(), out.end(), [&](const StrongEdge& a, const StrongEdge& b) {
    const int ha = g.edges()[a.edge_index].hour;
    const int hb = g.edges()[b.edge_index].hour;
    if (ha != hb) return ha < hb;
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.edge_index < b.edge_index;
  });
  return out;
}

std::vector<double> basis_column(const DenseMatrix& w, std::size_t c) {
  std::vector<double> out(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) out[i] = w(i, c);
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

BasisMatch match_bases(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvariantError("match_bases: shape mismatch");
  const std::size_t k = a.cols();
  std::vector<std::vector<double>> cos(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) cos[i][j] = cosine_similarity(basis_column(a, i), basis_column(b, j));

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  BasisMatch best;
  double best_score = -1.0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += cos[i][perm[i]];
    if (s > best_score) {
      best_score = s;
      best.mapping = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t i = 0; i < k; ++i) best.cosine.push_back(cos[i][best.mapping[i]]);
  return best;
}

void write_w_csv(const std::filesystem::path& path, const DenseMatrix& w) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << "edge_index";
    for (std::size_t c = 0; c < w.cols(); ++c) out << ",basis_" << c;
    out << '\n';
    for (std::size_t i = 0; i < w.rows(); ++i) {
      out << i;
      for (double v : w.row(i)) out << ',' << io::fmt_double(v);
      out << '\n';
    }
  });
}

void write_h_csv(const std::filesystem::path& path, const DenseMatrix& h, std::span<const std::string> owners) {
  if (owners.size() != h.cols()) throw InvariantError("H owner count differs from column count");
  io::write_atomic(path, [&](std::ostream& out) {
    out << "owner";
    for (std::size_t c = 0; c < h.rows(); ++c) out << ",coord_" << c;
    out << '\n';
    for (std::size_t j = 0; j < h.cols(); ++j) {
      out << owners[j];
      for (std::size_t c = 0; c < h.rows(); ++c) out << ',' << io::fmt_double(h(c, j));
      out << '\n';
    }
  });
}

namespace {

std::string numbered_header(std::string_view first, std::string_view prefix, std::size_t k) {
  std::string s(first);
  for (std::size_t c = 0; c < k; ++c) s += fmt::format(",{}{}", prefix, c);
  return s;
}

// Column count from the header line of a numbered-column CSV.
std::size_t numbered_width(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(fmt::format("missing artifact: {}", path.string()));
  std::string header;
  std::getline(in, header);
  const auto fields = io::split_csv_line(header);
  if (fields.size() < 2) throw InputError(fmt::format("{}: malformed header", path.string()));
  return fields.size() - 1;
}

}  // namespace

DenseMatrix read_w_csv(const std::filesystem::path& path) {
  const auto k = numbered_width(path);
  std::vector<double> data;
  std::size_t rows = 0;
  io::read_csv(path, numbered_header("edge_index", "basis_", k), [&](const std::vector<std::string_view>& f) {
    if (f.size() != k + 1 || static_cast<std::size_t>(io::parse_int(f[0])) != rows)
      throw InputError(fmt::format("{}: malformed row", path.string()));
    for (std::size_t c = 0; c < k; ++c) data.push_back(io::parse_double(f[c + 1]));
    ++rows;
  });
  DenseMatrix w(rows, k);
  std::copy(data.begin(), data.end(), w.data().begin());
  return w;
}

DenseMatrix read_h_csv(const std::filesystem::path& path, std::vector<std::string>& owners) {
  const auto k = numbered_width(path);
  std::vector<double> data;
  io::read_csv(path, numbered_header("owner", "coord_", k), [&](const std::vector<std::string_view>& f) {
    if (f.size() != k + 1) throw InputError(fmt::format("{}: malformed row", path.string()));
    owners.emplace_back(f[0]);
    for (std::size_t c = 0; c < k; ++c) data.push_back(io::parse_double(f[c + 1]));
  });
  DenseMatrix ht(data.size() / k, k);
  std::copy(data.begin(), data.end(), ht.data().begin());
  return ht.transposed();
}

void write_strong_patterns_csv(const std::filesystem::path& path, const DenseMatrix& w, const SupportGraph& g,
                               double threshold) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << kStrongPatternCsvHeader << '\n';
    for (std::size_t c = 0; c < w.cols(); ++c)
      for (const auto& e : strong_pattern(basis_column(w, c), g, threshold)) {
        const auto& edge = g.edges()[e.edge_index];
        out << c << ',' << static_cast<int>(edge.hour) << ',' << label_token(edge.src) << ','
            << label_token(edge.dst) << ',' << io::fmt_double(e.weight) << '\n';
      }
  });
}

void write_rank_scan_csv(const std::filesystem::path& path, std::span<const RankScanEntry> scan) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << kRankScanCsvHeader << '\n';
    for (const auto& e : scan)
      out << e.rank << ',' << io::fmt_double(e.relative_error) << ',' << e.iterations << '\n';
  });
}

}  // namespace lifepattern
