#include "lifepattern/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"
#include "lifepattern/parallel.hpp"

namespace lifepattern {

std::vector<GroupProfile> group_profiles(std::span<const int> groups, int k, const SparseMatrix& vectors,
                                         const SupportGraph& g) {
  if (groups.size() != vectors.cols()) throw InvariantError("profile groups do not cover every vector");
  if (vectors.rows() != g.size()) throw InvariantError("vector length differs from support graph size");

  std::vector<std::uint8_t> codes;
  for (const auto& e : g.edges()) {
    codes.push_back(e.src.code());
    codes.push_back(e.dst.code());
  }
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  std::array<int, 256> column{};
  column.fill(-1);
  for (std::size_t i = 0; i < codes.size(); ++i) column[codes[i]] = static_cast<int>(i);

  const std::size_t nl = codes.size();
  const std::size_t per_group = kHours * nl;
  const auto kk = static_cast<std::size_t>(k);
  const auto sums = blocked_sum(vectors.cols(), kk * per_group + kk, [&](std::size_t j, double* acc) {
    const auto grp = static_cast<std::size_t>(groups[j]);
    double* occ = acc + grp * per_group;
    const auto idx = vectors.column_indices(j);
    const auto val = vectors.column_values(j);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const auto& e = g.edges()[idx[p]];
      occ[e.hour * nl + column[e.src.code()]] += val[p];
      if (e.hour == kLayerPairs - 1) occ[kLayerPairs * nl + column[e.dst.code()]] += val[p];
    }
    acc[kk * per_group + grp] += 1.0;
  });

  std::vector<GroupProfile> out;
  for (std::size_t grp = 0; grp < kk; ++grp) {
    GroupProfile prof;
    prof.group = static_cast<int>(grp);
    const double members = sums[kk * per_group + grp];
    prof.members = static_cast<std::size_t>(members);
    for (auto c : codes) prof.labels.push_back(Label::from_code(c));
    prof.occupancy.assign(kHours, std::vector<double>(nl, 0.0));
    if (members > 0)
      for (int h = 0; h < kHours; ++h)
        for (std::size_t l = 0; l < nl; ++l)
          prof.occupancy[h][l] = sums[grp * per_group + h * nl + l] / members;
    out.push_back(std::move(prof));
  }
  return out;
}

GridFrame::GridFrame(std::span<const LatLon> homes, double cell_size_m) : cell_size_m_(cell_size_m) {
  if (homes.empty()) return;
  double lat1 = homes[0].lat;
  lat0_ = homes[0].lat;
  lon0_ = homes[0].lon;
  for (const auto& h : homes) {
    lat0_ = std::min(lat0_, h.lat);
    lat1 = std::max(lat1, h.lat);
    lon0_ = std::min(lon0_, h.lon);
  }
  lon_scale_ = std::cos((lat0_ + lat1) / 2.0 * std::numbers::pi / 180.0);
}

std::pair<long, long> GridFrame::cell(const LatLon& p) const {
  const double m_per_deg = kEarthRadiusM * std::numbers::pi / 180.0;
  const double y = (p.lat - lat0_) * m_per_deg;
  const double x = (p.lon - lon0_) * m_per_deg * lon_scale_;
  return {static_cast<long>(std::floor(y / cell_size_m_)), static_cast<long>(std::floor(x / cell_size_m_))};
}

std::vector<GridCell> regional_stats(std::span<const LatLon> homes, std::span<const int> groups, int k,
                                     const GridParams& params) {
  if (homes.size() != groups.size()) throw InvariantError("regional_stats: homes and groups differ in length");
  const GridFrame frame(homes, params.cell_size_m);
  std::map<std::pair<long, long>, std::vector<std::size_t>> counts;
  for (std::size_t i = 0; i < homes.size(); ++i) {
    auto& c = counts[frame.cell(homes[i])];
    c.resize(static_cast<std::size_t>(k), 0);
    ++c.at(static_cast<std::size_t>(groups[i]));
  }

  std::vector<GridCell> out;
  for (const auto& [key, c] : counts) {
    GridCell cell;
    cell.row = key.first;
    cell.col = key.second;
    for (auto v : c) cell.total += v;
    if (cell.total < params.min_cell_population) continue;
    double mean = 0.0;
    for (auto v : c) {
      cell.shares.push_back(static_cast<double>(v) / static_cast<double>(cell.total));
      mean += cell.shares.back();
    }
    mean /= k;
    double var = 0.0;
    for (double s : cell.shares) var += (s - mean) * (s - mean);
    cell.stddev = std::sqrt(var / k);
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<GridCount> grid_counts(std::span<const LatLon> homes, std::span<const LatLon> workplaces,
                                   const GridParams& params) {
  const GridFrame frame(homes, params.cell_size_m);
  std::map<std::pair<long, long>, GridCount> cells;
  for (const auto& h : homes) ++cells[frame.cell(h)].homes;
  for (const auto& w : workplaces) ++cells[frame.cell(w)].workplaces;
  std::vector<GridCount> out;
  for (auto [key, c] : cells) {
    c.row = key.first;
    c.col = key.second;
    out.push_back(c);
  }
  return out;
}

std::vector<Correlation> group_share_correlations(std::span<const GridCell> cells, int k) {
  const std::size_t m = cells.size();
  std::vector<double> mean(k, 0.0);
  for (const auto& c : cells)
    for (int a = 0; a < k; ++a) mean[a] += c.shares[a];
  for (auto& v : mean) v /= static_cast<double>(std::max<std::size_t>(m, 1));

  std::vector<Correlation> out;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      Correlation corr{a, b, std::nullopt, std::nullopt};
      if (m >= 3) {
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (const auto& c : cells) {
          const double da = c.shares[a] - mean[a];
          const double db = c.shares[b] - mean[b];
          sab += da * db;
          saa += da * da;
          sbb += db * db;
        }
        if (saa > 0.0 && sbb > 0.0) {
          const double r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
          corr.r = a == b ? 1.0 : r;
          if (std::abs(*corr.r) < 1.0) {
            const double df = static_cast<double>(m - 2);
            const double t = *corr.r * std::sqrt(df / (1.0 - *corr.r * *corr.r));
            const boost::math::students_t dist(df);
            corr.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
          }
        }
      }
      out.push_back(corr);
    }
  return out;
}

TransitionMatrix weekday_weekend_transitions(const DenseMatrix& weekday, const DenseMatrix& weekend,
                                             const DenseMatrix& centroids) {
  if (weekday.rows() != weekend.rows() || weekday.cols() != weekend.cols())
    throw InvariantError("weekday and weekend coordinates differ in shape");
  const std::size_t k = centroids.rows();
  TransitionMatrix t;
  t.counts.assign(k, std::vector<std::size_t>(k, 0));
  std::vector<double> a(weekday.rows()), b(weekday.rows());
  for (std::size_t j = 0; j < weekday.cols(); ++j) {
    for (std::size_t r = 0; r < weekday.rows(); ++r) {
      a[r] = weekday(r, j);
      b[r] = weekend(r, j);
    }
    ++t.counts[nearest_centroid(a, centroids)][nearest_centroid(b, centroids)];
  }
  t.row_percent.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t total = 0;
    for (auto c : t.counts[i]) total += c;
    if (total == 0) continue;
    for (std::size_t j = 0; j < k; ++j)
      t.row_percent[i][j] = 100.0 * static_cast<double>(t.counts[i][j]) / static_cast<double>(total);
  }
  return t;
}

void write_profiles_csv(const std::filesystem::path& path, std::span<const GroupProfile> profiles,
                        double display_threshold) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << kProfilesCsvHeader << '\n';
    for (const auto& p : profiles)
      for (int h = 0; h < kHours; ++h)
        for (std::size_t l = 0; l < p.labels.size(); ++l) {
          const double v = p.occupancy[h][l];
          out << p.group << ',' << h << ',' << label_token(p.labels[l]) << ',' << io::fmt_double(v) << ','
              << (v > display_threshold ? 1 : 0) << '\n';
        }
  });
}

void write_grid_csv(const std::filesystem::path& path, std::span<const GridCell> cells, int k) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << "row,col,total";
    for (int g = 0; g < k; ++g) out << ",share_g" << g;
    out << ",stddev\n";
    for (const auto& c : cells) {
      out << c.row << ',' << c.col << ',' << c.total;
      for (double s : c.shares) out << ',' << io::fmt_double(s);
      out << ',' << io::fmt_double(c.stddev) << '\n';
    }
  });
}

void write_grid_counts_csv(const std::filesystem::path& path, std::span<const GridCount> counts) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << "row,col,homes,workplaces\n";
    for (const auto& c : counts) out << c.row << ',' << c.col << ',' << c.homes << ',' << c.workplaces << '\n';
  });
}

void write_correlations_csv(const std::filesystem::path& path, std::span<const Correlation> corr) {
  auto opt = [](const std::optional<double>& v) { return v ? io::fmt_double(*v) : std::string(); };
  io::write_atomic(path, [&](std::ostream& out) {
    out << kCorrelationsCsvHeader << '\n';
    for (const auto& c : corr) out << c.group_a << ',' << c.group_b << ',' << opt(c.r) << ',' << opt(c.p) << '\n';
  });
}

void write_transitions_csv(const std::filesystem::path& path, const TransitionMatrix& t) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << kTransitionsCsvHeader << '\n';
    for (std::size_t i = 0; i < t.counts.size(); ++i)
      for (std::size_t j = 0; j < t.counts[i].size(); ++j)
        out << i << ',' << j << ',' << t.counts[i][j] << ',' << io::fmt_double(t.row_percent[i][j]) << '\n';
  });
}

}  // namespace lifepattern
