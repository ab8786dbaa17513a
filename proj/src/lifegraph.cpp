#include "lifepattern/lifegraph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"

namespace lifepattern {

std::string label_token(Label l) {
  std::string s(1, category_code(l.category));
  if (l.ordinal > 0) s += std::to_string(l.ordinal);
  return s;
}

std::optional<Label> parse_label_token(std::string_view s) {
  if (s.empty()) return std::nullopt;
  const auto cat = parse_category(s.front());
  if (!cat) return std::nullopt;
  if (s.size() == 1) return Label{*cat, 0};
  if (*cat != Category::N && *cat != Category::D && *cat != Category::O) return std::nullopt;
  try {
    const auto ord = io::parse_int(s.substr(1));
    if (ord < 1 || ord > kMaxDistinctOthers) return std::nullopt;
    return Label{*cat, static_cast<std::uint8_t>(ord)};
  } catch (const InputError&) {
    return std::nullopt;
  }
}

std::vector<PlacedStay> place_stays(std::span<const StayPoint> stays, std::span<const int> cluster_labels,
                                    std::span<const SignificantPlace> places) {
  if (stays.size() != cluster_labels.size())
    throw InvariantError("stay and cluster label counts differ");
  std::vector<PlacedStay> out;
  for (std::size_t i = 0; i < stays.size(); ++i) {
    const int c = cluster_labels[i];
    if (c == kNoise) continue;
    const auto it = std::find_if(places.begin(), places.end(),
                                 [&](const SignificantPlace& p) { return p.place_id == c; });
    if (it == places.end()) throw InvariantError(fmt::format("stay references unknown place {}", c));
    out.push_back({stays[i].arv_t, stays[i].lev_t, c, it->category});
  }
  return out;
}

DayPath label_day(std::span<const PlacedStay> stays, DayNumber date, int distinct_others) {
  DayPath path;
  path.date = date;
  const Seconds midnight = day_start(date);
  auto first = std::partition_point(stays.begin(), stays.end(),
                                    [&](const PlacedStay& s) { return s.lev_t <= midnight; });
  // Ordinal bookkeeping for N, D, O: place ids in order of first appearance.
  std::array<std::vector<int>, 3> seen;
  for (int h = 0; h < kHours; ++h) {
    const Seconds a = midnight + h * kSecondsPerHour;
    const Seconds b = a + kSecondsPerHour;
    const PlacedStay* best = nullptr;
    Seconds best_overlap = 0;
    auto key = [](const PlacedStay& s, Seconds overlap) {
      return std::make_tuple(-overlap, s.arv_t, s.category, s.place_id);
    };
    for (auto it = first; it != stays.end() && it->arv_t < b; ++it) {
      const Seconds overlap = std::min(b, it->lev_t) - std::max(a, it->arv_t);
      if (overlap <= 0) continue;
      if (!best || key(*it, overlap) < key(*best, best_overlap)) {
        best = &*it;
        best_overlap = overlap;
      }
    }
    Label l{Category::U, 0};
    if (best) {
      l.category = best->category;
      const int slot = static_cast<int>(best->category) - static_cast<int>(Category::N);
      if (distinct_others > 0 && slot >= 0 && slot < 3) {
        auto& ids = seen[slot];
        auto pos = std::find(ids.begin(), ids.end(), best->place_id);
        if (pos == ids.end()) pos = ids.insert(ids.end(), best->place_id);
        const auto ordinal = std::min<std::ptrdiff_t>(pos - ids.begin() + 1, distinct_others);
        l.ordinal = static_cast<std::uint8_t>(ordinal);
      }
    }
    path.labels[h] = l;
  }
  return path;
}

UserDays build_user_days(const std::string& user_id, std::span<const PlacedStay> stays,
                         std::span<const DayNumber> covered_dates, EmptyDayPolicy policy,
                         int distinct_others) {
  UserDays out{user_id, {}};
  if (covered_dates.empty()) return out;
  if (policy == EmptyDayPolicy::kSkip) {
    for (DayNumber d : covered_dates) out.days.push_back(label_day(stays, d, distinct_others));
    return out;
  }
  std::size_t next = 0;
  for (DayNumber d = covered_dates.front(); d <= covered_dates.back(); ++d) {
    while (next < covered_dates.size() && covered_dates[next] < d) ++next;
    if (next < covered_dates.size() && covered_dates[next] == d) {
      out.days.push_back(label_day(stays, d, distinct_others));
    } else {
      DayPath empty;
      empty.date = d;
      out.days.push_back(empty);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Support graph
// ---------------------------------------------------------------------------

SupportGraph::SupportGraph() : lookup_(static_cast<std::size_t>(kLayerPairs) * 256 * 256, -1) {}

SupportGraph::SupportGraph(std::vector<Edge> edges) : SupportGraph() {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return slot(a.hour, a.src.code(), a.dst.code()) < slot(b.hour, b.src.code(), b.dst.code());
  });
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (e.hour >= kLayerPairs) throw InvariantError("edge layer out of range");
    auto& entry = lookup_[slot(e.hour, e.src.code(), e.dst.code())];
    if (entry >= 0) throw InvariantError("duplicate support graph edge");
    entry = static_cast<std::int32_t>(i);
  }
  edges_ = std::move(edges);
}

std::optional<std::uint32_t> SupportGraph::index_of(int hour, Label src, Label dst) const {
  if (hour < 0 || hour >= kLayerPairs) return std::nullopt;
  const auto v = lookup_[slot(hour, src.code(), dst.code())];
  if (v < 0) return std::nullopt;
  return static_cast<std::uint32_t>(v);
}

std::vector<std::vector<Label>> SupportGraph::nodes() const {
  std::vector<std::vector<std::uint8_t>> codes(kHours);
  for (const auto& e : edges_) {
    codes[e.hour].push_back(e.src.code());
    codes[e.hour + 1].push_back(e.dst.code());
  }
  std::vector<std::vector<Label>> out(kHours);
  for (int h = 0; h < kHours; ++h) {
    auto& c = codes[h];
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (auto code : c) out[h].push_back(Label::from_code(code));
  }
  return out;
}

namespace {

void mark_edges(const DayPath& p, std::vector<bool>& present) {
  for (int h = 0; h < kLayerPairs; ++h)
    present[(static_cast<std::size_t>(h) * 256 + p.labels[h].code()) * 256 + p.labels[h + 1].code()] = true;
}

SupportGraph graph_from_marks(const std::vector<bool>& present) {
  std::vector<Edge> edges;
  for (std::size_t s = 0; s < present.size(); ++s) {
    if (!present[s]) continue;
    const auto hour = static_cast<std::uint8_t>(s / (256 * 256));
    const auto src = static_cast<std::uint8_t>((s / 256) % 256);
    const auto dst = static_cast<std::uint8_t>(s % 256);
    edges.push_back({hour, Label::from_code(src), Label::from_code(dst)});
  }
  return SupportGraph(std::move(edges));
}

}  // namespace

SupportGraph build_support_graph(std::span<const DayPath> paths) {
  std::vector<bool> present(static_cast<std::size_t>(kLayerPairs) * 256 * 256, false);
  for (const auto& p : paths) mark_edges(p, present);
  return graph_from_marks(present);
}

SupportGraph build_support_graph(std::span<const UserDays> users) {
  std::vector<bool> present(static_cast<std::size_t>(kLayerPairs) * 256 * 256, false);
  for (const auto& u : users)
    for (const auto& p : u.days) mark_edges(p, present);
  return graph_from_marks(present);
}

// ---------------------------------------------------------------------------
// T-A vectors
// ---------------------------------------------------------------------------

SparseVector day_to_ta_vector(const DayPath& path, const SupportGraph& g) {
  SparseVector v;
  v.index.reserve(kLayerPairs);
  for (int h = 0; h < kLayerPairs; ++h) {
    const auto idx = g.index_of(h, path.labels[h], path.labels[h + 1]);
    if (!idx)
      throw InvariantError(fmt::format("day {} edge {}:{}->{} missing from support graph",
                                       format_date(path.date), h, label_token(path.labels[h]),
                                       label_token(path.labels[h + 1])));
    v.index.push_back(*idx);
  }
  // Indices ascend with the layer, so the vector is already sorted.
  v.value.assign(kLayerPairs, 1.0);
  return v;
}

SparseVector average_vector(std::span<const SparseVector> days) {
  if (days.empty()) throw std::invalid_argument("average_vector: no days");
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (const auto& d : days)
    for (std::size_t p = 0; p < d.nnz(); ++p) entries.emplace_back(d.index[p], d.value[p]);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVector out;
  const double m = static_cast<double>(days.size());
  for (std::size_t i = 0; i < entries.size();) {
    double s = 0.0;
    std::size_t j = i;
    for (; j < entries.size() && entries[j].first == entries[i].first; ++j) s += entries[j].second;
    out.index.push_back(entries[i].first);
    out.value.push_back(s / m);
    i = j;
  }
  return out;
}

std::array<double, kLayerPairs> layer_sums(const SparseVector& v, const SupportGraph& g) {
  std::array<double, kLayerPairs> sums{};
  for (std::size_t p = 0; p < v.nnz(); ++p) sums[g.edges().at(v.index[p]).hour] += v.value[p];
  return sums;
}

TotalMatrix assemble_total_matrix(std::span<const UserDays> users, const SupportGraph& g,
                                  MatrixMode mode, const Calendar& calendar) {
  std::vector<std::size_t> order(users.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return users[a].user_id < users[b].user_id; });

  TotalMatrix out;
  std::vector<SparseVector> columns;
  for (std::size_t idx : order) {
    const auto& u = users[idx];
    std::vector<SparseVector> weekday, weekend, all;
    for (const auto& day : u.days) {
      auto v = day_to_ta_vector(day, g);
      if (mode == MatrixMode::kSplit)
        (calendar.is_weekend_class(day.date) ? weekend : weekday).push_back(std::move(v));
      else
        all.push_back(std::move(v));
    }
    if (mode == MatrixMode::kAllDays) {
      if (all.empty()) {
        ++out.excluded_users;
        continue;
      }
      columns.push_back(average_vector(all));
      out.owners.push_back(u.user_id);
    } else {
      if (weekday.empty() || weekend.empty()) {
        ++out.excluded_users;
        continue;
      }
      columns.push_back(average_vector(weekday));
      out.owners.push_back(u.user_id + ":weekday");
      columns.push_back(average_vector(weekend));
      out.owners.push_back(u.user_id + ":weekend");
    }
  }
  out.matrix = SparseMatrix(g.size(), std::move(columns));
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

void write_support_graph_csv(std::ostream& out, const SupportGraph& g) {
  out << kSupportGraphCsvHeader << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& e = g.edges()[i];
    out << i << ',' << static_cast<int>(e.hour) << ',' << label_token(e.src) << ','
        << label_token(e.dst) << '\n';
  }
}

SupportGraph read_support_graph_csv(const std::filesystem::path& path) {
  std::vector<Edge> edges;
  io::read_csv(path, kSupportGraphCsvHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 4) throw InputError(fmt::format("{}: expected 4 fields", path.string()));
    const auto src = parse_label_token(f[2]);
    const auto dst = parse_label_token(f[3]);
    const auto hour = io::parse_int(f[1]);
    if (!src || !dst || hour < 0 || hour >= kLayerPairs ||
        static_cast<std::size_t>(io::parse_int(f[0])) != edges.size())
      throw InputError(fmt::format("{}: malformed edge row", path.string()));
    edges.push_back({static_cast<std::uint8_t>(hour), *src, *dst});
  });
  SupportGraph g(edges);
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (g.index_of(edges[i].hour, edges[i].src, edges[i].dst) != i)
      throw InputError(fmt::format("{}: edges not in canonical order", path.string()));
  return g;
}

void write_total_matrix(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                        const TotalMatrix& t) {
  io::write_atomic(csv_path, [&](std::ostream& out) {
    out << kTaMatrixCsvHeader << '\n';
    for (std::size_t j = 0; j < t.u(); ++j) {
      const auto idx = t.matrix.column_indices(j);
      const auto val = t.matrix.column_values(j);
      for (std::size_t p = 0; p < idx.size(); ++p)
        out << j << ',' << idx[p] << ',' << io::fmt_double(val[p]) << '\n';
    }
  });
  nlohmann::ordered_json meta;
  meta["n"] = t.n();
  meta["u"] = t.u();
  meta["column_owners"] = t.owners;
  io::write_atomic(json_path, [&](std::ostream& out) { out << meta.dump(2) << '\n'; });
}

TotalMatrix read_total_matrix(const std::filesystem::path& csv_path,
                              const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw MissingArtifactError(fmt::format("missing artifact: {}", json_path.string()));
  const auto meta = nlohmann::json::parse(in);
  const auto n = meta.at("n").get<std::size_t>();
  const auto u = meta.at("u").get<std::size_t>();
  TotalMatrix t;
  t.owners = meta.at("column_owners").get<std::vector<std::string>>();
  if (t.owners.size() != u) throw InputError("T-A sidecar owner count differs from u");
  std::vector<SparseVector> columns(u);
  io::read_csv(csv_path, kTaMatrixCsvHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 3) throw InputError(fmt::format("{}: expected 3 fields", csv_path.string()));
    const auto col = static_cast<std::size_t>(io::parse_int(f[0]));
    const auto row = io::parse_int(f[1]);
    if (col >= u || row < 0 || static_cast<std::size_t>(row) >= n)
      throw InputError(fmt::format("{}: triplet out of range", csv_path.string()));
    columns[col].index.push_back(static_cast<std::uint32_t>(row));
    columns[col].value.push_back(io::parse_double(f[2]));
  });
  t.matrix = SparseMatrix(n, std::move(columns));
  return t;
}

}  // namespace lifepattern
