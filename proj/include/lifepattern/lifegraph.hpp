#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lifepattern/category.hpp"
#include "lifepattern/places.hpp"
#include "lifepattern/sparse.hpp"
#include "lifepattern/timeutil.hpp"

namespace lifepattern {

inline constexpr int kHours = 24;
inline constexpr int kLayerPairs = kHours - 1;
inline constexpr int kMaxDistinctOthers = 15;

/// Node label: a category, optionally split into within-day ordinal tokens
/// (N1, N2, ...) for N/D/O. The packed code orders labels canonically:
/// H < W < N* < D* < O* < U, ordinals ascending.
struct Label {
  Category category = Category::U;
  std::uint8_t ordinal = 0;  // 0 = unsplit

  std::uint8_t code() const { return static_cast<std::uint8_t>(static_cast<int>(category) * 16 + ordinal); }
  static Label from_code(std::uint8_t code) {
    return {static_cast<Category>(code / 16), static_cast<std::uint8_t>(code % 16)};
  }
  friend bool operator==(const Label&, const Label&) = default;
};

std::string label_token(Label l);
std::optional<Label> parse_label_token(std::string_view s);

struct DayPath {
  DayNumber date = 0;
  std::array<Label, kHours> labels{};
};

struct UserDays {
  std::string user_id;
  std::vector<DayPath> days;  // ascending date
};

/// A stay attached to a significant place.
struct PlacedStay {
  Seconds arv_t = 0;
  Seconds lev_t = 0;
  int place_id = 0;
  Category category = Category::O;
};

/// Stays of clustered (non-noise) points with their place category.
std::vector<PlacedStay> place_stays(std::span<const StayPoint> stays, std::span<const int> cluster_labels,
                                    std::span<const SignificantPlace> places);

/// For each hour, the place whose dwell overlaps [h:00, h+1:00) longest; ties
/// go to earlier arrival, then category order, then place id; no dwell gives
/// U. With distinct_others > 0, N/D/O places are numbered by first appearance
/// within the day, capped at distinct_others.
DayPath label_day(std::span<const PlacedStay> stays, DayNumber date, int distinct_others = 0);

enum class EmptyDayPolicy { kSkip, kLabelU };

/// Day paths over the user's covered dates. With kLabelU, uncovered dates
/// between the first and last covered date become 24 x U.
UserDays build_user_days(const std::string& user_id, std::span<const PlacedStay> stays,
                         std::span<const DayNumber> covered_dates, EmptyDayPolicy policy,
                         int distinct_others);

struct Edge {
  std::uint8_t hour = 0;  // source layer; target layer is hour + 1
  Label src;
  Label dst;
};

/// Population support graph. Edges are indexed ascending by layer, then
/// source label, then target label.
class SupportGraph {
 public:
  SupportGraph();
  explicit SupportGraph(std::vector<Edge> edges);

  std::size_t size() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::optional<std::uint32_t> index_of(int hour, Label src, Label dst) const;
  /// Distinct labels present per layer.
  std::vector<std::vector<Label>> nodes() const;

 private:
  static std::size_t slot(int hour, std::uint8_t src, std::uint8_t dst) {
    return (static_cast<std::size_t>(hour) * 256 + src) * 256 + dst;
  }
  std::vector<Edge> edges_;
  std::vector<std::int32_t> lookup_;
};

SupportGraph build_support_graph(std::span<const DayPath> paths);
SupportGraph build_support_graph(std::span<const UserDays> users);

/// Binary indicator vector with exactly 23 ones. Throws InvariantError when an
/// edge of the path is missing from the graph.
SparseVector day_to_ta_vector(const DayPath& path, const SupportGraph& g);

/// Elementwise mean. Throws std::invalid_argument on an empty input.
SparseVector average_vector(std::span<const SparseVector> days);

/// Sum of entries per layer pair (23 values).
std::array<double, kLayerPairs> layer_sums(const SparseVector& v, const SupportGraph& g);

enum class MatrixMode { kAllDays, kSplit };

struct TotalMatrix {
  SparseMatrix matrix;               // n x u
  std::vector<std::string> owners;   // one per column
  std::size_t excluded_users = 0;

  std::size_t n() const { return matrix.rows(); }
  std::size_t u() const { return matrix.cols(); }
};

/// Columns in ascending user order; split mode emits a weekday column then a
/// weekend column per user and excludes users lacking either class.
TotalMatrix assemble_total_matrix(std::span<const UserDays> users, const SupportGraph& g,
                                  MatrixMode mode, const Calendar& calendar);

inline constexpr std::string_view kSupportGraphCsvHeader = "edge_index,hour,src_label,dst_label";
inline constexpr std::string_view kTaMatrixCsvHeader = "col,row,value";

void write_support_graph_csv(std::ostream& out, const SupportGraph& g);
SupportGraph read_support_graph_csv(const std::filesystem::path& path);

/// Triplet CSV plus a JSON sidecar {n, u, column_owners}.
void write_total_matrix(const std::filesystem::path& csv_path, const std::filesystem::path& json_path,
                        const TotalMatrix& t);
TotalMatrix read_total_matrix(const std::filesystem::path& csv_path,
                              const std::filesystem::path& json_path);

}  // namespace lifepattern
