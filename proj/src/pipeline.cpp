#include "lifepattern/pipeline.hpp"

#include <array>
#include <chrono>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"
#include "lifepattern/parallel.hpp"

namespace lifepattern {

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 9> kStageNames{{
    {Stage::kSynth, "synth"},
    {Stage::kExtractStays, "extract-stays"},
    {Stage::kDetectPlaces, "detect-places"},
    {Stage::kBuildGraph, "build-graph"},
    {Stage::kFactorize, "factorize"},
    {Stage::kCluster, "cluster"},
    {Stage::kAnalyze, "analyze"},
    {Stage::kCompareBaseline, "compare-baseline"},
    {Stage::kPipeline, "pipeline"},
}};

}  // namespace

std::optional<Stage> parse_stage(std::string_view name) {
  for (const auto& [s, n] : kStageNames)
    if (n == name) return s;
  return std::nullopt;
}

std::string_view stage_name(Stage s) {
  for (const auto& [st, n] : kStageNames)
    if (st == s) return n;
  return "?";
}

TrackStays extract_track_stays(const UserTrack& track, const StayParams& params) {
  const auto clean = filter_noise(track.fixes, params.speed_sigma_mult);
  return {extract_stay_points(clean, params), coverage_days(clean)};
}

TrackPlaces detect_track_places(std::span<const StayPoint> stays, const DbscanParams& dbscan,
                                const PlaceParams& places) {
  TrackPlaces out;
  out.clusters = cluster_user_stays(stays, dbscan);
  out.places = detect_places(stays, out.clusters, places);
  return out;
}

UserDays track_days(const std::string& user_id, std::span<const StayPoint> stays,
                    std::span<const int> cluster_labels, std::span<const SignificantPlace> places,
                    std::span<const CoverageDay> coverage, const LifegraphParams& params) {
  const auto placed = place_stays(stays, cluster_labels, places);
  std::vector<DayNumber> dates;
  for (const auto& c : coverage) dates.push_back(c.date);
  return build_user_days(user_id, placed, dates, params.empty_day_policy, params.distinct_others);
}

namespace {

using Counts = nlohmann::ordered_json;
using clock = std::chrono::steady_clock;

struct Paths {
  std::filesystem::path dir;
  std::filesystem::path operator()(std::string_view name) const { return dir / name; }
};

void update_manifest(const RunConfig& cfg, Stage stage, double seconds, const Counts& counts) {
  const auto path = cfg.output_dir / "manifest.json";
  nlohmann::ordered_json m;
  if (std::ifstream in(path); in) {
    try {
      m = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception&) {
      m = nlohmann::ordered_json::object();
    }
  }
  m["tool"] = "lifegraph";
  m["version"] = kToolVersion;
  m["seed"] = cfg.seed;
  m["config"] = config_snapshot(cfg);
  auto& entry = m["stages"][std::string(stage_name(stage))];
  entry["wall_clock_s"] = seconds;
  entry["counts"] = counts;
  io::write_atomic(path, [&](std::ostream& out) { out << m.dump(2) << '\n'; });
}

// ---------------------------------------------------------------------------

Counts run_synth(const RunConfig& cfg, const Paths& p) {
  const auto& spec = cfg.corpus;
  spec.validate();
  const auto archetypes = assign_archetypes(spec);
  std::vector<UserTruth> truth;
  std::size_t fixes = 0;
  constexpr std::size_t kChunk = 64;
  io::write_atomic(p("gps.csv"), [&](std::ostream& out) {
    out << kGpsCsvHeader << '\n';
    for (std::size_t begin = 0; begin < spec.n_users; begin += kChunk) {
      const std::size_t end = std::min(spec.n_users, begin + kChunk);
      std::vector<SyntheticUser> chunk(end - begin);
      parallel_for(chunk.size(), [&](std::size_t i) {
        chunk[i] = generate_user(spec, begin + i, archetypes[begin + i]);
      });
      for (auto& u : chunk) {
        write_gps_rows(out, u.track, spec.tz_offset_s);
        fixes += u.track.fixes.size();
        truth.push_back(std::move(u.truth));
      }
    }
  });
  io::write_atomic(p("truth_archetypes.csv"), [&](std::ostream& out) { write_truth_archetypes(out, truth); });
  io::write_atomic(p("truth_labels.csv"), [&](std::ostream& out) { write_truth_labels(out, truth); });
  io::write_atomic(p("truth_places.csv"), [&](std::ostream& out) { write_truth_places(out, truth); });
  std::size_t with_work = 0;
  for (const auto& u : truth)
    with_work += std::any_of(u.places.begin(), u.places.end(),
                             [](const TruePlace& tp) { return tp.category == Category::W; });
  return {{"users", spec.n_users}, {"fixes", fixes}, {"users_with_workplace", with_work}};
}

Counts run_extract_stays(const RunConfig& cfg, const Paths& p) {
  const auto corpus = parse_gps_csv(cfg.gps_path(), cfg.corpus.tz_offset_s);
  std::vector<UserStays> users(corpus.users.size());
  std::vector<std::vector<CoverageDay>> coverage(corpus.users.size());
  parallel_for(corpus.users.size(), [&](std::size_t i) {
    auto r = extract_track_stays(corpus.users[i], cfg.staypoint);
    users[i] = {corpus.users[i].user_id, std::move(r.stays)};
    coverage[i] = std::move(r.coverage);
  });
  std::size_t n_stays = 0;
  for (const auto& u : users) n_stays += u.stays.size();
  io::write_atomic(p("stays.csv"), [&](std::ostream& out) { write_stays_csv(out, users); });
  io::write_atomic(p("coverage.csv"), [&](std::ostream& out) {
    out << kCoverageCsvHeader << '\n';
    for (std::size_t i = 0; i < users.size(); ++i)
      for (const auto& c : coverage[i]) out << users[i].user_id << ',' << format_date(c.date) << ',' << c.n_fixes << '\n';
  });
  return {{"users_ingested", corpus.users.size()},
          {"rows", corpus.report.rows},
          {"malformed_rows", corpus.report.malformed},
          {"out_of_range_rows", corpus.report.out_of_range},
          {"stays", n_stays}};
}

std::map<std::string, std::vector<CoverageDay>> read_coverage(const std::filesystem::path& path) {
  std::map<std::string, std::vector<CoverageDay>> out;
  io::read_csv(path, kCoverageCsvHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 3) throw InputError(fmt::format("{}: expected 3 fields", path.string()));
    const auto d = parse_date(f[1]);
    if (!d) throw InputError(fmt::format("{}: bad date", path.string()));
    out[std::string(f[0])].push_back({*d, static_cast<std::size_t>(io::parse_int(f[2]))});
  });
  return out;
}

Counts run_detect_places(const RunConfig& cfg, const Paths& p) {
  const auto stays = read_stays_csv(p("stays.csv"));
  std::vector<UserLabels> labels(stays.size());
  std::vector<UserPlaces> places(stays.size());
  parallel_for(stays.size(), [&](std::size_t i) {
    auto r = detect_track_places(stays[i].stays, cfg.dbscan, cfg.places);
    labels[i] = {stays[i].user_id, std::move(r.clusters.labeling.labels)};
    places[i] = {stays[i].user_id, std::move(r.places)};
  });
  std::size_t n_clusters = 0, with_home = 0, with_work = 0;
  for (const auto& u : places) {
    n_clusters += u.places.size();
    with_home += u.home() != nullptr;
    with_work += u.work() != nullptr;
  }
  io::write_atomic(p("clusters.csv"), [&](std::ostream& out) { write_clusters_csv(out, labels); });
  std::vector<UserPlaces> nonempty;
  for (auto& u : places)
    if (!u.places.empty()) nonempty.push_back(std::move(u));
  io::write_atomic(p("places.csv"), [&](std::ostream& out) { write_places_csv(out, nonempty); });
  return {{"users_with_stays", stays.size()},
          {"clusters", n_clusters},
          {"users_with_home", with_home},
          {"users_with_work", with_work}};
}

std::vector<UserDays> load_user_days(const RunConfig& cfg, const Paths& p) {
  const auto stays = read_stays_csv(p("stays.csv"));
  const auto clusters = read_clusters_csv(p("clusters.csv"));
  const auto places = read_places_csv(p("places.csv"));
  const auto coverage = read_coverage(p("coverage.csv"));
  std::map<std::string_view, const UserLabels*> by_user_labels;
  for (const auto& c : clusters) by_user_labels[c.user_id] = &c;
  std::map<std::string_view, const UserPlaces*> by_user_places;
  for (const auto& u : places) by_user_places[u.user_id] = &u;

  std::vector<const UserStays*> homed;
  for (const auto& s : stays) {
    const auto it = by_user_places.find(s.user_id);
    if (it != by_user_places.end() && it->second->home()) homed.push_back(&s);
  }
  std::vector<UserDays> days(homed.size());
  parallel_for(homed.size(), [&](std::size_t i) {
    const auto& s = *homed[i];
    const auto lab = by_user_labels.find(s.user_id);
    const auto cov = coverage.find(s.user_id);
    if (lab == by_user_labels.end() || lab->second->labels.size() != s.stays.size())
      throw InvariantError(fmt::format("cluster labels missing or misaligned for {}", s.user_id));
    const std::vector<CoverageDay> none;
    days[i] = track_days(s.user_id, s.stays, lab->second->labels, by_user_places.at(s.user_id)->places,
                         cov == coverage.end() ? none : cov->second, cfg.lifegraph);
  });
  return days;
}

Counts run_build_graph(const RunConfig& cfg, const Paths& p) {
  const auto days = load_user_days(cfg, p);
  const auto g = build_support_graph(std::span<const UserDays>(days));
  io::write_atomic(p("support_graph.csv"), [&](std::ostream& out) { write_support_graph_csv(out, g); });
  const auto t = assemble_total_matrix(days, g, MatrixMode::kAllDays, cfg.places.calendar);
  write_total_matrix(p("ta_matrix.csv"), p("ta_matrix.json"), t);
  std::size_t n_days = 0;
  for (const auto& u : days) n_days += u.days.size();
  Counts counts{{"users_with_home", days.size()}, {"day_paths", n_days}, {"n", t.n()}, {"u", t.u()}};
  if (cfg.mode == MatrixMode::kSplit) {
    const auto s = assemble_total_matrix(days, g, MatrixMode::kSplit, cfg.places.calendar);
    write_total_matrix(p("ta_matrix_split.csv"), p("ta_matrix_split.json"), s);
    counts["u_split"] = s.u();
    counts["split_excluded_users"] = s.excluded_users;
  }
  return counts;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const double> trace) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << "iteration,objective\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << io::fmt_double(trace[i]) << '\n';
  });
}

Counts run_factorize(const RunConfig& cfg, const Paths& p) {
  const auto g = read_support_graph_csv(p("support_graph.csv"));
  const auto t = read_total_matrix(p("ta_matrix.csv"), p("ta_matrix.json"));
  if (t.n() != g.size()) throw InvariantError("T-A matrix row count differs from support graph size");
  const auto f = nmf(t.matrix, cfg.nmf);
  write_w_csv(p("nmf_W.csv"), f.W);
  write_h_csv(p("nmf_H.csv"), f.H, t.owners);
  write_trace_csv(p("nmf_trace.csv"), f.objective_trace);
  write_strong_patterns_csv(p("strong_patterns.csv"), f.W, g, cfg.analysis.strong_pattern_threshold);
  const auto scan = rank_scan(t.matrix, cfg.nmf, cfg.analysis.rank_scan_max);
  write_rank_scan_csv(p("nmf_rank_scan.csv"), scan);
  Counts counts{{"n", t.n()},
                {"u", t.u()},
                {"k", cfg.nmf.rank},
                {"iterations", f.iterations()},
                {"relative_error", relative_error(t.matrix, f)}};
  if (cfg.mode == MatrixMode::kSplit) {
    const auto s = read_total_matrix(p("ta_matrix_split.csv"), p("ta_matrix_split.json"));
    const auto fs = nmf(s.matrix, cfg.nmf);
    write_w_csv(p("nmf_W_split.csv"), fs.W);
    write_h_csv(p("nmf_H_split.csv"), fs.H, s.owners);
    const auto match = match_bases(f.W, fs.W);
    io::write_atomic(p("basis_match.csv"), [&](std::ostream& out) {
      out << "basis,split_basis,cosine\n";
      for (std::size_t c = 0; c < match.mapping.size(); ++c)
        out << c << ',' << match.mapping[c] << ',' << io::fmt_double(match.cosine[c]) << '\n';
    });
    write_h_csv(p("nmf_H_split_embedded.csv"), embed_columns(s.matrix, f.W, cfg.nmf), s.owners);
    counts["u_split"] = s.u();
    counts["min_basis_cosine"] = *std::min_element(match.cosine.begin(), match.cosine.end());
  }
  return counts;
}

Counts run_cluster(const RunConfig& cfg, const Paths& p) {
  std::vector<std::string> owners;
  const auto h = read_h_csv(p("nmf_H.csv"), owners);
  const auto points = h.transposed();
  const auto r = kmeans(points, cfg.kmeans);
  write_assignments_csv(p("assignments.csv"), owners, r.assignment);
  write_centroids_csv(p("centroids.csv"), r.centroids);
  const int k_max = std::min<int>(cfg.analysis.elbow_k_max, static_cast<int>(points.rows()));
  const auto curve = elbow_curve(points, k_max, cfg.kmeans);
  write_elbow_csv(p("elbow.csv"), curve);
  Counts counts{{"points", points.rows()}, {"groups", cfg.kmeans.k}, {"distortion", r.distortion}};
  const auto suggested = suggest_k(curve);
  counts["suggested_k"] = suggested ? nlohmann::ordered_json(*suggested) : nlohmann::ordered_json(nullptr);
  return counts;
}

Counts run_analyze(const RunConfig& cfg, const Paths& p) {
  const auto g = read_support_graph_csv(p("support_graph.csv"));
  const auto t = read_total_matrix(p("ta_matrix.csv"), p("ta_matrix.json"));
  std::vector<std::string> owners;
  const auto groups = read_assignments_csv(p("assignments.csv"), owners);
  if (owners != t.owners) throw InvariantError("assignments do not match T-A matrix columns");
  const int k = cfg.kmeans.k;
  if (std::any_of(groups.begin(), groups.end(), [&](int x) { return x < 0 || x >= k; }))
    throw InvariantError("assignment group out of range for kmeans.k");

  const auto profiles = group_profiles(groups, k, t.matrix, g);
  write_profiles_csv(p("profiles.csv"), profiles, cfg.analysis.display_threshold);

  const auto places = read_places_csv(p("places.csv"));
  std::map<std::string_view, const UserPlaces*> by_user;
  for (const auto& u : places) by_user[u.user_id] = &u;
  std::vector<LatLon> homes, works;
  for (const auto& o : owners) {
    const auto it = by_user.find(o);
    if (it == by_user.end() || !it->second->home()) throw InvariantError(fmt::format("no home for {}", o));
    homes.push_back(it->second->home()->centroid);
    if (const auto* w = it->second->work()) works.push_back(w->centroid);
  }
  const auto cells = regional_stats(homes, groups, k, cfg.analysis.grid);
  write_grid_csv(p("grid.csv"), cells, k);
  write_grid_counts_csv(p("grid_counts.csv"), grid_counts(homes, works, cfg.analysis.grid));
  write_correlations_csv(p("correlations.csv"), group_share_correlations(cells, k));
  Counts counts{{"groups", k}, {"grid_cells", cells.size()}};

  if (cfg.mode == MatrixMode::kSplit) {
    std::vector<std::string> split_owners;
    const auto hs = read_h_csv(p("nmf_H_split_embedded.csv"), split_owners);
    const auto centroids = read_centroids_csv(p("centroids.csv"));
    if (hs.rows() != centroids.cols()) throw InvariantError("split coordinates and centroids differ in rank");
    DenseMatrix weekday(hs.rows(), hs.cols() / 2), weekend(hs.rows(), hs.cols() / 2);
    for (std::size_t j = 0; j + 1 < hs.cols(); j += 2)
      for (std::size_t r = 0; r < hs.rows(); ++r) {
        weekday(r, j / 2) = hs(r, j);
        weekend(r, j / 2) = hs(r, j + 1);
      }
    const auto tm = weekday_weekend_transitions(weekday, weekend, centroids);
    write_transitions_csv(p("transitions.csv"), tm);
    counts["transition_users"] = weekday.cols();
  }
  return counts;
}

Counts run_compare(const RunConfig& cfg, const Paths& p) {
  const auto g = read_support_graph_csv(p("support_graph.csv"));
  const auto t = read_total_matrix(p("ta_matrix.csv"), p("ta_matrix.json"));
  const auto r = compare_direct_vs_metagraph(t.matrix, cfg.nmf, cfg.kmeans);
  write_comparison_json(p("comparison.json"), r);
  io::write_atomic(p("comparison_assignments.csv"), [&](std::ostream& out) {
    out << "owner,direct_group,metagraph_group\n";
    for (std::size_t j = 0; j < t.u(); ++j)
      out << t.owners[j] << ',' << r.direct_assignment[j] << ',' << r.metagraph_assignment[j] << '\n';
  });
  write_profiles_csv(p("comparison_profiles_direct.csv"), group_profiles(r.direct_assignment, cfg.kmeans.k, t.matrix, g),
                     cfg.analysis.display_threshold);
  write_profiles_csv(p("comparison_profiles_metagraph.csv"),
                     group_profiles(r.metagraph_assignment, cfg.kmeans.k, t.matrix, g),
                     cfg.analysis.display_threshold);
  return {{"u", t.u()}, {"ari", r.ari}, {"speedup", r.speedup}};
}

Counts dispatch(Stage stage, const RunConfig& cfg, const Paths& p) {
  switch (stage) {
    case Stage::kSynth: return run_synth(cfg, p);
    case Stage::kExtractStays: return run_extract_stays(cfg, p);
    case Stage::kDetectPlaces: return run_detect_places(cfg, p);
    case Stage::kBuildGraph: return run_build_graph(cfg, p);
    case Stage::kFactorize: return run_factorize(cfg, p);
    case Stage::kCluster: return run_cluster(cfg, p);
    case Stage::kAnalyze: return run_analyze(cfg, p);
    case Stage::kCompareBaseline: return run_compare(cfg, p);
    case Stage::kPipeline: break;
  }
  throw InvariantError("pipeline is not a single stage");
}

}  // namespace

void run_stage(Stage stage, const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  const Paths p{cfg.output_dir};
  if (stage == Stage::kPipeline) {
    for (const auto& [s, name] : kStageNames) {
      if (s == Stage::kPipeline) continue;
      if (s == Stage::kSynth && !cfg.input_path.empty()) continue;
      run_stage(s, cfg);
    }
    return;
  }
  const auto start = clock::now();
  const auto counts = dispatch(stage, cfg, p);
  update_manifest(cfg, stage, std::chrono::duration<double>(clock::now() - start).count(), counts);
}

}  // namespace lifepattern
