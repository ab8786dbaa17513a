#include "lifepattern/config.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"
#include "lifepattern/seed.hpp"

namespace lifepattern {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Value {
  std::string key;
  std::string text;

  [[noreturn]] void bad(std::string_view what) const {
    throw ConfigError(fmt::format("{}: {} (got '{}')", key, what, text));
  }
  long long integer() const {
    try {
      return io::parse_int(text);
    } catch (const InputError&) {
      bad("expected an integer");
    }
  }
  double real() const {
    try {
      return io::parse_double(text);
    } catch (const InputError&) {
      bad("expected a number");
    }
  }
  std::uint64_t seed() const {
    const auto v = integer();
    if (v < 0) bad("seed must be nonnegative");
    return static_cast<std::uint64_t>(v);
  }
  int count() const {
    const auto v = integer();
    if (v < 0 || v > std::numeric_limits<int>::max()) bad("expected a nonnegative count");
    return static_cast<int>(v);
  }
  ClockWindow window() const {
    const auto w = parse_clock_window(text);
    if (!w) bad("expected HH:MM-HH:MM");
    return *w;
  }
  DayNumber date() const {
    const auto d = parse_date(text);
    if (!d) bad("expected YYYY-MM-DD");
    return *d;
  }
};

using Setter = std::function<void(RunConfig&, const Value&)>;

struct Seeds {
  bool corpus = false;
  bool nmf = false;
  bool kmeans = false;
};

std::map<std::string, std::map<std::string, Setter>> key_table(Seeds& seeds,
                                                              const std::filesystem::path& base) {
  auto path = [base](const Value& v) {
    std::filesystem::path p(v.text);
    return (p.is_relative() ? base / p : p).lexically_normal();
  };
  std::map<std::string, std::map<std::string, Setter>> t;
  t[""] = {
      {"seed", [](RunConfig& c, const Value& v) { c.seed = v.seed(); }},
      {"input_path", [path](RunConfig& c, const Value& v) { c.input_path = path(v); }},
      {"output_dir", [path](RunConfig& c, const Value& v) { c.output_dir = path(v); }},
      {"mode",
       [](RunConfig& c, const Value& v) {
         if (v.text == "all-days")
           c.mode = MatrixMode::kAllDays;
         else if (v.text == "split")
           c.mode = MatrixMode::kSplit;
         else
           v.bad("expected all-days or split");
       }},
  };
  t["corpus"] = {
      {"tz_offset_s", [](RunConfig& c, const Value& v) { c.corpus.tz_offset_s = v.integer(); }},
      {"sample_interval_s", [](RunConfig& c, const Value& v) { c.corpus.sample_interval_s = v.integer(); }},
      {"gps_noise_sigma_m", [](RunConfig& c, const Value& v) { c.corpus.gps_noise_sigma_m = v.real(); }},
      {"dropout_prob", [](RunConfig& c, const Value& v) { c.corpus.dropout_prob = v.real(); }},
      {"seed",
       [&seeds](RunConfig& c, const Value& v) {
         c.corpus.seed = v.seed();
         seeds.corpus = true;
       }},
      {"n_users", [](RunConfig& c, const Value& v) { c.corpus.n_users = static_cast<std::size_t>(v.count()); }},
      {"n_days", [](RunConfig& c, const Value& v) { c.corpus.n_days = v.count(); }},
      {"start_date", [](RunConfig& c, const Value& v) { c.corpus.start_day = v.date(); }},
      {"archetype_mix",
       [](RunConfig& c, const Value& v) {
         c.corpus.archetype_mix.clear();
         for (const auto& item : split_list(v.text)) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) v.bad("expected name:fraction pairs");
           const auto a = parse_archetype(trim(std::string_view(item).substr(0, colon)));
           if (!a) v.bad("unknown archetype");
           const Value frac{v.key, trim(std::string_view(item).substr(colon + 1))};
           c.corpus.archetype_mix.emplace_back(*a, frac.real());
         }
       }},
      {"bbox",
       [](RunConfig& c, const Value& v) {
         const auto parts = split_list(v.text);
         if (parts.size() != 4) v.bad("expected min_lat,min_lon,max_lat,max_lon");
         std::array<double, 4> x{};
         for (std::size_t i = 0; i < 4; ++i) x[i] = Value{v.key, parts[i]}.real();
         c.corpus.region = {x[0], x[1], x[2], x[3]};
       }},
  };
  t["staypoint"] = {
      {"max_radius_m", [](RunConfig& c, const Value& v) { c.staypoint.max_radius_m = v.real(); }},
      {"min_duration_s", [](RunConfig& c, const Value& v) { c.staypoint.min_duration_s = v.integer(); }},
      {"speed_sigma_mult", [](RunConfig& c, const Value& v) { c.staypoint.speed_sigma_mult = v.real(); }},
  };
  t["dbscan"] = {
      {"eps_m", [](RunConfig& c, const Value& v) { c.dbscan.eps_m = v.real(); }},
      {"min_pts", [](RunConfig& c, const Value& v) { c.dbscan.min_pts = static_cast<std::size_t>(v.count()); }},
  };
  t["places"] = {
      {"night_window", [](RunConfig& c, const Value& v) { c.places.night_window = v.window(); }},
      {"day_window", [](RunConfig& c, const Value& v) { c.places.day_window = v.window(); }},
      {"min_candidate_duration_s",
       [](RunConfig& c, const Value& v) { c.places.min_candidate_duration_s = v.integer(); }},
      {"min_candidate_days", [](RunConfig& c, const Value& v) { c.places.min_candidate_days = v.count(); }},
      {"workdays",
       [](RunConfig& c, const Value& v) {
         static constexpr std::array<std::string_view, 7> names{"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
         c.places.calendar.workdays.fill(false);
         for (const auto& item : split_list(v.text)) {
           const auto it = std::find(names.begin(), names.end(), item);
           if (it == names.end()) v.bad("expected weekday names sun..sat");
           c.places.calendar.workdays[it - names.begin()] = true;
         }
       }},
      {"excluded_dates",
       [](RunConfig& c, const Value& v) {
         auto& dates = c.places.calendar.excluded_dates;
         dates.clear();
         for (const auto& item : split_list(v.text)) dates.push_back(Value{v.key, item}.date());
         std::sort(dates.begin(), dates.end());
         dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
       }},
  };
  t["lifegraph"] = {
      {"empty_day_policy",
       [](RunConfig& c, const Value& v) {
         if (v.text == "skip")
           c.lifegraph.empty_day_policy = EmptyDayPolicy::kSkip;
         else if (v.text == "label-u")
           c.lifegraph.empty_day_policy = EmptyDayPolicy::kLabelU;
         else
           v.bad("expected skip or label-u");
       }},
      {"distinct_others", [](RunConfig& c, const Value& v) { c.lifegraph.distinct_others = v.count(); }},
  };
  t["nmf"] = {
      {"rank", [](RunConfig& c, const Value& v) { c.nmf.rank = v.count(); }},
      {"max_iters", [](RunConfig& c, const Value& v) { c.nmf.max_iters = v.count(); }},
      {"rel_tol", [](RunConfig& c, const Value& v) { c.nmf.rel_tol = v.real(); }},
      {"epsilon", [](RunConfig& c, const Value& v) { c.nmf.epsilon = v.real(); }},
      {"inner_iters", [](RunConfig& c, const Value& v) { c.nmf.inner_iters = v.count(); }},
      {"seed",
       [&seeds](RunConfig& c, const Value& v) {
         c.nmf.seed = v.seed();
         seeds.nmf = true;
       }},
  };
  t["kmeans"] = {
      {"k", [](RunConfig& c, const Value& v) { c.kmeans.k = v.count(); }},
      {"n_restarts", [](RunConfig& c, const Value& v) { c.kmeans.n_restarts = v.count(); }},
      {"max_iters", [](RunConfig& c, const Value& v) { c.kmeans.max_iters = v.count(); }},
      {"seed",
       [&seeds](RunConfig& c, const Value& v) {
         c.kmeans.seed = v.seed();
         seeds.kmeans = true;
       }},
  };
  t["analysis"] = {
      {"display_threshold", [](RunConfig& c, const Value& v) { c.analysis.display_threshold = v.real(); }},
      {"cell_size_m", [](RunConfig& c, const Value& v) { c.analysis.grid.cell_size_m = v.real(); }},
      {"min_cell_population",
       [](RunConfig& c, const Value& v) {
         c.analysis.grid.min_cell_population = static_cast<std::size_t>(v.count());
       }},
      {"elbow_k_max", [](RunConfig& c, const Value& v) { c.analysis.elbow_k_max = v.count(); }},
      {"strong_pattern_threshold",
       [](RunConfig& c, const Value& v) { c.analysis.strong_pattern_threshold = v.real(); }},
      {"rank_scan_max", [](RunConfig& c, const Value& v) { c.analysis.rank_scan_max = v.count(); }},
  };
  return t;
}

}  // namespace

void RunConfig::validate() const {
  corpus.validate();
  staypoint.validate();
  dbscan.validate();
  places.validate();
  if (lifegraph.distinct_others < 0 || lifegraph.distinct_others > kMaxDistinctOthers)
    throw ConfigError(fmt::format("lifegraph.distinct_others must lie in [0, {}]", kMaxDistinctOthers));
  nmf.validate();
  kmeans.validate();
  if (!(analysis.display_threshold >= 0.0 && analysis.display_threshold <= 1.0))
    throw ConfigError("analysis.display_threshold must lie in [0, 1]");
  if (!(analysis.grid.cell_size_m > 0.0)) throw ConfigError("analysis.cell_size_m must be > 0");
  if (analysis.elbow_k_max < 1) throw ConfigError("analysis.elbow_k_max must be >= 1");
  if (analysis.rank_scan_max < 1) throw ConfigError("analysis.rank_scan_max must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax: {} (line {})", e.message(), e.line()));
  }
  RunConfig cfg;
  cfg.output_dir = (base_dir / cfg.output_dir).lexically_normal();
  Seeds seeds;
  const auto table = key_table(seeds, base_dir);

  // Top-level keys first so the global seed is known before sections.
  for (const auto& [name, node] : tree) {
    if (!node.empty() || (!name.empty() && table.contains(name))) {
      if (!table.contains(name) || name.empty()) throw ConfigError(fmt::format("unknown section [{}]", name));
      continue;
    }
    const auto& top = table.at("");
    const auto it = top.find(name);
    if (it == top.end()) throw ConfigError(fmt::format("unknown key {}", name));
    it->second(cfg, Value{name, trim(node.data())});
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) continue;
    const auto& section = table.at(name);
    for (const auto& [key, leaf] : node) {
      const auto it = section.find(key);
      if (it == section.end()) throw ConfigError(fmt::format("unknown key [{}] {}", name, key));
      it->second(cfg, Value{fmt::format("{}.{}", name, key), trim(leaf.data())});
    }
  }
  if (!seeds.corpus) cfg.corpus.seed = derive_seed(cfg.seed, "corpus");
  if (!seeds.nmf) cfg.nmf.seed = derive_seed(cfg.seed, "nmf");
  if (!seeds.kmeans) cfg.kmeans.seed = derive_seed(cfg.seed, "kmeans");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  return parse_config(in, path.parent_path());
}

nlohmann::ordered_json config_snapshot(const RunConfig& c) {
  auto window = [](const ClockWindow& w) {
    return fmt::format("{:02}:{:02}-{:02}:{:02}", w.start_s / 3600, w.start_s / 60 % 60, w.end_s / 3600,
                       w.end_s / 60 % 60);
  };
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["input_path"] = c.gps_path().string();
  j["output_dir"] = c.output_dir.string();
  j["mode"] = c.mode == MatrixMode::kSplit ? "split" : "all-days";

  auto& corpus = j["corpus"];
  corpus["tz_offset_s"] = c.corpus.tz_offset_s;
  corpus["sample_interval_s"] = c.corpus.sample_interval_s;
  corpus["gps_noise_sigma_m"] = c.corpus.gps_noise_sigma_m;
  corpus["dropout_prob"] = c.corpus.dropout_prob;
  corpus["seed"] = c.corpus.seed;
  corpus["n_users"] = c.corpus.n_users;
  corpus["n_days"] = c.corpus.n_days;
  corpus["start_date"] = format_date(c.corpus.start_day);
  std::vector<std::string> mix;
  for (const auto& [a, f] : c.corpus.effective_mix()) mix.push_back(fmt::format("{}:{}", archetype_name(a), f));
  corpus["archetype_mix"] = mix;
  corpus["bbox"] = {c.corpus.region.min_lat, c.corpus.region.min_lon, c.corpus.region.max_lat,
                    c.corpus.region.max_lon};

  j["staypoint"] = {{"max_radius_m", c.staypoint.max_radius_m},
                    {"min_duration_s", c.staypoint.min_duration_s},
                    {"speed_sigma_mult", c.staypoint.speed_sigma_mult}};
  j["dbscan"] = {{"eps_m", c.dbscan.eps_m}, {"min_pts", c.dbscan.min_pts}};
  std::vector<std::string> excluded;
  for (auto d : c.places.calendar.excluded_dates) excluded.push_back(format_date(d));
  std::vector<bool> workdays(c.places.calendar.workdays.begin(), c.places.calendar.workdays.end());
  j["places"] = {{"night_window", window(c.places.night_window)},
                 {"day_window", window(c.places.day_window)},
                 {"min_candidate_duration_s", c.places.min_candidate_duration_s},
                 {"min_candidate_days", c.places.min_candidate_days},
                 {"workdays_sun_first", workdays},
                 {"excluded_dates", excluded}};
  j["lifegraph"] = {
      {"empty_day_policy", c.lifegraph.empty_day_policy == EmptyDayPolicy::kSkip ? "skip" : "label-u"},
      {"distinct_others", c.lifegraph.distinct_others}};
  j["nmf"] = {{"rank", c.nmf.rank},       {"max_iters", c.nmf.max_iters},     {"rel_tol", c.nmf.rel_tol},
              {"epsilon", c.nmf.epsilon}, {"inner_iters", c.nmf.inner_iters}, {"seed", c.nmf.seed}};
  j["kmeans"] = {{"k", c.kmeans.k},
                 {"n_restarts", c.kmeans.n_restarts},
                 {"max_iters", c.kmeans.max_iters},
                 {"seed", c.kmeans.seed}};
  j["analysis"] = {{"display_threshold", c.analysis.display_threshold},
                   {"cell_size_m", c.analysis.grid.cell_size_m},
                   {"min_cell_population", c.analysis.grid.min_cell_population},
                   {"stddev_divisor", "population"},
                   {"elbow_k_max", c.analysis.elbow_k_max},
                   {"strong_pattern_threshold", c.analysis.strong_pattern_threshold},
                   {"rank_scan_max", c.analysis.rank_scan_max}};
  return j;
}

}  // namespace lifepattern
