#include "lifepattern/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "lifepattern/errors.hpp"

namespace lifepattern::io {

std::string fmt_double(double v) { return fmt::format("{}", v); }

std::vector<std::string_view> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(std::string_view field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw InputError(fmt::format("not a number: '{}'", field));
  return v;
}

long long parse_int(std::string_view field) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw InputError(fmt::format("not an integer: '{}'", field));
  return v;
}

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("write failed: {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

void read_csv(const std::filesystem::path& path, std::string_view expected_header,
              const std::function<void(const std::vector<std::string_view>&)>& row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(fmt::format("missing artifact: {}", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw InputError(fmt::format("{}: empty file", path.string()));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw InputError(fmt::format("{}: expected header '{}'", path.string(), expected_header));
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    row(split_csv_line(line));
  }
}

}  // namespace lifepattern::io
