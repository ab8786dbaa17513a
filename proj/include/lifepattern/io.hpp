#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lifepattern::io {

/// Shortest round-trip decimal representation.
std::string fmt_double(double v);

std::vector<std::string_view> split_csv_line(std::string_view line);

double parse_double(std::string_view field);
long long parse_int(std::string_view field);

/// Writes through a temporary sibling file and renames it into place.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

/// Reads a CSV file, checks the header exactly, and calls `row` per data line.
/// Throws MissingArtifactError when the file does not exist.
void read_csv(const std::filesystem::path& path, std::string_view expected_header,
              const std::function<void(const std::vector<std::string_view>&)>& row);

}  // namespace lifepattern::io
