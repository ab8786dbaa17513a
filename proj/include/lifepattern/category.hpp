#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace lifepattern {

/// Semantic category of a significant place. U marks hours with no
/// significant-place dwell. Declaration order is the canonical label order.
enum class Category : std::uint8_t { H, W, N, D, O, U };

inline constexpr std::array kPlaceCategories{Category::H, Category::W, Category::N, Category::D,
                                             Category::O};
inline constexpr std::array kAllCategories{Category::H, Category::W, Category::N,
                                           Category::D, Category::O, Category::U};

constexpr char category_code(Category c) {
  constexpr std::array<char, 6> codes{'H', 'W', 'N', 'D', 'O', 'U'};
  return codes[static_cast<std::size_t>(c)];
}

constexpr std::optional<Category> parse_category(char c) {
  for (auto cat : kAllCategories)
    if (category_code(cat) == c) return cat;
  return std::nullopt;
}

constexpr std::optional<Category> parse_category(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  return parse_category(s.front());
}

}  // namespace lifepattern
