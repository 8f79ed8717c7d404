#pragma once

#include <compare>
#include <cmath>
#include <cstdint>
#include <cstdlib>

namespace latepoints {

struct Point {
  std::int32_t x = 0;
  std::int32_t y = 0;

  friend constexpr auto operator<=>(const Point&, const Point&) = default;
};

/// Minimal wrapped offset of a coordinate difference on Z_n.
constexpr std::int64_t wrap_delta(std::int64_t d, std::int64_t n) {
  d %= n;
  if (d < 0) d += n;
  return d > n - d ? n - d : d;
}

/// Squared torus distance (exact integer).
constexpr std::int64_t torus_dist2(std::int64_t n, Point a, Point b) {
  const std::int64_t dx = wrap_delta(std::int64_t{a.x} - b.x, n);
  const std::int64_t dy = wrap_delta(std::int64_t{a.y} - b.y, n);
  return dx * dx + dy * dy;
}

inline double torus_distance(std::int64_t n, Point a, Point b) {
  return std::sqrt(static_cast<double>(torus_dist2(n, a, b)));
}

/// Row-major site index: row y, column x.
constexpr std::size_t site_index(std::int64_t n, Point p) {
  return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(n) +
         static_cast<std::size_t>(p.x);
}

constexpr Point site_point(std::int64_t n, std::size_t idx) {
  return {static_cast<std::int32_t>(idx % static_cast<std::size_t>(n)),
          static_cast<std::int32_t>(idx / static_cast<std::size_t>(n))};
}

enum class Direction : unsigned { plus_x = 0, minus_x = 1, plus_y = 2, minus_y = 3 };

/// One nearest-neighbour step on Z_n^2.
constexpr Point next_position(std::int32_t n, Point p, Direction d) {
  switch (d) {
    case Direction::plus_x: p.x = (p.x + 1 == n) ? 0 : p.x + 1; break;
    case Direction::minus_x: p.x = (p.x == 0) ? n - 1 : p.x - 1; break;
    case Direction::plus_y: p.y = (p.y + 1 == n) ? 0 : p.y + 1; break;
    case Direction::minus_y: p.y = (p.y == 0) ? n - 1 : p.y - 1; break;
  }
  return p;
}

constexpr Point next_position(std::int32_t n, Point p, unsigned nibble) {
  return next_position(n, p, static_cast<Direction>(nibble & 3u));
}

}  // namespace latepoints
