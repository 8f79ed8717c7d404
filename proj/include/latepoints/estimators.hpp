#pragma once

// Late sets and the counting statistics built on them: disc counts around a
// fixed or late-point center, ordered pair counts at a distance scale, seed
// summaries and log-log exponent fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "latepoints/lattice.hpp"
#include "latepoints/rng.hpp"
#include "latepoints/walk.hpp"

namespace latepoints::estimators {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InsufficientRun : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kCoverConstant = 4.0 / std::numbers::pi;

/// ceil(alpha * (4/pi) * (n ln n)^2).
inline std::uint64_t late_threshold(double alpha, std::int64_t n) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be > 0");
  if (n < 2) throw DomainError("late_threshold needs n >= 2");
  const double nl = static_cast<double>(n) * std::log(static_cast<double>(n));
  return static_cast<std::uint64_t>(std::ceil(alpha * kCoverConstant * nl * nl));
}

/// T / (n ln n)^2.
inline double cover_ratio(std::uint64_t t, std::int64_t n) {
  const double nl = static_cast<double>(n) * std::log(static_cast<double>(n));
  return static_cast<double>(t) / (nl * nl);
}

struct LateSet {
  std::int32_t n = 0;
  double alpha = 0.0;
  std::uint64_t threshold = 0;
  std::vector<Point> points;  // sorted by (x, y)

  std::size_t size() const { return points.size(); }
  bool contains(Point p) const { return std::binary_search(points.begin(), points.end(), p); }
};

/// Sites whose first hit is at or after the threshold; sites never visited
/// count provided the run reached the threshold.
inline LateSet late_set(const FirstHitField& field, double alpha) {
  LateSet s;
  s.n = field.n;
  s.alpha = alpha;
  s.threshold = late_threshold(alpha, field.n);
  if (field.walk_length < s.threshold)
    throw InsufficientRun("walk length " + std::to_string(field.walk_length) +
                          " is below the late threshold " + std::to_string(s.threshold));
  for (std::size_t i = 0; i < field.hits.size(); ++i)
    if (field.hits[i] >= s.threshold) s.points.push_back(site_point(field.n, i));
  std::sort(s.points.begin(), s.points.end());
  return s;
}

inline LateSet make_late_set(std::int32_t n, std::vector<Point> points) {
  LateSet s;
  s.n = n;
  s.points = std::move(points);
  std::sort(s.points.begin(), s.points.end());
  return s;
}

inline void require_radius(const LateSet& s, double radius) {
  if (!(radius >= 0.0) || radius > s.n / 2.0)
    throw DomainError("radius " + std::to_string(radius) + " exceeds half the torus side " +
                      std::to_string(s.n));
}

/// |{y in set : d(center, y) < radius}|.
inline std::uint64_t disc_count(const LateSet& s, Point center, double radius) {
  require_radius(s, radius);
  const double r2 = radius * radius;
  std::uint64_t c = 0;
  for (const auto& p : s.points)
    if (static_cast<double>(torus_dist2(s.n, center, p)) < r2) ++c;
  return c;
}

/// Ordered pairs (x, y), diagonal included, with d(x, y) <= radius.
/// Cell-list bucketing with cell side >= radius.
inline std::uint64_t pair_count(const LateSet& s, double radius) {
  require_radius(s, radius);
  if (s.points.empty()) return 0;
  const auto r2 = static_cast<std::int64_t>(std::floor(radius * radius));
  const std::int64_t n = s.n;
  const std::int64_t cells =
      radius < 1.0 ? n : std::max<std::int64_t>(1, static_cast<std::int64_t>(n / std::ceil(radius)));
  // cell side n / cells >= radius
  const auto cell_of = [&](std::int64_t c) { return c * cells / n; };

  std::vector<std::vector<Point>> grid(static_cast<std::size_t>(cells * cells));
  for (const auto& p : s.points)
    grid[static_cast<std::size_t>(cell_of(p.y) * cells + cell_of(p.x))].push_back(p);

  std::vector<std::int64_t> offsets;
  for (std::int64_t d = -1; d <= 1; ++d) {
    const std::int64_t o = ((d % cells) + cells) % cells;
    if (std::find(offsets.begin(), offsets.end(), o) == offsets.end()) offsets.push_back(o);
  }

  std::uint64_t total = 0;
  for (std::int64_t cy = 0; cy < cells; ++cy)
    for (std::int64_t cx = 0; cx < cells; ++cx) {
      const auto& here = grid[static_cast<std::size_t>(cy * cells + cx)];
      if (here.empty()) continue;
      for (auto oy : offsets)
        for (auto ox : offsets) {
          const auto& there =
              grid[static_cast<std::size_t>(((cy + oy) % cells) * cells + (cx + ox) % cells)];
          for (const auto& a : here)
            for (const auto& b : there)
              if (torus_dist2(n, a, b) <= r2) ++total;
        }
    }
  return total;
}

/// Uniform late point drawn from the run's late-sample lane.
inline Point sample_late_point(const LateSet& s, std::uint64_t seed, std::uint64_t draw = 0) {
  if (s.points.empty()) throw DomainError("cannot sample from an empty late set");
  rng::Stream st(seed, static_cast<std::uint64_t>(rng::Lane::late_sample) + (draw << 8));
  return s.points[static_cast<std::size_t>(st.below(s.points.size()))];
}

// ---------------------------------------------------------------------------

struct SeedSummary {
  std::vector<double> values;
  double median = 0.0;  // lower median
  double mean = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Order statistic at rank floor(q * (k - 1)).
inline double order_stat(const std::vector<double>& sorted, double q) {
  const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
  return sorted[i];
}

inline SeedSummary summarize(std::span<const double> values) {
  if (values.empty()) throw DomainError("summarize needs at least one value");
  SeedSummary s;
  s.values.assign(values.begin(), values.end());
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  s.median = order_stat(sorted, 0.5);
  s.q1 = order_stat(sorted, 0.25);
  s.q3 = order_stat(sorted, 0.75);
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(sorted.size());
  return s;
}

inline SeedSummary summarize(std::initializer_list<double> values) {
  return summarize(std::span<const double>(values.begin(), values.size()));
}

// ---------------------------------------------------------------------------

struct ExponentFit {
  std::vector<std::pair<double, double>> samples;  // (ln n, ln statistic)
  std::vector<double> excluded_n;                  // sizes dropped for a zero statistic
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;    // root mean square of the fit residuals
  double halfwidth = 0.0;   // 95% confidence halfwidth of the slope
};

/// Least-squares slope of ln(statistic) against ln(n).  Non-positive
/// statistics are excluded and listed in `excluded_n`.
inline ExponentFit exponent_fit(std::span<const std::pair<double, double>> points) {
  ExponentFit fit;
  for (const auto& [n, stat] : points) {
    if (!(n > 0.0)) throw DomainError("exponent_fit needs n > 0");
    if (stat > 0.0) fit.samples.emplace_back(std::log(n), std::log(stat));
    else fit.excluded_n.push_back(n);
  }
  const auto k = fit.samples.size();
  if (k < 3) throw DomainError("exponent_fit needs at least 3 positive samples");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : fit.samples) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : fit.samples) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 1e-12)) throw DomainError("exponent_fit is degenerate: all n equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : fit.samples) {
    const double e = y - (fit.intercept + fit.slope * x);
    sse += e * e;
  }
  fit.residual = std::sqrt(sse / static_cast<double>(k));
  const double dof = static_cast<double>(k) - 2.0;
  const double se = std::sqrt(sse / dof / sxx);
  const boost::math::students_t t(dof);
  fit.halfwidth = boost::math::quantile(boost::math::complement(t, 0.025)) * se;
  return fit;
}

inline ExponentFit exponent_fit(std::initializer_list<std::pair<double, double>> points) {
  return exponent_fit(std::span<const std::pair<double, double>>(points.begin(), points.size()));
}

}  // namespace latepoints::estimators
