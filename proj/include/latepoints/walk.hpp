#pragma once

// Seeded simple random walk on the n x n torus, started at the origin,
// recording the first time every site is occupied.
//
// Time conventions: the origin is occupied at time 0; step t moves the walker
// and the site it lands on is occupied at time t.  Observers are invoked with
// (0, origin) before the first step and with (t, position) after every step,
// in the order they are passed.  They cannot modify the walk.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "latepoints/lattice.hpp"
#include "latepoints/rng.hpp"

namespace latepoints {

inline constexpr std::uint64_t kUnvisited = std::numeric_limits<std::uint64_t>::max();

struct WalkConfig {
  std::int32_t n = 1;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> max_steps;

  void validate() const {
    if (n < 1) throw std::invalid_argument("torus side n must be >= 1");
  }
};

struct FirstHitField {
  std::int32_t n = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> hits;
  std::uint64_t walk_length = 0;
  bool covered = false;

  std::uint64_t at(Point p) const { return hits[site_index(n, p)]; }

  std::size_t visited_count() const {
    return static_cast<std::size_t>(
        std::count_if(hits.begin(), hits.end(), [](auto h) { return h != kUnvisited; }));
  }

  /// Largest finite entry; equals the cover time when covered.
  std::uint64_t max_finite() const {
    std::uint64_t m = 0;
    for (auto h : hits)
      if (h != kUnvisited) m = std::max(m, h);
    return m;
  }

  /// Field as it stood at time t <= walk_length.
  FirstHitField truncated(std::uint64_t t) const {
    FirstHitField f = *this;
    f.walk_length = std::min(t, walk_length);
    for (auto& h : f.hits)
      if (h != kUnvisited && h > f.walk_length) h = kUnvisited;
    f.covered = std::none_of(f.hits.begin(), f.hits.end(), [](auto h) { return h == kUnvisited; });
    return f;
  }

  friend bool operator==(const FirstHitField&, const FirstHitField&) = default;
};

class BudgetExhausted : public std::runtime_error {
 public:
  explicit BudgetExhausted(FirstHitField partial)
      : std::runtime_error("step budget exhausted before cover (" +
                           std::to_string(partial.walk_length) + " steps)"),
        partial_(std::move(partial)) {}

  const FirstHitField& partial() const noexcept { return partial_; }

 private:
  FirstHitField partial_;
};

template <class F>
concept StepObserver = requires(F& f, std::uint64_t t, Point p) { f(t, p); };

/// Walker state: position, clock and the first-hit table.
class TorusWalk {
 public:
  explicit TorusWalk(const WalkConfig& cfg) : dirs_(cfg.seed) {
    cfg.validate();
    field_.n = cfg.n;
    field_.seed = cfg.seed;
    field_.hits.assign(static_cast<std::size_t>(cfg.n) * static_cast<std::size_t>(cfg.n),
                       kUnvisited);
    field_.hits[0] = 0;
    unvisited_ = field_.hits.size() - 1;
    field_.covered = unvisited_ == 0;
  }

  Point position() const { return pos_; }
  std::uint64_t time() const { return field_.walk_length; }
  std::size_t unvisited() const { return unvisited_; }
  const FirstHitField& field() const& { return field_; }
  FirstHitField field() && { return std::move(field_); }

  template <StepObserver... Obs>
  void start(Obs&... obs) {
    (obs(std::uint64_t{0}, pos_), ...);
  }

  template <StepObserver... Obs>
  void step(Obs&... obs) {
    pos_ = next_position(field_.n, pos_, dirs_.next());
    const std::uint64_t t = ++field_.walk_length;
    std::uint64_t& h = field_.hits[site_index(field_.n, pos_)];
    if (h == kUnvisited) {
      h = t;
      if (--unvisited_ == 0) field_.covered = true;
    }
    (obs(t, pos_), ...);
  }

 private:
  FirstHitField field_;
  rng::DirectionStream dirs_;
  Point pos_{};
  std::size_t unvisited_ = 0;
};

/// Walk until every site is visited.  walk_length is then the cover time.
template <StepObserver... Obs>
FirstHitField run_to_cover(const WalkConfig& cfg, Obs&... obs) {
  TorusWalk w(cfg);
  w.start(obs...);
  const std::uint64_t budget = cfg.max_steps.value_or(kUnvisited);
  while (w.unvisited() != 0) {
    if (w.time() >= budget) throw BudgetExhausted(std::move(w).field());
    w.step(obs...);
  }
  return std::move(w).field();
}

/// Walk exactly t steps.
template <StepObserver... Obs>
FirstHitField run_to_time(const WalkConfig& cfg, std::uint64_t t, Obs&... obs) {
  TorusWalk w(cfg);
  w.start(obs...);
  while (w.time() < t) w.step(obs...);
  return std::move(w).field();
}

}  // namespace latepoints
