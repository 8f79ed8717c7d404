#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <tuple>
#include <vector>

#include "brute_force.hpp"
#include "latepoints/excursions.hpp"

using namespace latepoints;
using namespace latepoints::excursions;
using Catch::Approx;

namespace {

// Straight path along +x from `c` through the listed distances, one lattice step at a time.
std::vector<Point> radial_path(std::int32_t n, Point c, const std::vector<int>& stops) {
  std::vector<Point> path{c};
  int d = 0;
  for (int target : stops) {
    while (d != target) {
      d += target > d ? 1 : -1;
      path.push_back({(c.x + d) % n, c.y});
    }
  }
  return path;
}

std::vector<CrossingEvent> run_machine(std::int32_t n, Point c, const RadiiSchedule& s,
                                       const std::vector<Point>& path) {
  CrossingMachine m(n, c, s, true);
  for (std::size_t t = 0; t < path.size(); ++t) m(t, path[t]);
  return m.log();
}

std::vector<Point> random_path(std::int32_t n, std::uint64_t seed, std::uint64_t steps) {
  std::vector<Point> path;
  auto rec = [&](std::uint64_t, Point p) { path.push_back(p); };
  run_to_time(WalkConfig{n, seed, {}}, steps, rec);
  return path;
}

// Per-level replay: classify each position as inside r_{l-1}, outside r_l or
// in between, and emit on every change between the two definite states.
std::vector<CrossingEvent> offline_events(std::int32_t n, Point c, const RadiiSchedule& s,
                                          const std::vector<Point>& path) {
  std::vector<CrossingEvent> ev;
  for (std::size_t t = 0; t < path.size(); ++t)
    if (torus_dist2(n, c, path[t]) == 0) ev.push_back({t, EventKind::center_visit, 0});
  for (int l = 1; l <= s.top(); ++l) {
    const double in2 = s.radius(l - 1) * s.radius(l - 1);
    const double out2 = s.radius(l) * s.radius(l);
    int state = 0;  // -1 inner, +1 outer
    for (std::size_t t = 0; t < path.size(); ++t) {
      const auto d2 = static_cast<double>(torus_dist2(n, c, path[t]));
      const int now = d2 < in2 ? -1 : (d2 >= out2 ? 1 : 0);
      if (now == 0) continue;
      if (state != 0 && now != state)
        ev.push_back({t, now == 1 ? EventKind::up : EventKind::down, l});
      state = now;
    }
  }
  return ev;
}

auto event_key(const CrossingEvent& e) {
  return std::make_tuple(e.time, static_cast<int>(e.kind), e.level);
}

void sort_events(std::vector<CrossingEvent>& v) {
  std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return event_key(a) < event_key(b); });
}

}  // namespace

TEST_CASE("schedules", "[excursions]") {
  const auto g = RadiiSchedule::geometric_for_torus(512);
  CHECK(g.top() == 6);
  for (int k = 0; k <= g.top(); ++k) CHECK(g.radius(k) == 4.0 * std::pow(2.0, k));
  CHECK(g.fits_torus(512));
  CHECK_FALSE(RadiiSchedule::geometric(4, 2, 7).fits_torus(512));
  CHECK_THROWS_AS(RadiiSchedule::geometric_for_torus(15), DomainError);

  const auto f = RadiiSchedule::factorial(40);
  CHECK(f.radius(0) == 0.0);
  CHECK(f.radius(3) == 216.0);
  CHECK(f.radius(5) == 1728000.0);
  for (int k = 1; k < 40; ++k) CHECK(f.log_radius(k + 1) > f.log_radius(k));
  for (int k = 2; k < 40; ++k) CHECK(f.log_ratio(k + 1, k) >= f.log_ratio(k, k - 1));
  CHECK(std::isfinite(f.log_radius(40)));
}

TEST_CASE("targets", "[excursions]") {
  CHECK(n_target(1.0, 3) == Approx(29.6625).margin(1e-4));
  CHECK(n_target(1.0, 3) == Approx(27.0 * std::log(3.0)));
  for (int k = 2; k < 30; ++k) CHECK(n_target(1.4, k) == Approx(2 * n_target(0.7, k)).epsilon(1e-15));
  CHECK_THROWS_AS(n_target(1.0, 1), DomainError);
  CHECK_THROWS_AS(n_target(0.0, 3), DomainError);

  const double a = 0.8, b = 0.5;
  for (double g : {0.3, 1.0, 1.5}) {
    CHECK(n_hat(a, g, b, 20, 20) == Approx(n_target(a, 20)).epsilon(1e-12));
    CHECK(n_hat(a, g, b, 20, 10) == Approx(g * g * n_target(a, 10)).epsilon(1e-12));
  }
  for (int k = 10; k <= 20; ++k) CHECK(n_hat(a, 1.0, b, 20, k) == Approx(n_target(a, k)).epsilon(1e-12));
  CHECK_THROWS_AS(n_hat(a, 2.0, b, 20, 15), DomainError);
  CHECK_THROWS_AS(n_hat(a, 1.0, b, 20, 9), DomainError);
}

TEST_CASE("radial path crosses each lower level once", "[excursions]") {
  const std::int32_t n = 512;
  const Point c{256, 256};
  const auto s = RadiiSchedule::geometric_for_torus(n);
  for (int l = 1; l <= s.top(); ++l) {
    const auto path = radial_path(n, c, {static_cast<int>(s.radius(l))});
    CrossingMachine m(n, c, s, true);
    for (std::size_t t = 0; t < path.size(); ++t) m(t, path[t]);
    for (int j = 1; j <= s.top(); ++j) CHECK(m.up_count(j) == (j <= l ? 1u : 0u));
    CHECK(m.center_visits() == 1);
  }
}

TEST_CASE("oscillation below the outer radius never completes", "[excursions]") {
  const std::int32_t n = 512;
  const Point c{256, 256};
  const auto s = RadiiSchedule::geometric_for_torus(n);
  const int l = 3;
  const int in = static_cast<int>(s.radius(l - 1)) - 1, out = static_cast<int>(s.radius(l)) - 1;
  std::vector<int> stops;
  for (int i = 0; i < 20; ++i) {
    stops.push_back(out);
    stops.push_back(in);
  }
  const auto path = radial_path(n, c, stops);
  CrossingMachine m(n, c, s);
  for (std::size_t t = 0; t < path.size(); ++t) m(t, path[t]);
  CHECK(m.up_count(l) == 0);
  // never back inside r_{l-2}, so level l-1 only counts the first outward pass
  CHECK(m.up_count(l - 1) == 1);
}

TEST_CASE("online events equal the offline replay", "[excursions]") {
  const std::int32_t n = 96;
  const auto s = RadiiSchedule::geometric(2.0, 2.0, 4);
  const auto path = random_path(n, 4242, 100000);
  for (Point c : {Point{0, 0}, Point{17, 80}, Point{48, 48}}) {
    auto online = run_machine(n, c, s, path);
    auto offline = offline_events(n, c, s, path);
    CHECK(online.size() > 100);
    sort_events(online);
    sort_events(offline);
    CHECK(online == offline);
  }
}

TEST_CASE("events alternate and excursions nest", "[excursions]") {
  const std::int32_t n = 64;
  const Point c{5, 9};
  const auto s = RadiiSchedule::geometric(2.0, 2.0, 4);
  const auto path = random_path(n, 777, 100000);
  const auto log = run_machine(n, c, s, path);

  for (int l = 1; l <= s.top(); ++l) {
    int last = 0;
    for (const auto& e : log) {
      if (e.level != l || e.kind == EventKind::center_visit) continue;
      const int k = e.kind == EventKind::up ? 1 : -1;
      CHECK(k != last);
      last = k;
    }
  }

  // A level-(l+1) excursion that dips inside r_{l-1} contains a level-l one.
  for (int l = 1; l < s.top(); ++l) {
    const double in2 = s.radius2(l - 1);
    bool open = false, dipped = false, inner_done = false;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < path.size(); ++t) {
      if (open && static_cast<double>(torus_dist2(n, c, path[t])) < in2) dipped = true;
      for (; idx < log.size() && log[idx].time == t; ++idx) {
        const auto& e = log[idx];
        if (e.kind == EventKind::up && e.level == l && open && dipped) inner_done = true;
        if (e.kind == EventKind::down && e.level == l + 1) {
          open = true;
          dipped = false;
          inner_done = false;
        }
        if (e.kind == EventKind::up && e.level == l + 1 && open) {
          if (dipped) CHECK(inner_done);
          open = false;
        }
      }
    }
  }
}

TEST_CASE("ledger counts agree with the event log", "[excursions]") {
  const std::int32_t n = 64;
  const Point c{40, 21};
  const auto s = RadiiSchedule::geometric(2.0, 2.0, 4);
  std::vector<double> targets(5, std::numeric_limits<double>::quiet_NaN());
  targets[1] = 300.5;
  targets[2] = 120.0;
  targets[3] = 40.2;
  targets[4] = 9.0;
  LedgerRecorder rec(n, c, s, targets, true);
  TorusWalk w(WalkConfig{n, 99, {}});
  w.start(rec);
  while (!rec.done()) w.step(rec);
  const auto& L = rec.ledger();
  const auto& log = rec.machine().log();

  CHECK_FALSE(L.complete(0));
  CHECK_THROWS_AS(L.R(0), IncompleteLedger);
  for (int k = 1; k <= 4; ++k) {
    REQUIRE(L.complete(k));
    CHECK(L.N(k, k) == static_cast<std::uint64_t>(std::ceil(targets[static_cast<std::size_t>(k)])));
    for (int l = 0; l <= 4; ++l) {
      std::uint64_t expect = 0;
      for (const auto& e : log) {
        if (e.time > L.R(k)) break;
        if (l == 0 ? e.kind == EventKind::center_visit : (e.kind == EventKind::up && e.level == l))
          ++expect;
      }
      CHECK(L.N(k, l) == expect);
    }
  }

  const nlohmann::json j = L;
  CHECK(j["levels"].size() == 5);
  CHECK(j["levels"][0]["completion_time"].is_null());
  CHECK(j["levels"][2]["completion_time"] == L.R(2));
  CHECK(j["schedule"]["radii"][4] == 32.0);
}

TEST_CASE("record_ledger stops at the budget", "[excursions]") {
  const auto s = RadiiSchedule::geometric(2.0, 2.0, 3);
  std::vector<double> targets(4, std::numeric_limits<double>::quiet_NaN());
  targets[3] = 1e9;
  const auto L = record_ledger(WalkConfig{32, 1, {}}, {3, 3}, s, targets, 2000);
  CHECK_FALSE(L.complete(3));
  CHECK_THROWS_AS(L.N(3, 1), IncompleteLedger);
}

TEST_CASE("histories", "[excursions]") {
  const std::int32_t n = 512;
  const Point c{256, 256};
  const auto s = RadiiSchedule::geometric_for_torus(n);
  const auto r = [&](int k) { return static_cast<int>(s.radius(k)); };

  const auto fig = run_machine(n, c, s, radial_path(n, c, {r(4), r(2) - 1, r(3), r(1) - 1, r(5)}));
  const auto h = history_of(fig, 1, 5);
  CHECK(h.levels == std::vector<int>{4, 3, 2, 3, 2, 1, 2, 3, 4, 5});
  CHECK(std::is_sorted(h.times.begin(), h.times.end()));
  CHECK(up_crossings(h.levels, 1, 5) == std::vector<std::uint64_t>{1, 2, 1, 1});
  // sequence length is 2 * sum(m) with the leading start entry
  HistoryVector hv{2, {1, 2, 1, 1}};
  CHECK(h.levels.size() == hv.moves() + 1);

  const auto straight = run_machine(n, c, s, radial_path(n, c, {r(5)}));
  CHECK(history_of(straight, 0, 5).levels == std::vector<int>{4, 5});
  CHECK(history_of(straight, 2, 3).levels == std::vector<int>{2, 3});
  CHECK_THROWS_AS(history_of(straight, 3, 3), DomainError);
}

TEST_CASE("history up-crossings match the machine on random paths", "[excursions]") {
  const std::int32_t n = 128;
  const Point c{64, 64};
  const auto s = RadiiSchedule::geometric(2.0, 2.0, 5);
  const auto path = random_path(n, 31337, 100000);
  CrossingMachine m(n, c, s, true);
  for (std::size_t t = 0; t < path.size(); ++t) m(t, path[t]);
  const auto& log = m.log();

  for (auto [lo, hi] : {std::pair{1, 5}, std::pair{0, 4}, std::pair{2, 4}}) {
    const auto h = history_of(log, lo, hi);
    REQUIRE_FALSE(h.levels.empty());
    const auto u = up_crossings(h.levels, lo, hi);
    std::vector<std::uint64_t> expect(static_cast<std::size_t>(hi - lo), 0);
    for (const auto& e : log)
      if (e.kind == EventKind::up && e.level > lo && e.level <= hi && e.time > h.times.front())
        ++expect[static_cast<std::size_t>(e.level - lo - 1)];
    CHECK(u == expect);
    for (std::size_t j = 0; j + 1 < h.levels.size(); ++j) CHECK(std::abs(h.levels[j + 1] - h.levels[j]) == 1);
  }
}

TEST_CASE("history counts", "[excursions][combinatorics]") {
  CHECK(history_count({3, {1, 1, 1, 1}}) == 0.0);
  CHECK(std::exp(history_count({1, {2, 3}})) == Approx(6.0));
  CHECK(brute::enumerate_histories(1, {2, 3}) == 6);
  CHECK_THROWS_AS(history_count({1, {2, 0}}), DomainError);

  // every profile with up to 4 levels and counts up to 3
  std::size_t profiles = 0;
  for (int levels = 1; levels <= 4; ++levels) {
    std::vector<std::uint64_t> m(static_cast<std::size_t>(levels), 0);
    const int combos = static_cast<int>(std::pow(4, levels));
    for (int code = 0; code < combos; ++code) {
      int x = code;
      for (auto& v : m) {
        v = static_cast<std::uint64_t>(x % 4);
        x /= 4;
      }
      if (m.back() == 0) continue;
      const auto exhaustive = brute::enumerate_histories(2, m);
      const double lc = history_count({2, m});
      if (exhaustive == 0) {
        CHECK(lc == -std::numeric_limits<double>::infinity());
      } else {
        CHECK(std::llround(std::exp(lc)) == static_cast<long long>(exhaustive));
      }
      ++profiles;
    }
  }
  CHECK(profiles == 3 + 12 + 48 + 192);
}

TEST_CASE("crossing probabilities", "[excursions]") {
  const auto f = RadiiSchedule::factorial(1001);
  const auto p2 = crossing_probs(f, 2);
  CHECK(p2.p == Approx(std::log(3.0) / (std::log(3.0) + std::log(2.0))).epsilon(1e-14));
  CHECK(p2.p == Approx(0.61315).margin(1e-5));
  CHECK(p2.q == Approx(1.0).epsilon(1e-14));  // ln(r2/r1) / ln r2 with r1 = 1

  double worst = 0.0;
  for (int l = 2; l <= 1000; ++l) {
    const auto cp = crossing_probs(f, l);
    CHECK(cp.p > 0.0);
    CHECK(cp.p < 1.0);
    CHECK(cp.q > 0.0);
    CHECK(cp.q <= 1.0);
    worst = std::max(worst, std::abs(cp.p - 0.5) * l * std::log(static_cast<double>(l)));
  }
  CHECK(worst < 1.0);

  const auto g = RadiiSchedule::geometric(4.0, 2.0, 10);
  for (int l = 2; l <= 9; ++l) CHECK(crossing_probs(g, l).p == 0.5);
  CHECK_THROWS_AS(crossing_probs(g, 1), DomainError);
  CHECK_THROWS_AS(crossing_probs(g, 10), DomainError);
}


TEST_CASE("q_bar matches nested summation", "[excursions][combinatorics]") {
  struct Case {
    int n;
    double a, rho;
  };
  for (auto [n, a, rho] : {Case{5, 1.0, 0.8}, Case{8, 0.5, 0.7}, Case{10, 1.0, 0.7}, Case{12, 0.3, 0.75},
                           Case{6, 1.5, 0.5}}) {
    const int lo = static_cast<int>(std::ceil(rho * n));
    REQUIRE(n - lo <= 3);
    const double dp = q_bar(n, a, rho);
    const double nested = brute::q_bar(n, a, rho);
    CHECK(std::isfinite(dp));
    CHECK(std::abs(dp - nested) <= 1e-12 * std::abs(nested));
  }
  CHECK_THROWS_AS(q_bar(40, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(q_bar(4, 1.0, 0.1), DomainError);
}

TEST_CASE("q_bar decays like a power of r_n", "[excursions]") {
  // ln q / ln r_n rises toward -a as n grows; convergence is slow at these sizes
  for (double a : {0.5, 1.0, 1.5}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int n = 6; n <= 40; n += 2) {
      const double ratio = q_bar(n, a, 0.7) / (3 * std::lgamma(n + 1.0));
      CHECK(ratio > prev);
      CHECK(ratio < -a);
      prev = ratio;
    }
    CHECK(prev > -2.0 * a);
  }
  CHECK(q_bar(4, 1.0, 0.5) == -std::numeric_limits<double>::infinity());  // q_2 = 1
}

TEST_CASE("success and qualification predicates", "[excursions]") {
  const int n = 8;
  const double a = 1.0, beta = 0.5;
  ExcursionLedger L;
  L.schedule = RadiiSchedule::factorial(n);
  L.targets = n_targets(L.schedule, a);
  L.completion.assign(n + 1, std::nullopt);
  L.counts.assign(n + 1, {});
  L.completion[n] = 1000;
  auto& row = L.counts[n];
  row.assign(n + 1, 0);
  for (int k = 2; k <= n; ++k) row[static_cast<std::size_t>(k)] = std::llround(n_target(a, k));

  CHECK(is_n_successful(L, n, a));
  CHECK(is_n_successful(L, n, 0.4, a));
  row[0] = 1;
  CHECK_FALSE(is_n_successful(L, n, a));
  row[0] = 0;
  const int lo = static_cast<int>(std::ceil(default_rho(a) * n));
  row[static_cast<std::size_t>(lo)] = std::llround(n_target(a, lo)) + lo + 1;
  CHECK_FALSE(is_n_successful(L, n, a));
  row[static_cast<std::size_t>(lo)] = std::llround(n_target(a, lo));
  CHECK_THROWS_AS(is_n_successful(L, n, 0.6, a), DomainError);
  CHECK_THROWS_AS(is_n_successful(L, n - 1, a), IncompleteLedger);

  // gamma = 1 reproduces the successful-style profile
  CHECK(is_qualified(L, n, beta, 1.0, a, 5, 5));
  CHECK_FALSE(is_qualified(L, n, beta, 1.0, a, 4, 5));

  const double g = 1.3;
  for (int k = 4; k <= n; ++k) row[static_cast<std::size_t>(k)] = std::llround(n_hat(a, g, beta, n, k));
  CHECK(is_qualified(L, n, beta, g, a, 3, 3));
  row[5] = std::llround(n_hat(a, g, beta, n, 5)) - 6;
  CHECK_FALSE(is_qualified(L, n, beta, g, a, 3, 3));
}
