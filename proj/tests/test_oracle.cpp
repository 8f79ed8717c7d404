#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "latepoints/oracle.hpp"

using namespace latepoints;
using namespace latepoints::oracle;
using Catch::Approx;
using boost::multiprecision::cpp_rational;

namespace {

double radius_of(Point p) { return std::sqrt(static_cast<double>(norm2(p))); }

// Exit times of D(0, n) by exact rational Gaussian elimination.
std::map<Point, cpp_rational> exact_exit_times(std::int32_t n) {
  std::vector<Point> pts;
  for (std::int32_t y = -n; y <= n; ++y)
    for (std::int32_t x = -n; x <= n; ++x)
      if (norm2({x, y}) < std::int64_t{n} * n) pts.push_back({x, y});
  const std::size_t N = pts.size();
  std::map<Point, std::size_t> idx;
  for (std::size_t i = 0; i < N; ++i) idx[pts[i]] = i;

  std::vector<std::vector<cpp_rational>> A(N, std::vector<cpp_rational>(N + 1, 0));
  for (std::size_t i = 0; i < N; ++i) {
    A[i][i] = 1;
    A[i][N] = 1;
    const Point p = pts[i];
    for (Point q : {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1}, Point{p.x, p.y - 1}})
      if (auto it = idx.find(q); it != idx.end()) A[i][it->second] -= cpp_rational(1, 4);
  }
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t piv = c;
    while (A[piv][c] == 0) ++piv;
    std::swap(A[piv], A[c]);
    for (std::size_t r = 0; r < N; ++r) {
      if (r == c || A[r][c] == 0) continue;
      const cpp_rational f = A[r][c] / A[c][c];
      for (std::size_t k = c; k <= N; ++k) A[r][k] -= f * A[c][k];
    }
  }
  std::map<Point, cpp_rational> out;
  for (std::size_t i = 0; i < N; ++i) out[pts[i]] = A[i][N] / A[i][i];
  return out;
}

}  // namespace

TEST_CASE("domains", "[oracle]") {
  const auto d3 = DiscreteDomain::disc(3);
  CHECK(d3.size() == 25);  // the full 5x5 box: corners have |z|^2 = 8 < 9
  CHECK(d3.boundary().size() == 20);
  CHECK(DiscreteDomain::punctured_disc(3).size() == 24);
  const auto ann = DiscreteDomain::annulus(2, 6);
  for (auto p : ann.sites()) {
    CHECK(norm2(p) < 36);
    CHECK_FALSE(DiscreteDomain::in_disc_or_boundary(p, 2));
  }
  const std::vector<Point> gone{{0, 0}};
  const auto t = DiscreteDomain::torus_without(4, gone);
  CHECK(t.size() == 15);
  CHECK(t.boundary() == gone);
}

TEST_CASE("exit time from the center of D(0,3) is exact", "[oracle]") {
  const auto exact = exact_exit_times(3);
  const auto sol = expected_exit_time(3);
  for (const auto& [p, v] : exact) CHECK(sol.at(p) == Approx(static_cast<double>(v)).epsilon(1e-12));
  const cpp_rational center = exact.at({0, 0});
  CHECK(center > 9);
  CHECK(center < 16);
  // symmetric under the dihedral group
  CHECK(exact.at({1, 2}) == exact.at({-2, 1}));
  CHECK(exact.at({2, 2}) == exact.at({-2, -2}));

  for (std::int32_t n : {4, 5}) {
    const auto ex = exact_exit_times(n);
    const auto s = expected_exit_time(n);
    for (const auto& [p, v] : ex) CHECK(s.at(p) == Approx(static_cast<double>(v)).epsilon(1e-11));
  }
}

TEST_CASE("exit time bracket", "[oracle]") {
  for (std::int32_t n = 3; n <= 40; ++n) {
    const auto s = expected_exit_time(n);
    CHECK(s.residual <= kResidualLimit);
    for (std::size_t i = 0; i < s.sites.size(); ++i) {
      const auto x2 = static_cast<double>(norm2(s.sites[i]));
      REQUIRE(s.values[i] >= n * n - x2);
      REQUIRE(s.values[i] <= (n + 1.0) * (n + 1.0) - x2);
    }
    for (std::int32_t x = 0; x + 1 < n; ++x) CHECK(s.at({x, 0}) > s.at({x + 1, 0}));
  }
}

TEST_CASE("hitting probability and Green function", "[oracle]") {
  for (std::int32_t n : {16, 40}) {
    const auto P = hit_before_exit_prob(n);
    const auto G = green_disc_field(n);
    const auto dom = DiscreteDomain::disc(n);
    CHECK(stencil_residual(dom, G, [](Point p) { return p == Point{0, 0} ? 1.0 : 0.0; }, {}) <= 1e-10);

    // 1 - P from a neighbour of the origin decays like 1/ln n
    const double gap = (1.0 - P.at({1, 0})) * std::log(n);
    CHECK(gap > 0.8);
    CHECK(gap < 1.2);
    CHECK(P.at({n - 1, 0}) < 0.05);
    for (auto p : P.sites) {
      CHECK(P.at(p) > 0.0);
      CHECK(P.at(p) < 1.0);
      // first-visit decomposition: G(x, 0) = P^x(T_0 < exit) G(0, 0)
      CHECK(G.at(p) == Approx(P.at(p) * G.at({0, 0})).epsilon(1e-9));
    }
    // dihedral symmetry
    for (auto p : G.sites) {
      CHECK(G.at(p) == Approx(G.at({-p.y, p.x})).epsilon(1e-10));
      CHECK(G.at(p) == Approx(G.at({p.x, -p.y})).epsilon(1e-10));
      CHECK(G.at(p) == Approx(G.at({p.y, p.x})).epsilon(1e-10));
    }
    // reciprocity G(x, 0) = G(0, x)
    for (Point x : {Point{3, 1}, Point{0, n / 2}, Point{n / 3, n / 4}})
      CHECK(green_disc_field(n, x).at({0, 0}) == Approx(G.at(x)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(green_disc(10, Point{0, 0}), DomainError);
  CHECK_THROWS_AS(hit_before_exit_prob(10, Point{10, 0}), DomainError);
}

TEST_CASE("hitting probability and Green function approach their logarithmic forms", "[oracle]") {
  // window n/8 <= |x| <= n/2 scales with n
  double prev_p = 1e9, prev_g = 1e9;
  for (std::int32_t n : {16, 32, 64}) {
    const auto P = hit_before_exit_prob(n);
    const auto G = green_disc_field(n);
    double ep = 0.0, eg = 0.0;
    for (auto p : P.sites) {
      const double r = radius_of(p);
      if (r < n / 8.0 || r > n / 2.0) continue;
      ep = std::max(ep, std::abs(P.at(p) * std::log(n) - std::log(n / r)));
      eg = std::max(eg, std::abs(G.at(p) - 2 / std::numbers::pi * std::log(n / r)));
    }
    CHECK(ep < prev_p);
    CHECK(eg < prev_g);
    prev_p = ep;
    prev_g = eg;
    if (n == 64) {
      CHECK(ep <= 1.0);
      CHECK(eg <= 0.1);
    }
  }
}

TEST_CASE("annulus crossing probability", "[oracle]") {
  const std::int32_t r = 8, R = 64;
  const auto A = annulus_prob(r, R);
  double worst = 0.0;
  for (auto p : A.sites) {
    const double x = radius_of(p);
    CHECK(A.at(p) >= 0.0);
    CHECK(A.at(p) <= 1.0);
    if (x >= 16 && x <= 48) worst = std::max(worst, std::abs(A.at(p) - std::log(R / x) / std::log(double(R) / r)));
  }
  CHECK(worst <= 0.05);
  CHECK(annulus_prob(r, R, {r + 1, 0}) > 0.9);
  CHECK(annulus_prob(r, R, {R, 0}) == 0.0);
  CHECK(annulus_prob(r, R, {r, 0}) == 1.0);
  CHECK(annulus_prob(r, R, {3, 3}) == 1.0);
  CHECK_THROWS_AS(annulus_prob(8, 10), DomainError);
}

TEST_CASE("harnack ratio", "[oracle]") {
  const auto h = harnack_ratio(24, 0.125);
  CHECK(h.worst_residual <= kResidualLimit);
  double total = 0.0;
  for (double v : h.from_origin) total += v;
  CHECK(total == Approx(1.0).epsilon(1e-10));

  // exit law from the origin is invariant under the lattice symmetries
  std::map<Point, double> from0;
  for (std::size_t i = 0; i < h.exit_sites.size(); ++i) from0[h.exit_sites[i]] = h.from_origin[i];
  for (const auto& [y, v] : from0) {
    CHECK(from0.at({-y.y, y.x}) == Approx(v).epsilon(1e-9));
    CHECK(from0.at({y.y, y.x}) == Approx(v).epsilon(1e-9));
  }

  // a single starting point has no spread
  CHECK(harnack_ratio(24, 0.01).max_deviation == 0.0);

  const double d1 = harnack_ratio(48, 0.25).max_deviation;
  const double d2 = harnack_ratio(48, 0.125).max_deviation;
  const double d3 = harnack_ratio(48, 0.0625).max_deviation;
  CHECK(d2 < d1);
  CHECK(d3 < d2);
  CHECK(d2 < 0.65);
}

TEST_CASE("excursion times on the torus", "[oracle]") {
  const auto e = expected_excursion_time(64, 4, 10);
  const double scale = 2 / std::numbers::pi * 64 * 64 * std::log(10.0 / 4.0);
  CHECK(e.min >= 0.5 * scale);
  CHECK(e.max <= 2.0 * scale);
  CHECK(e.min >= 10 - 4);
  CHECK_FALSE(e.starts.empty());
  CHECK(expected_excursion_time(64, 4, 10, e.starts.front()) == e.expected.front());

  const auto f = expected_excursion_time(128, 8, 20);
  CHECK((f.max - f.min) / f.min < (e.max - e.min) / e.min);
  CHECK_THROWS_AS(expected_excursion_time(32, 4, 10), DomainError);
  CHECK_THROWS_AS(expected_excursion_time(64, 5, 10), DomainError);
}

TEST_CASE("hitting moments and the Kac bound", "[oracle]") {
  // mean return time to a site of Z_K^2 is K^2 (Kac)
  for (std::int32_t K : {3, 4, 5}) {
    const auto m = hitting_moments_exact(K, {0, 0}, 2);
    double mean_from_neighbors = 0.0;
    for (unsigned d = 0; d < 4; ++d)
      mean_from_neighbors += 0.25 * m[site_index(K, next_position(K, Point{0, 0}, d))][1];
    CHECK(1.0 + mean_from_neighbors == Approx(double(K) * K).epsilon(1e-10));
  }

  for (std::int32_t K : {3, 4, 5}) {
    const auto n2 = static_cast<std::size_t>(K) * K;
    for (std::size_t xi = 0; xi < n2; ++xi) {
      const Point x = site_point(K, xi);
      const auto exact = hitting_moments_exact(K, x, 4);
      for (std::size_t yi = 0; yi < n2; ++yi) {
        const auto r = kac_moments(K, x, site_point(K, yi), 4);
        REQUIRE(r.holds);
        for (int k = 1; k <= 4; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          CHECK(r.moments[kk] + r.tail[kk] <= r.bound[kk] * (k == 1 ? 1.0 + 1e-9 : 1.0));
          CHECK(r.moments[kk] == Approx(exact[yi][kk]).epsilon(1e-9).margin(1e-12));
        }
        CHECK(r.mean <= r.norm * (1 + 1e-12));
      }
    }
  }
  CHECK_THROWS_AS(kac_moments(9, {0, 0}, {1, 1}, 2), DomainError);
  CHECK_THROWS_AS(kac_moments(4, {0, 0}, {1, 1}, 5), DomainError);
}
