#pragma once

// Exact absorbing-chain computations for simple random walk on small
// subsets of Z^2 and of the torus Z_K^2.
//
// A domain is a finite set of interior sites; every neighbour outside it is
// absorbing.  Dirichlet problems
//     u(z) - (1/4) sum_{w ~ z} u(w) = f(z)   (z interior),   u = g off the interior
// are solved with a sparse LDL^T factorization up to kDirectSolveLimit
// unknowns and with diagonally preconditioned conjugate gradients above.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "latepoints/lattice.hpp"

namespace latepoints::oracle {

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr std::size_t kDirectSolveLimit = 20000;
inline constexpr double kSolveTolerance = 1e-12;
inline constexpr double kResidualLimit = 1e-10;

inline std::int64_t norm2(Point p) { return std::int64_t{p.x} * p.x + std::int64_t{p.y} * p.y; }

// ---------------------------------------------------------------------------

/// Finite set of interior sites on Z^2 (torus_side == 0) or on Z_K^2.
class DiscreteDomain {
 public:
  /// Interior sites are the points of the box (or torus) accepted by `inside`.
  static DiscreteDomain from_predicate(std::int32_t half_width, std::int32_t torus_side,
                                       const std::function<bool(Point)>& inside) {
    DiscreteDomain d;
    d.torus_ = torus_side;
    if (torus_side > 0) {
      for (std::int32_t y = 0; y < torus_side; ++y)
        for (std::int32_t x = 0; x < torus_side; ++x)
          if (inside({x, y})) d.add({x, y});
    } else {
      for (std::int32_t y = -half_width; y <= half_width; ++y)
        for (std::int32_t x = -half_width; x <= half_width; ++x)
          if (inside({x, y})) d.add({x, y});
    }
    if (d.sites_.empty()) throw DomainError("domain has no interior sites");
    return d;
  }

  /// D(0, n) = {z : |z| < n}.
  static DiscreteDomain disc(std::int32_t n) {
    const std::int64_t n2 = std::int64_t{n} * n;
    return from_predicate(n, 0, [n2](Point p) { return norm2(p) < n2; });
  }

  /// D(0, n) without the origin.
  static DiscreteDomain punctured_disc(std::int32_t n) {
    const std::int64_t n2 = std::int64_t{n} * n;
    return from_predicate(n, 0, [n2](Point p) { return norm2(p) < n2 && norm2(p) != 0; });
  }

  /// D(0, R) minus D(0, r) and its outer boundary.
  static DiscreteDomain annulus(std::int32_t r, std::int32_t R) {
    return from_predicate(R, 0, [r, R](Point p) {
      return norm2(p) < std::int64_t{R} * R && !in_disc_or_boundary(p, r);
    });
  }

  /// Torus Z_K^2 with the given sites removed.
  static DiscreteDomain torus_without(std::int32_t K, std::span<const Point> removed) {
    std::vector<char> gone(static_cast<std::size_t>(K) * K, 0);
    for (auto p : removed) gone[site_index(K, p)] = 1;
    return from_predicate(0, K, [&](Point p) { return !gone[site_index(K, p)]; });
  }

  /// z in D(0, r) or in its exterior boundary {w not in D : w ~ D}.
  static bool in_disc_or_boundary(Point p, std::int32_t r) {
    const std::int64_t r2 = std::int64_t{r} * r;
    if (norm2(p) < r2) return true;
    for (Point q : {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1}, Point{p.x, p.y - 1}})
      if (norm2(q) < r2) return true;
    return false;
  }

  std::span<const Point> sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  std::int32_t torus_side() const { return torus_; }

  std::optional<std::size_t> index(Point p) const {
    const auto it = index_.find(key(p));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::array<Point, 4> neighbors(Point p) const {
    if (torus_ > 0)
      return {next_position(torus_, p, Direction::plus_x), next_position(torus_, p, Direction::minus_x),
              next_position(torus_, p, Direction::plus_y), next_position(torus_, p, Direction::minus_y)};
    return {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1}, Point{p.x, p.y - 1}};
  }

  /// Exterior boundary: non-interior sites adjacent to the interior, sorted.
  std::vector<Point> boundary() const {
    std::vector<Point> b;
    for (const auto& p : sites_)
      for (const auto& q : neighbors(p))
        if (!index(q)) b.push_back(q);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

 private:
  static std::uint64_t key(Point p) {
    return (std::uint64_t{static_cast<std::uint32_t>(p.x)} << 32) | static_cast<std::uint32_t>(p.y);
  }
  void add(Point p) {
    index_.emplace(key(p), sites_.size());
    sites_.push_back(p);
  }

  std::int32_t torus_ = 0;
  std::vector<Point> sites_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Values on the interior sites of a domain plus the solver residual.
struct ChainSolution {
  std::vector<Point> sites;
  std::vector<double> values;
  double residual = 0.0;
  std::unordered_map<std::uint64_t, std::size_t> lookup;

  std::optional<double> find(Point p) const {
    const auto it = lookup.find(pack(p));
    if (it == lookup.end()) return std::nullopt;
    return values[it->second];
  }

  double at(Point p) const {
    const auto v = find(p);
    if (!v)
      throw DomainError("point (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                        ") is not interior to the solved domain");
    return *v;
  }

  static std::uint64_t pack(Point p) {
    return (std::uint64_t{static_cast<std::uint32_t>(p.x)} << 32) | static_cast<std::uint32_t>(p.y);
  }
};

// ---------------------------------------------------------------------------

/// Factorized operator I - P restricted to a domain.
class DirichletOperator {
 public:
  explicit DirichletOperator(const DiscreteDomain& dom) : dom_(dom) {
    const auto N = static_cast<Eigen::Index>(dom.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(dom.size() * 5);
    for (std::size_t i = 0; i < dom.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      trip.emplace_back(ii, ii, 1.0);
      for (const auto& q : dom.neighbors(dom.sites()[i]))
        if (auto j = dom.index(q)) trip.emplace_back(ii, static_cast<Eigen::Index>(*j), -0.25);
    }
    A_.resize(N, N);
    A_.setFromTriplets(trip.begin(), trip.end());
    if (dom.size() <= kDirectSolveLimit) {
      direct_.compute(A_);
      if (direct_.info() != Eigen::Success) throw SolverFailure("sparse factorization failed");
    } else {
      iterative_.setTolerance(kSolveTolerance);
      iterative_.setMaxIterations(20 * static_cast<Eigen::Index>(std::sqrt(double(N))) + 2000);
      iterative_.compute(A_);
    }
  }

  const DiscreteDomain& domain() const { return dom_; }
  double last_residual() const { return last_residual_; }

  /// Right-hand side f(z) + (1/4) sum over absorbing neighbours w of g(w).
  Eigen::VectorXd rhs(const std::function<double(Point)>& source,
                      const std::function<double(Point)>& boundary) const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(dom_.size()));
    for (std::size_t i = 0; i < dom_.size(); ++i) {
      const Point p = dom_.sites()[i];
      double v = source ? source(p) : 0.0;
      if (boundary)
        for (const auto& q : dom_.neighbors(p))
          if (!dom_.index(q)) v += 0.25 * boundary(q);
      b[static_cast<Eigen::Index>(i)] = v;
    }
    return b;
  }

  Eigen::VectorXd solve_vector(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x;
    if (dom_.size() <= kDirectSolveLimit) {
      x = direct_.solve(b);
    } else {
      x = iterative_.solve(b);
      if (iterative_.info() != Eigen::Success)
        throw SolverFailure("conjugate gradients did not converge");
    }
    const double res = (b - A_ * x).cwiseAbs().maxCoeff();
    if (!(res <= kResidualLimit))
      throw SolverFailure("solver residual " + std::to_string(res) + " above limit");
    last_residual_ = res;
    return x;
  }

  ChainSolution solve(const std::function<double(Point)>& source,
                      const std::function<double(Point)>& boundary) const {
    const Eigen::VectorXd b = rhs(source, boundary);
    const Eigen::VectorXd x = solve_vector(b);
    ChainSolution s;
    s.sites.assign(dom_.sites().begin(), dom_.sites().end());
    s.values.assign(x.data(), x.data() + x.size());
    s.residual = last_residual_;
    for (std::size_t i = 0; i < s.sites.size(); ++i) s.lookup.emplace(ChainSolution::pack(s.sites[i]), i);
    return s;
  }

 private:
  const DiscreteDomain& dom_;
  Eigen::SparseMatrix<double> A_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      iterative_;
  mutable double last_residual_ = 0.0;
};

inline ChainSolution solve_dirichlet(const DiscreteDomain& dom,
                                     const std::function<double(Point)>& source,
                                     const std::function<double(Point)>& boundary) {
  return DirichletOperator(dom).solve(source, boundary);
}

/// max over interior z of |u(z) - (1/4) sum u(w) - f(z)|, with u = g off the domain.
inline double stencil_residual(const DiscreteDomain& dom, const ChainSolution& s,
                               const std::function<double(Point)>& source,
                               const std::function<double(Point)>& boundary) {
  double worst = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const Point p = dom.sites()[i];
    double mean = 0.0;
    for (const auto& q : dom.neighbors(p)) {
      const auto v = s.find(q);
      mean += 0.25 * (v ? *v : (boundary ? boundary(q) : 0.0));
    }
    worst = std::max(worst, std::abs(s.values[i] - mean - (source ? source(p) : 0.0)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Disc and annulus problems on Z^2

/// P^x(T_0 < T_{dD(0,n)}) for every x in D(0,n) \ {0}.
inline ChainSolution hit_before_exit_prob(std::int32_t n) {
  if (n < 2) throw DomainError("hit_before_exit_prob needs n >= 2");
  const auto dom = DiscreteDomain::punctured_disc(n);
  return solve_dirichlet(dom, {}, [](Point p) { return p.x == 0 && p.y == 0 ? 1.0 : 0.0; });
}

inline double hit_before_exit_prob(std::int32_t n, Point x) {
  if (norm2(x) == 0 || norm2(x) >= std::int64_t{n} * n)
    throw DomainError("hit_before_exit_prob needs 0 < |x| < n");
  return hit_before_exit_prob(n).at(x);
}

/// G_{D(0,n)}(., y): expected visits to y before leaving D(0,n).
inline ChainSolution green_disc_field(std::int32_t n, Point y = {0, 0}) {
  if (n < 1) throw DomainError("green_disc needs n >= 1");
  const auto dom = DiscreteDomain::disc(n);
  if (!dom.index(y)) throw DomainError("green_disc pole must lie inside the disc");
  return solve_dirichlet(dom, [y](Point p) { return p == y ? 1.0 : 0.0; }, {});
}

inline double green_disc(std::int32_t n, Point x) {
  if (norm2(x) == 0 || norm2(x) >= std::int64_t{n} * n)
    throw DomainError("green_disc needs 0 < |x| < n");
  return green_disc_field(n).at(x);
}

/// E^x(T_{dD(0,n)}) for every x in D(0,n).
inline ChainSolution expected_exit_time(std::int32_t n) {
  if (n < 1) throw DomainError("expected_exit_time needs n >= 1");
  return solve_dirichlet(DiscreteDomain::disc(n), [](Point) { return 1.0; }, {});
}

/// P^x(T_{dD(0,r)} < T_{dD(0,R)}).  Sites of dD(0,r) have value 1, sites
/// outside D(0,R) value 0; `at` covers the annulus interior.
inline ChainSolution annulus_prob(std::int32_t r, std::int32_t R) {
  if (!(r >= 1 && r + 2 < R)) throw DomainError("annulus_prob needs 1 <= r < R - 2");
  const auto dom = DiscreteDomain::annulus(r, R);
  return solve_dirichlet(dom, {}, [r](Point p) {
    return DiscreteDomain::in_disc_or_boundary(p, r) ? 1.0 : 0.0;
  });
}

inline double annulus_prob(std::int32_t r, std::int32_t R, Point x) {
  if (DiscreteDomain::in_disc_or_boundary(x, r)) return 1.0;
  if (norm2(x) >= std::int64_t{R} * R) return 0.0;
  return annulus_prob(r, R).at(x);
}

struct HarnackResult {
  double max_deviation = 0.0;          // max |H(x,y)/H(x',y) - 1|
  std::vector<Point> exit_sites;       // dD(0,n), sorted
  std::vector<double> from_origin;     // H(0, y) per exit site
  double worst_residual = 0.0;
};

/// Exit distributions on dD(0,n) from every x in D(0, delta n) and the worst
/// ratio between two such starting points.
inline HarnackResult harnack_ratio(std::int32_t n, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError("harnack_ratio needs 0 < delta < 1/2");
  const auto dom = DiscreteDomain::disc(n);
  const DirichletOperator op(dom);
  const double inner = delta * n;
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (static_cast<double>(norm2(dom.sites()[i])) < inner * inner) starts.push_back(i);
  const auto origin = *dom.index({0, 0});

  HarnackResult res;
  res.exit_sites = dom.boundary();
  for (const auto& y : res.exit_sites) {
    const Eigen::VectorXd h = op.solve_vector(op.rhs({}, [y](Point q) { return q == y ? 1.0 : 0.0; }));
    res.worst_residual = std::max(res.worst_residual, op.last_residual());
    res.from_origin.push_back(h[static_cast<Eigen::Index>(origin)]);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (auto i : starts) {
      const double v = h[static_cast<Eigen::Index>(i)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo > 0.0) res.max_deviation = std::max(res.max_deviation, hi / lo - 1.0);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Torus problems

struct ExcursionTimes {
  std::vector<Point> starts;     // dD(c, r)
  std::vector<double> expected;  // E^y(tau) per start
  double min = 0.0;
  double max = 0.0;
};

/// E^y(tau) for y on dD(c, r), c = (K/2, K/2), where tau is the time to leave
/// D(c, R) and then return to dD(c, r), on the torus Z_K^2.
inline ExcursionTimes expected_excursion_time(std::int32_t K, std::int32_t r, std::int32_t R) {
  if (!(r >= 1 && 2 * r < R && 6 * R <= K))
    throw DomainError("expected_excursion_time needs 2r < R <= K/6");
  const Point c{K / 2, K / 2};
  const auto d2 = [K, c](Point p) { return torus_dist2(K, c, p); };
  const std::int64_t r2 = std::int64_t{r} * r, R2 = std::int64_t{R} * R;

  const auto big = DiscreteDomain::from_predicate(0, K, [&](Point p) { return d2(p) < R2; });
  const auto small_disc = DiscreteDomain::from_predicate(0, K, [&](Point p) { return d2(p) < r2; });
  const auto small_boundary = small_disc.boundary();
  std::vector<Point> removed(small_disc.sites().begin(), small_disc.sites().end());
  removed.insert(removed.end(), small_boundary.begin(), small_boundary.end());
  const auto outside = DiscreteDomain::torus_without(K, removed);

  const DirichletOperator big_op(big);
  const auto exit_time = big_op.solve([](Point) { return 1.0; }, {});
  const auto return_time = solve_dirichlet(outside, [](Point) { return 1.0; }, {});
  const auto carried = big_op.solve({}, [&](Point q) { return return_time.at(q); });

  ExcursionTimes out;
  out.starts = small_boundary;
  out.min = std::numeric_limits<double>::infinity();
  for (const auto& y : out.starts) {
    const double v = exit_time.at(y) + carried.at(y);
    out.expected.push_back(v);
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  return out;
}

inline double expected_excursion_time(std::int32_t K, std::int32_t r, std::int32_t R, Point y) {
  const auto all = expected_excursion_time(K, r, R);
  for (std::size_t i = 0; i < all.starts.size(); ++i)
    if (all.starts[i] == y) return all.expected[i];
  throw DomainError("start point is not on the inner boundary");
}

// ---------------------------------------------------------------------------
// Hitting-time moments on small tori

/// E^y(T_x^k) for k = 0..max_order and every start y, by the recursion
///   (I - Q) m_k = sum_{j<k} binom(k, j) P m_j   off x,  m_k(x) = [k == 0].
inline std::vector<std::vector<double>> hitting_moments_exact(std::int32_t K, Point x, int max_order) {
  const std::size_t N = static_cast<std::size_t>(K) * K;
  const std::size_t tx = site_index(K, x);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i)
    for (unsigned d = 0; d < 4; ++d)
      P(static_cast<Eigen::Index>(i),
        static_cast<Eigen::Index>(site_index(K, next_position(K, site_point(K, i), d)))) += 0.25;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - P;
  for (Eigen::Index j = 0; j < A.cols(); ++j) A(static_cast<Eigen::Index>(tx), j) = 0.0;
  A(static_cast<Eigen::Index>(tx), static_cast<Eigen::Index>(tx)) = 1.0;
  const auto lu = A.partialPivLu();

  std::vector<Eigen::VectorXd> m{Eigen::VectorXd::Ones(static_cast<Eigen::Index>(N))};
  for (int k = 1; k <= max_order; ++k) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    double binom = 1.0;
    for (int j = 0; j < k; ++j) {
      b += binom * (P * m[static_cast<std::size_t>(j)]);
      binom = binom * (k - j) / (j + 1);
    }
    b[static_cast<Eigen::Index>(tx)] = 0.0;
    m.push_back(lu.solve(b));
  }
  std::vector<std::vector<double>> out(N, std::vector<double>(static_cast<std::size_t>(max_order) + 1));
  for (std::size_t y = 0; y < N; ++y)
    for (int k = 0; k <= max_order; ++k)
      out[y][static_cast<std::size_t>(k)] = m[static_cast<std::size_t>(k)][static_cast<Eigen::Index>(y)];
  return out;
}

struct KacMoments {
  std::vector<double> moments;   // E^y(T^k), k = 0..max_order, truncated sum
  std::vector<double> tail;      // bound on the truncated remainder per order
  double mean = 0.0;             // E^y(T)
  double norm = 0.0;             // ||T|| = max_z E^z(T)
  std::vector<double> bound;     // k! E^y(T) ||T||^{k-1}
  std::uint64_t steps = 0;
  bool holds = false;            // moments + tail <= bound for every order >= 1
};

inline constexpr std::uint64_t kKacStepCap = 10'000'000;
inline constexpr double kKacTailMass = 1e-15;

/// Moments of the hitting time of x from y on Z_K^2, from the exact law of T
/// propagated until the surviving mass drops below 1e-15.  The remainder is
/// bounded geometrically with the spectral radius of the killed chain.
inline KacMoments kac_moments(std::int32_t K, Point x, Point y, int max_order) {
  if (K < 2 || K > 8) throw DomainError("kac_moments needs 2 <= K <= 8");
  if (max_order < 1 || max_order > 4) throw DomainError("kac_moments needs 1 <= order <= 4");
  const std::size_t N = static_cast<std::size_t>(K) * K;
  const std::size_t tx = site_index(K, x);
  const auto ord = static_cast<std::size_t>(max_order);

  KacMoments r;
  r.moments.assign(ord + 1, 0.0);
  r.tail.assign(ord + 1, 0.0);
  r.moments[0] = 1.0;

  const auto exact = hitting_moments_exact(K, x, 1);
  for (const auto& row : exact) r.norm = std::max(r.norm, row[1]);

  // spectral radius of the killed chain (symmetric substochastic matrix)
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) {
    if (i == tx) continue;
    for (unsigned d = 0; d < 4; ++d) {
      const auto j = site_index(K, next_position(K, site_point(K, i), d));
      if (j != tx) Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 0.25;
    }
  }
  const double lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().cwiseAbs().maxCoeff();

  std::vector<long double> mass(N, 0.0L), next(N, 0.0L);
  std::vector<long double> acc(ord + 1, 0.0L);
  long double survive = 0.0L;
  if (site_index(K, y) != tx) {
    mass[site_index(K, y)] = 1.0L;
    survive = 1.0L;
  }
  std::uint64_t t = 0;
  while (survive >= kKacTailMass) {
    if (t >= kKacStepCap) throw SolverFailure("kac_moments: tail mass not reached within step cap");
    ++t;
    std::fill(next.begin(), next.end(), 0.0L);
    long double hit = 0.0L;
    for (std::size_t i = 0; i < N; ++i) {
      if (mass[i] == 0.0L) continue;
      const Point p = site_point(K, i);
      for (unsigned d = 0; d < 4; ++d) {
        const auto j = site_index(K, next_position(K, p, d));
        if (j == tx) hit += 0.25L * mass[i];
        else next[j] += 0.25L * mass[i];
      }
    }
    mass.swap(next);
    survive -= hit;
    long double tp = 1.0L;
    for (std::size_t k = 1; k <= ord; ++k) {
      tp *= static_cast<long double>(t);
      acc[k] += tp * hit;
    }
  }
  r.steps = t;
  for (std::size_t k = 1; k <= ord; ++k) r.moments[k] = static_cast<double>(acc[k]);

  // P(T = t + m) <= sqrt(N) lambda^(m-1) * survive
  if (survive > 0.0L) {
    const long double c = std::sqrt(static_cast<long double>(N)) * survive;
    for (std::size_t k = 1; k <= ord; ++k) {
      long double sum = 0.0L, geo = 1.0L;
      for (std::uint64_t m = 1; m < 1'000'000; ++m) {
        const long double term = std::pow(static_cast<long double>(t + m), static_cast<long double>(k)) * geo;
        sum += term;
        geo *= lambda;
        if (term < 1e-30L * sum) break;
      }
      r.tail[k] = static_cast<double>(c * sum);
    }
  }

  r.mean = r.moments[1];
  r.bound.assign(ord + 1, 0.0);
  r.bound[0] = 1.0;
  double fact = 1.0;
  r.holds = true;
  for (std::size_t k = 1; k <= ord; ++k) {
    fact *= static_cast<double>(k);
    r.bound[k] = fact * r.mean * std::pow(r.norm, static_cast<double>(k) - 1.0);
    if (k == 1) continue;  // the order-1 statement is E(T) <= E(T)
    if (!(r.moments[k] + r.tail[k] <= r.bound[k])) r.holds = false;
  }
  return r;
}

}  // namespace latepoints::oracle
