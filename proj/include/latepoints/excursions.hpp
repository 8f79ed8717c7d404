#pragma once

// Excursion bookkeeping around a fixed center on the torus.
//
// A schedule of radii r_0 < r_1 < ... < r_top defines nested discs
// D(x, r_k) = {y : |y - x| < r_k}.  Level l (1 <= l <= top) is the annulus
// between r_{l-1} and r_l.  A level-l excursion is one inner-to-outer
// traversal: the walker, having been strictly inside D(x, r_{l-1}), reaches
// |y - x| >= r_l.  All comparisons use exact integer squared distances
// against r^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "latepoints/lattice.hpp"
#include "latepoints/walk.hpp"

namespace latepoints::excursions {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IncompleteLedger : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScheduleKind { factorial, geometric };

/// Increasing radii, stored in the log domain so that (k!)^3 stays
/// representable for large k.
class RadiiSchedule {
 public:
  /// r_0 = 0, r_k = (k!)^3 for k = 1..top.
  static RadiiSchedule factorial(int top) {
    if (top < 1) throw DomainError("factorial schedule needs top >= 1");
    RadiiSchedule s;
    s.kind_ = ScheduleKind::factorial;
    s.log_r_.push_back(-std::numeric_limits<double>::infinity());
    for (int k = 1; k <= top; ++k) s.log_r_.push_back(3.0 * std::lgamma(k + 1.0));
    return s;
  }

  /// r_k = r0 * base^k for k = 0..top.
  static RadiiSchedule geometric(double r0, double base, int top) {
    if (!(r0 > 0.0) || !(base > 1.0) || top < 1)
      throw DomainError("geometric schedule needs r0 > 0, base > 1, top >= 1");
    RadiiSchedule s;
    s.kind_ = ScheduleKind::geometric;
    s.log_base_ = std::log(base);
    for (int k = 0; k <= top; ++k) s.log_r_.push_back(std::log(r0) + k * s.log_base_);
    return s;
  }

  /// Largest geometric schedule whose top radius fits on the n-torus (<= n/2).
  static RadiiSchedule geometric_for_torus(std::int32_t n, double r0 = 4.0, double base = 2.0) {
    int top = 0;
    while (r0 * std::pow(base, top + 1) <= n / 2.0) ++top;
    if (top < 1)
      throw DomainError("torus side " + std::to_string(n) + " too small for r0=" +
                        std::to_string(r0) + ", base=" + std::to_string(base));
    return geometric(r0, base, top);
  }

  ScheduleKind kind() const { return kind_; }
  int top() const { return static_cast<int>(log_r_.size()) - 1; }
  double log_radius(int k) const { return log_r_.at(static_cast<std::size_t>(k)); }
  /// Radii within 1e-12 relative of an integer are snapped to it so that
  /// integer radii give exact squared-distance thresholds.
  double radius(int k) const {
    const double r = std::exp(log_radius(k));
    const double ri = std::round(r);
    return std::abs(r - ri) <= 1e-12 * r ? ri : r;
  }

  /// ln(r_hi / r_lo); exact multiples of ln(base) for geometric schedules.
  double log_ratio(int hi, int lo) const {
    if (kind_ == ScheduleKind::geometric) return (hi - lo) * log_base_;
    return log_radius(hi) - log_radius(lo);
  }

  /// r_k^2 as a double, used as the integer-distance threshold.
  double radius2(int k) const {
    const double r = radius(k);
    return r * r;
  }

  bool fits_torus(std::int32_t n) const { return radius(top()) <= n / 2.0; }

 private:
  ScheduleKind kind_ = ScheduleKind::geometric;
  double log_base_ = 0.0;
  std::vector<double> log_r_;
};

// ---------------------------------------------------------------------------
// Targets

/// n_k(a) = 3 a k^2 ln k.
inline double n_target(double a, int k) {
  if (!(a > 0.0)) throw DomainError("n_target needs a > 0");
  if (k < 2) throw DomainError("n_target needs k >= 2");
  return 3.0 * a * k * k * std::log(static_cast<double>(k));
}

/// Skewed schedule 3 a* (k - c n)^2 ln k, c = (beta - gamma beta)/(1 - gamma beta),
/// a* = a (1 - gamma beta)^2 / (1 - beta)^2, for beta n <= k <= n.
inline double n_hat(double a, double gamma, double beta, int n, double k) {
  if (!(a > 0.0)) throw DomainError("n_hat needs a > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("n_hat needs beta in (0,1)");
  const double gb = gamma * beta;
  if (!(gb > 0.0 && gb < 1.0)) throw DomainError("n_hat needs 0 < gamma*beta < 1");
  const double tol = 1e-9 * n;
  if (k < beta * n - tol || k > n + tol) throw DomainError("n_hat needs beta*n <= k <= n");
  if (!(k > 1.0)) throw DomainError("n_hat needs k > 1");
  const double a_star = a * (1.0 - gb) * (1.0 - gb) / ((1.0 - beta) * (1.0 - beta));
  const double offset = (beta - gb) / (1.0 - gb) * n;
  const double d = k - offset;
  return 3.0 * a_star * d * d * std::log(k);
}

/// Per-level targets n_k(a) for k = 2..top; entries 0 and 1 are unset (NaN).
inline std::vector<double> n_targets(const RadiiSchedule& s, double a) {
  std::vector<double> t(static_cast<std::size_t>(s.top()) + 1,
                        std::numeric_limits<double>::quiet_NaN());
  for (int k = 2; k <= s.top(); ++k) t[static_cast<std::size_t>(k)] = n_target(a, k);
  return t;
}

// ---------------------------------------------------------------------------
// Online crossing machine

enum class EventKind : std::uint8_t { up, down, center_visit };

/// up(l): boundary l reached from inside D(r_{l-1}).
/// down(l): walker entered D(r_{l-1}) after last being at boundary l.
struct CrossingEvent {
  std::uint64_t time = 0;
  EventKind kind = EventKind::up;
  int level = 0;

  int boundary() const { return kind == EventKind::down ? level - 1 : level; }
  friend bool operator==(const CrossingEvent&, const CrossingEvent&) = default;
};

class CrossingMachine {
 public:
  enum class Side : std::uint8_t { unknown, inner, outer };

  CrossingMachine(std::int32_t n, Point center, RadiiSchedule schedule, bool keep_log = false)
      : n_(n), center_(center), schedule_(std::move(schedule)), keep_log_(keep_log) {
    const int top = schedule_.top();
    side_.assign(static_cast<std::size_t>(top) + 1, Side::unknown);
    r2_.resize(static_cast<std::size_t>(top) + 1);
    for (int k = 0; k <= top; ++k) r2_[static_cast<std::size_t>(k)] = schedule_.radius2(k);
    up_counts_.assign(static_cast<std::size_t>(top) + 1, 0);
  }

  /// Feed the next path position; returns the events it produced.
  std::span<const CrossingEvent> observe(std::uint64_t time, Point p) {
    step_events_.clear();
    const auto d2 = static_cast<double>(torus_dist2(n_, center_, p));
    if (d2 == 0.0) emit({time, EventKind::center_visit, 0});
    const int top = schedule_.top();
    if (!started_) {
      started_ = true;
      for (int l = 1; l <= top; ++l) {
        const auto li = static_cast<std::size_t>(l);
        if (d2 < r2_[li - 1]) side_[li] = Side::inner;
        else if (d2 >= r2_[li]) side_[li] = Side::outer;
      }
      return step_events_;
    }
    // Inward events are emitted outermost-first and outward ones innermost-first,
    // so that simultaneous crossings (only possible with gaps < 1) stay ordered.
    for (int l = top; l >= 1; --l) {
      const auto li = static_cast<std::size_t>(l);
      if (side_[li] != Side::inner && d2 < r2_[li - 1]) {
        if (side_[li] == Side::outer) emit({time, EventKind::down, l});
        side_[li] = Side::inner;
      }
    }
    for (int l = 1; l <= top; ++l) {
      const auto li = static_cast<std::size_t>(l);
      if (side_[li] != Side::outer && d2 >= r2_[li]) {
        if (side_[li] == Side::inner) {
          emit({time, EventKind::up, l});
          ++up_counts_[li];
        }
        side_[li] = Side::outer;
      }
    }
    return step_events_;
  }

  void operator()(std::uint64_t time, Point p) { observe(time, p); }

  Point center() const { return center_; }
  const RadiiSchedule& schedule() const { return schedule_; }
  Side side(int level) const { return side_.at(static_cast<std::size_t>(level)); }
  std::uint64_t up_count(int level) const { return up_counts_.at(static_cast<std::size_t>(level)); }
  std::uint64_t center_visits() const { return visits_; }
  const std::vector<CrossingEvent>& log() const { return log_; }

 private:
  void emit(CrossingEvent e) {
    if (e.kind == EventKind::center_visit) ++visits_;
    step_events_.push_back(e);
    if (keep_log_) log_.push_back(e);
  }

  std::int32_t n_;
  Point center_;
  RadiiSchedule schedule_;
  bool keep_log_;
  bool started_ = false;
  std::vector<Side> side_;
  std::vector<double> r2_;
  std::vector<std::uint64_t> up_counts_;
  std::uint64_t visits_ = 0;
  std::vector<CrossingEvent> step_events_;
  std::vector<CrossingEvent> log_;
};

// ---------------------------------------------------------------------------
// Ledger

/// counts[k][l] = level-l excursions completed by R[k] (time of the
/// ceil(n_k)-th level-k excursion); counts[k][0] = center visits before R[k].
struct ExcursionLedger {
  Point center;
  RadiiSchedule schedule;
  std::vector<double> targets;
  std::vector<std::optional<std::uint64_t>> completion;
  std::vector<std::vector<std::uint64_t>> counts;

  bool complete(int k) const {
    return k >= 0 && static_cast<std::size_t>(k) < completion.size() &&
           completion[static_cast<std::size_t>(k)].has_value();
  }

  std::uint64_t N(int k, int l) const {
    if (!complete(k)) throw IncompleteLedger("ledger level " + std::to_string(k) + " not complete");
    return counts[static_cast<std::size_t>(k)].at(static_cast<std::size_t>(l));
  }

  std::uint64_t R(int k) const {
    if (!complete(k)) throw IncompleteLedger("ledger level " + std::to_string(k) + " not complete");
    return *completion[static_cast<std::size_t>(k)];
  }
};

/// Observer that fills an ExcursionLedger while watching a walk.
class LedgerRecorder {
 public:
  LedgerRecorder(std::int32_t n, Point center, const RadiiSchedule& schedule,
                 std::vector<double> targets, bool keep_log = false)
      : machine_(n, center, schedule, keep_log) {
    const auto levels = static_cast<std::size_t>(schedule.top()) + 1;
    if (targets.size() != levels) throw DomainError("targets must have one entry per level");
    ledger_.center = center;
    ledger_.schedule = schedule;
    ledger_.targets = std::move(targets);
    ledger_.completion.assign(levels, std::nullopt);
    ledger_.counts.assign(levels, {});
    for (std::size_t k = 0; k < levels; ++k)
      if (std::isfinite(ledger_.targets[k])) ++pending_;
  }

  void operator()(std::uint64_t time, Point p) {
    for (const auto& e : machine_.observe(time, p)) {
      if (e.kind != EventKind::up) continue;
      const auto k = static_cast<std::size_t>(e.level);
      const double target = ledger_.targets[k];
      if (ledger_.completion[k] || !std::isfinite(target)) continue;
      if (static_cast<double>(machine_.up_count(e.level)) >= std::ceil(target)) {
        ledger_.completion[k] = time;
        auto& row = ledger_.counts[k];
        row.assign(ledger_.completion.size(), 0);
        row[0] = machine_.center_visits();
        for (int l = 1; l <= machine_.schedule().top(); ++l)
          row[static_cast<std::size_t>(l)] = machine_.up_count(l);
        --pending_;
      }
    }
  }

  bool done() const { return pending_ == 0; }
  const ExcursionLedger& ledger() const { return ledger_; }
  const CrossingMachine& machine() const { return machine_; }

 private:
  CrossingMachine machine_;
  ExcursionLedger ledger_;
  int pending_ = 0;
};

/// Run a seeded walk until every target level is complete (or the budget is
/// spent) and return the ledger for `center`.
inline ExcursionLedger record_ledger(const WalkConfig& cfg, Point center,
                                     const RadiiSchedule& schedule, std::vector<double> targets,
                                     std::uint64_t max_steps) {
  LedgerRecorder rec(cfg.n, center, schedule, std::move(targets));
  TorusWalk w(cfg);
  w.start(rec);
  while (!rec.done() && w.time() < max_steps) w.step(rec);
  return rec.ledger();
}

// ---------------------------------------------------------------------------
// Predicates

inline bool within_band(double count, double center, int k) {
  return std::abs(count - center) <= static_cast<double>(k);
}

/// No center visits before R_n and |N_{n,k} - n_k(a)| <= k for
/// k = max(2, ceil(rho n)) .. n-1.
inline bool is_n_successful(const ExcursionLedger& ledger, int n, double rho, double a) {
  if (!(a > 0.0 && a < 2.0)) throw DomainError("is_n_successful needs 0 < a < 2");
  if (!(rho > 0.0 && rho < (2.0 - a) / 2.0))
    throw DomainError("is_n_successful needs 0 < rho < (2 - a)/2");
  if (!ledger.complete(n))
    throw IncompleteLedger("ledger not complete through level " + std::to_string(n));
  if (ledger.N(n, 0) != 0) return false;
  const int lo = std::max(2, static_cast<int>(std::ceil(rho * n)));
  for (int k = lo; k <= n - 1; ++k)
    if (!within_band(static_cast<double>(ledger.N(n, k)), n_target(a, k), k)) return false;
  return true;
}

inline double default_rho(double a) { return (2.0 - a) / 4.0; }

inline bool is_n_successful(const ExcursionLedger& ledger, int n, double a) {
  return is_n_successful(ledger, n, default_rho(a), a);
}

/// All bands |N_{n,k} - n_hat_k| <= k for ceil(beta n) <= k <= n-1, and the
/// witness count reaches the threshold.
inline bool is_qualified(const ExcursionLedger& ledger, int n, double beta, double gamma, double a,
                         std::uint64_t witness_count, std::uint64_t threshold) {
  if (!ledger.complete(n))
    throw IncompleteLedger("ledger not complete through level " + std::to_string(n));
  const int lo = std::max(2, static_cast<int>(std::ceil(beta * n - 1e-9 * n)));
  for (int k = lo; k <= n - 1; ++k)
    if (!within_band(static_cast<double>(ledger.N(n, k)), n_hat(a, gamma, beta, n, k), k))
      return false;
  return witness_count >= threshold;
}

// ---------------------------------------------------------------------------
// Histories

struct History {
  std::vector<int> levels;
  std::vector<std::uint64_t> times;
};

/// Successive distinct boundaries touched within [lo, hi], starting at the
/// first touch of boundary hi-1.
inline History history_of(std::span<const CrossingEvent> events, int lo, int hi) {
  if (!(lo >= 0 && lo < hi)) throw DomainError("history range needs 0 <= lo < hi");
  History h;
  bool started = false;
  for (const auto& e : events) {
    if (e.kind == EventKind::center_visit) continue;
    const int b = e.boundary();
    if (b < lo || b > hi) continue;
    if (!started) {
      if (b != hi - 1) continue;
      started = true;
    }
    if (!h.levels.empty() && h.levels.back() == b) continue;
    h.levels.push_back(b);
    h.times.push_back(e.time);
  }
  return h;
}

/// Up-crossing counts u(l) = #{j : (s(j), s(j+1)) = (l-1, l)} for l = lo+1..hi.
inline std::vector<std::uint64_t> up_crossings(const std::vector<int>& levels, int lo, int hi) {
  std::vector<std::uint64_t> u(static_cast<std::size_t>(hi - lo), 0);
  for (std::size_t j = 0; j + 1 < levels.size(); ++j)
    if (levels[j + 1] == levels[j] + 1 && levels[j + 1] > lo && levels[j + 1] <= hi)
      ++u[static_cast<std::size_t>(levels[j + 1] - lo - 1)];
  return u;
}

/// Up-crossing profile (m_lo, ..., m_hi).  A matching history visits
/// {lo-1, ..., hi}, starts at hi-1, ends at hi and makes 2*sum(m) - 1 moves.
struct HistoryVector {
  int lo = 0;
  std::vector<std::uint64_t> m;

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto v : m) s += v;
    return s;
  }
  std::uint64_t moves() const { return 2 * total() - 1; }
};

inline double log_binomial(double top, double k) {
  return std::lgamma(top + 1.0) - std::lgamma(k + 1.0) - std::lgamma(top - k + 1.0);
}

/// log of the number of histories with the given profile:
///   prod_l binom(m_{l+1} + m_l - 1, m_l).
/// A zero count at some level forbids any nonzero count below it.
inline double history_count(const HistoryVector& mv) {
  if (mv.m.empty() || mv.m.back() == 0) throw DomainError("top-level count must be >= 1");
  double acc = 0.0;
  bool closed = false;
  for (std::size_t i = mv.m.size() - 1; i-- > 0;) {
    const auto ml = mv.m[i];
    if (closed) {
      if (ml != 0) return -std::numeric_limits<double>::infinity();
      continue;
    }
    if (ml == 0) {
      closed = true;
      continue;
    }
    acc += log_binomial(static_cast<double>(mv.m[i + 1] + ml - 1), static_cast<double>(ml));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Crossing probabilities and the first-moment sum

struct CrossingProbs {
  double p;  // ln(r_{l+1}/r_l) / ln(r_{l+1}/r_{l-1})
  double q;  // ln(r_l/r_{l-1}) / ln r_l
};

inline CrossingProbs crossing_probs(const RadiiSchedule& s, int l) {
  if (l - 1 < 1 || l + 1 > s.top())
    throw DomainError("crossing_probs needs 1 <= l-1 < l+1 <= top, got l=" + std::to_string(l));
  const double log_rl = s.log_radius(l);
  if (!(log_rl > 0.0)) throw DomainError("crossing_probs needs r_l > 1");
  return {s.log_ratio(l + 1, l) / s.log_ratio(l + 1, l - 1), s.log_ratio(l, l - 1) / log_rl};
}

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// Integer counts m >= 1 with |m - center| <= k.
inline std::pair<std::int64_t, std::int64_t> band(double center, int k) {
  const auto lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(center - k)));
  const auto hi = static_cast<std::int64_t>(std::floor(center + k));
  return {lo, hi};
}

/// Shape of a first-moment sum: free levels lo..n-1, fixed top count at n.
struct QBarLayout {
  int lo;
  int n;
  std::uint64_t top_count;  // ceil(n_n(a))
};

inline constexpr int kQBarMaxFreeLevels = 12;

inline QBarLayout q_bar_layout(int n, double a, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("q_bar needs rho in (0,1)");
  const int lo = static_cast<int>(std::ceil(rho * n));
  if (lo < 2) throw DomainError("q_bar needs ceil(rho n) >= 2");
  if (lo >= n) throw DomainError("q_bar needs at least one free level");
  if (n - lo > kQBarMaxFreeLevels)
    throw DomainError("q_bar limited to " + std::to_string(kQBarMaxFreeLevels) + " free levels");
  return {lo, n, static_cast<std::uint64_t>(std::ceil(n_target(a, n)))};
}

/// log of
///   sum_{m_lo..m_{n-1}, |m_l - n_l| <= l} (1 - q_lo)^{m_lo}
///       prod_{l=lo}^{n-1} binom(m_{l+1} + m_l - 1, m_l) p_l^{m_l} (1 - p_l)^{m_{l+1}}
/// with m_n = ceil(n_n(a)), on the factorial schedule.  Each factor couples
/// adjacent levels only, so the sum is a forward pass of log-domain transfer
/// sums over the bands.
inline double q_bar(int n, double a, double rho) {
  const QBarLayout L = q_bar_layout(n, a, rho);
  const RadiiSchedule s = RadiiSchedule::factorial(n);
  const double log1m_q = std::log1p(-crossing_probs(s, L.lo).q);

  auto [b_lo, b_hi] = band(n_target(a, L.lo), L.lo);
  std::vector<double> msg;
  for (auto m = b_lo; m <= b_hi; ++m) msg.push_back(static_cast<double>(m) * log1m_q);

  for (int l = L.lo; l <= n - 1; ++l) {
    const auto cp = crossing_probs(s, l);
    const double lp = std::log(cp.p);
    const double l1mp = std::log1p(-cp.p);
    std::int64_t nlo, nhi;
    if (l + 1 == n) {
      nlo = nhi = static_cast<std::int64_t>(L.top_count);
    } else {
      std::tie(nlo, nhi) = band(n_target(a, l + 1), l + 1);
    }
    std::vector<double> next;
    for (auto m1 = nlo; m1 <= nhi; ++m1) {
      double acc = -std::numeric_limits<double>::infinity();
      for (auto m = b_lo; m <= b_hi; ++m) {
        const auto md = static_cast<double>(m);
        const auto m1d = static_cast<double>(m1);
        acc = log_sum_exp(acc, msg[static_cast<std::size_t>(m - b_lo)] +
                                   log_binomial(m1d + md - 1.0, md) + md * lp + m1d * l1mp);
      }
      next.push_back(acc);
    }
    msg = std::move(next);
    b_lo = nlo;
    b_hi = nhi;
  }
  return msg.front();
}

// ---------------------------------------------------------------------------
// JSON

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::up: return "up";
    case EventKind::down: return "down";
    case EventKind::center_visit: return "center";
  }
  return "?";
}

inline void to_json(nlohmann::json& j, const CrossingEvent& e) {
  j = nlohmann::json{{"time", e.time}, {"kind", to_string(e.kind)}, {"level", e.level}};
}

inline void to_json(nlohmann::json& j, const ExcursionLedger& L) {
  j = nlohmann::json::object();
  j["center"] = {L.center.x, L.center.y};
  j["schedule"] = {
      {"kind", L.schedule.kind() == ScheduleKind::factorial ? "factorial" : "geometric"},
      {"top", L.schedule.top()}};
  std::vector<double> radii;
  for (int k = 0; k <= L.schedule.top(); ++k) radii.push_back(L.schedule.radius(k));
  j["schedule"]["radii"] = radii;
  auto levels = nlohmann::json::array();
  for (std::size_t k = 0; k < L.completion.size(); ++k) {
    nlohmann::json lv{{"level", k}};
    lv["target"] = std::isfinite(L.targets[k]) ? nlohmann::json(L.targets[k]) : nlohmann::json();
    if (L.completion[k]) {
      lv["completion_time"] = *L.completion[k];
      lv["counts"] = L.counts[k];
    } else {
      lv["completion_time"] = nullptr;
    }
    levels.push_back(std::move(lv));
  }
  j["levels"] = std::move(levels);
}

}  // namespace latepoints::excursions
