#pragma once

// Closed-form rate functions and the late-point exponents of the 2D torus
// walk, together with the variational forms they come from.  Every closed
// form has an independent route (clamped quadratic, grid+golden search) so
// that the two can be checked against each other.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace latepoints::theory {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {
inline void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0))
    throw DomainError(std::string(name) + " must lie in (0,1), got " + std::to_string(v));
}
inline void require_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw DomainError(std::string(name) + " must be a finite nonnegative value, got " +
                      std::to_string(v));
}
}  // namespace detail

/// Parameters of the rate function F_{h,beta}(gamma).
struct RateParams {
  double h = 0.0;
  double beta = 0.5;
  double gamma = 1.0;

  void validate() const {
    detail::require_nonneg(h, "h");
    detail::require_open_unit(beta, "beta");
    detail::require_nonneg(gamma, "gamma");
  }
};

struct GammaWindow {
  double gamma_minus = 0.0;
  double gamma_plus = 0.0;

  bool contains(double g) const { return g >= gamma_minus && g <= gamma_plus; }
};

enum class ExponentKind { late_count, fixed_disc, late_disc, pair_rho, pair_rho_hat };

inline std::string_view to_string(ExponentKind k) {
  switch (k) {
    case ExponentKind::late_count: return "late_count";
    case ExponentKind::fixed_disc: return "fixed_disc";
    case ExponentKind::late_disc: return "late_disc";
    case ExponentKind::pair_rho: return "pair_rho";
    case ExponentKind::pair_rho_hat: return "pair_rho_hat";
  }
  return "unknown";
}

inline std::optional<ExponentKind> exponent_kind_from_string(std::string_view s) {
  for (auto k : {ExponentKind::late_count, ExponentKind::fixed_disc, ExponentKind::late_disc,
                 ExponentKind::pair_rho, ExponentKind::pair_rho_hat})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct ExponentPrediction {
  ExponentKind kind;
  double alpha;
  std::optional<double> beta;
  double value;
};

struct LambdaPoint {
  double lambda_star;  // right end of the tilt domain
  double lambda_hg;    // tilt that makes F_{h,beta}(gamma) a Legendre value
};

struct LambdaIdentity {
  LambdaPoint point;
  double residual;  // |F - lambda-form|
};

/// Closed interval [lo, hi]; hi may be +infinity.
struct Interval {
  double lo;
  double hi;
};

// ---------------------------------------------------------------------------

/// (1 - gamma*beta)^2 / (1 - beta) + h * gamma^2 * beta
inline double rate_function(const RateParams& p) {
  p.validate();
  const double u = 1.0 - p.gamma * p.beta;
  return u * u / (1.0 - p.beta) + p.h * p.gamma * p.gamma * p.beta;
}

inline double rate_function(double h, double beta, double gamma) {
  return rate_function(RateParams{h, beta, gamma});
}

/// Minimizer of gamma -> F_{h,beta}(gamma).
inline double gamma_min(double h, double beta) {
  detail::require_nonneg(h, "h");
  detail::require_open_unit(beta, "beta");
  return 1.0 / (h * (1.0 - beta) + beta);
}

/// Window {gamma >= 0 : 2 - 2beta - 2alpha F_{0,beta}(gamma) >= 0}.
inline GammaWindow gamma_window(double alpha, double beta) {
  detail::require_open_unit(alpha, "alpha");
  detail::require_open_unit(beta, "beta");
  const double spread = (1.0 - beta) / std::sqrt(alpha);
  return {std::max(1.0 - spread, 0.0) / beta, std::max(1.0 + spread, 0.0) / beta};
}

/// Piecewise closed form of the median pair exponent.
inline double rho_closed(double alpha, double beta) {
  detail::require_open_unit(alpha, "alpha");
  detail::require_open_unit(beta, "beta");
  const double s = 1.0 - std::sqrt(alpha);
  if (beta <= 2.0 * s) return 2.0 + 2.0 * beta - 4.0 * alpha / (2.0 - beta);
  return 8.0 * s - 4.0 * s * s / beta;
}

/// rho as 2 + 2beta - 2alpha * inf_{gamma in window} F_{2,beta}(gamma).
/// F_{2,beta} is a convex quadratic so the constrained minimizer is its
/// stationary point clamped to the window.
inline double rho_constrained(double alpha, double beta) {
  const GammaWindow w = gamma_window(alpha, beta);
  const double g = std::clamp(gamma_min(2.0, beta), w.gamma_minus, w.gamma_plus);
  return 2.0 + 2.0 * beta - 2.0 * alpha * rate_function(2.0, beta, g);
}

/// Piecewise closed form of the mean pair exponent.
inline double rho_hat_closed(double alpha, double beta) {
  detail::require_open_unit(alpha, "alpha");
  detail::require_open_unit(beta, "beta");
  const double t = std::sqrt(2.0 * alpha);
  if (beta <= 2.0 - t) return 2.0 + 2.0 * beta - 4.0 * alpha / (2.0 - beta);
  return 6.0 - 4.0 * t;
}

/// sup_{beta' <= beta} sup_{gamma >= 0} {2 + 2beta' - 2alpha F_{2,beta'}(gamma)}.
/// The inner supremum uses the unconstrained minimum 2/(2-beta') of F_{2,beta'};
/// the outer one is a 4096-point grid on (0, beta] refined by 40 golden-section
/// steps around the best grid point.
inline double rho_hat_sup(double alpha, double beta) {
  detail::require_open_unit(alpha, "alpha");
  detail::require_open_unit(beta, "beta");
  const auto profile = [alpha](double b) {
    return 2.0 + 2.0 * b - 2.0 * alpha * rate_function(2.0, b, gamma_min(2.0, b));
  };

  constexpr int kGrid = 4096;
  constexpr int kGolden = 40;
  int best_i = 1;
  double best = profile(beta / kGrid);
  for (int i = 2; i <= kGrid; ++i) {
    const double v = profile(beta * i / kGrid);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }

  double lo = beta * std::max(best_i - 1, 1) / kGrid;
  double hi = beta * std::min(best_i + 1, kGrid) / kGrid;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = profile(x1);
  double f2 = profile(x2);
  for (int k = 0; k < kGolden; ++k) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = profile(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = profile(x1);
    }
  }
  return std::max({best, f1, f2, profile(lo), profile(hi)});
}

inline bool needs_beta(ExponentKind kind) { return kind != ExponentKind::late_count; }

inline double predicted_exponent(ExponentKind kind, double alpha,
                                 std::optional<double> beta = std::nullopt) {
  detail::require_open_unit(alpha, "alpha");
  if (needs_beta(kind)) {
    if (!beta) throw DomainError(std::string(to_string(kind)) + " requires beta");
    detail::require_open_unit(*beta, "beta");
  }
  switch (kind) {
    case ExponentKind::late_count: return 2.0 * (1.0 - alpha);
    case ExponentKind::fixed_disc: return std::max(2.0 * *beta - 2.0 * alpha / *beta, 0.0);
    case ExponentKind::late_disc: return 2.0 * *beta * (1.0 - alpha);
    case ExponentKind::pair_rho: return rho_closed(alpha, *beta);
    case ExponentKind::pair_rho_hat: return rho_hat_closed(alpha, *beta);
  }
  throw DomainError("unknown exponent kind");
}

inline ExponentPrediction predict(ExponentKind kind, double alpha,
                                  std::optional<double> beta = std::nullopt) {
  const double v = predicted_exponent(kind, alpha, beta);
  return {kind, alpha, needs_beta(kind) ? beta : std::nullopt, v};
}

/// Tilt representation of F_{h,beta}(gamma):
///   lambda*      = 1/(1-beta) + h/beta
///   lambda_{h,g} = (beta + h(1-beta) - 1/gamma) / (beta(1-beta))
///   F = lambda g^2 beta^2 - (beta lambda - h) / (beta - (1-beta)(lambda beta - h))
inline LambdaIdentity lambda_identity(const RateParams& p) {
  p.validate();
  if (!(p.gamma > 0.0)) throw DomainError("lambda identity needs gamma > 0");
  const double b = p.beta;
  const double h = p.h;
  const double lambda_star = 1.0 / (1.0 - b) + h / b;
  const double lambda = (b + h * (1.0 - b) - 1.0 / p.gamma) / (b * (1.0 - b));
  if (!(lambda < lambda_star)) throw DomainError("lambda_{h,gamma} must lie below lambda*");

  const double denom = b - (1.0 - b) * (lambda * b - h);
  if (!(denom > 0.0)) throw DomainError("degenerate lambda-form denominator");
  const double form = lambda * p.gamma * p.gamma * b * b - (b * lambda - h) / denom;
  return {{lambda_star, lambda}, std::abs(rate_function(p) - form)};
}

/// Range of the normalized deviation g^2 that counts as "at least as far
/// from gamma_h as gamma".  Endpoints are treated as closed.
inline Interval deviation_interval(double h, double gamma, double beta) {
  detail::require_nonneg(gamma, "gamma");
  const double gh = gamma_min(h, beta);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double tol = 1e-12 * std::max(1.0, gh);
  if (std::abs(gamma - gh) <= tol) return {0.0, inf};
  if (gamma < gh) return {0.0, gamma * gamma};
  return {gamma * gamma, inf};
}

}  // namespace latepoints::theory
