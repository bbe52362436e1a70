#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

namespace isea::detail {

inline constexpr int kRootBits = 52;
inline constexpr std::uintmax_t kRootMaxIters = 200;

/// Root of a nonincreasing f on [0, inf) with f(0) > 0 finite and f -> negative.
/// The upper end of the bracket starts at `guess` and is doubled until f drops
/// to zero or below. Returns +inf if no sign change is found.
template <class F>
double decreasing_root(F f, double guess = 1.0) {
  double lo = 0.0;
  double f_lo = f(lo);
  if (!(f_lo > 0.0)) return 0.0;
  double hi = guess > 0.0 && std::isfinite(guess) ? guess : 1.0;
  double f_hi = f(hi);
  while (f_hi > 0.0) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    f_hi = f(hi);
  }
  // Shrink the bracket from below as well when the guess overshoots badly.
  while (lo == 0.0 && hi > 1e-300) {
    const double mid = 0.5 * hi;
    const double f_mid = f(mid);
    if (f_mid > 0.0) {
      lo = mid;
      f_lo = f_mid;
      break;
    }
    hi = mid;
    f_hi = f_mid;
  }
  if (f_hi == 0.0) return hi;
  std::uintmax_t iters = kRootMaxIters;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(kRootBits), iters);
  return 0.5 * (a + b);
}

}  // namespace isea::detail

namespace isea::detail {

/// Root of a nonincreasing f on (0, inf) where f may be infinite near zero.
/// Expands geometrically from `guess` in whichever direction the sign asks for.
template <class F>
double positive_root(F f, double guess) {
  double x = guess > 0.0 && std::isfinite(guess) ? guess : 1.0;
  double fx = f(x);
  double lo, hi, f_lo, f_hi;
  if (fx > 0.0) {
    lo = x;
    f_lo = fx;
    hi = 2.0 * x;
    f_hi = f(hi);
    while (f_hi > 0.0) {
      lo = hi;
      f_lo = f_hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
      f_hi = f(hi);
    }
  } else {
    hi = x;
    f_hi = fx;
    lo = 0.5 * x;
    f_lo = f(lo);
    while (!(f_lo > 0.0)) {
      hi = lo;
      f_hi = f_lo;
      lo *= 0.5;
      if (lo < 1e-300) return hi;
      f_lo = f(lo);
    }
  }
  while (!std::isfinite(f_lo) && hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid > 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  if (f_hi == 0.0 || !std::isfinite(f_lo)) return hi;
  std::uintmax_t iters = kRootMaxIters;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(kRootBits), iters);
  return 0.5 * (a + b);
}

}  // namespace isea::detail
