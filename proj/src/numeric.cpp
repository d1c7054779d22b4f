#include "properscore/numeric.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "properscore/errors.hpp"

namespace properscore {

void CompensatedSum::add(double x) noexcept {
  if (!std::isfinite(x)) {
    nonfinite_ += x;
    return;
  }
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

double CompensatedSum::value() const noexcept {
  if (nonfinite_ != 0.0 || std::isnan(nonfinite_)) return nonfinite_;
  return sum_ + compensation_;
}

double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

double normal_pdf(double z) noexcept {
  static const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * kPi);
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ValidationError("normal_quantile: probability outside [0,1]");
  }
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

QuadratureResult simpson_halving(const std::function<double(double)>& f, double a, double b,
                                 double tol, int max_levels, int min_levels) {
  QuadratureResult out;
  if (a == b) return out;
  if (!(b > a)) throw ValidationError("simpson_halving: need a < b");

  // Trapezoid sums T_n reuse all earlier nodes; Simpson S_2n = (4 T_2n - T_n) / 3.
  double h = b - a;
  double endpoints = 0.5 * (f(a) + f(b));
  double interior = 0.0;
  out.evaluations = 2;
  double trapezoid = h * endpoints;
  double previous_simpson = 0.0;
  std::size_t intervals = 1;

  for (int level = 1; level <= max_levels; ++level) {
    CompensatedSum added;
    for (std::size_t i = 0; i < intervals; ++i) {
      added += f(a + (static_cast<double>(i) + 0.5) * h);
    }
    out.evaluations += intervals;
    interior += added.value();
    intervals *= 2;
    h *= 0.5;
    const double refined = h * (endpoints + interior);
    const double simpson = (4.0 * refined - trapezoid) / 3.0;
    trapezoid = refined;
    if (!std::isfinite(simpson)) throw NumericError("simpson_halving: non-finite integrand");
    if (level > min_levels) {
      const double err = std::abs(simpson - previous_simpson) / 15.0;
      if (err <= tol) {
        out.value = simpson;
        out.error_estimate = err;
        return out;
      }
    }
    previous_simpson = simpson;
  }
  throw NumericError("simpson_halving: no convergence to tol " + std::to_string(tol) + " on [" +
                     std::to_string(a) + ", " + std::to_string(b) + "]");
}

}  // namespace properscore
