#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace properscore {

/// Neumaier-compensated running sum. Non-finite terms are accumulated
/// separately so that +inf propagates instead of poisoning the compensation.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept;

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
  double nonfinite_ = 0.0;
};

double compensated_sum(std::span<const double> xs) noexcept;

inline constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double z) noexcept;
double normal_cdf(double z) noexcept;
double normal_quantile(double p);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

/// Composite Simpson rule on [a, b], halving the step until two successive
/// estimates agree to within 15 * tol (Richardson estimate <= tol).
/// Throws NumericError when `max_levels` halvings do not reach tol.
QuadratureResult simpson_halving(const std::function<double(double)>& f, double a, double b,
                                 double tol, int max_levels = 22, int min_levels = 2);

}  // namespace properscore
