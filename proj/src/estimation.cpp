#include "properscore/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "properscore/errors.hpp"
#include "properscore/numeric.hpp"
#include "properscore/rng.hpp"
#include "properscore/univariate.hpp"

namespace properscore {

namespace {

struct Vertex {
  std::vector<double> x;
  double f;
};

double safe_eval(const Objective& objective, std::span<const double> x) {
  const double v = objective(x);
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// One Nelder-Mead run from an explicit initial simplex.
FitResult run_simplex(const Objective& objective, std::vector<Vertex> simplex, double tol, int max_iter) {
  const std::size_t n = simplex.size() - 1;
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  auto point = [n](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = c[i] + t * (w[i] - c[i]);
    return out;
  };

  FitResult result;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) diameter = std::max(diameter, distance(simplex[i].x, simplex[0].x));
    if (diameter <= tol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i].x[k];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    Vertex& worst = simplex[n];
    Vertex reflected{point(centroid, worst.x, -1.0), 0.0};
    reflected.f = safe_eval(objective, reflected.x);

    if (reflected.f < simplex[0].f) {
      Vertex expanded{point(centroid, worst.x, -2.0), 0.0};
      expanded.f = safe_eval(objective, expanded.x);
      worst = expanded.f < reflected.f ? std::move(expanded) : std::move(reflected);
      continue;
    }
    if (reflected.f < simplex[n - 1].f) {
      worst = std::move(reflected);
      continue;
    }
    const bool outside = reflected.f < worst.f;
    Vertex contracted{outside ? point(centroid, reflected.x, 0.5) : point(centroid, worst.x, 0.5), 0.0};
    contracted.f = safe_eval(objective, contracted.x);
    if (outside ? contracted.f <= reflected.f : contracted.f < worst.f) {
      worst = std::move(contracted);
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      simplex[i].x = point(simplex[0].x, simplex[i].x, 0.5);
      simplex[i].f = safe_eval(objective, simplex[i].x);
    }
  }
  std::stable_sort(simplex.begin(), simplex.end(), by_value);
  result.params = simplex[0].x;
  result.objective = simplex[0].f;
  result.iterations = iter;
  return result;
}

std::vector<Vertex> axis_simplex(const Objective& objective, const std::vector<double>& x0,
                                 std::span<const double> steps) {
  std::vector<Vertex> simplex{{x0, safe_eval(objective, x0)}};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    std::vector<double> v = x0;
    v[i] += steps[i];
    simplex.push_back({v, safe_eval(objective, v)});
  }
  return simplex;
}

void check_sample(std::span<const double> data, std::size_t min_size, const char* what) {
  if (data.size() < min_size) {
    throw ValidationError(std::string(what) + ": need at least " + std::to_string(min_size) + " values");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite value");
  }
}

double clamped_sigma(double log_sigma) { return std::exp(std::max(log_sigma, std::log(kSigmaFloor))); }

double normal_score(FitRule rule, double mu, double sigma, double y) {
  if (rule == FitRule::crps) return crps_normal(mu, sigma, y).value;
  const double z = (y - mu) / sigma;
  return 0.5 * std::log(2.0 * kPi) + std::log(sigma) + 0.5 * z * z;
}

}  // namespace

FitResult nelder_mead(const Objective& objective, std::vector<double> x0, const NelderMeadOptions& options) {
  if (x0.empty()) throw ValidationError("nelder_mead: empty starting point");
  const double f0 = objective(x0);
  if (!std::isfinite(f0)) throw ValidationError("nelder_mead: objective is not finite at x0");
  if (options.max_iter <= 0) return FitResult{x0, f0, 0, false};

  const std::size_t n = x0.size();
  std::vector<double> steps(n);
  for (std::size_t i = 0; i < n; ++i) steps[i] = options.initial_step * std::max(1.0, std::abs(x0[i]));

  FitResult best = run_simplex(objective, axis_simplex(objective, x0, steps), options.tol, options.max_iter);
  int total_iterations = best.iterations;
  bool all_converged = best.converged;

  Philox4x32 rng(options.seed);
  for (int r = 0; r < options.restarts; ++r) {
    std::vector<double> jittered(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      jittered[i] = sign * (0.5 + rng.uniform()) * options.initial_step * std::max(1.0, std::abs(best.params[i]));
    }
    FitResult run = run_simplex(objective, axis_simplex(objective, best.params, jittered), options.tol,
                                options.max_iter);
    total_iterations += run.iterations;
    all_converged = all_converged && run.converged;
    if (run.objective <= best.objective) best = std::move(run);
  }
  best.iterations = total_iterations;
  best.converged = all_converged;
  return best;
}

FitRule parse_fit_rule(std::string_view s) {
  if (s == "log") return FitRule::log;
  if (s == "crps" || s == "crps:fair" || s == "crps:empirical") return FitRule::crps;
  throw ValidationError("fit: rule must be 'log' or 'crps'");
}

double mean_normal_score(FitRule rule, double mu, double sigma, std::span<const double> data) {
  CompensatedSum s;
  for (double y : data) s += normal_score(rule, mu, sigma, y);
  return s.value() / static_cast<double>(data.size());
}

FitResult fit_min_score(FitRule rule, std::span<const double> data, const NelderMeadOptions& options) {
  check_sample(data, 2, "fit_min_score");
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  if (*lo == *hi) throw ValidationError("fit_min_score: degenerate data (all values equal)");

  const double n = static_cast<double>(data.size());
  const double mean = compensated_sum(data) / n;
  CompensatedSum ss;
  for (double y : data) ss += (y - mean) * (y - mean);
  const double sd = std::sqrt(ss.value() / n);

  auto objective = [&](std::span<const double> p) {
    return mean_normal_score(rule, p[0], clamped_sigma(p[1]), data);
  };
  FitResult fit = nelder_mead(objective, {mean, std::log(sd)}, options);
  fit.params[1] = clamped_sigma(fit.params[1]);
  return fit;
}

double mean_conditional_score(FitRule rule, double a, double b, double sigma, std::span<const double> x,
                              std::span<const double> y) {
  CompensatedSum s;
  for (std::size_t j = 0; j < x.size(); ++j) s += normal_score(rule, a + b * x[j], sigma, y[j]);
  return s.value() / static_cast<double>(x.size());
}

FitResult fit_conditional_min_score(FitRule rule, std::span<const double> x, std::span<const double> y,
                                    const NelderMeadOptions& options) {
  if (x.size() != y.size()) throw ValidationError("fit_conditional: x and y differ in length");
  check_sample(x, 3, "fit_conditional");
  check_sample(y, 3, "fit_conditional");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw ValidationError("fit_conditional: degenerate design (single distinct x)");

  // Ordinary least squares start.
  const double n = static_cast<double>(x.size());
  const double xm = compensated_sum(x) / n;
  const double ym = compensated_sum(y) / n;
  CompensatedSum sxy, sxx;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sxy += (x[j] - xm) * (y[j] - ym);
    sxx += (x[j] - xm) * (x[j] - xm);
  }
  const double b0 = sxy.value() / sxx.value();
  const double a0 = ym - b0 * xm;
  CompensatedSum rss;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = y[j] - a0 - b0 * x[j];
    rss += r * r;
  }
  const double s0 = std::log(std::max(std::sqrt(rss.value() / n), kSigmaFloor));

  auto objective = [&](std::span<const double> p) {
    return mean_conditional_score(rule, p[0], p[1], clamped_sigma(p[2]), x, y);
  };
  FitResult fit = nelder_mead(objective, {a0, b0, s0}, options);
  fit.params[2] = clamped_sigma(fit.params[2]);
  return fit;
}

}  // namespace properscore
