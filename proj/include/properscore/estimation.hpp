#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace properscore {

struct FitResult {
  std::vector<double> params;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  double tol = 1e-10;         ///< simplex diameter (max vertex distance from the best)
  int max_iter = 20000;       ///< per run
  int restarts = 3;           ///< seeded restarts from the incumbent
  std::uint64_t seed = 0;
  double initial_step = 0.1;  ///< relative to max(1, |x_i|)
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// Restarts rebuild the simplex around the incumbent with a seeded random
/// orientation; the best vertex over all runs is returned. Throws
/// ValidationError if the objective is not finite at x0.
FitResult nelder_mead(const Objective& objective, std::vector<double> x0,
                      const NelderMeadOptions& options = {});

enum class FitRule { log, crps };

FitRule parse_fit_rule(std::string_view s);

/// Smallest sigma the fitters will report; the log-parameter is clamped at
/// log(kSigmaFloor).
inline constexpr double kSigmaFloor = 1e-8;

/// Mean score of N(mu, sigma^2) over the data.
double mean_normal_score(FitRule rule, double mu, double sigma, std::span<const double> data);

/// Minimum-score fit of N(mu, sigma^2); params = {mu, sigma}.
FitResult fit_min_score(FitRule rule, std::span<const double> data,
                        const NelderMeadOptions& options = {});

/// Mean score of N(a + b x_j, sigma^2) over pairs (x_j, y_j).
double mean_conditional_score(FitRule rule, double a, double b, double sigma,
                              std::span<const double> x, std::span<const double> y);

/// Minimum-score fit of Y | x ~ N(a + b x, sigma^2); params = {a, b, sigma}.
FitResult fit_conditional_min_score(FitRule rule, std::span<const double> x,
                                    std::span<const double> y,
                                    const NelderMeadOptions& options = {});

}  // namespace properscore
