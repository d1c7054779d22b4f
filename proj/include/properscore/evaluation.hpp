#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "properscore/core.hpp"

namespace properscore {

using Scorer = std::function<ScoreValue(const Forecast&, const Observation&)>;

/// Mean realized score, summed in index order with compensation. +inf
/// propagates.
double mean_score(const Scorer& scorer, std::span<const Forecast> forecasts,
                  std::span<const Observation> obs);

struct ComparisonReport {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double diff = 0.0;  ///< mean_a - mean_b
  std::size_t n = 0;
  double naive_se_diff = 0.0;  ///< sd of paired differences / sqrt(n); 0 when n = 1
  bool degenerate = false;     ///< n = 1
};

ComparisonReport compare(const Scorer& scorer, std::span<const Forecast> forecasts_a,
                         std::span<const Forecast> forecasts_b, std::span<const Observation> obs);

enum class DecompositionRule { brier_binary, quadratic };
DecompositionRule parse_decomposition_rule(std::string_view s);

struct DecompositionReport {
  double mcb = 0.0;
  double dsc = 0.0;
  double unc = 0.0;
  double mean_score = 0.0;
  std::size_t groups = 0;
};

/// Miscalibration / discrimination / uncertainty split of the mean score.
/// Forecasts are grouped by exact equality, or with `bins` by the
/// equal-width probability bin of every component. In binned mode each
/// forecast is replaced by its group's mean forecast before scoring, and the
/// identity mean = MCB - DSC + UNC holds for those binned forecasts.
DecompositionReport corp_decompose(DecompositionRule rule, std::span<const Categorical> forecasts,
                                   std::span<const std::size_t> obs,
                                   std::optional<std::size_t> bins = std::nullopt);

struct Functional {
  enum class Kind { mean, quantile } kind = Kind::mean;
  double tau = 0.5;
};
Functional parse_functional(std::string_view name, double tau = 0.5);

double forecast_mean(const Forecast& f);
/// Quantile by CDF inversion. Where the CDF sits exactly at tau on a flat
/// stretch (ensembles, categorical) the midpoint of the stretch is returned,
/// so the median of {0, 1} is 0.5.
double forecast_quantile(const Forecast& f, double tau);

/// Squared error at the mean, or the pinball loss at the tau-quantile.
/// Proper, not strictly proper.
ScoreValue functional_score(const Functional& functional, const Forecast& f, double y);

}  // namespace properscore
