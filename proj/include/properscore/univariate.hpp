#pragma once

#include <span>

#include "properscore/core.hpp"

namespace properscore {

/// Fair: unbiased estimator of the score of the distribution the ensemble
/// was drawn from (pairwise term 1/(2n(n-1))). Empirical: exact score of the
/// ensemble's own discrete measure (pairwise term 1/(2n^2)).
enum class EnsembleVariant { fair, empirical };

std::string_view to_string(EnsembleVariant v) noexcept;
EnsembleVariant parse_variant(std::string_view s, EnsembleVariant fallback = EnsembleVariant::fair);

/// CRPS of an ensemble. Unweighted ensembles use the O(n log n) sorted
/// formula; weighted ones fall back to the O(n^2) kernel form. The fair
/// variant of a weighted ensemble divides the pairwise term by 1 - sum(w^2).
ScoreValue crps_ensemble(std::span<const double> members, double y,
                         EnsembleVariant variant = EnsembleVariant::fair,
                         std::span<const double> weights = {});
ScoreValue crps_ensemble(const Ensemble& ensemble, double y,
                         EnsembleVariant variant = EnsembleVariant::fair);

/// O(n^2) kernel form of the ensemble CRPS, accumulated in index order.
double crps_ensemble_naive(std::span<const double> members, double y, EnsembleVariant variant,
                           std::span<const double> weights = {});

/// sigma * [z(2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)],  z = (y - mu) / sigma.
ScoreValue crps_normal(double mu, double sigma, double y);

/// Integral of (F(x) - 1{y <= x})^2 by piecewise composite Simpson. The
/// domain is split at CDF jumps and at y, and truncated where F or 1 - F
/// drops below 1e-9. Throws NumericError when `tol` is not reached.
ScoreValue crps_numeric(const Forecast& f, double y, double tol = 1e-10);

/// -log p(y); +inf when p(y) = 0. Density oracles must be normalized.
ScoreValue log_score(const Forecast& f, const Observation& y);

/// -2 p(y) + integral of p^2, for categorical and normal forecasts.
ScoreValue quadratic_score(const Forecast& f, const Observation& y);

ScoreValue brier_binary(double p, int y);

/// -p(y)^(alpha-1) / (sum p^alpha)^(1 - 1/alpha); alpha = 2 is spherical.
ScoreValue pseudospherical_score(const Categorical& f, std::size_t y, double alpha);
ScoreValue spherical_score(const Categorical& f, std::size_t y);

/// Threshold-weighted CRPS via the chaining map v(x) = max(x, t).
ScoreValue tw_crps(std::span<const double> members, double y, double threshold,
                   EnsembleVariant variant = EnsembleVariant::fair);

}  // namespace properscore
