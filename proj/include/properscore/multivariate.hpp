#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "properscore/core.hpp"
#include "properscore/univariate.hpp"

namespace properscore {

/// Energy score of an ensemble in R^d: mean ||X - y||^beta minus half the
/// (variant-dependent) mean pairwise ||X - X'||^beta. With `norm_alpha` the
/// alpha-"norm" replaces the Euclidean one; alpha < 1 is flagged as a
/// quasi-norm in the result notes.
ScoreValue energy_score(const Ensemble& members, std::span<const double> y, double beta,
                        EnsembleVariant variant = EnsembleVariant::fair,
                        std::optional<double> norm_alpha = std::nullopt);

/// w_ij = 1 off the diagonal, 0 on it.
Eigen::MatrixXd default_variogram_weights(std::size_t d);

/// sum_ij w_ij (|y_i - y_j|^p - E|X_i - X_j|^p)^2 with the expectation taken
/// over the (weighted) ensemble.
ScoreValue variogram_score(const Ensemble& members, std::span<const double> y, double p,
                           const std::optional<Eigen::MatrixXd>& weights = std::nullopt);

/// log det(cov) + (y - mean)^T cov^{-1} (y - mean).
ScoreValue dawid_sebastiani(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                            std::span<const double> y);

/// Dawid-Sebastiani score at the sample mean and unbiased sample covariance.
ScoreValue dawid_sebastiani_from_ensemble(const Ensemble& members, std::span<const double> y);

}  // namespace properscore
