#pragma once

#include <optional>
#include <span>
#include <vector>

#include "properscore/core.hpp"

namespace properscore {

/// Derivatives of log p at the outcome. For univariate outcomes `gradient`
/// has one entry (z1 = p'/p) and `laplacian` is z2 = p''/p - (p'/p)^2.
struct DensityDerivatives {
  std::vector<double> gradient;
  double laplacian = 0.0;
};

/// Laplacian(log p)(y) + 1/2 ||grad log p(y)||^2.
ScoreValue hyvarinen_score(const DensityDerivatives& derivatives);
/// Uses the oracle's analytic gradient and Laplacian; never touches the
/// normalization constant. Assumes ||grad log p|| -> 0 at infinity.
ScoreValue hyvarinen_score(const DensityOracle& f, std::span<const double> y);

/// Central differences of the log-density on a (2d+1)-point stencil.
DensityDerivatives finite_difference_derivatives(const DensityOracle& f, std::span<const double> y,
                                                 double step);
/// Default step eps^(1/4) * max(1, |y|_inf), balancing truncation and
/// rounding for the second difference.
double default_fd_step(std::span<const double> y) noexcept;
ScoreValue hyvarinen_score_fd(const DensityOracle& f, std::span<const double> y,
                              std::optional<double> step = std::nullopt);

/// -log cosh z1 + z1 tanh z1 + z2 (1 - tanh^2 z1). The caller asserts the
/// density regularity the score's propriety depends on.
ScoreValue logcosh_score(double z1, double z2);
/// Univariate oracle with analytic derivatives.
ScoreValue logcosh_score(const DensityOracle& f, double y);

/// Built-in oracles with analytic derivatives.
DensityOracle normal_oracle(double mu, double sigma, bool normalized = true);
DensityOracle normal_mixture_oracle(double weight, double mu1, double sigma1, double mu2,
                                    double sigma2);
/// Adds `shift` to the log-density (and marks it unnormalized).
DensityOracle shifted_oracle(DensityOracle f, double shift);

}  // namespace properscore
