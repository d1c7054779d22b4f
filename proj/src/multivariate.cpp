#include "properscore/multivariate.hpp"

#include <cmath>

#include "properscore/kernel.hpp"
#include "properscore/numeric.hpp"

namespace properscore {

ScoreValue energy_score(const Ensemble& members, std::span<const double> y, double beta,
                        EnsembleVariant variant, std::optional<double> norm_alpha) {
  if (!(beta > 0.0 && beta < 2.0)) throw ValidationError("energy_score: beta must lie in (0,2)");
  if (members.dim() != y.size()) throw ValidationError("energy_score: dimension mismatch");
  const double alpha = norm_alpha.value_or(2.0);
  ScoreValue out = kernel_score_exact(euclidean_beta_kernel(beta, alpha), members, y, variant);
  if (alpha < 1.0) out.note("quasi-norm alpha<1");
  return out;
}

Eigen::MatrixXd default_variogram_weights(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, n);
  w.diagonal().setZero();
  return w;
}

ScoreValue variogram_score(const Ensemble& members, std::span<const double> y, double p,
                           const std::optional<Eigen::MatrixXd>& weights) {
  if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("variogram_score: p must be > 0");
  const std::size_t d = members.dim();
  if (y.size() != d) throw ValidationError("variogram_score: dimension mismatch");
  if (d < 2) throw ValidationError("variogram_score: needs dimension >= 2");
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("variogram_score: non-finite outcome");
  }
  const Eigen::MatrixXd w = weights ? *weights : default_variogram_weights(d);
  if (w.rows() != static_cast<Eigen::Index>(d) || w.cols() != static_cast<Eigen::Index>(d)) {
    throw ValidationError("variogram_score: weight matrix dimension mismatch");
  }
  if ((w.array() < 0.0).any() || !w.allFinite()) {
    throw ValidationError("variogram_score: negative weights");
  }

  CompensatedSum total;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double wij = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (wij == 0.0) continue;
      CompensatedSum expected;
      for (std::size_t k = 0; k < members.size(); ++k) {
        const auto x = members.member(k);
        expected += members.weight(k) * std::pow(std::abs(x[i] - x[j]), p);
      }
      const double diff = std::pow(std::abs(y[i] - y[j]), p) - expected.value();
      total += wij * diff * diff;
    }
  }
  return ScoreValue(total.value(), Method::naive_exact);
}

ScoreValue dawid_sebastiani(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                            std::span<const double> y) {
  if (static_cast<std::size_t>(mean.size()) != y.size()) {
    throw ValidationError("dawid_sebastiani: dimension mismatch");
  }
  if (cov.rows() != mean.size()) throw ValidationError("dawid_sebastiani: covariance shape mismatch");
  const Eigen::MatrixXd lower = spd_cholesky(cov);
  const Eigen::VectorXd residual =
      Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())) - mean;
  if (!residual.allFinite()) throw ValidationError("dawid_sebastiani: non-finite input");
  const Eigen::VectorXd whitened = lower.triangularView<Eigen::Lower>().solve(residual);
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  return ScoreValue(log_det + whitened.squaredNorm(), Method::closed_form);
}

ScoreValue dawid_sebastiani_from_ensemble(const Ensemble& members, std::span<const double> y) {
  const std::size_t n = members.size();
  const std::size_t d = members.dim();
  if (n <= d) throw ValidationError("dawid_sebastiani: need more members than dimensions");
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      members.flat().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::VectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  ScoreValue out = dawid_sebastiani(mean, cov, y);
  out.note("moments=sample");
  return out;
}

}  // namespace properscore
