#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "properscore/errors.hpp"

namespace properscore {

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

struct Category {
  std::size_t index = 0;
  auto operator<=>(const Category&) const = default;
};

/// Realized outcome: a real scalar, a real vector, or a category index.
using Observation = std::variant<double, std::vector<double>, Category>;

/// Checks finiteness and non-empty vectors; throws ValidationError.
void validate_observation(const Observation& y);

double observation_scalar(const Observation& y);
std::vector<double> observation_vector(const Observation& y);
std::size_t observation_category(const Observation& y);

// ---------------------------------------------------------------------------
// Forecast representations
// ---------------------------------------------------------------------------

inline constexpr double kSimplexTolerance = 1e-12;

/// Probability vector over classes 0..n-1. Rejects (never renormalizes)
/// vectors whose sum is off by more than kSimplexTolerance.
class Categorical {
 public:
  explicit Categorical(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double prob(std::size_t k) const { return probs_.at(k); }

  friend bool operator==(const Categorical&, const Categorical&) = default;

 private:
  std::vector<double> probs_;
};

/// Weighted point cloud in R^d, stored row-major. Weights default to uniform.
class Ensemble {
 public:
  /// Univariate ensemble.
  explicit Ensemble(std::vector<double> members, std::vector<double> weights = {});
  /// d-dimensional ensemble from row-major storage of n*d values.
  Ensemble(std::size_t dim, std::vector<double> flat_members, std::vector<double> weights = {});

  static Ensemble from_points(const std::vector<std::vector<double>>& points,
                              std::vector<double> weights = {});

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> member(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const double> flat() const noexcept { return data_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t i) const noexcept { return weights_[i]; }
  /// True when the weights are not all identical (explicit uniform weights count as unweighted).
  bool weighted() const noexcept { return weighted_; }

  friend bool operator==(const Ensemble& a, const Ensemble& b) {
    return a.dim_ == b.dim_ && a.data_ == b.data_ && a.weights_ == b.weights_;
  }

 private:
  void validate_and_fill_weights();

  std::size_t dim_;
  std::vector<double> data_;
  std::vector<double> weights_;
  bool weighted_ = false;
};

class Normal {
 public:
  Normal(double mu, double sigma);
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  friend bool operator==(const Normal&, const Normal&) = default;

 private:
  double mu_;
  double sigma_;
};

/// Multivariate normal with symmetric positive definite covariance.
class MvNormal {
 public:
  MvNormal(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  /// Lower Cholesky factor, used for sampling.
  const Eigen::MatrixXd& cholesky_lower() const noexcept { return chol_; }

  friend bool operator==(const MvNormal& a, const MvNormal& b) {
    return a.mean_ == b.mean_ && a.cov_ == b.cov_;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
};

/// Log-density known up to an additive constant, with optional analytic
/// derivatives. Oracles must be reentrant.
struct DensityOracle {
  using ScalarFn = std::function<double(std::span<const double>)>;
  using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

  std::size_t dim = 1;
  ScalarFn log_density;
  VectorFn gradient;   ///< optional: gradient of log p
  ScalarFn laplacian;  ///< optional: Laplacian of log p
  bool normalized = false;
};

using Forecast = std::variant<Categorical, Ensemble, Normal, MvNormal, DensityOracle>;

std::string_view forecast_kind(const Forecast& f) noexcept;

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

enum class Method { closed_form, fast_exact, naive_exact, numeric_quadrature, monte_carlo };

std::string_view to_string(Method m) noexcept;

/// Extended-real score. NaN and -inf are rejected at construction; `se` is
/// present exactly when the method is Monte-Carlo.
struct ScoreValue {
  ScoreValue(double value, Method method, std::optional<double> se = std::nullopt);

  double value;
  Method method;
  std::optional<double> se;
  std::vector<std::string> notes;

  ScoreValue& note(std::string n) {
    notes.push_back(std::move(n));
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Parsing and services
// ---------------------------------------------------------------------------

Forecast parse_forecast(const nlohmann::json& record);
Forecast parse_forecast(std::string_view json_line);
nlohmann::json serialize_forecast(const Forecast& f);

Observation parse_observation(const nlohmann::json& record);
Observation parse_observation(std::string_view json_line);
nlohmann::json serialize_observation(const Observation& y);

/// Lower Cholesky factor of a symmetric positive definite matrix. Rejects
/// asymmetry beyond 1e-12 relative and pivots below 1e-12 * max diagonal.
Eigen::MatrixXd spd_cholesky(const Eigen::MatrixXd& cov);

/// CDF of a univariate forecast. Categorical classes sit at 0, 1, ..., n-1.
double forecast_cdf(const Forecast& f, double x);

/// m draws from f, deterministic in (seed, stream). Categorical draws are
/// class indices; ensembles are bootstrapped by weight.
Ensemble forecast_sample(const Forecast& f, std::size_t m, std::uint64_t seed,
                         std::uint64_t stream = 0);

}  // namespace properscore
