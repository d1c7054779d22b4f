#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "properscore/core.hpp"
#include "properscore/univariate.hpp"

namespace properscore {

struct KernelTraits {
  bool translation_invariant = false;
  std::optional<double> homogeneity_degree;
};

/// Symmetric, nonnegative, conditionally negative definite kernel h with
/// h(x, x) finite. Immutable once built.
class Kernel {
 public:
  using Fn = std::function<double(std::span<const double>, std::span<const double>)>;

  Kernel(std::string id, Fn eval, KernelTraits traits);

  double operator()(std::span<const double> x, std::span<const double> y) const { return eval_(x, y); }
  const std::string& id() const noexcept { return id_; }
  const KernelTraits& traits() const noexcept { return traits_; }

 private:
  std::string id_;
  Fn eval_;
  KernelTraits traits_;
};

/// ||x - y||_alpha^beta with beta in (0,2) and alpha in (0,2], beta <= alpha.
/// alpha = 2 is the Euclidean norm; alpha < 1 is only a quasi-norm.
Kernel euclidean_beta_kernel(double beta, double norm_alpha = 2.0);
/// 2 - 2 exp(-||x - y||^2 / lambda), the CND form of the Gaussian kernel.
Kernel gaussian_kernel(double lambda);
/// 2 - 2 exp(-||x - y|| / lambda).
Kernel laplacian_kernel(double lambda);
/// sum_ij w_ij (|x_i - x_j|^p - |y_i - y_j|^p)^2. Without weights, w_ij = 1
/// off the diagonal for whatever dimension is evaluated.
Kernel variogram_kernel(double p, std::optional<Eigen::MatrixXd> weights = std::nullopt);

/// Converts a positive definite kernel k into h = k(x,x) + k(y,y) - 2 k(x,y).
Kernel from_positive_definite(std::string id, Kernel::Fn k, KernelTraits traits);

struct Chaining {
  std::function<std::vector<double>(std::span<const double>)> v;
  std::string label = "v";
};
struct Rescaling {
  std::function<double(std::span<const double>)> w;
  std::string label = "w";
};
using WeightMode = std::variant<Chaining, Rescaling>;

/// h'(x,y) = h(v(x), v(y)) or h'(x,y) = h(x,y) w(x) w(y). Negative w values
/// raise ValidationError at evaluation time.
Kernel weight_transform(const Kernel& h, const WeightMode& mode);

/// Componentwise v(x) = max(x, t).
Chaining threshold_chaining(double t);

/// Registry ids: euclidean_beta|energy (beta, alpha), gaussian (lambda),
/// laplacian (lambda), variogram (p). Chained/rescaled kernels come from
/// weight_transform or from parse_kernel_spec("tw:...").
Kernel kernel_registry(std::string_view id, const std::map<std::string, double>& params);

/// "energy:beta=1.0", "gaussian:lambda=1.0", "laplacian:lambda=1.0",
/// "variogram:p=0.5", "tw:base=energy:beta=1.0,t=0.5", "crps".
Kernel parse_kernel_spec(std::string_view spec);

/// Exact kernel score of an ensemble:
///   sum_i w_i h(x_i, y) - 1/2 sum_ij w_i w_j h(x_i, x_j)   (empirical)
/// with the pairwise term restricted to i != j and divided by 1 - sum w^2
/// for the fair variant.
ScoreValue kernel_score_exact(const Kernel& h, const Ensemble& p, std::span<const double> y,
                              EnsembleVariant variant = EnsembleVariant::fair);

using Sampler = std::function<Ensemble(std::size_t m, std::uint64_t seed)>;

/// Sampler drawing from a forecast with forecast_sample.
Sampler forecast_sampler(Forecast f);

/// Unbiased Monte-Carlo kernel score from m draws with a leave-one-out
/// jackknife standard error (needs m >= 3 for a finite SE).
ScoreValue kernel_score_mc(const Kernel& h, const Sampler& sampler, std::span<const double> y,
                           std::size_t m, std::uint64_t seed);

/// -1/2 iint h d(P-Q) d(P-Q). Evaluated in a canonical argument order, so
/// d(P,Q) and d(Q,P) are bitwise equal.
double kernel_divergence(const Kernel& h, const Ensemble& p, const Ensemble& q);

/// 1/2 sum_ij w_i w_j h(x_i, x_j).
double kernel_entropy(const Kernel& h, const Ensemble& p);

/// Concave nondecreasing g for generalized kernel scores.
struct GFunction {
  std::string id;
  std::function<double(double)> eval;
  std::function<double(double)> derivative;
};

GFunction g_identity();
GFunction g_log1p();
/// sqrt(u + eps) - sqrt(eps), finite derivative at 0.
GFunction g_sqrt_eps(double eps = 1e-9);
GFunction g_function(std::string_view id);

/// Score induced by the entropy g(H_h(P)) on the ensemble's empirical measure:
///   g(H) + g'(H) (int h(x, y) dP(x) - 2 H),   H = H_h(P).
ScoreValue generalized_kernel_score(const Kernel& h, const GFunction& g, const Ensemble& p,
                                    std::span<const double> y);

}  // namespace properscore
