#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "properscore/kernel.hpp"
#include "properscore/rule_spec.hpp"
#include "properscore/scoring.hpp"

namespace properscore {

inline constexpr double kProprietySlack = 1e-9;

/// Expected score sum_k q_k S(P, k); classes with q_k = 0 are skipped, so
/// S(P, Q) is +inf only when P misses mass that Q has.
double expected_categorical_score(const CategoricalRule& rule, const Categorical& p, const Categorical& q);

struct ProprietyReport {
  double grid_step = 0.0;
  std::size_t classes = 0;
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;          ///< S(Q,Q) > S(P,Q) + 1e-9
  std::size_t strictness_failures = 0; ///< margin <= 1e-9 with |P-Q|_inf > grid_step/2
  double worst_margin = 0.0;           ///< min over pairs of S(P,Q) - S(Q,Q)
  std::optional<std::pair<Categorical, Categorical>> witness;  ///< (P, Q) of the worst violation
};

/// All ordered pairs of points on the simplex grid with spacing grid_step
/// (1/grid_step must be an integer). Throws NumericError if the rule is not
/// finite at an interior grid point.
ProprietyReport propriety_scan(const CategoricalRule& rule, std::size_t classes, double grid_step);

/// Re-evaluates the witness; true if it still violates propriety.
bool replay_witness(const CategoricalRule& rule, const ProprietyReport& report);

struct ConcavityReport {
  std::size_t trials = 0;
  std::size_t violations = 0;  ///< gap < -1e-12
  double worst_gap = 0.0;      ///< min of H(mix) - lambda H(P) - (1 - lambda) H(Q)
  std::uint64_t seed = 0;
  std::optional<std::pair<Categorical, Categorical>> witness;
  double witness_lambda = 0.0;
};

using EntropyFn = std::function<double(const Categorical&)>;

/// H(P) = sum_k p_k S(P, k).
EntropyFn entropy_of(const CategoricalRule& rule);

/// Random (P, Q, lambda) triples with P, Q uniform on the simplex. A fixed
/// lambda (0.5 for midpoint concavity) replaces the random draw.
ConcavityReport concavity_scan(const EntropyFn& entropy, std::size_t classes, std::size_t trials,
                               std::uint64_t seed, std::optional<double> lambda = std::nullopt);
ConcavityReport concavity_scan(const CategoricalRule& rule, std::size_t classes, std::size_t trials,
                               std::uint64_t seed, std::optional<double> lambda = std::nullopt);

struct Transform {
  enum class Kind { translate, scale, rotate } kind = Kind::translate;
  double shift = 0.0;   ///< translate: added to every coordinate
  double c = 1.0;       ///< scale factor
  double degree = 1.0;  ///< scale: expected homogeneity degree
  std::optional<Eigen::MatrixXd> rotation;  ///< rotate: fixed U; random per instance if absent
};

struct InvarianceReport {
  std::string transform;
  std::size_t instances = 0;
  std::size_t violations = 0;  ///< relative error above 1e-10
  double worst_relative_error = 0.0;
};

/// Scores random ensembles and outcomes before and after the transform and
/// compares against the declared relation. Rotations need dim >= 2 and a
/// multivariate kernel rule; CRPS needs dim = 1.
InvarianceReport invariance_check(const ScoringRuleSpec& rule, const Transform& transform,
                                  std::size_t instances, std::uint64_t seed, std::size_t dim = 1,
                                  std::size_t members = 20);

/// Haar-random rotation (determinant +1).
Eigen::MatrixXd random_rotation(std::size_t dim, std::uint64_t seed);

struct SymmetryReport {
  std::string kernel;
  std::size_t triples = 0;
  std::size_t symmetry_violations = 0;  ///< |d(P,Q) - d(Q,P)| > 1e-12
  std::size_t triangle_violations = 0;  ///< sqrt d(P,R) > sqrt d(P,Q) + sqrt d(Q,R) + 1e-12
  double max_asymmetry = 0.0;
  double max_self_divergence = 0.0;     ///< max d(P,P)
  double worst_triangle_slack = 0.0;    ///< min of sqrt d(P,Q) + sqrt d(Q,R) - sqrt d(P,R)
};

SymmetryReport symmetry_metric_check(const Kernel& h, std::size_t triples, std::uint64_t seed,
                                     std::size_t dim = 1, std::size_t members = 6);

/// Divergence of the logarithmic score, S(P,Q) - S(Q,Q) = KL(Q || P).
double log_divergence(const Categorical& p, const Categorical& q);

struct RepresentationReport {
  std::size_t instances = 0;
  std::size_t failures = 0;  ///< discrepancy above the tolerance
  double max_discrepancy = 0.0;
};

/// CDF-integral CRPS (quadrature) against the kernel form (empirical
/// variant) on the given instances.
RepresentationReport crps_representation_check(const std::vector<std::pair<Ensemble, double>>& instances,
                                               double tolerance = 1e-6);
/// Random ensembles with 1 to 30 members, ties included.
RepresentationReport crps_representation_check(std::size_t instances, std::uint64_t seed,
                                               double tolerance = 1e-6);

enum class SpectralKernel { energy, gaussian };

struct NormalPair {
  double mu_p, sigma_p, mu_q, sigma_q;
};

struct SpectralReport {
  std::string kernel;
  std::size_t pairs = 0;
  std::size_t zero_pairs = 0;  ///< P = Q: both sides 0, excluded from the ratio
  std::vector<double> ratios;
  double spread = 0.0;  ///< (max - min) / mean of the ratios
  bool constant = false;
};

/// Closed-form kernel divergence between two normals.
double normal_pair_divergence(SpectralKernel kernel, double lambda, const NormalPair& pair);

/// Integral over u > 0 of |f_P(u) - f_Q(u)|^2 m(u), with m(u) = u^-2 for the
/// energy kernel (beta = 1) and exp(-lambda u^2 / 4) for the Gaussian kernel
/// 2 - 2 exp(-d^2 / lambda).
double spectral_integral(SpectralKernel kernel, double lambda, const NormalPair& pair);

SpectralReport spectral_proportionality_check(SpectralKernel kernel, double lambda,
                                              const std::vector<NormalPair>& pairs,
                                              double tolerance = 0.02);
std::vector<NormalPair> random_normal_pairs(std::size_t count, std::uint64_t seed);

}  // namespace properscore
