#include "properscore/propriety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "properscore/errors.hpp"
#include "properscore/numeric.hpp"
#include "properscore/rng.hpp"
#include "properscore/univariate.hpp"

namespace properscore {

namespace {

constexpr double kConcavitySlack = 1e-12;
constexpr double kInvarianceTolerance = 1e-10;
constexpr double kSymmetryTolerance = 1e-12;

// All compositions of `total` into `parts` nonnegative integers.
void compositions(std::size_t parts, std::size_t total, std::vector<std::size_t>& current,
                  std::vector<std::vector<std::size_t>>& out) {
  if (current.size() + 1 == parts) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= total; ++k) {
    current.push_back(k);
    compositions(parts, total - k, current, out);
    current.pop_back();
  }
}

std::vector<Categorical> simplex_grid(std::size_t classes, double grid_step) {
  if (classes < 2) throw ValidationError("propriety: need at least two classes");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw ValidationError("propriety: grid step must lie in (0,1]");
  const double steps = std::round(1.0 / grid_step);
  if (std::abs(steps * grid_step - 1.0) > 1e-9) {
    throw ValidationError("propriety: 1/grid_step must be an integer");
  }
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::size_t> current;
  compositions(classes, static_cast<std::size_t>(steps), current, counts);
  std::vector<Categorical> grid;
  grid.reserve(counts.size());
  for (const auto& c : counts) {
    std::vector<double> p(classes);
    for (std::size_t k = 0; k < classes; ++k) p[k] = static_cast<double>(c[k]) / steps;
    grid.emplace_back(std::move(p));
  }
  return grid;
}

double sup_distance(const Categorical& p, const Categorical& q) {
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) d = std::max(d, std::abs(p.prob(k) - q.prob(k)));
  return d;
}

Categorical random_simplex_point(Philox4x32& rng, std::size_t classes) {
  std::vector<double> e(classes);
  for (double& v : e) v = -std::log1p(-rng.uniform());
  const double total = compensated_sum(e);
  for (double& v : e) v /= total;
  return Categorical(std::move(e));
}

Observation as_observation(std::span<const double> y) {
  if (y.size() == 1) return y[0];
  return std::vector<double>(y.begin(), y.end());
}

std::string transform_name(const Transform& t) {
  switch (t.kind) {
    case Transform::Kind::translate:
      return "translate";
    case Transform::Kind::scale:
      return "scale";
    case Transform::Kind::rotate:
      return "rotate";
  }
  return "unknown";
}

Ensemble random_ensemble(Philox4x32& rng, std::size_t members, std::size_t dim) {
  std::vector<double> flat(members * dim);
  const double location = 4.0 * rng.uniform() - 2.0;
  const double spread = 0.5 + 1.5 * rng.uniform();
  for (double& v : flat) v = location + spread * rng.normal();
  return Ensemble(dim, std::move(flat));
}

}  // namespace

double expected_categorical_score(const CategoricalRule& rule, const Categorical& p, const Categorical& q) {
  if (p.size() != q.size()) throw ValidationError("expected score: class counts differ");
  CompensatedSum s;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q.prob(k) > 0.0) s += q.prob(k) * rule(p, k);
  }
  return s.value();
}

ProprietyReport propriety_scan(const CategoricalRule& rule, std::size_t classes, double grid_step) {
  const auto grid = simplex_grid(classes, grid_step);
  for (const auto& p : grid) {
    const bool interior = std::all_of(p.probs().begin(), p.probs().end(), [](double v) { return v > 0.0; });
    for (std::size_t k = 0; k < classes; ++k) {
      const double v = rule(p, k);
      if (std::isnan(v) || (interior && !std::isfinite(v))) {
        throw NumericError("propriety: rule is not finite at an interior grid point");
      }
    }
  }

  std::vector<double> self(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) self[j] = expected_categorical_score(rule, grid[j], grid[j]);

  ProprietyReport report;
  report.grid_step = grid_step;
  report.classes = classes;
  report.worst_margin = std::numeric_limits<double>::infinity();
  double worst_violation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double margin = expected_categorical_score(rule, grid[i], grid[j]) - self[j];
      ++report.pairs_checked;
      report.worst_margin = std::min(report.worst_margin, margin);
      if (margin < -kProprietySlack) {
        ++report.violations;
        if (margin < worst_violation) {
          worst_violation = margin;
          report.witness.emplace(grid[i], grid[j]);
        }
      }
      if (!(margin > kProprietySlack) && sup_distance(grid[i], grid[j]) > grid_step / 2.0) {
        ++report.strictness_failures;
      }
    }
  }
  return report;
}

bool replay_witness(const CategoricalRule& rule, const ProprietyReport& report) {
  if (!report.witness) return false;
  const auto& [p, q] = *report.witness;
  return expected_categorical_score(rule, p, q) - expected_categorical_score(rule, q, q) < -kProprietySlack;
}

EntropyFn entropy_of(const CategoricalRule& rule) {
  return [rule](const Categorical& p) { return expected_categorical_score(rule, p, p); };
}

ConcavityReport concavity_scan(const EntropyFn& entropy, std::size_t classes, std::size_t trials,
                               std::uint64_t seed, std::optional<double> lambda) {
  if (classes < 2) throw ValidationError("concavity: need at least two classes");
  if (lambda && !(*lambda >= 0.0 && *lambda <= 1.0)) throw ValidationError("concavity: lambda outside [0,1]");
  Philox4x32 rng(seed);
  ConcavityReport report;
  report.trials = trials;
  report.seed = seed;
  report.worst_gap = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const Categorical p = random_simplex_point(rng, classes);
    const Categorical q = random_simplex_point(rng, classes);
    const double l = lambda ? *lambda : rng.uniform();
    std::vector<double> mix(classes);
    for (std::size_t k = 0; k < classes; ++k) mix[k] = l * p.prob(k) + (1.0 - l) * q.prob(k);
    const double hp = entropy(p);
    const double hq = entropy(q);
    const double hm = entropy(Categorical(std::move(mix)));
    if (!std::isfinite(hp) || !std::isfinite(hq) || !std::isfinite(hm)) {
      throw NumericError("concavity: non-finite entropy");
    }
    const double gap = hm - l * hp - (1.0 - l) * hq;
    if (gap < report.worst_gap) report.worst_gap = gap;
    if (gap < -kConcavitySlack) {
      if (report.violations == 0 || gap <= report.worst_gap) {
        report.witness.emplace(p, q);
        report.witness_lambda = l;
      }
      ++report.violations;
    }
  }
  return report;
}

ConcavityReport concavity_scan(const CategoricalRule& rule, std::size_t classes, std::size_t trials,
                               std::uint64_t seed, std::optional<double> lambda) {
  return concavity_scan(entropy_of(rule), classes, trials, seed, lambda);
}

Eigen::MatrixXd random_rotation(std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw ValidationError("rotation: needs dimension >= 2");
  Philox4x32 rng(seed, 1);
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return q;
}

InvarianceReport invariance_check(const ScoringRuleSpec& rule, const Transform& transform,
                                  std::size_t instances, std::uint64_t seed, std::size_t dim,
                                  std::size_t members) {
  if (dim == 0 || members < 2) throw ValidationError("invariance: need dim >= 1 and at least two members");
  const bool univariate_rule = rule.rule == "crps" || (rule.rule == "tw" && rule.base->rule == "crps");
  if (univariate_rule && dim != 1) throw ValidationError("invariance: rule '" + rule.rule + "' is univariate");
  if (transform.kind == Transform::Kind::rotate) {
    if (dim < 2 || univariate_rule) {
      throw ValidationError("invariance: rotation is not applicable to rule '" + rule.rule + "' in dimension " +
                            std::to_string(dim));
    }
    if (transform.rotation && transform.rotation->rows() != static_cast<Eigen::Index>(dim)) {
      throw ValidationError("invariance: rotation matrix has the wrong dimension");
    }
  }
  if (transform.kind == Transform::Kind::scale && !(transform.c > 0.0)) {
    throw ValidationError("invariance: scale factor must be positive");
  }

  Philox4x32 rng(seed);
  InvarianceReport report;
  report.transform = transform_name(transform);
  report.instances = instances;
  const auto d = static_cast<Eigen::Index>(dim);
  for (std::size_t t = 0; t < instances; ++t) {
    const Ensemble p = random_ensemble(rng, members, dim);
    std::vector<double> y(dim);
    for (double& v : y) v = p.member(0)[0] + 2.0 * rng.normal();

    std::vector<double> flat(p.flat().begin(), p.flat().end());
    std::vector<double> ty = y;
    double expected_factor = 1.0;
    switch (transform.kind) {
      case Transform::Kind::translate:
        for (double& v : flat) v += transform.shift;
        for (double& v : ty) v += transform.shift;
        break;
      case Transform::Kind::scale:
        for (double& v : flat) v *= transform.c;
        for (double& v : ty) v *= transform.c;
        expected_factor = std::pow(transform.c, transform.degree);
        break;
      case Transform::Kind::rotate: {
        const Eigen::MatrixXd u = transform.rotation ? *transform.rotation : random_rotation(dim, seed + t);
        for (std::size_t i = 0; i < members; ++i) {
          Eigen::Map<Eigen::VectorXd> row(flat.data() + i * dim, d);
          row = (u * row).eval();
        }
        Eigen::Map<Eigen::VectorXd> yrow(ty.data(), d);
        yrow = (u * yrow).eval();
        break;
      }
    }
    const double original = score(rule, p, as_observation(y)).value;
    const double transformed = score(rule, Ensemble(dim, std::move(flat)), as_observation(ty)).value;
    const double expected = expected_factor * original;
    const double rel = std::abs(transformed - expected) / std::max(std::abs(expected), 1e-300);
    report.worst_relative_error = std::max(report.worst_relative_error, rel);
    if (!(rel <= kInvarianceTolerance)) ++report.violations;
  }
  return report;
}

SymmetryReport symmetry_metric_check(const Kernel& h, std::size_t triples, std::uint64_t seed,
                                     std::size_t dim, std::size_t members) {
  if (dim == 0 || members == 0) throw ValidationError("symmetry: need dim >= 1 and members >= 1");
  Philox4x32 rng(seed);
  SymmetryReport report;
  report.kernel = h.id();
  report.triples = triples;
  report.worst_triangle_slack = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < triples; ++t) {
    const Ensemble p = random_ensemble(rng, members, dim);
    const Ensemble q = random_ensemble(rng, members, dim);
    const Ensemble r = random_ensemble(rng, members, dim);
    const double pq = kernel_divergence(h, p, q);
    const double qp = kernel_divergence(h, q, p);
    const double qr = kernel_divergence(h, q, r);
    const double pr = kernel_divergence(h, p, r);
    const double pp = kernel_divergence(h, p, p);

    const double asym = std::abs(pq - qp);
    report.max_asymmetry = std::max(report.max_asymmetry, asym);
    if (asym > kSymmetryTolerance) ++report.symmetry_violations;
    report.max_self_divergence = std::max(report.max_self_divergence, pp);

    const double slack = std::sqrt(pq) + std::sqrt(qr) - std::sqrt(pr);
    report.worst_triangle_slack = std::min(report.worst_triangle_slack, slack);
    if (slack < -kSymmetryTolerance) ++report.triangle_violations;
  }
  return report;
}

double log_divergence(const Categorical& p, const Categorical& q) {
  if (p.size() != q.size()) throw ValidationError("log divergence: class counts differ");
  CompensatedSum s;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double qk = q.prob(k);
    if (qk == 0.0) continue;
    if (p.prob(k) == 0.0) return std::numeric_limits<double>::infinity();
    s += qk * std::log(qk / p.prob(k));
  }
  return s.value();
}

RepresentationReport crps_representation_check(const std::vector<std::pair<Ensemble, double>>& instances,
                                               double tolerance) {
  RepresentationReport report;
  report.instances = instances.size();
  for (const auto& [ensemble, y] : instances) {
    const double integral = crps_numeric(ensemble, y).value;
    const double kernel = crps_ensemble(ensemble, y, EnsembleVariant::empirical).value;
    const double gap = std::abs(integral - kernel);
    report.max_discrepancy = std::max(report.max_discrepancy, gap);
    if (!(gap <= tolerance)) ++report.failures;
  }
  return report;
}

RepresentationReport crps_representation_check(std::size_t instances, std::uint64_t seed, double tolerance) {
  Philox4x32 rng(seed);
  std::vector<std::pair<Ensemble, double>> cases;
  cases.reserve(instances);
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t n = 1 + rng.below(30);
    const bool ties = rng.uniform() < 0.5;
    std::vector<double> x(n);
    for (double& v : x) {
      v = 2.0 * rng.normal();
      if (ties) v = std::round(4.0 * v) / 4.0;
    }
    cases.emplace_back(Ensemble(std::move(x)), 2.0 * rng.normal());
  }
  return crps_representation_check(cases, tolerance);
}

double normal_pair_divergence(SpectralKernel kernel, double lambda, const NormalPair& pair) {
  const double m = pair.mu_p - pair.mu_q;
  const double vp = pair.sigma_p * pair.sigma_p;
  const double vq = pair.sigma_q * pair.sigma_q;
  if (kernel == SpectralKernel::energy) {
    // E|D| for D ~ N(m, s^2).
    const double s = std::sqrt(vp + vq);
    const double e_abs = 2.0 * s * normal_pdf(m / s) + m * (2.0 * normal_cdf(m / s) - 1.0);
    return e_abs - (pair.sigma_p + pair.sigma_q) / std::sqrt(kPi);
  }
  if (!(lambda > 0.0)) throw ValidationError("spectral: lambda must be > 0");
  // E[2 - 2 exp(-D^2 / lambda)] for D ~ N(mean, var).
  auto g = [lambda](double mean, double var) {
    return 2.0 - 2.0 * std::exp(-mean * mean / (lambda + 2.0 * var)) / std::sqrt(1.0 + 2.0 * var / lambda);
  };
  return g(m, vp + vq) - 0.5 * g(0.0, 2.0 * vp) - 0.5 * g(0.0, 2.0 * vq);
}

double spectral_integral(SpectralKernel kernel, double lambda, const NormalPair& pair) {
  const double sp2 = pair.sigma_p * pair.sigma_p;
  const double sq2 = pair.sigma_q * pair.sigma_q;
  const double dmu = pair.mu_p - pair.mu_q;
  auto modulus = [=](double u) {
    const double a = 0.5 * sp2 * u * u;
    const double b = 0.5 * sq2 * u * u;
    const double ea = std::exp(-a);
    const double diff = -ea * std::expm1(a - b);  // exp(-a) - exp(-b) without cancellation
    const double s = std::sin(0.5 * dmu * u);
    return diff * diff + 4.0 * ea * std::exp(-b) * s * s;
  };
  std::function<double(double)> integrand;
  if (kernel == SpectralKernel::energy) {
    integrand = [=](double u) { return modulus(u) / (u * u); };
  } else {
    integrand = [=](double u) { return modulus(u) * std::exp(-0.25 * lambda * u * u); };
  }
  // Every term decays at least like exp(-min(sigma)^2 u^2); the tail past U is
  // below exp(-40).
  const double upper = std::sqrt(40.0) / std::min(pair.sigma_p, pair.sigma_q);
  const double lower = 1e-6;
  const double tol = 1e-12;
  // Split at a few scale points so the Simpson error estimate is local.
  const double pieces[] = {lower, 0.25 * upper, 0.5 * upper, upper};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < std::size(pieces); ++i) {
    total += simpson_halving(integrand, pieces[i], pieces[i + 1], tol).value;
  }
  return total;
}

SpectralReport spectral_proportionality_check(SpectralKernel kernel, double lambda,
                                              const std::vector<NormalPair>& pairs, double tolerance) {
  SpectralReport report;
  report.kernel = kernel == SpectralKernel::energy ? "energy:beta=1" : "gaussian";
  report.pairs = pairs.size();
  for (const auto& pair : pairs) {
    if (!(pair.sigma_p > 0.0 && pair.sigma_q > 0.0)) throw ValidationError("spectral: sigma must be > 0");
    if (pair.mu_p == pair.mu_q && pair.sigma_p == pair.sigma_q) {
      ++report.zero_pairs;
      continue;
    }
    const double d = normal_pair_divergence(kernel, lambda, pair);
    const double integral = spectral_integral(kernel, lambda, pair);
    if (!(integral > 0.0)) throw NumericError("spectral: vanishing spectral integral for distinct normals");
    report.ratios.push_back(d / integral);
  }
  if (!report.ratios.empty()) {
    const auto [lo, hi] = std::minmax_element(report.ratios.begin(), report.ratios.end());
    const double mean = compensated_sum(report.ratios) / static_cast<double>(report.ratios.size());
    report.spread = (*hi - *lo) / mean;
  }
  report.constant = report.spread <= tolerance;
  return report;
}

std::vector<NormalPair> random_normal_pairs(std::size_t count, std::uint64_t seed) {
  Philox4x32 rng(seed);
  std::vector<NormalPair> out(count);
  for (auto& p : out) {
    p.mu_p = 4.0 * rng.uniform() - 2.0;
    p.sigma_p = 0.5 + 1.5 * rng.uniform();
    p.mu_q = 4.0 * rng.uniform() - 2.0;
    p.sigma_q = 0.5 + 1.5 * rng.uniform();
  }
  return out;
}

}  // namespace properscore
