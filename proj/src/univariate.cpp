#include "properscore/univariate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "properscore/detail/overloaded.hpp"
#include "properscore/numeric.hpp"

namespace properscore {

namespace {

using detail::overloaded;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailProbability = 1e-9;

void check_members(std::span<const double> members, EnsembleVariant variant) {
  if (members.empty()) throw ValidationError("crps: empty ensemble");
  if (variant == EnsembleVariant::fair && members.size() < 2) {
    throw ValidationError("crps: the fair variant needs at least two members");
  }
  for (double x : members) {
    if (std::isnan(x)) throw ValidationError("crps: NaN ensemble member");
    if (!std::isfinite(x)) throw ValidationError("crps: non-finite ensemble member");
  }
}

void check_finite(double y, const char* what) {
  if (!std::isfinite(y)) throw ValidationError(std::string(what) + ": non-finite outcome");
}

bool all_equal(std::span<const double> w) {
  return std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); });
}

// Right-continuous CDF with O(log n) evaluation for the piecewise-constant kinds.
struct CdfTable {
  std::vector<double> atoms;       // sorted support points
  std::vector<double> cumulative;  // F at each atom
  double operator()(double x) const {
    auto it = std::upper_bound(atoms.begin(), atoms.end(), x);
    if (it == atoms.begin()) return 0.0;
    return std::min(1.0, cumulative[static_cast<std::size_t>(it - atoms.begin()) - 1]);
  }
};

CdfTable make_table(std::vector<std::pair<double, double>> atom_weights) {
  std::sort(atom_weights.begin(), atom_weights.end());
  CdfTable t;
  CompensatedSum running;
  for (const auto& [x, w] : atom_weights) {
    running += w;
    if (!t.atoms.empty() && t.atoms.back() == x) {
      t.cumulative.back() = running.value();
    } else {
      t.atoms.push_back(x);
      t.cumulative.push_back(running.value());
    }
  }
  return t;
}

}  // namespace

std::string_view to_string(EnsembleVariant v) noexcept {
  return v == EnsembleVariant::fair ? "fair" : "empirical";
}

EnsembleVariant parse_variant(std::string_view s, EnsembleVariant fallback) {
  if (s.empty()) return fallback;
  if (s == "fair") return EnsembleVariant::fair;
  if (s == "empirical") return EnsembleVariant::empirical;
  throw ValidationError("unknown ensemble variant '" + std::string(s) + "'");
}

double crps_ensemble_naive(std::span<const double> members, double y, EnsembleVariant variant,
                           std::span<const double> weights) {
  check_members(members, variant);
  check_finite(y, "crps");
  const std::size_t n = members.size();
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(n, 1.0 / static_cast<double>(n));
  if (w.size() != n) throw ValidationError("crps: weights length differs from members");

  CompensatedSum outcome_term;
  CompensatedSum pair_term;
  CompensatedSum sum_sq_weights;
  for (std::size_t i = 0; i < n; ++i) {
    outcome_term += w[i] * std::abs(members[i] - y);
    sum_sq_weights += w[i] * w[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      pair_term += 2.0 * w[i] * w[j] * std::abs(members[i] - members[j]);
    }
  }
  double spread = 0.5 * pair_term.value();
  if (variant == EnsembleVariant::fair) {
    const double denom = 1.0 - sum_sq_weights.value();
    if (!(denom > 0.0)) throw ValidationError("crps: fair variant undefined for a point-mass weighting");
    spread /= denom;
  }
  return outcome_term.value() - spread;
}

ScoreValue crps_ensemble(std::span<const double> members, double y, EnsembleVariant variant,
                         std::span<const double> weights) {
  check_members(members, variant);
  check_finite(y, "crps");
  if (!weights.empty() && weights.size() != members.size()) {
    throw ValidationError("crps: weights length differs from members");
  }
  if (!weights.empty() && !all_equal(weights)) {
    ScoreValue out(crps_ensemble_naive(members, y, variant, weights), Method::naive_exact);
    out.note("variant=" + std::string(to_string(variant)));
    return out;
  }

  std::vector<double> sorted(members.begin(), members.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double nd = static_cast<double>(n);

  double value = 0.0;
  if (variant == EnsembleVariant::fair) {
    // 2/(n(n-1)) * sum_j (X_(j) - y) ((n-1) 1{y < X_(j)} - j + 1), j 1-based.
    CompensatedSum s;
    for (std::size_t j = 0; j < n; ++j) {
      const double above = y < sorted[j] ? nd - 1.0 : 0.0;
      s += (sorted[j] - y) * (above - static_cast<double>(j));
    }
    value = 2.0 * s.value() / (nd * (nd - 1.0));
  } else {
    // (1/n) sum |X - y| - (1/n^2) sum_j (X_(j) - y)(2j - n - 1), j 1-based.
    CompensatedSum abs_term;
    CompensatedSum spread_term;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = sorted[j] - y;
      abs_term += std::abs(d);
      spread_term += d * (2.0 * static_cast<double>(j + 1) - nd - 1.0);
    }
    value = abs_term.value() / nd - spread_term.value() / (nd * nd);
  }
  // Finite inputs can still overflow the intermediate sums.
  if (!std::isfinite(value)) throw NumericError("crps: ensemble sums overflowed the double range");
  ScoreValue out(value, Method::fast_exact);
  out.note("variant=" + std::string(to_string(variant)));
  return out;
}

ScoreValue crps_ensemble(const Ensemble& ensemble, double y, EnsembleVariant variant) {
  if (ensemble.dim() != 1) throw ValidationError("crps: ensemble is not univariate");
  if (ensemble.weighted()) return crps_ensemble(ensemble.flat(), y, variant, ensemble.weights());
  return crps_ensemble(ensemble.flat(), y, variant);
}

ScoreValue crps_normal(double mu, double sigma, double y) {
  if (!std::isfinite(mu)) throw ValidationError("crps_normal: non-finite mean");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw ValidationError("crps_normal: sigma must be > 0");
  check_finite(y, "crps_normal");
  const double z = (y - mu) / sigma;
  const double value =
      sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - 1.0 / std::sqrt(kPi));
  return ScoreValue(value, Method::closed_form);
}

ScoreValue crps_numeric(const Forecast& f, double y, double tol) {
  check_finite(y, "crps_numeric");
  if (!(tol > 0.0)) throw ValidationError("crps_numeric: tol must be positive");

  std::function<double(double)> cdf;
  std::vector<double> breaks;
  double lo = 0.0;
  double hi = 0.0;

  std::visit(overloaded{
                 [&](const Ensemble& e) {
                   if (e.dim() != 1) throw ValidationError("crps_numeric: ensemble is not univariate");
                   std::vector<std::pair<double, double>> aw;
                   for (std::size_t i = 0; i < e.size(); ++i) aw.emplace_back(e.flat()[i], e.weight(i));
                   auto table = make_table(std::move(aw));
                   breaks = table.atoms;
                   cdf = [table = std::move(table)](double x) { return table(x); };
                 },
                 [&](const Categorical& c) {
                   std::vector<std::pair<double, double>> aw;
                   for (std::size_t k = 0; k < c.size(); ++k) {
                     if (c.prob(k) > 0.0) aw.emplace_back(static_cast<double>(k), c.prob(k));
                   }
                   auto table = make_table(std::move(aw));
                   breaks = table.atoms;
                   cdf = [table = std::move(table)](double x) { return table(x); };
                 },
                 [&](const Normal& n) {
                   const double z = -normal_quantile(kTailProbability);
                   breaks = {n.mu() - z * n.sigma(), n.mu() + z * n.sigma()};
                   cdf = [n](double x) { return normal_cdf((x - n.mu()) / n.sigma()); };
                 },
                 [](const MvNormal&) { throw ValidationError("crps_numeric: multivariate forecast"); },
                 [](const DensityOracle&) {
                   throw ValidationError("crps_numeric: density oracle has no CDF");
                 }},
             f);

  breaks.push_back(y);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  lo = breaks.front();
  hi = breaks.back();
  if (lo == hi) return ScoreValue(0.0, Method::numeric_quadrature);

  const double piece_tol = tol / static_cast<double>(breaks.size() - 1);
  CompensatedSum total;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    // The integrand jumps at b; use its left limit there.
    const double b_inside = std::nextafter(b, a);
    auto integrand = [&](double x) {
      const double at = x >= b ? b_inside : x;
      const double diff = cdf(at) - (y <= at ? 1.0 : 0.0);
      return diff * diff;
    };
    total += simpson_halving(integrand, a, b, piece_tol).value;
  }
  return ScoreValue(total.value(), Method::numeric_quadrature);
}

ScoreValue log_score(const Forecast& f, const Observation& y) {
  return std::visit(
      overloaded{
          [&](const Categorical& c) {
            const std::size_t k = observation_category(y);
            if (k >= c.size()) throw ValidationError("log_score: class index out of range");
            const double p = c.prob(k);
            return ScoreValue(p > 0.0 ? -std::log(p) : kInf, Method::closed_form);
          },
          [&](const Normal& n) {
            const double x = observation_scalar(y);
            check_finite(x, "log_score");
            const double z = (x - n.mu()) / n.sigma();
            return ScoreValue(0.5 * std::log(2.0 * kPi) + std::log(n.sigma()) + 0.5 * z * z,
                              Method::closed_form);
          },
          [&](const MvNormal& n) {
            const auto x = observation_vector(y);
            if (x.size() != n.dim()) throw ValidationError("log_score: dimension mismatch");
            const Eigen::VectorXd r =
                Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - n.mean();
            const Eigen::VectorXd w = n.cholesky_lower().triangularView<Eigen::Lower>().solve(r);
            const double log_det = 2.0 * n.cholesky_lower().diagonal().array().log().sum();
            const double d = static_cast<double>(n.dim());
            return ScoreValue(0.5 * (d * std::log(2.0 * kPi) + log_det + w.squaredNorm()),
                              Method::closed_form);
          },
          [&](const DensityOracle& o) {
            if (!o.normalized) {
              throw ValidationError("log_score: needs a normalized density (log score is not normalization-invariant)");
            }
            const auto x = observation_vector(y);
            if (x.size() != o.dim) throw ValidationError("log_score: dimension mismatch");
            const double lp = o.log_density(x);
            if (std::isnan(lp)) throw NumericError("log_score: NaN log-density");
            return ScoreValue(-lp, Method::closed_form);
          },
          [](const Ensemble&) -> ScoreValue {
            throw ValidationError("log_score: ensembles have no density");
          }},
      f);
}

ScoreValue quadratic_score(const Forecast& f, const Observation& y) {
  if (const auto* c = std::get_if<Categorical>(&f)) {
    const std::size_t k = observation_category(y);
    if (k >= c->size()) throw ValidationError("quadratic_score: class index out of range");
    CompensatedSum sq;
    for (double p : c->probs()) sq += p * p;
    return ScoreValue(-2.0 * c->prob(k) + sq.value(), Method::closed_form);
  }
  if (const auto* n = std::get_if<Normal>(&f)) {
    const double x = observation_scalar(y);
    check_finite(x, "quadratic_score");
    const double density = normal_pdf((x - n->mu()) / n->sigma()) / n->sigma();
    return ScoreValue(-2.0 * density + 1.0 / (2.0 * n->sigma() * std::sqrt(kPi)), Method::closed_form);
  }
  throw ValidationError("quadratic_score: unsupported forecast type '" +
                        std::string(forecast_kind(f)) + "'");
}

ScoreValue brier_binary(double p, int y) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("brier_binary: p outside [0,1]");
  if (y != 0 && y != 1) throw ValidationError("brier_binary: outcome must be 0 or 1");
  const double d = p - static_cast<double>(y);
  return ScoreValue(d * d, Method::closed_form);
}

ScoreValue pseudospherical_score(const Categorical& f, std::size_t y, double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ValidationError("pseudospherical: alpha must be > 1");
  if (y >= f.size()) throw ValidationError("pseudospherical: class index out of range");
  CompensatedSum power_sum;
  for (double p : f.probs()) power_sum += std::pow(p, alpha);
  const double norm = std::pow(power_sum.value(), 1.0 - 1.0 / alpha);
  const double py = f.prob(y);
  const double value = py > 0.0 ? -std::pow(py, alpha - 1.0) / norm : 0.0;
  return ScoreValue(value, Method::closed_form);
}

ScoreValue spherical_score(const Categorical& f, std::size_t y) {
  return pseudospherical_score(f, y, 2.0);
}

ScoreValue tw_crps(std::span<const double> members, double y, double threshold,
                   EnsembleVariant variant) {
  if (std::isnan(threshold)) throw ValidationError("tw_crps: NaN threshold");
  check_finite(y, "tw_crps");
  std::vector<double> chained(members.begin(), members.end());
  for (double& x : chained) {
    if (std::isnan(x)) throw ValidationError("crps: NaN ensemble member");
    x = std::max(x, threshold);
  }
  ScoreValue out = crps_ensemble(chained, std::max(y, threshold), variant);
  out.note("chaining=max(x,t)");
  return out;
}

}  // namespace properscore
