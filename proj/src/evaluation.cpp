#include "properscore/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "properscore/detail/overloaded.hpp"
#include "properscore/errors.hpp"
#include "properscore/numeric.hpp"
#include "properscore/univariate.hpp"

namespace properscore {

using detail::overloaded;

namespace {

constexpr double kTieTolerance = 1e-12;

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a == 0) throw ValidationError(std::string(what) + ": empty input");
  if (a != b) {
    throw ValidationError(std::string(what) + ": " + std::to_string(a) + " forecasts but " +
                          std::to_string(b) + " observations");
  }
}

std::vector<double> realized(const Scorer& scorer, std::span<const Forecast> forecasts,
                             std::span<const Observation> obs) {
  std::vector<double> out(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) out[i] = scorer(forecasts[i], obs[i]).value;
  return out;
}

// S(P, k) for the two decomposition rules.
double categorical_score(DecompositionRule rule, std::span<const double> p, std::size_t k) {
  if (rule == DecompositionRule::brier_binary) {
    const double d = p[1] - (k == 1 ? 1.0 : 0.0);
    return d * d;
  }
  CompensatedSum sq;
  for (double v : p) sq += v * v;
  return -2.0 * p[k] + sq.value();
}

// S(P, Q) = sum_k q_k S(P, k).
double expected_score(DecompositionRule rule, std::span<const double> p, std::span<const double> q) {
  CompensatedSum s;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] > 0.0) s += q[k] * categorical_score(rule, p, k);
  }
  return s.value();
}

double divergence(DecompositionRule rule, std::span<const double> p, std::span<const double> q) {
  return std::max(0.0, expected_score(rule, p, q) - expected_score(rule, q, q));
}

// Value at which the step CDF given by sorted (x, w) pairs reaches tau, with
// the midpoint rule on flat stretches.
double step_quantile(const std::vector<std::pair<double, double>>& atoms, double tau) {
  CompensatedSum c;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    c += atoms[k].second;
    const double cum = c.value();
    if (cum >= tau - kTieTolerance) {
      if (std::abs(cum - tau) <= kTieTolerance && k + 1 < atoms.size()) {
        return 0.5 * (atoms[k].first + atoms[k + 1].first);
      }
      return atoms[k].first;
    }
  }
  return atoms.back().first;
}

}  // namespace

double mean_score(const Scorer& scorer, std::span<const Forecast> forecasts,
                  std::span<const Observation> obs) {
  check_aligned(forecasts.size(), obs.size(), "mean_score");
  const auto scores = realized(scorer, forecasts, obs);
  return compensated_sum(scores) / static_cast<double>(scores.size());
}

ComparisonReport compare(const Scorer& scorer, std::span<const Forecast> forecasts_a,
                         std::span<const Forecast> forecasts_b, std::span<const Observation> obs) {
  check_aligned(forecasts_a.size(), obs.size(), "compare");
  check_aligned(forecasts_b.size(), obs.size(), "compare");
  const auto a = realized(scorer, forecasts_a, obs);
  const auto b = realized(scorer, forecasts_b, obs);
  const double n = static_cast<double>(a.size());

  ComparisonReport report;
  report.n = a.size();
  report.mean_a = compensated_sum(a) / n;
  report.mean_b = compensated_sum(b) / n;
  report.diff = report.mean_a - report.mean_b;
  if (std::isnan(report.diff)) throw NumericError("compare: both mean scores are infinite");

  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  if (a.size() == 1) {
    report.degenerate = true;
    return report;
  }
  const double dm = compensated_sum(d) / n;
  CompensatedSum ss;
  for (double v : d) ss += (v - dm) * (v - dm);
  report.naive_se_diff = std::isfinite(dm) ? std::sqrt(ss.value() / (n - 1.0) / n)
                                           : std::numeric_limits<double>::infinity();
  return report;
}

DecompositionRule parse_decomposition_rule(std::string_view s) {
  if (s == "brier" || s == "brier_binary") return DecompositionRule::brier_binary;
  if (s == "quadratic") return DecompositionRule::quadratic;
  throw ValidationError("decompose: rule must be 'brier' or 'quadratic'");
}

DecompositionReport corp_decompose(DecompositionRule rule, std::span<const Categorical> forecasts,
                                   std::span<const std::size_t> obs, std::optional<std::size_t> bins) {
  check_aligned(forecasts.size(), obs.size(), "decompose");
  const std::size_t classes = forecasts.front().size();
  if (rule == DecompositionRule::brier_binary && classes != 2) {
    throw ValidationError("decompose: brier_binary needs two-class forecasts");
  }
  if (bins && *bins == 0) throw ValidationError("decompose: bins must be positive");
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    if (forecasts[i].size() != classes) throw ValidationError("decompose: forecasts differ in class count");
    if (obs[i] >= classes) throw ValidationError("decompose: class index out of range");
  }

  struct Group {
    std::vector<std::size_t> members;
    std::vector<double> counts;
  };
  std::map<std::vector<double>, Group> groups;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    std::vector<double> key(forecasts[i].probs().begin(), forecasts[i].probs().end());
    if (bins) {
      const double k = static_cast<double>(*bins);
      for (double& v : key) v = std::min(std::floor(v * k), k - 1.0);
    }
    Group& g = groups[key];
    if (g.counts.empty()) g.counts.assign(classes, 0.0);
    g.members.push_back(i);
    g.counts[obs[i]] += 1.0;
  }

  const double n = static_cast<double>(forecasts.size());
  std::vector<double> marginal(classes, 0.0);
  for (std::size_t y : obs) marginal[y] += 1.0;
  for (double& v : marginal) v /= n;

  DecompositionReport report;
  report.groups = groups.size();
  CompensatedSum mcb, dsc, total;
  for (const auto& [key, g] : groups) {
    const double ng = static_cast<double>(g.members.size());
    std::vector<double> conditional = g.counts;
    for (double& v : conditional) v /= ng;

    std::vector<double> forecast(forecasts[g.members.front()].probs().begin(),
                                 forecasts[g.members.front()].probs().end());
    if (bins) {
      std::fill(forecast.begin(), forecast.end(), 0.0);
      for (std::size_t k = 0; k < classes; ++k) {
        CompensatedSum s;
        for (std::size_t i : g.members) s += forecasts[i].prob(k);
        forecast[k] = s.value() / ng;
      }
      for (std::size_t i : g.members) total += categorical_score(rule, forecast, obs[i]);
    } else {
      for (std::size_t i : g.members) total += categorical_score(rule, forecasts[i].probs(), obs[i]);
    }
    mcb += ng / n * divergence(rule, forecast, conditional);
    dsc += ng / n * divergence(rule, marginal, conditional);
  }
  report.mcb = mcb.value();
  report.dsc = dsc.value();
  report.unc = expected_score(rule, marginal, marginal);
  report.mean_score = total.value() / n;
  return report;
}

Functional parse_functional(std::string_view name, double tau) {
  if (name == "mean") return Functional{Functional::Kind::mean, 0.5};
  if (name == "quantile") {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("quantile: tau must lie in (0,1)");
    return Functional{Functional::Kind::quantile, tau};
  }
  throw ValidationError("unknown functional '" + std::string(name) + "'");
}

double forecast_mean(const Forecast& f) {
  return std::visit(
      overloaded{
          [](const Categorical& c) {
            CompensatedSum s;
            for (std::size_t k = 0; k < c.size(); ++k) s += static_cast<double>(k) * c.prob(k);
            return s.value();
          },
          [](const Ensemble& e) {
            if (e.dim() != 1) throw ValidationError("mean functional: ensemble is not univariate");
            CompensatedSum s;
            for (std::size_t i = 0; i < e.size(); ++i) s += e.weight(i) * e.flat()[i];
            return s.value();
          },
          [](const Normal& n) { return n.mu(); },
          [](const MvNormal&) -> double {
            throw ValidationError("mean functional: multivariate forecasts are not supported");
          },
          [](const DensityOracle&) -> double {
            throw ValidationError("mean functional: not computable from a density oracle");
          }},
      f);
}

double forecast_quantile(const Forecast& f, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("quantile: tau must lie in (0,1)");
  return std::visit(
      overloaded{
          [tau](const Categorical& c) {
            std::vector<std::pair<double, double>> atoms;
            for (std::size_t k = 0; k < c.size(); ++k) {
              if (c.prob(k) > 0.0) atoms.emplace_back(static_cast<double>(k), c.prob(k));
            }
            return step_quantile(atoms, tau);
          },
          [tau](const Ensemble& e) {
            if (e.dim() != 1) throw ValidationError("quantile functional: ensemble is not univariate");
            std::vector<std::pair<double, double>> atoms(e.size());
            for (std::size_t i = 0; i < e.size(); ++i) atoms[i] = {e.flat()[i], e.weight(i)};
            std::stable_sort(atoms.begin(), atoms.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            return step_quantile(atoms, tau);
          },
          [tau](const Normal& n) { return n.mu() + n.sigma() * normal_quantile(tau); },
          [](const MvNormal&) -> double {
            throw ValidationError("quantile functional: multivariate forecasts are not supported");
          },
          [](const DensityOracle&) -> double {
            throw ValidationError("quantile functional: not computable from a density oracle");
          }},
      f);
}

ScoreValue functional_score(const Functional& functional, const Forecast& f, double y) {
  if (!std::isfinite(y)) throw ValidationError("functional score: non-finite outcome");
  if (functional.kind == Functional::Kind::mean) {
    const double d = forecast_mean(f) - y;
    return ScoreValue(d * d, Method::closed_form).note("functional=mean");
  }
  const double q = forecast_quantile(f, functional.tau);
  const double tau = functional.tau;
  const double loss = y >= q ? tau * (y - q) : (1.0 - tau) * (q - y);
  ScoreValue out(loss, Method::closed_form);
  out.note("functional=quantile");
  return out;
}

}  // namespace properscore
