#include "properscore/scoring.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "properscore/errors.hpp"
#include "properscore/evaluation.hpp"
#include "properscore/local.hpp"
#include "properscore/multivariate.hpp"
#include "properscore/numeric.hpp"
#include "properscore/univariate.hpp"

namespace properscore {

namespace {

[[noreturn]] void unsupported(const ScoringRuleSpec& rule, const Forecast& f) {
  throw ValidationError("rule '" + rule.rule + "' does not support forecast type '" +
                        std::string(forecast_kind(f)) + "'");
}

EnsembleVariant variant_of(const ScoringRuleSpec& rule) {
  return parse_variant(rule.variant, EnsembleVariant::fair);
}

bool is_kernel_rule(const std::string& r) {
  return r == "energy" || r == "gaussian" || r == "laplacian" || r == "variogram" || r == "tw";
}

const Categorical& require_categorical(const ScoringRuleSpec& rule, const Forecast& f) {
  const auto* c = std::get_if<Categorical>(&f);
  if (!c) unsupported(rule, f);
  return *c;
}

ScoreValue kernel_rule_score(const ScoringRuleSpec& rule, const Forecast& f, const Observation& y,
                             const ScoreOptions& options) {
  const std::vector<double> yv = observation_vector(y);
  if (const auto* e = std::get_if<Ensemble>(&f)) {
    if (e->dim() != yv.size()) throw ValidationError("score: outcome dimension does not match the ensemble");
    const EnsembleVariant variant = variant_of(rule);
    if (rule.rule == "energy") {
      std::optional<double> alpha;
      if (rule.has("alpha")) alpha = rule.params.at("alpha");
      return energy_score(*e, yv, rule.get("beta", 1.0), variant, alpha);
    }
    if (rule.rule == "variogram" && rule.variant.empty()) return variogram_score(*e, yv, rule.get("p", 0.5));
    if (rule.rule == "tw" && rule.base->rule == "crps" && e->dim() == 1 && !e->weighted()) {
      return tw_crps(e->flat(), yv[0], rule.get("t", -std::numeric_limits<double>::infinity()),
                     parse_variant(rule.base->variant, variant));
    }
    return kernel_score_exact(rule_kernel(rule), *e, yv, variant);
  }
  if (std::holds_alternative<DensityOracle>(f)) unsupported(rule, f);
  return kernel_score_mc(rule_kernel(rule), forecast_sampler(f), yv, options.mc_samples, options.seed);
}

DensityOracle oracle_for(const ScoringRuleSpec& rule, const Forecast& f) {
  if (const auto* o = std::get_if<DensityOracle>(&f)) return *o;
  if (const auto* n = std::get_if<Normal>(&f)) return normal_oracle(n->mu(), n->sigma());
  unsupported(rule, f);
}

}  // namespace

Kernel rule_kernel(const ScoringRuleSpec& rule) {
  if (rule.rule == "tw") {
    return weight_transform(rule_kernel(*rule.base),
                            threshold_chaining(rule.get("t", -std::numeric_limits<double>::infinity())));
  }
  if (rule.rule == "crps" || is_kernel_rule(rule.rule)) return kernel_registry(rule.rule, rule.params);
  throw ValidationError("rule '" + rule.rule + "' is not a kernel score");
}

CategoricalRule categorical_rule(const ScoringRuleSpec& rule) {
  const std::string& r = rule.rule;
  if (r == "brier") {
    return [](const Categorical& p, std::size_t k) {
      if (p.size() == 2) {
        const double d = p.prob(1) - (k == 1 ? 1.0 : 0.0);
        return d * d;
      }
      CompensatedSum s;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double d = p.prob(j) - (j == k ? 1.0 : 0.0);
        s += d * d;
      }
      return s.value();
    };
  }
  if (r == "log") {
    return [](const Categorical& p, std::size_t k) {
      const double pk = p.prob(k);
      return pk > 0.0 ? -std::log(pk) : std::numeric_limits<double>::infinity();
    };
  }
  if (r == "quadratic") {
    return [](const Categorical& p, std::size_t k) {
      CompensatedSum s;
      for (double v : p.probs()) s += v * v;
      return s.value() - 2.0 * p.prob(k);
    };
  }
  if (r == "spherical") {
    return [](const Categorical& p, std::size_t k) { return spherical_score(p, k).value; };
  }
  if (r == "pseudospherical") {
    const double alpha = rule.require("alpha");
    return [alpha](const Categorical& p, std::size_t k) { return pseudospherical_score(p, k, alpha).value; };
  }
  if (r == "linear") {
    return [](const Categorical& p, std::size_t k) { return -p.prob(k); };
  }
  throw ValidationError("rule '" + r + "' is not a categorical scoring rule");
}

ScoreValue score(const ScoringRuleSpec& rule, const Forecast& f, const Observation& y,
                 const ScoreOptions& options) {
  validate_observation(y);
  const std::string& r = rule.rule;

  if (r == "crps") {
    if (const auto* e = std::get_if<Ensemble>(&f)) {
      if (e->dim() != 1) throw ValidationError("crps: ensemble is not univariate");
      return crps_ensemble(*e, observation_scalar(y), variant_of(rule));
    }
    if (const auto* n = std::get_if<Normal>(&f)) return crps_normal(n->mu(), n->sigma(), observation_scalar(y));
    if (std::holds_alternative<Categorical>(f)) {
      return crps_numeric(f, static_cast<double>(observation_category(y)));
    }
    unsupported(rule, f);
  }
  if (is_kernel_rule(r)) return kernel_rule_score(rule, f, y, options);
  if (r == "log") return log_score(f, y);
  if (r == "quadratic") return quadratic_score(f, y);
  if (r == "brier" || r == "spherical" || r == "pseudospherical" || r == "linear") {
    const Categorical& c = require_categorical(rule, f);
    const std::size_t k = observation_category(y);
    if (k >= c.size()) throw ValidationError("score: class index out of range");
    ScoreValue out(categorical_rule(rule)(c, k), Method::closed_form);
    if (r == "linear") out.note("improper");
    return out;
  }
  if (r == "ds") {
    const std::vector<double> yv = observation_vector(y);
    if (const auto* e = std::get_if<Ensemble>(&f)) return dawid_sebastiani_from_ensemble(*e, yv);
    if (const auto* n = std::get_if<Normal>(&f)) {
      return dawid_sebastiani(Eigen::VectorXd::Constant(1, n->mu()),
                              Eigen::MatrixXd::Constant(1, 1, n->sigma() * n->sigma()), yv);
    }
    if (const auto* n = std::get_if<MvNormal>(&f)) return dawid_sebastiani(n->mean(), n->cov(), yv);
    unsupported(rule, f);
  }
  if (r == "hyvarinen") {
    const DensityOracle o = oracle_for(rule, f);
    const std::vector<double> yv = observation_vector(y);
    return o.gradient && o.laplacian ? hyvarinen_score(o, yv) : hyvarinen_score_fd(o, yv);
  }
  if (r == "logcosh") return logcosh_score(oracle_for(rule, f), observation_scalar(y));
  if (r == "mean") return functional_score(parse_functional("mean"), f, observation_scalar(y));
  if (r == "quantile") {
    return functional_score(parse_functional("quantile", rule.require("tau")), f, observation_scalar(y));
  }
  throw ValidationError("rule '" + r + "' cannot be scored directly");
}

}  // namespace properscore
