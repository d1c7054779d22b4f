#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "properscore/core.hpp"
#include "properscore/kernel.hpp"
#include "properscore/rule_spec.hpp"

namespace properscore {

struct ScoreOptions {
  std::size_t mc_samples = 2000;  ///< draws for kernel scores without an exact path
  std::uint64_t seed = 0;
};

/// Scores one (forecast, outcome) pair under a parsed rule spec. Ensembles
/// get exact evaluation; parametric forecasts use closed forms where they
/// exist and the Monte-Carlo kernel estimator otherwise.
ScoreValue score(const ScoringRuleSpec& rule, const Forecast& f, const Observation& y,
                 const ScoreOptions& options = {});

/// The CND kernel behind a kernel-score spec (crps, energy, gaussian,
/// laplacian, variogram, tw).
Kernel rule_kernel(const ScoringRuleSpec& rule);

/// S(P, k) for categorical forecasts, as a plain function.
using CategoricalRule = std::function<double(const Categorical&, std::size_t)>;

/// brier (binary: (p_1 - y)^2; more classes: sum_k (p_k - 1{y=k})^2), log,
/// quadratic, spherical, pseudospherical:alpha=a, and the improper linear
/// rule -p(y).
CategoricalRule categorical_rule(const ScoringRuleSpec& rule);

}  // namespace properscore
