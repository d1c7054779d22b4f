#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace properscore {

/// A rule identifier plus named hyperparameters, parsed from compact strings:
///
///   name[:variant][:key=value[,key=value...]]
///
///   "crps"  "crps:fair"  "crps:empirical"  "energy:beta=1.0"
///   "energy:beta=0.5,alpha=1.5,variant=empirical"  "pseudospherical:alpha=2"
///   "gaussian:lambda=1.0"  "variogram:p=0.5"  "quantile:tau=0.9"
///   "tw:base=energy:beta=1.0,t=0.5"
///
/// For `tw` the key `t` is the threshold; every other key belongs to the base.
struct ScoringRuleSpec {
  std::string rule;
  std::string variant;  ///< "fair" / "empirical" where applicable, else empty
  std::map<std::string, double> params;
  std::shared_ptr<const ScoringRuleSpec> base;  ///< chained base rule for `tw`

  bool has(const std::string& key) const { return params.count(key) != 0; }
  double get(const std::string& key, double fallback) const;
  double require(const std::string& key) const;

  std::string to_string() const;
};

/// Parses and validates hyperparameter ranges (beta in (0,2), alpha > 1 for
/// pseudospherical, lambda > 0, variogram p > 0, tau in (0,1)). Throws
/// ValidationError.
ScoringRuleSpec parse_rule_spec(std::string_view text);

}  // namespace properscore
