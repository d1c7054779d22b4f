#include "properscore/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "properscore/errors.hpp"
#include "properscore/estimation.hpp"
#include "properscore/evaluation.hpp"
#include "properscore/numeric.hpp"
#include "properscore/propriety.hpp"
#include "properscore/scoring.hpp"

namespace properscore::cli {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kRuleGrammar = R"(Rule specs: name[:variant][:key=value[,key=value...]]
  crps  crps:fair  crps:empirical  energy:beta=1.0  energy:beta=0.5,alpha=1.5
  gaussian:lambda=1.0  laplacian:lambda=1.0  variogram:p=0.5
  tw:base=energy:beta=1.0,t=0.5  (t is the threshold, other keys go to the base)
  log  brier  quadratic  spherical  pseudospherical:alpha=2  linear
  ds  hyvarinen  logcosh  mean  quantile:tau=0.9
Forecast records (one JSON object per line):
  {"type":"ensemble","members":[...],"weights":[...]}  {"type":"normal","mu":0,"sigma":1}
  {"type":"categorical","probs":[...]}  {"type":"mvnormal","mean":[...],"cov":[[...]]}
Observation records: a number, an array, or {"class":k}; line i matches forecast line i.
Exit codes: 0 success, 1 invalid input, 2 numeric failure.)";

ojson number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

ojson score_json(const ScoreValue& s) {
  ojson j;
  j["value"] = number(s.value);
  j["method"] = std::string(to_string(s.method));
  if (s.se) j["se"] = number(*s.se);
  if (!s.notes.empty()) j["notes"] = s.notes;
  return j;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(i + 1) + ": blank line");
    }
  }
  if (lines.empty()) throw ValidationError("'" + path + "' is empty");
  return lines;
}

template <typename T, typename Parse>
std::vector<T> read_records(const std::string& path, Parse parse) {
  std::vector<T> out;
  const auto lines = read_lines(path);
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(parse(lines[i]));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Forecast> read_forecasts(const std::string& path) {
  return read_records<Forecast>(path, [](const std::string& l) { return parse_forecast(std::string_view(l)); });
}

std::vector<Observation> read_observations(const std::string& path) {
  return read_records<Observation>(path, [](const std::string& l) { return parse_observation(std::string_view(l)); });
}

void require_same_length(std::size_t a, std::size_t b, const std::string& what) {
  if (a != b) {
    throw ValidationError(what + ": " + std::to_string(a) + " forecast lines but " + std::to_string(b) +
                          " observation lines");
  }
}

std::optional<double> parse_cell(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Numeric CSV columns; a first row that does not parse is taken as a header.
std::vector<std::vector<double>> read_csv(const std::string& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::vector<double>> cols(columns);
  std::size_t line_no = 0;
  bool first = true;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    std::vector<std::optional<double>> cells;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(parse_cell(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const bool numeric = std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.has_value(); });
    if (first && !numeric) {
      first = false;
      continue;
    }
    first = false;
    if (!numeric) throw ValidationError(path + ":" + std::to_string(line_no) + ": non-numeric value");
    if (cells.size() != columns) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                            " column(s)");
    }
    for (std::size_t c = 0; c < columns; ++c) cols[c].push_back(*cells[c]);
  }
  return cols;
}

std::vector<double> probs_of(const Categorical& c) { return {c.probs().begin(), c.probs().end()}; }

struct Flags {
  std::string rule;
  std::string forecasts, forecasts_a, forecasts_b, obs, data, family = "normal", check, transform = "scale";
  std::uint64_t seed = 0;
  std::size_t mc_samples = 2000;
  std::size_t m = 100;
  std::size_t bins = 0;
  bool conditional = false;
  std::optional<double> grid_step, lambda;
  std::size_t classes = 2, trials = 1000, dim = 1, pairs = 20;
  double c = 2.0, degree = 1.0, shift = 1.5;
};

Scorer seeded_scorer(const ScoringRuleSpec& rule, const Flags& f) {
  auto counter = std::make_shared<std::uint64_t>(0);
  return [rule, counter, mc = f.mc_samples, seed = f.seed](const Forecast& fc, const Observation& y) {
    return score(rule, fc, y, ScoreOptions{mc, seed + (*counter)++});
  };
}

ojson cmd_score(const Flags& f) {
  const auto rule = parse_rule_spec(f.rule);
  const auto forecasts = read_forecasts(f.forecasts);
  const auto obs = read_observations(f.obs);
  require_same_length(forecasts.size(), obs.size(), "score");
  const Scorer scorer = seeded_scorer(rule, f);
  ojson scores = ojson::array();
  std::vector<double> values;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const ScoreValue s = [&] {
      try {
        return scorer(forecasts[i], obs[i]);
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(i + 1) + ": " + e.what());
      }
    }();
    values.push_back(s.value);
    scores.push_back(score_json(s));
  }
  ojson out;
  out["command"] = "score";
  out["rule"] = rule.to_string();
  out["n"] = forecasts.size();
  out["scores"] = std::move(scores);
  out["mean"] = number(compensated_sum(values) / static_cast<double>(values.size()));
  return out;
}

ojson cmd_compare(const Flags& f) {
  const auto rule = parse_rule_spec(f.rule);
  const auto a = read_forecasts(f.forecasts_a);
  const auto b = read_forecasts(f.forecasts_b);
  const auto obs = read_observations(f.obs);
  require_same_length(a.size(), obs.size(), "compare");
  require_same_length(b.size(), obs.size(), "compare");
  const auto report = compare(seeded_scorer(rule, f), a, b, obs);
  ojson out;
  out["command"] = "compare";
  out["rule"] = rule.to_string();
  out["n"] = report.n;
  out["mean_a"] = number(report.mean_a);
  out["mean_b"] = number(report.mean_b);
  out["diff"] = number(report.diff);
  out["naive_se_diff"] = number(report.naive_se_diff);
  out["degenerate"] = report.degenerate;
  return out;
}

ojson cmd_decompose(const Flags& f) {
  const auto rule = parse_decomposition_rule(f.rule);
  const auto forecasts = read_forecasts(f.forecasts);
  const auto obs = read_observations(f.obs);
  require_same_length(forecasts.size(), obs.size(), "decompose");
  std::vector<Categorical> cats;
  std::vector<std::size_t> classes;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const auto* c = std::get_if<Categorical>(&forecasts[i]);
    if (!c) throw ValidationError("line " + std::to_string(i + 1) + ": decompose needs categorical forecasts");
    cats.push_back(*c);
    classes.push_back(observation_category(obs[i]));
  }
  std::optional<std::size_t> bins;
  if (f.bins > 0) bins = f.bins;
  const auto report = corp_decompose(rule, cats, classes, bins);
  ojson out;
  out["command"] = "decompose";
  out["rule"] = rule == DecompositionRule::brier_binary ? "brier" : "quadratic";
  out["grouping"] = bins ? "bins(" + std::to_string(*bins) + ")" : std::string("exact");
  out["n"] = cats.size();
  out["groups"] = report.groups;
  out["mcb"] = number(report.mcb);
  out["dsc"] = number(report.dsc);
  out["unc"] = number(report.unc);
  out["mean_score"] = number(report.mean_score);
  return out;
}

ojson cmd_fit(const Flags& f) {
  if (f.family != "normal") throw ValidationError("fit: only --family normal is supported");
  const FitRule rule = parse_fit_rule(f.rule);
  NelderMeadOptions options;
  options.seed = f.seed;
  ojson out;
  out["command"] = "fit";
  out["family"] = f.family;
  out["rule"] = rule == FitRule::log ? "log" : "crps";
  out["conditional"] = f.conditional;
  FitResult fit;
  if (f.conditional) {
    const auto cols = read_csv(f.data, 2);
    fit = fit_conditional_min_score(rule, cols[0], cols[1], options);
    out["n"] = cols[0].size();
    out["params"] = {{"a", number(fit.params[0])}, {"b", number(fit.params[1])}, {"sigma", number(fit.params[2])}};
  } else {
    const auto cols = read_csv(f.data, 1);
    fit = fit_min_score(rule, cols[0], options);
    out["n"] = cols[0].size();
    out["params"] = {{"mu", number(fit.params[0])}, {"sigma", number(fit.params[1])}};
  }
  out["objective"] = number(fit.objective);
  out["iterations"] = fit.iterations;
  out["converged"] = fit.converged;
  return out;
}

ojson cmd_verify(const Flags& f) {
  ojson out;
  out["command"] = "verify";
  out["check"] = f.check;
  out["seed"] = f.seed;

  if (f.check == "propriety") {
    const auto spec = parse_rule_spec(f.rule);
    const auto rule = categorical_rule(spec);
    double step = 0.0;
    if (f.grid_step) {
      step = *f.grid_step;
    } else if (f.classes == 2) {
      step = 0.05;
    } else if (f.classes == 3) {
      step = 0.1;
    } else {
      throw ValidationError("verify: --grid-step is required for more than three classes");
    }
    const auto r = propriety_scan(rule, f.classes, step);
    out["rule"] = spec.to_string();
    out["classes"] = r.classes;
    out["grid_step"] = r.grid_step;
    out["pairs_checked"] = r.pairs_checked;
    out["violations"] = r.violations;
    out["strictness_failures"] = r.strictness_failures;
    out["worst_margin"] = number(r.worst_margin);
    if (r.witness) {
      out["witness"] = {{"p", probs_of(r.witness->first)}, {"q", probs_of(r.witness->second)}};
      out["witness_replays"] = replay_witness(rule, r);
    } else {
      out["witness"] = nullptr;
    }
    return out;
  }
  if (f.check == "concavity") {
    const auto spec = parse_rule_spec(f.rule);
    const auto r = concavity_scan(categorical_rule(spec), f.classes, f.trials, f.seed, f.lambda);
    out["rule"] = spec.to_string();
    out["classes"] = f.classes;
    out["trials"] = r.trials;
    out["violations"] = r.violations;
    out["worst_gap"] = number(r.worst_gap);
    if (r.witness) {
      out["witness"] = {{"p", probs_of(r.witness->first)},
                        {"q", probs_of(r.witness->second)},
                        {"lambda", r.witness_lambda}};
    } else {
      out["witness"] = nullptr;
    }
    return out;
  }
  if (f.check == "invariance") {
    const auto spec = parse_rule_spec(f.rule);
    Transform t;
    if (f.transform == "translate") {
      t.kind = Transform::Kind::translate;
      t.shift = f.shift;
    } else if (f.transform == "scale") {
      t.kind = Transform::Kind::scale;
      t.c = f.c;
      t.degree = f.degree;
    } else if (f.transform == "rotate") {
      t.kind = Transform::Kind::rotate;
    } else {
      throw ValidationError("verify: --transform must be translate, scale or rotate");
    }
    const auto r = invariance_check(spec, t, f.trials, f.seed, f.dim);
    out["rule"] = spec.to_string();
    out["transform"] = r.transform;
    if (t.kind == Transform::Kind::scale) {
      out["c"] = t.c;
      out["degree"] = t.degree;
    }
    if (t.kind == Transform::Kind::translate) out["shift"] = t.shift;
    out["dim"] = f.dim;
    out["instances"] = r.instances;
    out["violations"] = r.violations;
    out["worst_relative_error"] = number(r.worst_relative_error);
    return out;
  }
  if (f.check == "symmetry") {
    const auto spec = parse_rule_spec(f.rule);
    if (spec.rule == "log") {
      const Categorical p({0.5, 0.5});
      const Categorical q({0.1, 0.9});
      const double pq = log_divergence(p, q);
      const double qp = log_divergence(q, p);
      out["rule"] = "log";
      out["d_pq"] = number(pq);
      out["d_qp"] = number(qp);
      out["symmetric"] = pq == qp;
      return out;
    }
    const auto r = symmetry_metric_check(rule_kernel(spec), f.trials, f.seed, f.dim);
    out["rule"] = spec.to_string();
    out["kernel"] = r.kernel;
    out["triples"] = r.triples;
    out["symmetry_violations"] = r.symmetry_violations;
    out["triangle_violations"] = r.triangle_violations;
    out["max_asymmetry"] = number(r.max_asymmetry);
    out["max_self_divergence"] = number(r.max_self_divergence);
    out["worst_triangle_slack"] = number(r.worst_triangle_slack);
    return out;
  }
  if (f.check == "crps-rep") {
    const auto r = crps_representation_check(f.trials, f.seed);
    out["instances"] = r.instances;
    out["failures"] = r.failures;
    out["max_discrepancy"] = number(r.max_discrepancy);
    return out;
  }
  if (f.check == "spectral") {
    const auto spec = parse_rule_spec(f.rule);
    SpectralKernel kernel = SpectralKernel::energy;
    double lambda = 1.0;
    if (spec.rule == "gaussian") {
      kernel = SpectralKernel::gaussian;
      lambda = spec.get("lambda", 1.0);
    } else if (!(spec.rule == "crps" || (spec.rule == "energy" && spec.get("beta", 1.0) == 1.0 && !spec.has("alpha")))) {
      throw ValidationError("verify: spectral check supports crps, energy:beta=1 and gaussian");
    }
    const auto r = spectral_proportionality_check(kernel, lambda, random_normal_pairs(f.pairs, f.seed));
    out["rule"] = spec.to_string();
    out["pairs"] = r.pairs;
    out["zero_pairs"] = r.zero_pairs;
    ojson ratios = ojson::array();
    for (double v : r.ratios) ratios.push_back(number(v));
    out["ratios"] = std::move(ratios);
    out["spread"] = number(r.spread);
    out["constant"] = r.constant;
    return out;
  }
  throw ValidationError("verify: unknown check '" + f.check + "'");
}

ojson cmd_sample(const Flags& f) {
  const auto forecasts = read_forecasts(f.forecasts);
  ojson samples = ojson::array();
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const Ensemble draws = forecast_sample(forecasts[i], f.m, f.seed, i);
    ojson line = ojson::array();
    for (std::size_t k = 0; k < draws.size(); ++k) {
      const auto row = draws.member(k);
      if (draws.dim() == 1) {
        line.push_back(number(row[0]));
      } else {
        line.push_back(std::vector<double>(row.begin(), row.end()));
      }
    }
    samples.push_back(std::move(line));
  }
  ojson out;
  out["command"] = "sample";
  out["m"] = f.m;
  out["seed"] = f.seed;
  out["samples"] = std::move(samples);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proper scoring rules: score, compare, decompose, fit, verify, sample.", "properscore"};
  app.footer(kRuleGrammar);
  app.require_subcommand(1);
  Flags f;

  auto* score_cmd = app.add_subcommand("score", "Per-instance scores and their mean");
  score_cmd->add_option("--rule", f.rule, "Rule spec")->required();
  score_cmd->add_option("--forecasts", f.forecasts, "Forecast JSONL")->required();
  score_cmd->add_option("--obs", f.obs, "Observation JSONL")->required();
  score_cmd->add_option("--mc-samples", f.mc_samples, "Draws for Monte-Carlo kernel scores")->capture_default_str();
  score_cmd->add_option("--seed", f.seed, "Seed")->capture_default_str();

  auto* compare_cmd = app.add_subcommand("compare", "Paired comparison of two forecasters");
  compare_cmd->add_option("--rule", f.rule, "Rule spec")->required();
  compare_cmd->add_option("--forecasts-a", f.forecasts_a, "Forecast JSONL (a)")->required();
  compare_cmd->add_option("--forecasts-b", f.forecasts_b, "Forecast JSONL (b)")->required();
  compare_cmd->add_option("--obs", f.obs, "Observation JSONL")->required();
  compare_cmd->add_option("--mc-samples", f.mc_samples, "Draws for Monte-Carlo kernel scores")->capture_default_str();
  compare_cmd->add_option("--seed", f.seed, "Seed")->capture_default_str();

  auto* decompose_cmd = app.add_subcommand("decompose", "MCB/DSC/UNC decomposition of the mean score");
  decompose_cmd->add_option("--rule", f.rule, "brier or quadratic")->required();
  decompose_cmd->add_option("--forecasts", f.forecasts, "Categorical forecast JSONL")->required();
  decompose_cmd->add_option("--obs", f.obs, "Class observations JSONL")->required();
  decompose_cmd->add_option("--bins", f.bins, "Equal-width probability bins (0 = exact grouping)")
      ->capture_default_str();

  auto* fit_cmd = app.add_subcommand("fit", "Minimum-score fit of a parametric family");
  fit_cmd->add_option("--family", f.family, "Family (normal)")->capture_default_str();
  fit_cmd->add_option("--rule", f.rule, "log or crps")->required();
  fit_cmd->add_option("--data", f.data, "CSV: one column, or x,y with --conditional")->required();
  fit_cmd->add_flag("--conditional", f.conditional, "Fit Y | x ~ N(a + b x, sigma^2)");
  fit_cmd->add_option("--seed", f.seed, "Seed for optimizer restarts")->capture_default_str();

  auto* verify_cmd = app.add_subcommand("verify", "Numerical property checks");
  verify_cmd->add_option("--rule", f.rule, "Rule spec")->required();
  verify_cmd->add_option("--check", f.check, "Check to run")
      ->required()
      ->check(CLI::IsMember({"propriety", "concavity", "invariance", "symmetry", "crps-rep", "spectral"}));
  verify_cmd->add_option("--grid-step", f.grid_step, "Simplex grid step (propriety)");
  verify_cmd->add_option("--n", f.classes, "Number of classes")->capture_default_str();
  verify_cmd->add_option("--trials", f.trials, "Random trials / instances / triples")->capture_default_str();
  verify_cmd->add_option("--lambda", f.lambda, "Fixed mixing weight (concavity)");
  verify_cmd->add_option("--transform", f.transform, "translate, scale or rotate (invariance)")
      ->capture_default_str();
  verify_cmd->add_option("--c", f.c, "Scale factor")->capture_default_str();
  verify_cmd->add_option("--degree", f.degree, "Expected homogeneity degree")->capture_default_str();
  verify_cmd->add_option("--shift", f.shift, "Translation")->capture_default_str();
  verify_cmd->add_option("--dim", f.dim, "Outcome dimension")->capture_default_str();
  verify_cmd->add_option("--pairs", f.pairs, "Normal pairs (spectral)")->capture_default_str();
  verify_cmd->add_option("--seed", f.seed, "Seed")->capture_default_str();

  auto* sample_cmd = app.add_subcommand("sample", "Draws from each forecast");
  sample_cmd->add_option("--forecasts", f.forecasts, "Forecast JSONL")->required();
  sample_cmd->add_option("--m", f.m, "Draws per forecast")->capture_default_str();
  sample_cmd->add_option("--seed", f.seed, "Seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    ojson report;
    if (score_cmd->parsed()) {
      report = cmd_score(f);
    } else if (compare_cmd->parsed()) {
      report = cmd_compare(f);
    } else if (decompose_cmd->parsed()) {
      report = cmd_decompose(f);
    } else if (fit_cmd->parsed()) {
      report = cmd_fit(f);
    } else if (verify_cmd->parsed()) {
      report = cmd_verify(f);
    } else {
      report = cmd_sample(f);
    }
    out << report.dump() << '\n';
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace properscore::cli
