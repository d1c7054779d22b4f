// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "properscore/estimation.hpp"
#include "properscore/evaluation.hpp"
#include "properscore/kernel.hpp"
#include "properscore/local.hpp"
#include "properscore/propriety.hpp"
#include "properscore/rng.hpp"
#include "properscore/rule_spec.hpp"
#include "properscore/scoring.hpp"
#include "properscore/univariate.hpp"

using namespace properscore;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

template <class F>
void criterion(int id, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// Pairwise kernel form, written independently of the library. Extended
// precision keeps the O(n^2) accumulation well below the tolerance.
double crps_pairwise(const std::vector<double>& x, double y, bool fair) {
  const long double n = static_cast<long double>(x.size());
  long double a = 0.0L;
  for (double v : x) a += std::abs(static_cast<long double>(v) - y);
  long double b = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    long double row = 0.0L;
    for (std::size_t j = i + 1; j < x.size(); ++j) row += std::abs(static_cast<long double>(x[i]) - x[j]);
    b += row;
  }
  // b counts each unordered pair once.
  return static_cast<double>(a / n - (fair ? b / (n * (n - 1.0L)) : b / (n * n)));
}

template <class F>
double seconds(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

volatile double sink = 0.0;

void fast_crps() {
  Philox4x32 rng(101);
  std::size_t count = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const auto n = static_cast<std::size_t>(std::exp(rng.uniform() * std::log(1.0e4)));
    const std::size_t m = std::max<std::size_t>(n, 2);
    const double scale = std::exp(4.0 * rng.uniform() - 2.0);
    const bool ties = inst % 2 == 0;
    std::vector<double> x(m);
    for (double& v : x) {
      v = scale * rng.normal();
      if (ties) v = std::round(v * 4.0 / scale) * scale / 4.0;
    }
    const double y = inst % 7 == 0 ? x[rng.below(m)] : scale * rng.normal();
    for (bool fair : {true, false}) {
      const double fast =
          crps_ensemble(x, y, fair ? EnsembleVariant::fair : EnsembleVariant::empirical).value;
      const double ref = crps_pairwise(x, y, fair);
      const double err = std::abs(fast - ref) / std::max(1.0, std::abs(ref));
      worst = std::max(worst, err);
      ++count;
    }
  }

  std::vector<double> big(10000);
  Philox4x32 r2(102);
  for (double& v : big) v = std::round(r2.normal() * 50.0) / 50.0;
  const double t_fast = seconds([&] { sink = sink + crps_ensemble(big, 0.3).value; }, 50);
  const double t_naive = seconds([&] { sink = sink + crps_pairwise(big, 0.3, true); }, 3);
  const double speedup = t_naive / t_fast;
  report(1, worst <= 1e-10 && speedup >= 10.0,
         std::to_string(count) + " comparisons, worst scaled error " + fmt(worst) + " (tol 1e-10), speedup " +
             fmt(speedup) + "x at n=10^4 (need >= 10x)");
}

void crps_representation() {
  const auto rnd = crps_representation_check(100, 202, 1e-6);
  const double a = crps_ensemble(std::vector<double>{0.0, 1.0}, 0.5, EnsembleVariant::empirical).value;
  const double b = crps_ensemble(std::vector<double>{0.0}, 1.0, EnsembleVariant::empirical).value;
  const auto hand = crps_representation_check({{Ensemble({0.0, 1.0}), 0.5}, {Ensemble({0.0}), 1.0}});
  report(2, rnd.failures == 0 && hand.failures == 0 && a == 0.25 && b == 1.0,
         "100 ensembles, max discrepancy " + fmt(rnd.max_discrepancy) + " (tol 1e-6); hand values " + fmt(a) +
             ", " + fmt(b));
}

void propriety() {
  const std::vector<std::string> proper{"brier", "log", "quadratic", "spherical", "pseudospherical:alpha=1.5",
                                        "pseudospherical:alpha=2", "pseudospherical:alpha=3"};
  bool ok = true;
  std::size_t pairs = 0, bad = 0;
  for (const auto& spec : proper) {
    const auto rule = categorical_rule(parse_rule_spec(spec));
    for (auto [k, step] : {std::pair<std::size_t, double>{2, 0.05}, {3, 0.1}}) {
      const auto r = propriety_scan(rule, k, step);
      pairs += r.pairs_checked;
      bad += r.violations + r.strictness_failures;
      if (r.violations != 0 || r.strictness_failures != 0) {
        ok = false;
        std::cout << "  " << spec << " k=" << k << ": " << r.violations << " violations, "
                  << r.strictness_failures << " strictness failures\n";
      }
    }
  }
  const auto lin = categorical_rule(parse_rule_spec("linear"));
  const auto r = propriety_scan(lin, 2, 0.05);
  const bool caught = r.violations >= 1 && r.witness && replay_witness(lin, r);
  report(3, ok && caught,
         std::to_string(proper.size()) + " proper rules over " + std::to_string(pairs) + " pairs, " +
             std::to_string(bad) + " violations; linear: " + std::to_string(r.violations) +
             " violations, witness replays " + (caught ? "yes" : "no"));
}

void concavity() {
  bool ok = true;
  double worst = 0.0;
  const std::vector<std::string> rules{"brier", "log", "quadratic", "spherical", "pseudospherical:alpha=1.5",
                                       "pseudospherical:alpha=2", "pseudospherical:alpha=3"};
  for (const auto& spec : rules) {
    for (std::size_t k : {2, 3, 5}) {
      const auto r = concavity_scan(categorical_rule(parse_rule_spec(spec)), k, 1000, 303, 0.5);
      worst = std::min(worst, r.worst_gap);
      if (r.violations != 0) {
        ok = false;
        std::cout << "  " << spec << " k=" << k << ": " << r.violations << " violations\n";
      }
    }
  }
  report(4, ok, "7 rules x 3 simplex sizes x 1000 midpoint triples, worst gap " + fmt(worst) + " (tol -1e-12)");
}

void divergence_structure() {
  bool ok = true;
  std::string detail;
  for (const auto& h : {euclidean_beta_kernel(1.0), gaussian_kernel(1.0)}) {
    for (std::size_t dim : {1, 2}) {
      const auto r = symmetry_metric_check(h, 1000, 404 + dim, dim);
      ok = ok && r.symmetry_violations == 0 && r.max_asymmetry == 0.0 && r.triangle_violations == 0;
      detail += h.id() + " d=" + std::to_string(dim) + ": asym " + fmt(r.max_asymmetry) + ", triangle slack " +
                fmt(r.worst_triangle_slack) + "; ";
    }
  }
  const Categorical half({0.5, 0.5}), skew({0.1, 0.9});
  const double pq = log_divergence(half, skew), qp = log_divergence(skew, half);
  ok = ok && std::abs(pq - 0.368) <= 1e-3 && std::abs(qp - 0.511) <= 1e-3;
  report(5, ok, detail + "KL " + fmt(pq) + " / " + fmt(qp));
}

void mc_unbiased() {
  bool ok = true;
  std::string detail;
  Philox4x32 rng(505);
  std::vector<double> base(15);
  for (double& v : base) v = rng.normal();
  const Ensemble pool(base);
  const std::vector<double> y{0.4};
  // Bootstrap draws from the pool: the exact target is the pool's empirical score.
  const Sampler boot = [&](std::size_t m, std::uint64_t seed) {
    Philox4x32 g(seed);
    std::vector<double> out(m);
    for (double& v : out) v = base[g.below(base.size())];
    return Ensemble(std::move(out));
  };
  struct Case {
    Kernel h;
    Sampler sampler;
    double exact;
    std::string label;
  };
  const auto energy = euclidean_beta_kernel(1.0);
  const auto gauss = gaussian_kernel(1.0);
  std::vector<Case> cases{
      {energy, boot, kernel_score_exact(energy, pool, y, EnsembleVariant::empirical).value, "energy/bootstrap"},
      {gauss, boot, kernel_score_exact(gauss, pool, y, EnsembleVariant::empirical).value, "gaussian/bootstrap"},
      {energy, forecast_sampler(Normal(0.0, 1.0)), crps_normal(0.0, 1.0, y[0]).value, "energy/normal"},
  };
  const std::size_t reps = 10000, m = 20;
  for (const auto& c : cases) {
    double sum = 0.0, se2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto s = kernel_score_mc(c.h, c.sampler, y, m, 1000 + r);
      sum += s.value;
      se2 += *s.se * *s.se;
    }
    const double mean = sum / reps;
    const double se = std::sqrt(se2) / reps;
    const double z = (mean - c.exact) / se;
    ok = ok && std::abs(z) <= 4.0;
    detail += c.label + " z=" + fmt(z) + "; ";
  }
  report(6, ok, detail + "10^4 replicates of m=20, need |z| <= 4");
}

void invariance() {
  auto check = [](const char* spec, Transform t, std::size_t n, std::size_t dim) {
    return invariance_check(parse_rule_spec(spec), t, n, 606, dim);
  };
  using K = Transform::Kind;
  const auto crps_scale = check("crps", {K::scale, 0.0, 2.5, 1.0, std::nullopt}, 1000, 1);
  const auto crps_shift = check("crps", {K::translate, -1.75, 1.0, 1.0, std::nullopt}, 1000, 1);
  const auto e1 = check("energy:beta=1", {K::scale, 0.0, 3.0, 1.0, std::nullopt}, 200, 2);
  const auto e05 = check("energy:beta=0.5", {K::scale, 0.0, 3.0, 0.5, std::nullopt}, 200, 3);
  const auto e15 = check("energy:beta=1.5", {K::scale, 0.0, 0.4, 1.5, std::nullopt}, 200, 1);
  const auto rot = check("energy:beta=1", {K::rotate, 0.0, 1.0, 1.0, std::nullopt}, 20, 3);
  std::size_t gauss_fail = 0;
  for (double degree : {0.0, 1.0, 2.0}) gauss_fail += check("gaussian:lambda=1", {K::scale, 0.0, 2.0, degree, std::nullopt}, 50, 1).violations;
  const bool ok = crps_scale.violations == 0 && crps_shift.violations == 0 && e1.violations == 0 &&
                  e05.violations == 0 && e15.violations == 0 && rot.violations == 0 && gauss_fail > 0;
  report(7, ok,
         "crps scale rel err " + fmt(crps_scale.worst_relative_error) + ", shift " +
             fmt(crps_shift.worst_relative_error) + "; energy c^beta worst " +
             fmt(std::max({e1.worst_relative_error, e05.worst_relative_error, e15.worst_relative_error})) +
             "; 20 rotations worst " + fmt(rot.worst_relative_error) + " (tol 1e-10); gaussian scaling expected-fail (" +
             std::to_string(gauss_fail) + "/150 instances non-homogeneous)");
}

void spectral() {
  const auto pairs = random_normal_pairs(20, 707);
  const auto e = spectral_proportionality_check(SpectralKernel::energy, 1.0, pairs);
  const auto g1 = spectral_proportionality_check(SpectralKernel::gaussian, 1.0, pairs);
  const auto g2 = spectral_proportionality_check(SpectralKernel::gaussian, 0.25, pairs);
  report(8, e.constant && g1.constant && g2.constant,
         "20 normal pairs, ratio spread energy " + fmt(e.spread) + ", gaussian(1) " + fmt(g1.spread) +
             ", gaussian(0.25) " + fmt(g2.spread) + " (tol 0.02)");
}

void hyvarinen() {
  const auto f = normal_oracle(0.0, 1.0);
  const std::vector<double> zero{0.0};
  const double at0 = hyvarinen_score(f, zero).value;

  bool invariant = true;
  const auto mix = normal_mixture_oracle(0.3, -1.0, 0.6, 1.2, 1.4);
  const auto unnorm = shifted_oracle(mix, -5.5);
  const auto unnorm_normal = normal_oracle(0.7, 1.3, false);
  const auto norm_normal = normal_oracle(0.7, 1.3, true);
  double fd_worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> y{-4.0 + 8.0 * i / 49.0};
    invariant = invariant && hyvarinen_score(mix, y).value == hyvarinen_score(unnorm, y).value &&
                hyvarinen_score(norm_normal, y).value == hyvarinen_score(unnorm_normal, y).value;
    fd_worst = std::max(fd_worst, std::abs(hyvarinen_score_fd(mix, y).value - hyvarinen_score(mix, y).value));
  }

  Philox4x32 rng(909);
  const int n = 100000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> y{rng.normal()};
    const double v = hyvarinen_score(f, y).value;
    s += v;
    ss += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((ss / n - mean * mean) / n);
  const bool ok = at0 == -1.0 && invariant && fd_worst <= 1e-4 && std::abs(mean + 0.5) <= 3 * se;
  report(9, ok,
         "S(N(0,1),0) = " + fmt(at0) + "; normalization invariance " + (invariant ? "exact" : "broken") +
             "; FD worst " + fmt(fd_worst) + " on 50 points (tol 1e-4); MC entropy " + fmt(mean) + " +- " +
             fmt(se));
}

void estimation() {
  Philox4x32 rng(1010);
  std::vector<double> data(10000);
  for (double& v : data) v = 2.0 + 3.0 * rng.normal();
  double mean = 0.0;
  for (double v : data) mean += v;
  mean /= data.size();
  double ss = 0.0;
  for (double v : data) ss += (v - mean) * (v - mean);
  const double mle_sd = std::sqrt(ss / data.size());

  const auto lf = fit_min_score(FitRule::log, data);
  const double log_err = std::max(std::abs(lf.params[0] - mean), std::abs(lf.params[1] - mle_sd));
  const auto cf = fit_min_score(FitRule::crps, data);
  const double crps_err = std::max(std::abs(cf.params[0] - 2.0), std::abs(cf.params[1] - 3.0));

  std::vector<double> x(10000), y(10000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 4.0 * rng.uniform() - 2.0;
    y[i] = 1.0 + 2.0 * x[i] + rng.normal();
  }
  double cond_err = 0.0;
  for (FitRule rule : {FitRule::log, FitRule::crps}) {
    const auto r = fit_conditional_min_score(rule, x, y);
    cond_err = std::max({cond_err, std::abs(r.params[0] - 1.0), std::abs(r.params[1] - 2.0)});
  }
  report(10, log_err <= 1e-6 && crps_err <= 0.1 && cond_err <= 0.05,
         "log fit vs MLE " + fmt(log_err) + " (tol 1e-6); crps fit vs (2,3) " + fmt(crps_err) +
             " (tol 0.1); conditional vs (1,2) " + fmt(cond_err) + " (tol 0.05)");
}

void decomposition() {
  Philox4x32 rng(1111);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 10 + rng.below(200);
    const bool coarse = t % 2 == 0;
    std::vector<Categorical> f;
    std::vector<std::size_t> y;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = coarse ? static_cast<double>(rng.below(11)) / 10.0 : rng.uniform();
      f.emplace_back(std::vector<double>{1.0 - p, p});
      y.push_back(rng.uniform() < p ? 1 : 0);
    }
    const auto r = corp_decompose(DecompositionRule::brier_binary, f, y,
                                  coarse ? std::nullopt : std::optional<std::size_t>{10});
    worst = std::max(worst, std::abs(r.mean_score - (r.mcb - r.dsc + r.unc)));
  }
  std::vector<std::size_t> obs{1, 0, 0, 1, 1, 0, 1, 1, 1, 0};
  const Categorical clim({0.4, 0.6});
  const std::vector<Categorical> cf(obs.size(), clim);
  bool exact = true;
  for (auto rule : {DecompositionRule::brier_binary, DecompositionRule::quadratic}) {
    const auto r = corp_decompose(rule, cf, obs);
    exact = exact && r.mcb == 0.0 && r.dsc == 0.0;
  }
  report(11, worst <= 1e-12 && exact,
         "1000 binary datasets, worst identity residual " + fmt(worst) + " (tol 1e-12); climatological MCB=DSC=0 " +
             (exact ? "exactly" : "NOT exactly"));
}

struct Run {
  int code;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PROPERSCORE_CLI + "\" " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return {-1, {}};
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), got);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void cli_determinism() {
  const std::string fx = std::string(PROPERSCORE_FIXTURES) + "/";
  const std::vector<std::string> good{
      "score --rule crps --forecasts " + fx + "ensemble_forecasts.jsonl --obs " + fx + "ensemble_obs.jsonl",
      "score --rule crps:empirical --forecasts " + fx + "normal_a.jsonl --obs " + fx + "normal_obs.jsonl",
      "score --rule gaussian:lambda=1.0 --forecasts " + fx + "normal_a.jsonl --obs " + fx +
          "normal_obs.jsonl --mc-samples 500 --seed 11",
      "score --rule energy:beta=1.0 --forecasts " + fx + "mv_forecasts.jsonl --obs " + fx + "mv_obs.jsonl",
      "score --rule variogram:p=0.5 --forecasts " + fx + "mv_forecasts.jsonl --obs " + fx + "mv_obs.jsonl",
      "score --rule brier --forecasts " + fx + "categorical_forecasts.jsonl --obs " + fx + "categorical_obs.jsonl",
      "compare --rule crps --forecasts-a " + fx + "normal_a.jsonl --forecasts-b " + fx + "normal_b.jsonl --obs " +
          fx + "normal_obs.jsonl",
      "decompose --rule brier --forecasts " + fx + "categorical_forecasts.jsonl --obs " + fx +
          "categorical_obs.jsonl",
      "fit --family normal --rule crps --data " + fx + "fit_normal.csv --seed 4",
      "fit --rule log --data " + fx + "fit_pairs.csv --conditional",
      "verify --rule brier --check propriety",
      "verify --rule log --check concavity --trials 300 --seed 2",
      "verify --rule energy:beta=1 --check invariance --transform rotate --dim 3 --trials 20",
      "verify --rule gaussian:lambda=1 --check spectral",
      "sample --forecasts " + fx + "normal_a.jsonl --m 10 --seed 8",
  };
  std::size_t identical = 0, ok_codes = 0;
  for (const auto& args : good) {
    const auto a = run_cli(args);
    const auto b = run_cli(args);
    if (a.code == 0) ++ok_codes;
    if (a.code == b.code && a.out == b.out && !a.out.empty()) ++identical;
    else std::cout << "  nondeterministic or empty: " << args << "\n";
  }

  struct Bad {
    std::string args;
    int code;
  };
  const std::vector<Bad> bad{
      {"score --rule crps --forecasts " + fx + "bad_json.jsonl --obs " + fx + "two_obs.jsonl", 1},
      {"score --rule brier --forecasts " + fx + "bad_probs.jsonl --obs " + fx + "two_obs.jsonl", 1},
      {"score --rule crps --forecasts " + fx + "bad_type.jsonl --obs " + fx + "two_obs.jsonl", 1},
      {"score --rule crps --forecasts " + fx + "bad_sigma.jsonl --obs " + fx + "two_obs.jsonl", 1},
      {"score --rule crps --forecasts " + fx + "one_forecast.jsonl --obs " + fx + "bad_obs.jsonl", 1},
      {"score --rule crps --forecasts " + fx + "one_forecast.jsonl --obs " + fx + "two_obs.jsonl", 1},
      {"score --rule crps --forecasts " + fx + "blank_line.jsonl --obs " + fx + "two_obs.jsonl", 1},
      {"score --rule crps --forecasts " + fx + "overflow_forecasts.jsonl --obs " + fx + "overflow_obs.jsonl", 2},
      {"fit --rule log --data " + fx + "degenerate.csv", 1},
      {"fit --rule log --data " + fx + "bad_values.csv", 1},
      {"score --rule crps --no-such-flag", 1},
      {"frobnicate", 1},
  };
  std::size_t contract = 0;
  for (const auto& c : bad) {
    const auto r = run_cli(c.args);
    if (r.code == c.code && r.out.empty()) ++contract;
    else std::cout << "  exit " << r.code << " (want " << c.code << "): " << c.args << "\n";
  }
  report(12, identical == good.size() && ok_codes == good.size() && contract == bad.size(),
         std::to_string(identical) + "/" + std::to_string(good.size()) + " commands byte-identical across runs; " +
             std::to_string(contract) + "/" + std::to_string(bad.size()) + " malformed inputs hit their exit code");
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> gates{fast_crps,  crps_representation, propriety, concavity,
                                                 divergence_structure, mc_unbiased, invariance, spectral,
                                                 hyvarinen, estimation, decomposition, cli_determinism};
  for (std::size_t i = 0; i < gates.size(); ++i) criterion(static_cast<int>(i + 1), gates[i]);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
