#include "properscore/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "properscore/numeric.hpp"
#include "properscore/rule_spec.hpp"

namespace properscore {

namespace {

void require_same_dim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("kernel: dimension mismatch");
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double alpha_distance(std::span<const double> x, std::span<const double> y, double alpha) {
  require_same_dim(x, y);
  if (x.size() == 1) return std::abs(x[0] - y[0]);
  if (alpha == 2.0) return std::sqrt(squared_distance(x, y));
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] - y[i]), alpha);
  return std::pow(s, 1.0 / alpha);
}

std::string format_param(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// Lexicographic order on ensembles, used to canonicalize divergence arguments.
bool ensemble_less(const Ensemble& a, const Ensemble& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  if (a.dim() != b.dim()) return a.dim() < b.dim();
  const auto fa = a.flat();
  const auto fb = b.flat();
  if (!std::equal(fa.begin(), fa.end(), fb.begin())) {
    return std::lexicographical_compare(fa.begin(), fa.end(), fb.begin(), fb.end());
  }
  const auto wa = a.weights();
  const auto wb = b.weights();
  return std::lexicographical_compare(wa.begin(), wa.end(), wb.begin(), wb.end());
}

// sum_ij w_i w_j h(x_i, x_j), diagonal included unless `off_diagonal_only`.
double pair_sum(const Kernel& h, const Ensemble& p, bool off_diagonal_only) {
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!off_diagonal_only) s += p.weight(i) * p.weight(i) * h(p.member(i), p.member(i));
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      s += 2.0 * p.weight(i) * p.weight(j) * h(p.member(i), p.member(j));
    }
  }
  return s.value();
}

double outcome_sum(const Kernel& h, const Ensemble& p, std::span<const double> y) {
  if (p.dim() != y.size()) throw ValidationError("kernel score: outcome dimension differs from ensemble");
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) s += p.weight(i) * h(p.member(i), y);
  return s.value();
}

}  // namespace

Kernel::Kernel(std::string id, Fn eval, KernelTraits traits)
    : id_(std::move(id)), eval_(std::move(eval)), traits_(traits) {
  if (!eval_) throw ValidationError("kernel '" + id_ + "': missing evaluation function");
}

Kernel euclidean_beta_kernel(double beta, double norm_alpha) {
  if (!(beta > 0.0 && beta < 2.0)) throw ValidationError("euclidean_beta: beta must lie in (0,2)");
  if (!(norm_alpha > 0.0 && norm_alpha <= 2.0)) {
    throw ValidationError("euclidean_beta: norm alpha must lie in (0,2]");
  }
  if (beta > norm_alpha) throw ValidationError("euclidean_beta: beta must not exceed norm alpha");
  std::string id = "euclidean_beta(beta=" + format_param(beta);
  if (norm_alpha != 2.0) id += ",alpha=" + format_param(norm_alpha);
  id += ")";
  return Kernel(
      std::move(id),
      [beta, norm_alpha](std::span<const double> x, std::span<const double> y) {
        const double r = alpha_distance(x, y, norm_alpha);
        return beta == 1.0 ? r : std::pow(r, beta);
      },
      KernelTraits{true, beta});
}

Kernel from_positive_definite(std::string id, Kernel::Fn k, KernelTraits traits) {
  return Kernel(
      std::move(id),
      [k = std::move(k)](std::span<const double> x, std::span<const double> y) {
        return std::max(0.0, k(x, x) + k(y, y) - 2.0 * k(x, y));
      },
      traits);
}

Kernel gaussian_kernel(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("gaussian: lambda must be > 0");
  // k(x,x) = 1 so h = 2 - 2k; written directly to keep h(x,x) exactly 0.
  return Kernel(
      "gaussian(lambda=" + format_param(lambda) + ")",
      [lambda](std::span<const double> x, std::span<const double> y) {
        return 2.0 - 2.0 * std::exp(-squared_distance(x, y) / lambda);
      },
      KernelTraits{true, std::nullopt});
}

Kernel laplacian_kernel(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("laplacian: lambda must be > 0");
  return Kernel(
      "laplacian(lambda=" + format_param(lambda) + ")",
      [lambda](std::span<const double> x, std::span<const double> y) {
        return 2.0 - 2.0 * std::exp(-std::sqrt(squared_distance(x, y)) / lambda);
      },
      KernelTraits{true, std::nullopt});
}

Kernel variogram_kernel(double p, std::optional<Eigen::MatrixXd> weights) {
  if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("variogram: p must be > 0");
  if (weights) {
    if (weights->rows() != weights->cols()) throw ValidationError("variogram: weights must be square");
    if ((weights->array() < 0.0).any() || !weights->allFinite()) {
      throw ValidationError("variogram: weights must be nonnegative");
    }
  }
  return Kernel(
      "variogram(p=" + format_param(p) + ")",
      [p, weights](std::span<const double> x, std::span<const double> y) {
        require_same_dim(x, y);
        const auto d = static_cast<Eigen::Index>(x.size());
        if (weights && weights->rows() != d) throw ValidationError("variogram: weights dimension mismatch");
        double s = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
          for (Eigen::Index j = 0; j < d; ++j) {
            const double w = weights ? (*weights)(i, j) : (i == j ? 0.0 : 1.0);
            if (w == 0.0) continue;
            const double diff = std::pow(std::abs(x[i] - x[j]), p) - std::pow(std::abs(y[i] - y[j]), p);
            s += w * diff * diff;
          }
        }
        return s;
      },
      KernelTraits{true, std::nullopt});
}

Chaining threshold_chaining(double t) {
  if (std::isnan(t)) throw ValidationError("threshold chaining: NaN threshold");
  return Chaining{[t](std::span<const double> x) {
                    std::vector<double> out(x.begin(), x.end());
                    for (double& v : out) v = std::max(v, t);
                    return out;
                  },
                  "max(x," + format_param(t) + ")"};
}

Kernel weight_transform(const Kernel& h, const WeightMode& mode) {
  if (const auto* c = std::get_if<Chaining>(&mode)) {
    if (!c->v) throw ValidationError("chaining: missing map");
    return Kernel(
        "chained(" + h.id() + "," + c->label + ")",
        [h, v = c->v](std::span<const double> x, std::span<const double> y) { return h(v(x), v(y)); },
        KernelTraits{false, std::nullopt});
  }
  const auto& r = std::get<Rescaling>(mode);
  if (!r.w) throw ValidationError("rescaling: missing weight function");
  return Kernel(
      "rescaled(" + h.id() + "," + r.label + ")",
      [h, w = r.w](std::span<const double> x, std::span<const double> y) {
        const double wx = w(x);
        const double wy = w(y);
        if (!(wx >= 0.0) || !(wy >= 0.0)) throw ValidationError("rescaling: negative weight value");
        return h(x, y) * wx * wy;
      },
      KernelTraits{false, std::nullopt});
}

Kernel kernel_registry(std::string_view id, const std::map<std::string, double>& params) {
  auto param = [&](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (id == "euclidean_beta" || id == "energy") {
    return euclidean_beta_kernel(param("beta", 1.0), param("alpha", 2.0));
  }
  if (id == "crps") return euclidean_beta_kernel(1.0);
  if (id == "gaussian") return gaussian_kernel(param("lambda", 1.0));
  if (id == "laplacian") return laplacian_kernel(param("lambda", 1.0));
  if (id == "variogram") return variogram_kernel(param("p", 0.5));
  throw ValidationError("unknown kernel id '" + std::string(id) + "'");
}

Kernel parse_kernel_spec(std::string_view spec) {
  const auto rule = parse_rule_spec(spec);
  if (rule.rule == "tw") {
    const auto base = kernel_registry(rule.base->rule, rule.base->params);
    return weight_transform(base, threshold_chaining(rule.get("t", -INFINITY)));
  }
  return kernel_registry(rule.rule, rule.params);
}

ScoreValue kernel_score_exact(const Kernel& h, const Ensemble& p, std::span<const double> y,
                              EnsembleVariant variant) {
  const double outcome = outcome_sum(h, p, y);
  double spread = 0.0;
  if (variant == EnsembleVariant::fair) {
    if (p.size() < 2) throw ValidationError("kernel score: the fair variant needs at least two members");
    CompensatedSum sq;
    for (double w : p.weights()) sq += w * w;
    spread = pair_sum(h, p, true) / (1.0 - sq.value());
  } else {
    spread = pair_sum(h, p, false);
  }
  ScoreValue out(outcome - 0.5 * spread, Method::naive_exact);
  out.note("variant=" + std::string(to_string(variant)));
  out.note("kernel=" + h.id());
  return out;
}

Sampler forecast_sampler(Forecast f) {
  return [f = std::move(f)](std::size_t m, std::uint64_t seed) { return forecast_sample(f, m, seed); };
}

ScoreValue kernel_score_mc(const Kernel& h, const Sampler& sampler, std::span<const double> y,
                           std::size_t m, std::uint64_t seed) {
  if (m < 2) throw ValidationError("kernel_score_mc: need m >= 2 samples");
  const Ensemble draws = sampler(m, seed);
  if (draws.size() != m) throw ValidationError("kernel_score_mc: sampler returned the wrong sample size");
  if (draws.dim() != y.size()) throw ValidationError("kernel_score_mc: outcome dimension mismatch");

  std::vector<double> to_outcome(m);
  std::vector<double> row_sums(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    to_outcome[i] = h(draws.member(i), y);
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = h(draws.member(i), draws.member(j));
      row_sums[i] += v;
      row_sums[j] += v;
    }
  }
  const double md = static_cast<double>(m);
  const double a = compensated_sum(to_outcome);
  const double b = compensated_sum(row_sums);
  const double estimate = a / md - b / (2.0 * md * (md - 1.0));

  double se = std::numeric_limits<double>::infinity();
  if (m >= 3) {
    std::vector<double> loo(m);
    for (std::size_t i = 0; i < m; ++i) {
      loo[i] = (a - to_outcome[i]) / (md - 1.0) - (b - 2.0 * row_sums[i]) / (2.0 * (md - 1.0) * (md - 2.0));
    }
    const double loo_mean = compensated_sum(loo) / md;
    CompensatedSum ss;
    for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
    se = std::sqrt((md - 1.0) / md * ss.value());
  }
  ScoreValue out(estimate, Method::monte_carlo, se);
  out.note("kernel=" + h.id());
  if (m < 3) out.note("jackknife SE needs m >= 3");
  return out;
}

double kernel_divergence(const Kernel& h, const Ensemble& p_in, const Ensemble& q_in) {
  if (p_in.dim() != q_in.dim()) throw ValidationError("kernel_divergence: dimension mismatch");
  const bool swap = ensemble_less(q_in, p_in);
  const Ensemble& p = swap ? q_in : p_in;
  const Ensemble& q = swap ? p_in : q_in;

  CompensatedSum cross;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) cross += p.weight(i) * q.weight(j) * h(p.member(i), q.member(j));
  }
  const double pp = pair_sum(h, p, false);
  const double qq = pair_sum(h, q, false);
  const double d = cross.value() - 0.5 * pp - 0.5 * qq;
  if (d < 0.0) {
    const double scale = std::abs(cross.value()) + 0.5 * (std::abs(pp) + std::abs(qq));
    if (d < -1e-10 * std::max(scale, 1e-300)) {
      throw NumericError("kernel_divergence: negative divergence; kernel '" + h.id() +
                         "' is not conditionally negative definite");
    }
    return 0.0;  // rounding
  }
  return d;
}

double kernel_entropy(const Kernel& h, const Ensemble& p) { return 0.5 * pair_sum(h, p, false); }

GFunction g_identity() {
  return {"identity", [](double u) { return u; }, [](double) { return 1.0; }};
}

GFunction g_log1p() {
  return {"log1p", [](double u) { return std::log1p(u); }, [](double u) { return 1.0 / (1.0 + u); }};
}

GFunction g_sqrt_eps(double eps) {
  if (!(eps > 0.0)) throw ValidationError("sqrt_eps: eps must be > 0");
  return {"sqrt_eps", [eps](double u) { return std::sqrt(u + eps) - std::sqrt(eps); },
          [eps](double u) { return 0.5 / std::sqrt(u + eps); }};
}

GFunction g_function(std::string_view id) {
  if (id == "identity") return g_identity();
  if (id == "log1p") return g_log1p();
  if (id == "sqrt_eps" || id == "sqrt") return g_sqrt_eps();
  throw ValidationError("unknown g function '" + std::string(id) + "'");
}

ScoreValue generalized_kernel_score(const Kernel& h, const GFunction& g, const Ensemble& p,
                                    std::span<const double> y) {
  const double entropy = kernel_entropy(h, p);
  const double slope = g.derivative(entropy);
  if (!std::isfinite(slope)) {
    throw NumericError("generalized kernel score: g'(H) is not finite at H = " + format_param(entropy));
  }
  const double outcome = outcome_sum(h, p, y);
  ScoreValue out(g.eval(entropy) + slope * (outcome - 2.0 * entropy), Method::naive_exact);
  out.note("g=" + g.id);
  out.note("kernel=" + h.id());
  return out;
}

}  // namespace properscore
