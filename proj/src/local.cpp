#include "properscore/local.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "properscore/numeric.hpp"

namespace properscore {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite value");
}

// log cosh z = |z| + log1p(exp(-2|z|)) - log 2, exact for large |z|.
double log_cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

ScoreValue hyvarinen_score(const DensityDerivatives& d) {
  if (d.gradient.empty()) throw ValidationError("hyvarinen: empty gradient");
  require_finite(d.laplacian, "hyvarinen laplacian");
  double sq = 0.0;
  for (double g : d.gradient) {
    require_finite(g, "hyvarinen gradient");
    sq += g * g;
  }
  return ScoreValue(d.laplacian + 0.5 * sq, Method::closed_form);
}

ScoreValue hyvarinen_score(const DensityOracle& f, std::span<const double> y) {
  if (!f.gradient || !f.laplacian) {
    throw ValidationError("hyvarinen: oracle lacks analytic gradient/Laplacian (use the finite-difference path)");
  }
  if (y.size() != f.dim) throw ValidationError("hyvarinen: dimension mismatch");
  return hyvarinen_score(DensityDerivatives{f.gradient(y), f.laplacian(y)});
}

double default_fd_step(std::span<const double> y) noexcept {
  double scale = 1.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  return std::pow(std::numeric_limits<double>::epsilon(), 0.25) * scale;
}

DensityDerivatives finite_difference_derivatives(const DensityOracle& f, std::span<const double> y,
                                                 double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("finite differences: step must be > 0");
  if (!f.log_density) throw ValidationError("finite differences: oracle has no log-density");
  if (y.size() != f.dim) throw ValidationError("finite differences: dimension mismatch");

  std::vector<double> point(y.begin(), y.end());
  auto eval = [&](std::span<const double> x) {
    const double v = f.log_density(x);
    if (!std::isfinite(v)) throw NumericError("finite differences: non-finite log-density on stencil");
    return v;
  };
  const double center = eval(point);

  DensityDerivatives out;
  out.gradient.resize(y.size());
  double laplacian = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double base = point[i];
    point[i] = base + step;
    const double plus = eval(point);
    point[i] = base - step;
    const double minus = eval(point);
    point[i] = base;
    out.gradient[i] = (plus - minus) / (2.0 * step);
    laplacian += (plus - 2.0 * center + minus) / (step * step);
  }
  out.laplacian = laplacian;
  return out;
}

ScoreValue hyvarinen_score_fd(const DensityOracle& f, std::span<const double> y,
                              std::optional<double> step) {
  const double h = step.value_or(default_fd_step(y));
  ScoreValue out = hyvarinen_score(finite_difference_derivatives(f, y, h));
  out.note("finite-difference");
  return out;
}

ScoreValue logcosh_score(double z1, double z2) {
  require_finite(z1, "logcosh z1");
  require_finite(z2, "logcosh z2");
  const double t = std::tanh(z1);
  // Assumes the density regularity under which this score is proper.
  return ScoreValue(-log_cosh(z1) + z1 * t + z2 * (1.0 - t * t), Method::closed_form);
}

ScoreValue logcosh_score(const DensityOracle& f, double y) {
  if (f.dim != 1) throw ValidationError("logcosh: needs a univariate oracle");
  if (!f.gradient || !f.laplacian) throw ValidationError("logcosh: oracle lacks analytic derivatives");
  const double x[1] = {y};
  return logcosh_score(f.gradient(x).at(0), f.laplacian(x));
}

DensityOracle normal_oracle(double mu, double sigma, bool normalized) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu)) {
    throw ValidationError("normal_oracle: need finite mu and sigma > 0");
  }
  DensityOracle o;
  o.dim = 1;
  o.normalized = normalized;
  const double log_norm = normalized ? -0.5 * std::log(2.0 * kPi) - std::log(sigma) : 0.0;
  o.log_density = [=](std::span<const double> x) {
    const double z = (x[0] - mu) / sigma;
    return log_norm - 0.5 * z * z;
  };
  o.gradient = [=](std::span<const double> x) { return std::vector<double>{-(x[0] - mu) / (sigma * sigma)}; };
  o.laplacian = [=](std::span<const double>) { return -1.0 / (sigma * sigma); };
  return o;
}

DensityOracle normal_mixture_oracle(double weight, double mu1, double sigma1, double mu2,
                                    double sigma2) {
  if (!(weight > 0.0 && weight < 1.0)) throw ValidationError("mixture: weight must lie in (0,1)");
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw ValidationError("mixture: sigmas must be > 0");
  DensityOracle o;
  o.dim = 1;
  o.normalized = true;
  // Component densities, and their first and second derivatives.
  auto parts = [=](double x) {
    const double z1 = (x - mu1) / sigma1;
    const double z2 = (x - mu2) / sigma2;
    const double p1 = weight * normal_pdf(z1) / sigma1;
    const double p2 = (1.0 - weight) * normal_pdf(z2) / sigma2;
    const double d1 = -p1 * z1 / sigma1;
    const double d2 = -p2 * z2 / sigma2;
    const double dd1 = p1 * (z1 * z1 - 1.0) / (sigma1 * sigma1);
    const double dd2 = p2 * (z2 * z2 - 1.0) / (sigma2 * sigma2);
    return std::array<double, 3>{p1 + p2, d1 + d2, dd1 + dd2};
  };
  o.log_density = [=](std::span<const double> x) { return std::log(parts(x[0])[0]); };
  o.gradient = [=](std::span<const double> x) {
    const auto p = parts(x[0]);
    return std::vector<double>{p[1] / p[0]};
  };
  o.laplacian = [=](std::span<const double> x) {
    const auto p = parts(x[0]);
    const double r = p[1] / p[0];
    return p[2] / p[0] - r * r;
  };
  return o;
}

DensityOracle shifted_oracle(DensityOracle f, double shift) {
  auto base = std::move(f.log_density);
  f.log_density = [base = std::move(base), shift](std::span<const double> x) { return base(x) + shift; };
  f.normalized = false;
  return f;
}

}  // namespace properscore
