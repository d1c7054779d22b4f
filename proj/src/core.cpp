#include "properscore/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "properscore/detail/overloaded.hpp"
#include "properscore/numeric.hpp"
#include "properscore/rng.hpp"

namespace properscore {

namespace {

using nlohmann::json;

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": non-finite value");
  }
}

using detail::overloaded;

double json_number(const json& j, const char* field) {
  if (!j.is_number()) throw ValidationError(std::string("field '") + field + "' must be a number");
  return j.get<double>();
}

std::vector<double> json_numbers(const json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(std::string("field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(json_number(v, field));
  return out;
}

const json& require_field(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) throw ValidationError(std::string("missing field '") + field + "'");
  return *it;
}

bool uniform_weights(std::span<const double> w) {
  const double u = 1.0 / static_cast<double>(w.size());
  return std::all_of(w.begin(), w.end(), [u](double x) { return x == u; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Observations

void validate_observation(const Observation& y) {
  std::visit(overloaded{[](double v) { require_finite(std::span(&v, 1), "observation"); },
                        [](const std::vector<double>& v) {
                          if (v.empty()) throw ValidationError("observation: empty vector");
                          require_finite(v, "observation");
                        },
                        [](Category) {}},
             y);
}

double observation_scalar(const Observation& y) {
  if (const auto* v = std::get_if<double>(&y)) return *v;
  if (const auto* v = std::get_if<std::vector<double>>(&y); v && v->size() == 1) return (*v)[0];
  throw ValidationError("expected a real-valued scalar observation");
}

std::vector<double> observation_vector(const Observation& y) {
  if (const auto* v = std::get_if<std::vector<double>>(&y)) return *v;
  if (const auto* v = std::get_if<double>(&y)) return {*v};
  throw ValidationError("expected a real-valued observation");
}

std::size_t observation_category(const Observation& y) {
  if (const auto* c = std::get_if<Category>(&y)) return c->index;
  throw ValidationError("expected a class observation {\"class\":k}");
}

// ---------------------------------------------------------------------------
// Forecast types

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("categorical: empty probability vector");
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("categorical: simplex violation (probability outside [0,1])");
    }
  }
  const double total = compensated_sum(probs_);
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw ValidationError("categorical: simplex violation (probabilities sum to " +
                          std::to_string(total) + ")");
  }
}

Ensemble::Ensemble(std::vector<double> members, std::vector<double> weights)
    : dim_(1), data_(std::move(members)), weights_(std::move(weights)) {
  validate_and_fill_weights();
}

Ensemble::Ensemble(std::size_t dim, std::vector<double> flat_members, std::vector<double> weights)
    : dim_(dim), data_(std::move(flat_members)), weights_(std::move(weights)) {
  validate_and_fill_weights();
}

Ensemble Ensemble::from_points(const std::vector<std::vector<double>>& points,
                               std::vector<double> weights) {
  if (points.empty()) throw ValidationError("ensemble: no members");
  const std::size_t dim = points.front().size();
  std::vector<double> flat;
  flat.reserve(points.size() * dim);
  for (const auto& p : points) {
    if (p.size() != dim) throw ValidationError("ensemble: members of different dimension");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return Ensemble(dim, std::move(flat), std::move(weights));
}

void Ensemble::validate_and_fill_weights() {
  if (dim_ == 0) throw ValidationError("ensemble: dimension must be positive");
  if (data_.empty()) throw ValidationError("ensemble: empty ensemble");
  if (data_.size() % dim_ != 0) throw ValidationError("ensemble: ragged member storage");
  require_finite(data_, "ensemble member");
  const std::size_t n = data_.size() / dim_;
  if (weights_.empty()) {
    weights_.assign(n, 1.0 / static_cast<double>(n));
    weighted_ = false;
    return;
  }
  if (weights_.size() != n) throw ValidationError("ensemble: weights length differs from members");
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("ensemble: negative or non-finite weight");
  }
  if (std::abs(compensated_sum(weights_) - 1.0) > kSimplexTolerance) {
    throw ValidationError("ensemble: weights do not sum to 1");
  }
  weighted_ = !std::all_of(weights_.begin(), weights_.end(),
                           [&](double w) { return w == weights_.front(); });
}

Normal::Normal(double mu, double sigma) : mu_(mu), sigma_(sigma) {
  if (!std::isfinite(mu)) throw ValidationError("normal: non-finite mean");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw ValidationError("normal: sigma must be > 0");
}

Eigen::MatrixXd spd_cholesky(const Eigen::MatrixXd& cov) {
  const Eigen::Index d = cov.rows();
  if (d == 0 || cov.cols() != d) throw ValidationError("covariance must be square and non-empty");
  if (!cov.allFinite()) throw ValidationError("covariance: non-finite entry");
  const double scale = cov.cwiseAbs().maxCoeff();
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("covariance is not symmetric");
  }
  const double pivot_tol = 1e-12 * cov.diagonal().maxCoeff();
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = cov(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(pivot > pivot_tol)) throw ValidationError("covariance is singular or not positive definite");
    lower(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      lower(i, j) = (cov(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / lower(j, j);
    }
  }
  return lower;
}

MvNormal::MvNormal(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() == 0) throw ValidationError("mvnormal: empty mean");
  if (!mean_.allFinite()) throw ValidationError("mvnormal: non-finite mean");
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw ValidationError("mvnormal: covariance shape does not match mean");
  }
  chol_ = spd_cholesky(cov_);
}

std::string_view forecast_kind(const Forecast& f) noexcept {
  static constexpr std::string_view names[] = {"categorical", "ensemble", "normal", "mvnormal",
                                               "density"};
  return names[f.index()];
}

// ---------------------------------------------------------------------------
// Scores

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::closed_form: return "closed-form";
    case Method::fast_exact: return "fast-exact";
    case Method::naive_exact: return "naive-exact";
    case Method::numeric_quadrature: return "numeric-quadrature";
    case Method::monte_carlo: return "monte-carlo";
  }
  return "unknown";
}

ScoreValue::ScoreValue(double v, Method m, std::optional<double> s)
    : value(v), method(m), se(s) {
  if (std::isnan(value)) throw NumericError("score evaluated to NaN");
  if (value == -std::numeric_limits<double>::infinity()) throw NumericError("score evaluated to -inf");
  if (se.has_value() != (method == Method::monte_carlo)) {
    throw std::logic_error("ScoreValue: standard error present iff method is monte-carlo");
  }
  if (se && (std::isnan(*se) || *se < 0.0)) throw NumericError("invalid Monte-Carlo standard error");
}

// ---------------------------------------------------------------------------
// Parsing

Forecast parse_forecast(const json& record) {
  if (!record.is_object()) throw ValidationError("forecast record must be an object");
  const auto& type_field = require_field(record, "type");
  if (!type_field.is_string()) throw ValidationError("field 'type' must be a string");
  const auto type = type_field.get<std::string>();

  if (type == "categorical") {
    return Categorical(json_numbers(require_field(record, "probs"), "probs"));
  }
  if (type == "ensemble") {
    const auto& members = require_field(record, "members");
    if (!members.is_array()) throw ValidationError("field 'members' must be an array");
    std::vector<double> weights;
    if (auto it = record.find("weights"); it != record.end() && !it->is_null()) {
      weights = json_numbers(*it, "weights");
    }
    if (!members.empty() && members.front().is_array()) {
      std::vector<std::vector<double>> points;
      for (const auto& m : members) points.push_back(json_numbers(m, "members"));
      return Ensemble::from_points(points, std::move(weights));
    }
    return Ensemble(json_numbers(members, "members"), std::move(weights));
  }
  if (type == "normal") {
    return Normal(json_number(require_field(record, "mu"), "mu"),
                  json_number(require_field(record, "sigma"), "sigma"));
  }
  if (type == "mvnormal") {
    const auto mean = json_numbers(require_field(record, "mean"), "mean");
    const auto& cov = require_field(record, "cov");
    if (!cov.is_array() || cov.size() != mean.size()) {
      throw ValidationError("field 'cov' must be a square array matching 'mean'");
    }
    Eigen::MatrixXd c(mean.size(), mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const auto row = json_numbers(cov[i], "cov");
      if (row.size() != mean.size()) throw ValidationError("field 'cov' is not square");
      for (std::size_t j = 0; j < row.size(); ++j) c(i, j) = row[j];
    }
    return MvNormal(Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size()), std::move(c));
  }
  throw ValidationError("unknown forecast type '" + type + "'");
}

Forecast parse_forecast(std::string_view json_line) {
  json record;
  try {
    record = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed forecast record: ") + e.what());
  }
  return parse_forecast(record);
}

json serialize_forecast(const Forecast& f) {
  return std::visit(
      overloaded{
          [](const Categorical& c) -> json {
            return {{"type", "categorical"}, {"probs", std::vector<double>(c.probs().begin(), c.probs().end())}};
          },
          [](const Ensemble& e) -> json {
            json out{{"type", "ensemble"}};
            if (e.dim() == 1) {
              out["members"] = std::vector<double>(e.flat().begin(), e.flat().end());
            } else {
              json members = json::array();
              for (std::size_t i = 0; i < e.size(); ++i) {
                members.push_back(std::vector<double>(e.member(i).begin(), e.member(i).end()));
              }
              out["members"] = std::move(members);
            }
            if (!uniform_weights(e.weights())) {
              out["weights"] = std::vector<double>(e.weights().begin(), e.weights().end());
            }
            return out;
          },
          [](const Normal& n) -> json {
            return {{"type", "normal"}, {"mu", n.mu()}, {"sigma", n.sigma()}};
          },
          [](const MvNormal& n) -> json {
            json cov = json::array();
            for (Eigen::Index i = 0; i < n.cov().rows(); ++i) {
              std::vector<double> row(n.cov().cols());
              for (Eigen::Index j = 0; j < n.cov().cols(); ++j) row[j] = n.cov()(i, j);
              cov.push_back(std::move(row));
            }
            return {{"type", "mvnormal"},
                    {"mean", std::vector<double>(n.mean().data(), n.mean().data() + n.mean().size())},
                    {"cov", std::move(cov)}};
          },
          [](const DensityOracle&) -> json {
            throw ValidationError("density oracles have no serialized form");
          }},
      f);
}

Observation parse_observation(const json& record) {
  Observation out;
  if (record.is_number()) {
    out = record.get<double>();
  } else if (record.is_array()) {
    out = json_numbers(record, "observation");
  } else if (record.is_object()) {
    const auto& k = require_field(record, "class");
    if (!k.is_number_integer() || k.get<long long>() < 0) {
      throw ValidationError("field 'class' must be a non-negative integer");
    }
    out = Category{k.get<std::size_t>()};
  } else {
    throw ValidationError("observation must be a number, an array, or {\"class\":k}");
  }
  validate_observation(out);
  return out;
}

Observation parse_observation(std::string_view json_line) {
  json record;
  try {
    record = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed observation record: ") + e.what());
  }
  return parse_observation(record);
}

json serialize_observation(const Observation& y) {
  return std::visit(overloaded{[](double v) -> json { return v; },
                               [](const std::vector<double>& v) -> json { return v; },
                               [](Category c) -> json { return {{"class", c.index}}; }},
                    y);
}

// ---------------------------------------------------------------------------
// CDF and sampling

double forecast_cdf(const Forecast& f, double x) {
  if (std::isnan(x)) throw ValidationError("forecast_cdf: NaN argument");
  return std::visit(
      overloaded{
          [x](const Categorical& c) -> double {
            if (x < 0.0) return 0.0;
            CompensatedSum s;
            for (std::size_t k = 0; k < c.size() && static_cast<double>(k) <= x; ++k) s += c.prob(k);
            return std::clamp(s.value(), 0.0, 1.0);
          },
          [x](const Ensemble& e) -> double {
            if (e.dim() != 1) throw ValidationError("forecast_cdf: ensemble is not univariate");
            CompensatedSum s;
            for (std::size_t i = 0; i < e.size(); ++i) {
              if (e.flat()[i] <= x) s += e.weight(i);
            }
            return std::clamp(s.value(), 0.0, 1.0);
          },
          [x](const Normal& n) -> double { return normal_cdf((x - n.mu()) / n.sigma()); },
          [](const MvNormal&) -> double {
            throw ValidationError("forecast_cdf: multivariate forecast has no univariate CDF");
          },
          [](const DensityOracle&) -> double {
            throw ValidationError("forecast_cdf: density oracle has no CDF");
          }},
      f);
}

Ensemble forecast_sample(const Forecast& f, std::size_t m, std::uint64_t seed, std::uint64_t stream) {
  if (m == 0) throw ValidationError("forecast_sample: m must be positive");
  Philox4x32 rng(seed, stream);

  auto pick_by_weight = [&rng](std::span<const double> cumulative) {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<std::size_t>(it - cumulative.begin());
  };

  return std::visit(
      overloaded{
          [&](const Categorical& c) {
            std::vector<double> cumulative(c.size());
            std::partial_sum(c.probs().begin(), c.probs().end(), cumulative.begin());
            std::vector<double> out(m);
            for (auto& v : out) v = static_cast<double>(pick_by_weight(cumulative));
            return Ensemble(std::move(out));
          },
          [&](const Ensemble& e) {
            std::vector<double> out;
            out.reserve(m * e.dim());
            std::vector<double> cumulative;
            if (e.weighted()) {
              cumulative.resize(e.size());
              std::partial_sum(e.weights().begin(), e.weights().end(), cumulative.begin());
            }
            for (std::size_t k = 0; k < m; ++k) {
              const std::size_t i = e.weighted() ? pick_by_weight(cumulative) : rng.below(e.size());
              const auto row = e.member(i);
              out.insert(out.end(), row.begin(), row.end());
            }
            return Ensemble(e.dim(), std::move(out));
          },
          [&](const Normal& n) {
            std::vector<double> out(m);
            for (auto& v : out) v = n.mu() + n.sigma() * rng.normal();
            return Ensemble(std::move(out));
          },
          [&](const MvNormal& n) {
            const auto d = static_cast<Eigen::Index>(n.dim());
            std::vector<double> out(m * n.dim());
            Eigen::VectorXd z(d);
            for (std::size_t k = 0; k < m; ++k) {
              for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
              Eigen::Map<Eigen::VectorXd>(out.data() + k * n.dim(), d) = n.mean() + n.cholesky_lower() * z;
            }
            return Ensemble(n.dim(), std::move(out));
          },
          [](const DensityOracle&) -> Ensemble {
            throw ValidationError("forecast_sample: cannot sample from a density oracle");
          }},
      f);
}

}  // namespace properscore
