#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "properscore/core.hpp"

using namespace properscore;

TEST(Categorical, RejectsInsteadOfRenormalizing) {
  EXPECT_NO_THROW(Categorical({0.2, 0.8}));
  EXPECT_THROW(Categorical({0.2, 0.7}), ValidationError);
  EXPECT_THROW(Categorical({-0.1, 1.1}), ValidationError);
  EXPECT_THROW(Categorical({}), ValidationError);
  EXPECT_NO_THROW(Categorical({0.1, 0.2, 0.7 + 5e-13}));
}

TEST(Ensemble, DefaultsToUniformWeights) {
  Ensemble e({3.0, 1.0, 2.0});
  EXPECT_EQ(e.size(), 3u);
  EXPECT_EQ(e.dim(), 1u);
  EXPECT_FALSE(e.weighted());
  for (double w : e.weights()) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
  Ensemble explicit_uniform({3.0, 1.0}, {0.5, 0.5});
  EXPECT_FALSE(explicit_uniform.weighted());
  Ensemble weighted({3.0, 1.0}, {0.25, 0.75});
  EXPECT_TRUE(weighted.weighted());
}

TEST(Ensemble, ValidatesShapeWeightsAndValues) {
  EXPECT_THROW(Ensemble(std::vector<double>{}), ValidationError);
  EXPECT_THROW(Ensemble({1.0, 2.0}, {0.5}), ValidationError);
  EXPECT_THROW(Ensemble({1.0, 2.0}, {0.6, 0.6}), ValidationError);
  EXPECT_THROW(Ensemble({1.0, NAN}), ValidationError);
  EXPECT_THROW(Ensemble(2, {1.0, 2.0, 3.0}), ValidationError);
  auto pts = Ensemble::from_points({{1.0, 2.0}, {3.0, 4.0}});
  EXPECT_EQ(pts.dim(), 2u);
  EXPECT_DOUBLE_EQ(pts.member(1)[0], 3.0);
  EXPECT_THROW(Ensemble::from_points({{1.0, 2.0}, {3.0}}), ValidationError);
}

TEST(Parametric, ValidatesParameters) {
  EXPECT_THROW(Normal(0.0, 0.0), ValidationError);
  EXPECT_THROW(Normal(NAN, 1.0), ValidationError);
  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;
  EXPECT_THROW(MvNormal(Eigen::VectorXd::Zero(2), singular), ValidationError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(MvNormal(Eigen::VectorXd::Zero(2), asym), ValidationError);
  Eigen::MatrixXd ok(2, 2);
  ok << 2.0, 0.5, 0.5, 1.0;
  MvNormal mv(Eigen::VectorXd::Zero(2), ok);
  EXPECT_TRUE((mv.cholesky_lower() * mv.cholesky_lower().transpose()).isApprox(ok, 1e-14));
}

TEST(ScoreValue, RejectsNaNAndNegativeInfinity) {
  EXPECT_THROW(ScoreValue(NAN, Method::closed_form), NumericError);
  EXPECT_THROW(ScoreValue(-INFINITY, Method::closed_form), NumericError);
  EXPECT_NO_THROW(ScoreValue(INFINITY, Method::closed_form));
  EXPECT_THROW(ScoreValue(1.0, Method::monte_carlo), std::exception);
  EXPECT_THROW(ScoreValue(1.0, Method::closed_form, 0.1), std::exception);
  EXPECT_EQ(to_string(Method::fast_exact), "fast-exact");
}

TEST(Parsing, RoundTripsEveryForecastKind) {
  const char* lines[] = {
      R"({"type":"categorical","probs":[0.25,0.75]})",
      R"({"type":"ensemble","members":[1.5,-2.0,3.0]})",
      R"({"type":"ensemble","members":[1.0,2.0],"weights":[0.25,0.75]})",
      R"({"type":"ensemble","members":[[1.0,2.0],[3.0,4.0]]})",
      R"({"type":"normal","mu":0.5,"sigma":2.0})",
      R"({"type":"mvnormal","mean":[0.0,1.0],"cov":[[1.0,0.2],[0.2,2.0]]})",
  };
  for (const char* line : lines) {
    const Forecast f = parse_forecast(std::string_view(line));
    const Forecast again = parse_forecast(serialize_forecast(f));
    EXPECT_EQ(serialize_forecast(f), serialize_forecast(again)) << line;
  }
}

TEST(Parsing, RejectsMalformedRecords) {
  EXPECT_THROW(parse_forecast(std::string_view("{not json")), ValidationError);
  EXPECT_THROW(parse_forecast(std::string_view(R"({"type":"gamma"})")), ValidationError);
  EXPECT_THROW(parse_forecast(std::string_view(R"({"type":"normal","mu":0})")), ValidationError);
  EXPECT_THROW(parse_forecast(std::string_view(R"({"type":"categorical","probs":[0.5,0.6]})")),
               ValidationError);
  EXPECT_THROW(parse_observation(std::string_view(R"("abc")")), ValidationError);
  EXPECT_THROW(parse_observation(std::string_view(R"({"class":-1})")), ValidationError);
  EXPECT_EQ(observation_category(parse_observation(std::string_view(R"({"class":2})"))), 2u);
}

TEST(ForecastCdf, MatchesDefinitions) {
  EXPECT_DOUBLE_EQ(forecast_cdf(Ensemble({0.0, 1.0}), 0.0), 0.5);
  EXPECT_DOUBLE_EQ(forecast_cdf(Ensemble({0.0, 1.0}), -0.1), 0.0);
  EXPECT_DOUBLE_EQ(forecast_cdf(Categorical({0.2, 0.3, 0.5}), 1.5), 0.5);
  EXPECT_DOUBLE_EQ(forecast_cdf(Normal(0.0, 1.0), 0.0), 0.5);
}

TEST(ForecastSample, DeterministicPerSeedAndStream) {
  const Forecast f = Normal(1.0, 2.0);
  EXPECT_EQ(forecast_sample(f, 50, 9), forecast_sample(f, 50, 9));
  EXPECT_FALSE(forecast_sample(f, 50, 9) == forecast_sample(f, 50, 9, 1));
  EXPECT_THROW(forecast_sample(f, 0, 9), ValidationError);
  const auto cats = forecast_sample(Categorical({0.0, 1.0}), 20, 1);
  for (double v : cats.flat()) EXPECT_EQ(v, 1.0);
}

TEST(ForecastSample, MvNormalMomentsMatch) {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.6, 0.6, 2.0;
  const auto draws = forecast_sample(MvNormal(Eigen::Vector2d(1.0, -1.0), cov), 40000, 5);
  double m0 = 0, m1 = 0, c01 = 0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    m0 += draws.member(i)[0];
    m1 += draws.member(i)[1];
  }
  m0 /= 40000;
  m1 /= 40000;
  for (std::size_t i = 0; i < draws.size(); ++i) c01 += (draws.member(i)[0] - m0) * (draws.member(i)[1] - m1);
  EXPECT_NEAR(m0, 1.0, 0.03);
  EXPECT_NEAR(m1, -1.0, 0.03);
  EXPECT_NEAR(c01 / 40000, 0.6, 0.05);
}
