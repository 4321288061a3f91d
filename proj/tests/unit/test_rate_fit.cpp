#include <cmath>

#include <doctest.h>

#include "curvflow/random.hpp"
#include "curvflow/rate_fit.hpp"

using namespace curvflow;

namespace {

std::vector<double> grid(int count, double horizon) {
  std::vector<double> t;
  for (int i = 1; i <= count; ++i) t.push_back(horizon * i / count);
  return t;
}

// Geometric Brownian paths with E X_t = exp(rate t).
Mat gbm_ensemble(const std::vector<double>& t, int replicas, double rate, double vol, Rng& rng) {
  Mat x(replicas, static_cast<Eigen::Index>(t.size()));
  for (int r = 0; r < replicas; ++r) {
    double w = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      w += std::sqrt(t[i] - prev) * standard_normal(rng);
      prev = t[i];
      x(r, static_cast<Eigen::Index>(i)) = std::exp(vol * w - 0.5 * vol * vol * t[i] + rate * t[i]);
    }
  }
  return x;
}

}  // namespace

TEST_CASE("noiseless exponential is recovered exactly") {
  const auto t = grid(10, 2.0);
  Mat v(50, 10);
  for (int j = 0; j < 10; ++j) v.col(j).setConstant(std::exp(0.25 * t[j]));
  const RateFit f = fit_rate(t, v);
  CHECK(f.rate == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(f.ci_high - f.ci_low < 1e-12);
  CHECK(f.resamples == 1000);

  std::vector<double> mean, se(10, 0.0);
  for (double x : t) mean.push_back(3.0 * std::exp(-0.4 * x));
  const RateFit s = fit_rate_series(t, mean, se);
  CHECK(s.rate == doctest::Approx(-0.4).epsilon(1e-12));
}

TEST_CASE("constant series has zero rate") {
  const auto t = grid(8, 1.0);
  Mat v = Mat::Constant(20, 8, 2.5);
  const RateFit f = fit_rate(t, v);
  CHECK(std::abs(f.rate) < 1e-14);
  CHECK(zero_rate_accepted(f, 1.0));
  RateFit off;
  off.rate = 0.05;
  off.ci_low = 0.04;
  off.ci_high = 0.06;
  CHECK_FALSE(zero_rate_accepted(off, 1.0));
  off.rate = 0.015;
  CHECK(zero_rate_accepted(off, 1.0));
}

TEST_CASE("weighted log fit") {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0};
  std::vector<double> m;
  for (double x : t) m.push_back(std::exp(0.5 + 0.3 * x));
  const LogLinearFit f = wls_log_fit(t, m, {0.1, 0.0, 0.2, 0.3});
  CHECK(f.rate == doctest::Approx(0.3));
  CHECK(f.intercept == doctest::Approx(0.5));
  CHECK_THROWS_AS(wls_log_fit(t, {1.0, 2.0, 0.0, 3.0}, {1, 1, 1, 1}), StatisticalFailure);
  CHECK_THROWS_AS(wls_log_fit(t, {1.0, -2.0, 1.0, 3.0}, {1, 1, 1, 1}), StatisticalFailure);
}

TEST_CASE("column statistics") {
  Mat v(4, 2);
  v << 1, 10, 2, 10, 3, 10, 4, 10;
  const ColumnStats s = column_stats(v);
  CHECK(s.mean[0] == doctest::Approx(2.5));
  CHECK(s.var_of_mean[0] == doctest::Approx((5.0 / 3.0) / 4.0));
  CHECK(s.var_of_mean[1] == 0.0);
}

TEST_CASE("fit preconditions") {
  const auto t = grid(4, 1.0);
  CHECK_THROWS_AS(fit_rate(t, Mat::Ones(10, 4)), std::invalid_argument);
  Mat neg = Mat::Ones(10, 6);
  neg.col(3).setConstant(-1.0);
  CHECK_THROWS_AS(fit_rate(grid(6, 1.0), neg), StatisticalFailure);
}

TEST_CASE("bootstrap interval covers the true rate") {
  // 100 independent lognormal ensembles of 1e4 replicas each.
  const auto t = grid(10, 1.0);
  Rng rng = make_stream(2024);
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Mat v = gbm_ensemble(t, 10000, 0.25, 0.6, rng);
    covered += fit_rate(t, v, 1000, 100 + rep).contains(0.25);
  }
  CHECK(covered >= 93);
}

TEST_CASE("batch-means interval covers the true rate") {
  const auto t = grid(10, 1.0);
  Rng rng = make_stream(99);
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Mat v = gbm_ensemble(t, 4000, 0.25, 0.6, rng);
    covered += fit_rate_batch_means(t, v, 20).contains(0.25);
  }
  CHECK(covered >= 90);
}

TEST_CASE("bootstrap is deterministic in its seed") {
  const auto t = grid(6, 1.0);
  Rng rng = make_stream(5);
  const Mat v = gbm_ensemble(t, 500, 0.1, 0.5, rng);
  const RateFit a = fit_rate(t, v, 200, 11), b = fit_rate(t, v, 200, 11);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
}
