#include "curvflow/rate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "curvflow/random.hpp"

namespace curvflow {

LogLinearFit wls_log_fit(const std::vector<double>& t, const std::vector<double>& mean,
                         const std::vector<double>& var_of_mean) {
  const std::size_t m = t.size();
  if (m < 2 || mean.size() != m || var_of_mean.size() != m)
    throw std::invalid_argument("wls_log_fit: need matching series of length >= 2");
  double min_pos = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    if (!(mean[i] > 0.0) || !std::isfinite(mean[i]))
      throw StatisticalFailure("non-positive ensemble mean at t = " + std::to_string(t[i]));
    if (var_of_mean[i] > 0.0) min_pos = std::min(min_pos, var_of_mean[i]);
  }
  const bool weighted = std::isfinite(min_pos);
  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  std::vector<double> w(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = std::log(mean[i]);
    // Delta method: var(log mean) = var(mean) / mean^2.
    w[i] = weighted ? mean[i] * mean[i] / std::max(var_of_mean[i], min_pos) : 1.0;
    sw += w[i];
    st += w[i] * t[i];
    sy += w[i] * y[i];
    stt += w[i] * t[i] * t[i];
    sty += w[i] * t[i] * y[i];
  }
  const double det = sw * stt - st * st;
  if (!(det > 0.0)) throw StatisticalFailure("degenerate time grid");
  LogLinearFit fit;
  fit.rate = (sw * sty - st * sy) / det;
  fit.intercept = (stt * sy - st * sty) / det;
  if (weighted) {
    fit.rate_std_error = std::sqrt(sw / det);
  } else {
    double rss = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - fit.intercept - fit.rate * t[i];
      rss += r * r;
    }
    fit.rate_std_error = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) * sw / det) : 0.0;
  }
  return fit;
}

ColumnStats column_stats(const Mat& values) {
  const Eigen::Index r = values.rows();
  if (r < 1) throw StatisticalFailure("empty ensemble");
  ColumnStats s;
  s.mean.resize(values.cols());
  s.var_of_mean.resize(values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double mu = values.col(j).mean();
    const double ss = (values.col(j).array() - mu).square().sum();
    s.mean[j] = mu;
    s.var_of_mean[j] = r > 1 ? ss / static_cast<double>(r - 1) / static_cast<double>(r) : 0.0;
  }
  return s;
}

namespace {

void require_grid(const std::vector<double>& times, const Mat& values) {
  if (times.size() < 5) throw std::invalid_argument("fit_rate: need at least 5 time points");
  if (static_cast<std::size_t>(values.cols()) != times.size())
    throw std::invalid_argument("fit_rate: values must have one column per time");
}

double point_rate(const std::vector<double>& times, const Mat& values, double* se = nullptr) {
  const ColumnStats s = column_stats(values);
  const LogLinearFit f = wls_log_fit(times, s.mean, s.var_of_mean);
  if (se) *se = f.rate_std_error;
  return f.rate;
}

double quantile_sorted(const std::vector<double>& v, double p) {
  // Linear interpolation between order statistics.
  const double pos = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

RateFit fit_rate(const std::vector<double>& times, const Mat& values, int resamples,
                 std::uint64_t seed, double confidence) {
  require_grid(times, values);
  if (resamples < 10) throw std::invalid_argument("fit_rate: too few bootstrap resamples");
  RateFit out;
  out.rate = point_rate(times, values, &out.rate_std_error);
  const Eigen::Index r = values.rows();
  std::vector<double> rates;
  rates.reserve(resamples);
  Rng rng = make_stream(seed, 0, 0, 0xb007);
  std::uniform_int_distribution<Eigen::Index> pick(0, r - 1);
  Mat sample(r, values.cols());
  int failed = 0;
  for (int b = 0; b < resamples; ++b) {
    for (Eigen::Index i = 0; i < r; ++i) sample.row(i) = values.row(pick(rng));
    try {
      rates.push_back(point_rate(times, sample));
    } catch (const StatisticalFailure&) {
      ++failed;
    }
  }
  if (rates.size() < static_cast<std::size_t>(resamples) * 9 / 10)
    throw StatisticalFailure("bootstrap: too many resamples with non-positive means");
  std::sort(rates.begin(), rates.end());
  const double a = 0.5 * (1.0 - confidence);
  out.ci_low = std::min(out.rate, quantile_sorted(rates, a));
  out.ci_high = std::max(out.rate, quantile_sorted(rates, 1.0 - a));
  out.resamples = static_cast<int>(rates.size());
  (void)failed;
  return out;
}

RateFit fit_rate_batch_means(const std::vector<double>& times, const Mat& values, int batches,
                             double confidence) {
  require_grid(times, values);
  const Eigen::Index r = values.rows();
  if (batches < 2 || r < 2 * batches)
    throw std::invalid_argument("fit_rate_batch_means: need >= 2 batches of >= 2 rows");
  RateFit out;
  out.rate = point_rate(times, values, &out.rate_std_error);
  std::vector<double> br;
  for (int b = 0; b < batches; ++b) {
    const Eigen::Index lo = r * b / batches, hi = r * (b + 1) / batches;
    br.push_back(point_rate(times, values.middleRows(lo, hi - lo)));
  }
  double mu = 0;
  for (double x : br) mu += x;
  mu /= batches;
  double ss = 0;
  for (double x : br) ss += (x - mu) * (x - mu);
  const double sd = std::sqrt(ss / (batches - 1));
  const boost::math::students_t dist(batches - 1);
  const double q = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
  const double hw = q * sd / std::sqrt(static_cast<double>(batches));
  out.ci_low = out.rate - hw;
  out.ci_high = out.rate + hw;
  out.resamples = batches;
  return out;
}

RateFit fit_rate_series(const std::vector<double>& t, const std::vector<double>& mean,
                        const std::vector<double>& std_error, double confidence) {
  if (t.size() < 5) throw std::invalid_argument("fit_rate: need at least 5 time points");
  std::vector<double> var(std_error.size());
  for (std::size_t i = 0; i < var.size(); ++i) var[i] = std_error[i] * std_error[i];
  const LogLinearFit f = wls_log_fit(t, mean, var);
  const boost::math::normal_distribution<> nd;
  const double z = boost::math::quantile(nd, 0.5 + 0.5 * confidence);
  RateFit out;
  out.rate = f.rate;
  out.rate_std_error = f.rate_std_error;
  out.ci_low = f.rate - z * f.rate_std_error;
  out.ci_high = f.rate + z * f.rate_std_error;
  return out;
}

bool zero_rate_accepted(const RateFit& fit, double mu2) {
  return std::abs(fit.rate) <= std::max(fit.half_width(), 0.02 * mu2);
}

}  // namespace curvflow
