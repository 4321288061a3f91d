#pragma once

// Exponential growth-rate regression on ensemble time series.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "curvflow/types.hpp"

namespace curvflow {

/// Raised when a fit cannot be made (non-positive ensemble mean, too few
/// points). Mapped to exit code 3 by the CLI.
class StatisticalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogLinearFit {
  double rate = 0.0;
  double intercept = 0.0;
  double rate_std_error = 0.0;  // from the weighted normal equations
};

/// Weighted least squares of log(mean) against t with weights
/// mean^2 / var_of_mean. Zero variances are replaced by the smallest positive
/// one; if all are zero the fit is unweighted.
LogLinearFit wls_log_fit(const std::vector<double>& t, const std::vector<double>& mean,
                         const std::vector<double>& var_of_mean);

struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> var_of_mean;
};

/// Column means of a replicas x times matrix and the variance of each mean.
ColumnStats column_stats(const Mat& values);

struct RateFit {
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double rate_std_error = 0.0;
  int resamples = 0;

  double half_width() const { return 0.5 * (ci_high - ci_low); }
  bool contains(double v) const { return ci_low <= v && v <= ci_high; }
};

/// Point fit on the full ensemble plus a percentile bootstrap CI over
/// replicas (rows). `times` excludes t = 0. Requires at least 5 times.
RateFit fit_rate(const std::vector<double>& times, const Mat& values, int resamples = 1000,
                 std::uint64_t seed = 7, double confidence = 0.95);

/// Point fit on the full ensemble, CI from contiguous batches of rows with a
/// Student-t interval on the batch rates.
RateFit fit_rate_batch_means(const std::vector<double>& times, const Mat& values, int batches,
                             double confidence = 0.95);

/// Fit from a series alone (t, mean, std_error); the CI is the normal
/// interval from the weighted normal equations since replicas are not
/// available.
RateFit fit_rate_series(const std::vector<double>& t, const std::vector<double>& mean,
                        const std::vector<double>& std_error, double confidence = 0.95);

/// Zero-rate equivalence test: |rate| <= max(CI half-width, 0.02 mu2).
bool zero_rate_accepted(const RateFit& fit, double mu2);

}  // namespace curvflow
