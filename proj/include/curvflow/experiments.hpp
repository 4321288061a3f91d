#pragma once

// Named experiments binding noise, dynamics and geometry, and the result
// records written by the report module.

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvflow/config.hpp"
#include "curvflow/fourier_field.hpp"
#include "curvflow/local_jet.hpp"
#include "curvflow/mesh.hpp"

namespace curvflow {

struct RateReport {
  std::string observable;
  double predicted = 0.0;
  double fitted = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string ci_method;  // "batch-means" or "bootstrap"
  double relative_error = 0.0;  // |fitted - predicted| / |predicted|; absolute when predicted = 0
  int replicas = 0;
  int aborted = 0;
  double achieved_std_error = 0.0;
  bool valid = true;
  /// CI contains the prediction, or the zero-rate equivalence test passes.
  bool consistent = false;
};

struct Check {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct SeriesTable {
  std::string observable;
  std::vector<SeriesPoint> points;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<RateReport> rates;  // rates[0] decides the exit code
  std::vector<Check> checks;
  std::vector<SeriesTable> series;
  nlohmann::json extra = nlohmann::json::object();

  bool passed() const;
};

/// Dispatches on config.experiment.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Track B building blocks ----------------------------------------------------

/// Observables evaluated on the advected vertex matrix (n x P).
using PointObservable = std::function<std::vector<double>(const Mat& points)>;

struct FlowEnsembleOptions {
  int features = 256;
  double dt = 1e-3;
  double horizon = 1.0;
  int replicas = 200;
  std::uint64_t seed = 1;
  int grid_points = 20;
};

struct FlowEnsembleResult {
  std::vector<double> times;  // including t = 0
  std::vector<Mat> values;    // per observable, replicas x times
};

/// Advects `start` under an independent field realization per replica and
/// records each observable on the time grid. Replica r uses field seed
/// (seed, r); feature m of that replica draws from its own stream, so runs
/// with M and 2M features share their first M features.
FlowEnsembleResult simulate_flow_ensemble(const FlowEnsembleOptions& opt,
                                          const SpectralMeasure& spectral, const Mat& start,
                                          const PointObservable& observe, std::size_t observables);

/// Bootstrap fit of one recorded observable (t = 0 excluded).
RateReport rate_report(const std::string& name, const std::vector<double>& times,
                       const Mat& values, double predicted, double mu2, std::uint64_t seed);

}  // namespace curvflow
