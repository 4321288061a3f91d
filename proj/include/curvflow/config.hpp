#pragma once

// Experiment configuration: a small TOML-like text format (grammar in
// docs/formats.md) parsed into a JSON tree, then bound to ExperimentConfig.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvflow/local_jet.hpp"
#include "curvflow/spectral_noise.hpp"

namespace curvflow {

/// Malformed or invalid configuration. Mapped to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parses the config text into nested objects: top-level keys, [section]
/// tables, dotted keys, inline tables, arrays, strings, numbers, booleans.
nlohmann::json parse_config_text(const std::string& text);

struct GeometrySpec {
  std::string kind = "icosphere";  // icosphere | polygon | file
  int level = 4;
  int count = 1024;
  double radius = 1.0;
  std::string path;
};

struct TubeSpec {
  std::vector<double> radii = {0.02, 0.04, 0.06, 0.08, 0.1};
  double rho = 0.1;
  std::size_t samples = 10'000'000;
  std::size_t lines = 1 << 18;
  int shifts = 8;
  int volume_level = 6;  // icosphere level for the plain MC volume check
};

struct ExperimentConfig {
  std::string experiment;
  int n = 3;
  int k = 0;
  SpectralMeasure spectral = SpectralMeasure::point(1.0);
  double dt = 1e-3;
  double horizon = 1.0;
  int replicas = 10000;
  std::uint64_t seed = 1;
  bool allow_long_horizon = false;
  int grid_points = 20;
  int batches = 20;

  // Track B
  int features = 256;
  std::uint64_t field_seed_offset = 0;
  bool compare_doubled_features = false;
  GeometrySpec geometry;

  // Track A
  JetPreset preset = UnitSpherePreset{3};

  TubeSpec tube;
  int audit_samples = 100'000;
  int audit_oracle_samples = 1'000'000;

  std::string out_dir;
  bool plot = false;

  nlohmann::json raw;
  std::uint64_t hash = 0;  // FNV-1a of the canonical JSON dump
};

const std::vector<std::string>& experiment_names();

/// Binds and validates. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Predicted rate of the experiment's primary observable (0 if none).
double primary_predicted_rate(const ExperimentConfig& c);

/// dt <= T/20, replicas >= 100, predicted rate * T <= 3 unless overridden.
void validate_config(const ExperimentConfig& c);

}  // namespace curvflow
