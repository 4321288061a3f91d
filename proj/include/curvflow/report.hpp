#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "curvflow/config.hpp"
#include "curvflow/experiments.hpp"

namespace curvflow {

inline constexpr const char* kReportSchema = "curvflow.report/1";
inline constexpr const char* kSeriesHeader = "# curvflow series v1";

/// Exit status of a finished run: 0 when every rate and check passes, 3 on
/// statistical failure.
int exit_code(const ExperimentResult& r);

nlohmann::json report_json(const ExperimentResult& r, const ExperimentConfig& c);

/// CSV: version comment, then `observable,t,ensemble_mean,std_error,alive`.
std::string series_csv(const ExperimentResult& r);

/// Whitespace-separated blocks, one per observable, for gnuplot `index`.
std::string plot_data(const ExperimentResult& r);

/// Writes series.csv, report.json and (optionally) plot.dat into dir.
void write_outputs(const ExperimentResult& r, const ExperimentConfig& c, const std::string& dir,
                   bool plot);

}  // namespace curvflow
