#include "curvflow/report.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace curvflow {

using nlohmann::json;

int exit_code(const ExperimentResult& r) { return r.passed() ? 0 : 3; }

json report_json(const ExperimentResult& r, const ExperimentConfig& c) {
  json j;
  j["schema"] = kReportSchema;
  j["experiment"] = r.experiment;
  j["passed"] = r.passed();
  j["exit_code"] = exit_code(r);
  json rates = json::array();
  for (const auto& x : r.rates) {
    rates.push_back({{"observable", x.observable},
                     {"predicted", x.predicted},
                     {"fitted", x.fitted},
                     {"ci", {x.ci_low, x.ci_high}},
                     {"ci_method", x.ci_method},
                     {"relative_error", x.relative_error},
                     {"replicas", x.replicas},
                     {"aborted", x.aborted},
                     {"achieved_std_error", x.achieved_std_error},
                     {"valid", x.valid},
                     {"consistent", x.consistent}});
  }
  j["rates"] = rates;
  json checks = json::array();
  for (const auto& x : r.checks)
    checks.push_back({{"name", x.name},
                      {"value", x.value},
                      {"expected", x.expected},
                      {"tolerance", x.tolerance},
                      {"passed", x.passed}});
  j["checks"] = checks;
  j["extra"] = r.extra;
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << c.hash;
  j["provenance"] = {{"config_hash", hash.str()},
                     {"seed", c.seed},
                     {"version", CURVFLOW_VERSION},
                     {"config", c.raw}};
  return j;
}

std::string series_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << kSeriesHeader << '\n' << "observable,t,ensemble_mean,std_error,alive\n";
  for (const auto& s : r.series)
    for (const auto& p : s.points)
      out << s.observable << ',' << p.t << ',' << p.mean << ',' << p.std_error << ',' << p.alive << '\n';
  return out.str();
}

std::string plot_data(const ExperimentResult& r) {
  std::ostringstream out;
  out << std::setprecision(12);
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    if (i) out << "\n\n";
    out << "# " << r.series[i].observable << "\n# t mean std_error\n";
    for (const auto& p : r.series[i].points) out << p.t << ' ' << p.mean << ' ' << p.std_error << '\n';
  }
  return out.str();
}

void write_outputs(const ExperimentResult& r, const ExperimentConfig& c, const std::string& dir,
                   bool plot) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    f << text;
  };
  write("series.csv", series_csv(r));
  write("report.json", report_json(r, c).dump(2) + "\n");
  if (plot) write("plot.dat", plot_data(r));
}

}  // namespace curvflow
