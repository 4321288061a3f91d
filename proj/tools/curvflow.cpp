// curvflow command-line front end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "curvflow/config.hpp"
#include "curvflow/experiments.hpp"
#include "curvflow/lk.hpp"
#include "curvflow/mesh.hpp"
#include "curvflow/rate_fit.hpp"
#include "curvflow/report.hpp"
#include "curvflow/tube.hpp"

using namespace curvflow;

namespace {

enum Exit { kOk = 0, kRuntime = 1, kValidation = 2, kStatistical = 3 };

void print_summary(const ExperimentResult& r) {
  for (const auto& x : r.rates)
    std::printf("%-28s fitted %.5f  CI [%.5f, %.5f]  predicted %.5f  rel.err %.3f  %s\n",
                x.observable.c_str(), x.fitted, x.ci_low, x.ci_high, x.predicted, x.relative_error,
                x.consistent ? "ok" : "MISMATCH");
  for (const auto& c : r.checks)
    std::printf("%-52s %.6g (expected %.6g, tol %.3g)  %s\n", c.name.c_str(), c.value, c.expected,
                c.tolerance, c.passed ? "ok" : "FAIL");
}

int finish(const ExperimentResult& r, const ExperimentConfig& c, const std::string& out, bool plot) {
  print_summary(r);
  const std::string dir = out.empty() ? c.out_dir : out;
  if (!dir.empty()) write_outputs(r, c, dir, plot || c.plot);
  return exit_code(r);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream b;
  b << in.rdbuf();
  return b.str();
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for curvature growth under isotropic volume-preserving flows"};
  app.set_version_flag("--version", std::string(CURVFLOW_VERSION));
  app.require_subcommand(1);

  std::string config_path, out_dir, mesh_path, kind;
  bool plot = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory for series.csv and report.json");
  run->add_flag("--plot", plot, "Also write plot.dat");

  auto* audit = app.add_subcommand("audit-noise", "Run the noise invariant battery");
  audit->add_option("config", config_path, "Config file (spectral measure, seed, audit sizes)")->required();
  audit->add_option("--out", out_dir, "Output directory");

  double rho = 0.1;
  std::size_t samples = 1'000'000;
  bool fit = false;
  auto* tube = app.add_subcommand("tube", "Tube volume of a mesh or polyline");
  tube->add_option("mesh", mesh_path, "OFF mesh or polyline CSV")->required();
  tube->add_option("--rho", rho, "Tube radius");
  tube->add_option("--samples", samples, "Monte Carlo samples");
  tube->add_flag("--fit", fit, "Also fit tube-formula coefficients (meshes only)");

  auto* lkcmd = app.add_subcommand("lk", "Lipschitz-Killing curvatures of a mesh or polyline");
  lkcmd->add_option("mesh", mesh_path, "OFF mesh or polyline CSV")->required();

  int level = 4, count = 1024, dim = 2, turns = 2, nu = 48, nv = 24;
  double radius = 1.0, major = 2.0, minor = 0.5;
  std::string fixture_out;
  auto* fixtures = app.add_subcommand("fixtures", "Emit fixture geometry");
  fixtures->add_option("kind", kind, "icosphere | polygon | torus | figure-zero | strip")->required();
  fixtures->add_option("--level", level, "Icosphere subdivision level");
  fixtures->add_option("--count", count, "Polygon vertex count");
  fixtures->add_option("--dim", dim, "Polygon ambient dimension (2 or 3)");
  fixtures->add_option("--radius", radius, "Radius");
  fixtures->add_option("--turns", turns, "Traversals of the figure-zero curve");
  fixtures->add_option("--major", major, "Torus major radius");
  fixtures->add_option("--minor", minor, "Torus minor radius");
  fixtures->add_option("--nu", nu, "Torus grid size around the axis");
  fixtures->add_option("--nv", nv, "Torus grid size around the tube");
  fixtures->add_option("-o,--out", fixture_out, "Write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) {
      const ExperimentConfig c = load_config(config_path);
      return finish(run_experiment(c), c, out_dir, plot);
    }
    if (*audit) {
      nlohmann::json j = parse_config_text(read_file(config_path));
      j["experiment"] = "noise-audit";
      const ExperimentConfig c = config_from_json(j);
      return finish(run_experiment(c), c, out_dir, false);
    }
    if (*tube) {
      const Geometry g = load_mesh(mesh_path);
      nlohmann::json j;
      j["rho"] = rho;
      j["reach_estimate"] = estimate_reach(g);
      const VolumeEstimate v = tube_volume_mc(g, rho, samples);
      j["volume"] = v.volume;
      j["std_error"] = v.std_error;
      if (fit) {
        const auto* m = std::get_if<TriMesh>(&g);
        if (!m) throw std::invalid_argument("--fit needs a triangle mesh");
        const TubeFit f = fit_tube_coefficients(*m, {0.2 * rho, 0.4 * rho, 0.6 * rho, 0.8 * rho, rho}, 1 << 16);
        j["L"] = {f.L[0], f.L[1], f.L[2]};
        j["L_std_error"] = {f.L_se[0], f.L_se[1], f.L_se[2]};
      }
      std::cout << j.dump(2) << '\n';
      return kOk;
    }
    if (*lkcmd) {
      std::cout << to_json(lk(load_mesh(mesh_path))).dump(2) << '\n';
      return kOk;
    }
    if (*fixtures) {
      if (kind == "icosphere") {
        emit(to_off(icosphere(level, radius)), fixture_out);
      } else if (kind == "polygon") {
        emit(to_csv(regular_polygon(count, radius, dim)), fixture_out);
      } else if (kind == "torus") {
        emit(to_off(torus(major, minor, nu, nv)), fixture_out);
      } else if (kind == "figure-zero") {
        emit(to_csv(multiple_circle(count, turns, radius)), fixture_out);
      } else if (kind == "strip") {
        // Open annular strip: a torus grid without its closing row, so every
        // edge on the two rims has a single face.
        const TriMesh t = torus(major, minor, nu, nv);
        std::ostringstream s;
        const int rows = nv / 2;
        s << "OFF\n" << t.vertex_count() << ' ' << nu * (rows - 1) * 2 << " 0\n";
        for (int i = 0; i < t.vertex_count(); ++i)
          s << t.vertices()(0, i) << ' ' << t.vertices()(1, i) << ' ' << t.vertices()(2, i) << '\n';
        for (int i = 0; i < nu; ++i)
          for (int j = 0; j < rows - 1; ++j) {
            const int a = i * nv + j, b = ((i + 1) % nu) * nv + j;
            s << "3 " << a << ' ' << b << ' ' << b + 1 << '\n';
            s << "3 " << a << ' ' << b + 1 << ' ' << a + 1 << '\n';
          }
        emit(s.str(), fixture_out);
      } else {
        throw std::invalid_argument("unknown fixture kind '" + kind + "'");
      }
      return kOk;
    }
  } catch (const StatisticalFailure& e) {
    std::fprintf(stderr, "statistical failure: %s\n", e.what());
    return kStatistical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
