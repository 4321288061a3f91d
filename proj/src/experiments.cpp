#include "curvflow/experiments.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "curvflow/exterior_curvature.hpp"
#include "curvflow/lk.hpp"
#include "curvflow/predicted_rate.hpp"
#include "curvflow/rate_fit.hpp"
#include "curvflow/tube.hpp"

namespace curvflow {

using nlohmann::json;

bool ExperimentResult::passed() const {
  if (!rates.empty() && (!rates[0].consistent || !rates[0].valid)) return false;
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

namespace {

constexpr double kPi = std::numbers::pi;

Check make_check(std::string name, double value, double expected, double tolerance) {
  return {std::move(name), value, expected, tolerance, std::abs(value - expected) <= tolerance};
}

void finish_rate(RateReport& r, double mu2) {
  r.relative_error = r.predicted != 0.0 ? std::abs(r.fitted - r.predicted) / std::abs(r.predicted)
                                        : std::abs(r.fitted);
  if (r.predicted == 0.0) {
    RateFit f;
    f.rate = r.fitted;
    f.ci_low = r.ci_low;
    f.ci_high = r.ci_high;
    r.consistent = zero_rate_accepted(f, mu2);
  } else {
    r.consistent = r.ci_low <= r.predicted && r.predicted <= r.ci_high;
  }
}

std::vector<double> drop_first(const std::vector<double>& t) { return {t.begin() + 1, t.end()}; }

// Track A --------------------------------------------------------------------

ExperimentResult run_track_a(const ExperimentConfig& c) {
  Functional f;
  if (c.experiment == "alpha-growth") f = Functional::alpha_norm();
  else if (c.experiment == "alpha-sq-growth") f = Functional::alpha_norm_sq();
  else if (c.experiment == "kframe-growth") f = Functional::kframe_inner(c.k);
  else f = Functional::trace_product(c.k);

  JetEnsembleOptions o;
  o.n = c.n;
  o.dt = c.dt;
  o.horizon = c.horizon;
  o.replicas = c.replicas;
  o.seed = c.seed;
  o.grid_points = c.grid_points;
  o.preset = c.preset;
  o.allow_long_horizon = c.allow_long_horizon;
  o.batches = c.batches;
  const JetEnsembleResult ens = simulate_jet_ensemble(o, c.spectral, {f});
  const GrowthEstimate g = growth_from_ensemble(ens, 0, c.horizon, c.batches);

  ExperimentResult res;
  res.experiment = c.experiment;
  RateReport r;
  r.observable = f.name();
  r.predicted = f.predicted_rate(c.n, c.spectral.mu2());
  r.fitted = g.rate;
  r.ci_low = g.ci_low;
  r.ci_high = g.ci_high;
  r.ci_method = "batch-means";
  r.replicas = g.replicas;
  r.aborted = g.aborted;
  r.achieved_std_error = g.achieved_std_error;
  r.valid = g.valid;
  finish_rate(r, c.spectral.mu2());
  res.rates.push_back(r);
  res.series.push_back({f.name(), ensemble_series(ens.times, ens.values[0])});
  return res;
}

// Track B --------------------------------------------------------------------

std::uint64_t replica_field_seed(std::uint64_t seed, std::uint64_t r) {
  Rng rng = make_stream(seed, r, 0, 0xf5eed);
  return rng();
}

Mat geometry_start(const ExperimentConfig& c, Geometry& geom) {
  const auto& g = c.geometry;
  if (g.kind == "icosphere") {
    geom = icosphere(g.level, g.radius);
  } else if (g.kind == "polygon") {
    const int dim = c.experiment == "curve-length-3d" ? 3 : c.n;
    geom = regular_polygon(g.count, g.radius, dim);
  } else if (g.kind == "file") {
    geom = load_mesh(g.path);
  } else {
    throw ConfigError("geometry.kind must be icosphere, polygon or file");
  }
  if (const auto* m = std::get_if<TriMesh>(&geom)) return m->vertices();
  return std::get<Polyline>(geom).vertices;
}

// Signed area, H_int, chi and enclosed volume of a mesh with moved vertices.
std::vector<double> surface_observables(const TriMesh& topology, const Mat& x) {
  TriMesh m = topology;
  m.vertices() = x;
  const LKReport r = lk_trimesh(m);
  return {r.L[2], r.h_int, r.chi_combinatorial, m.enclosed_volume()};
}

FlowEnsembleOptions flow_options(const ExperimentConfig& c, int features) {
  FlowEnsembleOptions o;
  o.features = features;
  o.dt = c.dt;
  o.horizon = c.horizon;
  o.replicas = c.replicas;
  o.seed = c.seed + c.field_seed_offset;
  o.grid_points = c.grid_points;
  return o;
}

ExperimentResult run_curve(const ExperimentConfig& c) {
  Geometry geom;
  const Mat start = geometry_start(c, geom);
  if (!std::holds_alternative<Polyline>(geom)) throw ConfigError(c.experiment + " needs a polyline");
  const int dim = static_cast<int>(start.rows());
  if (c.experiment == "curve-length" && dim != 2) throw ConfigError("curve-length needs a planar curve");
  if (c.experiment == "curve-length-3d" && dim != 3) throw ConfigError("curve-length-3d needs a curve in R^3");
  auto observe = [](const Mat& x) { return std::vector<double>{polyline_length(Polyline{x})}; };
  const double mu2 = c.spectral.mu2();
  const double predicted = primary_predicted_rate(c);

  ExperimentResult res;
  res.experiment = c.experiment;
  const FlowEnsembleResult ens =
      simulate_flow_ensemble(flow_options(c, c.features), c.spectral, start, observe, 1);
  res.rates.push_back(rate_report("length", ens.times, ens.values[0], predicted, mu2, c.seed));
  res.series.push_back({"length", ensemble_series(ens.times, ens.values[0])});
  if (c.compare_doubled_features) {
    const FlowEnsembleResult ens2 =
        simulate_flow_ensemble(flow_options(c, 2 * c.features), c.spectral, start, observe, 1);
    RateReport r2 = rate_report("length (" + std::to_string(2 * c.features) + " features)",
                                ens2.times, ens2.values[0], predicted, mu2, c.seed);
    const double half_ci = 0.5 * (res.rates[0].ci_high - res.rates[0].ci_low);
    Check shift{"feature doubling shift", std::abs(r2.fitted - res.rates[0].fitted), 0.0, half_ci, false};
    shift.passed = shift.value < shift.tolerance;
    res.checks.push_back(shift);
    res.series.push_back({r2.observable, ensemble_series(ens2.times, ens2.values[0])});
    res.rates.push_back(r2);
  }
  res.extra["features"] = c.features;
  res.extra["vertices"] = start.cols();
  return res;
}

ExperimentResult run_surface(const ExperimentConfig& c) {
  Geometry geom;
  const Mat start = geometry_start(c, geom);
  const auto* mesh = std::get_if<TriMesh>(&geom);
  if (!mesh) throw ConfigError(c.experiment + " needs a triangle mesh");
  const TriMesh topology = *mesh;
  auto observe = [&topology](const Mat& x) { return surface_observables(topology, x); };
  const double mu2 = c.spectral.mu2();
  const FlowEnsembleResult ens =
      simulate_flow_ensemble(flow_options(c, c.features), c.spectral, start, observe, 4);

  ExperimentResult res;
  res.experiment = c.experiment;
  const double chi0 = lk_trimesh(topology).chi_combinatorial;
  if (c.experiment != "euler-invariance") {
    RateReport area = rate_report("area", ens.times, ens.values[0],
                                  predicted_rate(RateKind::lk(3, 0), mu2), mu2, c.seed);
    RateReport hint = rate_report("H_int", ens.times, ens.values[1],
                                  predicted_rate(RateKind::lk(3, 1), mu2), mu2, c.seed + 1);
    if (c.experiment == "surface-area") {
      res.rates = {area, hint};
    } else {
      res.rates = {hint, area};
    }
    res.series.push_back({"area", ensemble_series(ens.times, ens.values[0])});
    res.series.push_back({"H_int", ensemble_series(ens.times, ens.values[1])});
  }
  const Mat& chi = ens.values[2];
  const double worst = (chi.array() - std::round(chi0)).abs().maxCoeff();
  Check inv{"chi == " + std::to_string(static_cast<int>(std::round(chi0))) + " at all recorded times",
            worst, 0.0, 1e-9, worst <= 1e-9};
  res.checks.push_back(inv);
  res.series.push_back({"chi", ensemble_series(ens.times, chi)});
  // Volume drift of the ensemble-mean enclosed volume (incompressibility
  // plus integrator error).
  const ColumnStats vol = column_stats(ens.values[3]);
  double drift = 0.0;
  for (double v : vol.mean) drift = std::max(drift, std::abs(v / vol.mean[0] - 1.0));
  res.extra["max_relative_volume_drift"] = drift;
  res.extra["features"] = c.features;
  res.extra["vertices"] = start.cols();
  return res;
}

// Tube check -----------------------------------------------------------------

ExperimentResult run_tube(const ExperimentConfig& c) {
  ExperimentResult res;
  res.experiment = c.experiment;
  const auto& g = c.geometry;
  const double rho = c.tube.rho;
  if (g.kind == "polygon") {
    const Polyline curve = regular_polygon(g.count, g.radius, 2);
    const VolumeEstimate v = tube_volume_mc(curve, rho, c.tube.samples, c.seed);
    const double exact = kPi * ((g.radius + rho) * (g.radius + rho) - (g.radius - rho) * (g.radius - rho));
    res.checks.push_back(make_check("annulus area (3 SE)", v.volume, exact, 3.0 * v.std_error));
    res.extra["std_error"] = v.std_error;
    return res;
  }
  TriMesh volume_mesh, fit_mesh;
  double area_ref = 0.0, chi_ref = 0.0;
  bool sphere = g.kind == "icosphere";
  if (sphere) {
    volume_mesh = icosphere(c.tube.volume_level, g.radius);
    fit_mesh = icosphere(g.level, g.radius);
    area_ref = 4.0 * kPi * g.radius * g.radius;
    chi_ref = 2.0;
  } else {
    Geometry geom = load_mesh(g.path);
    if (!std::holds_alternative<TriMesh>(geom)) throw ConfigError("tube-check file must be a mesh");
    volume_mesh = fit_mesh = std::get<TriMesh>(geom);
    area_ref = fit_mesh.area();
    chi_ref = lk_trimesh(fit_mesh).chi_combinatorial;
  }
  const VolumeEstimate v = tube_volume_mc(volume_mesh, rho, c.tube.samples, c.seed);
  if (sphere) {
    const double r = g.radius;
    const double exact = 4.0 * kPi / 3.0 * (std::pow(r + rho, 3) - std::pow(r - rho, 3));
    res.checks.push_back(make_check("tube volume (3 SE)", v.volume, exact, 3.0 * v.std_error));
  }
  res.extra["volume"] = {{"rho", rho}, {"estimate", v.volume}, {"std_error", v.std_error},
                         {"samples", c.tube.samples}, {"mesh_vertices", volume_mesh.vertex_count()}};
  const TubeFit fit = fit_tube_coefficients(fit_mesh, c.tube.radii, c.tube.lines, c.tube.shifts, c.seed);
  res.checks.push_back(make_check("L0", fit.L[0], chi_ref, 0.2));
  res.checks.push_back(make_check("L1 (two-sided)", fit.L[1], 0.0, 0.2));
  res.checks.push_back(make_check("L2 (1%)", fit.L[2], area_ref, 0.01 * area_ref));
  json vols = json::array();
  for (std::size_t i = 0; i < fit.radii.size(); ++i)
    vols.push_back({{"rho", fit.radii[i]}, {"volume", fit.volumes[i].volume}, {"std_error", fit.volumes[i].std_error}});
  res.extra["fit"] = {{"volumes", vols},
                      {"L", {fit.L[0], fit.L[1], fit.L[2]}},
                      {"L_std_error", {fit.L_se[0], fit.L_se[1], fit.L_se[2]}},
                      {"mesh_vertices", fit_mesh.vertex_count()}};
  res.extra["lk"] = to_json(lk_trimesh(fit_mesh));
  return res;
}

// Noise audit ----------------------------------------------------------------

Mat random_orthogonal(int n, Rng& rng) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ();
}

ExperimentResult run_noise_audit(const ExperimentConfig& c) {
  ExperimentResult res;
  res.experiment = c.experiment;
  const double mu2 = c.spectral.mu2(), mu4 = c.spectral.mu4();
  Rng rng = make_stream(c.seed, 0, 0, 0xa0d17);
  for (int n : {2, 3, 4}) {
    const std::string tag = " (n=" + std::to_string(n) + ")";
    const WCovariance w(n, mu2);
    // Trace-null direction.
    Vec trace_dir = Vec::Zero(n * n);
    for (int i = 0; i < n; ++i) trace_dir(i * n + i) = 1.0;
    const double null_norm = (w.rate_matrix() * trace_dir).cwiseAbs().maxCoeff();
    res.checks.push_back(make_check("W rate * trace direction" + tag, null_norm, 0.0, 1e-15 * mu2));
    double worst_trace = 0.0;
    Mat dw(n, n);
    Vec scratch;
    for (int s = 0; s < c.audit_samples; ++s) {
      w.sample_increment(1.0, rng, dw, scratch);
      worst_trace = std::max(worst_trace, std::abs(dw.trace()));
    }
    res.checks.push_back(make_check("sampled |trace dW|" + tag, worst_trace, 0.0, 1e-12));

    // B covariance against the sphere-quadrature oracle.
    const BCovariance b(n, mu4);
    const auto& idx = b.reduced_indices();
    const int m = static_cast<int>(idx.size());
    const Mat t = sphere_points(n, static_cast<std::size_t>(c.audit_oracle_samples), c.seed + n);
    Mat sum = Mat::Zero(m, m), sum_sq = Mat::Zero(m, m);
    Vec f(m);
    Mat g(m, m);
    for (Eigen::Index q = 0; q < t.cols(); ++q) {
      const auto tc = t.col(q);
      for (int a = 0; a < m; ++a) f(a) = tc(idx[a].j) * tc(idx[a].k);
      for (int a = 0; a < m; ++a)
        for (int bb = 0; bb <= a; ++bb) {
          const double proj = (idx[a].i == idx[bb].i ? 1.0 : 0.0) - tc(idx[a].i) * tc(idx[bb].i);
          g(a, bb) = mu4 * f(a) * f(bb) * proj;
        }
      for (int a = 0; a < m; ++a)
        for (int bb = 0; bb <= a; ++bb) {
          sum(a, bb) += g(a, bb);
          sum_sq(a, bb) += g(a, bb) * g(a, bb);
        }
    }
    const double cnt = static_cast<double>(t.cols());
    int bad = 0;
    double worst_z = 0.0;
    for (int a = 0; a < m; ++a)
      for (int bb = 0; bb <= a; ++bb) {
        const double mean = sum(a, bb) / cnt;
        const double se = std::sqrt(std::max(0.0, sum_sq(a, bb) / cnt - mean * mean) / cnt);
        const double diff = std::abs(b.rate_matrix()(a, bb) - mean);
        const double allowed = 3.0 * se + 1e-12 * mu4;
        if (diff > allowed) ++bad;
        worst_z = std::max(worst_z, diff / allowed);
      }
    res.checks.push_back(make_check("B entries outside 3 SE of oracle" + tag, bad, 0.0, 0.0));
    res.extra["b_oracle_worst_ratio" + tag] = worst_z;

    // Contraction variance for orthogonal, aligned and random unit pairs.
    std::vector<std::pair<Vec, Vec>> pairs;
    pairs.push_back({Vec::Unit(n, 0), Vec::Unit(n, 1)});
    pairs.push_back({Vec::Unit(n, 0), Vec::Unit(n, 0)});
    {
      Vec u(n), v(n);
      for (int i = 0; i < n; ++i) {
        u(i) = standard_normal(rng);
        v(i) = standard_normal(rng);
      }
      pairs.push_back({u.normalized(), v.normalized()});
    }
    const char* names[] = {"orthogonal", "aligned", "random"};
    Tensor3 db(n);
    Vec bscratch;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& [u, v] = pairs[p];
      const double cuv = u.dot(v);
      const double expected = 3.0 * mu4 * ((n + 3) - 4.0 * cuv * cuv) / (n * (n + 2.0) * (n + 4.0));
      double s1 = 0, s2 = 0;
      for (int s = 0; s < c.audit_samples; ++s) {
        b.sample_increment(1.0, rng, db, bscratch);
        const double x = db.contract(u, u).dot(v);
        s1 += x;
        s2 += x * x;
      }
      const double mean = s1 / c.audit_samples;
      const double var = s2 / c.audit_samples - mean * mean;
      res.checks.push_back(make_check(std::string("B contraction variance, ") + names[p] + tag, var,
                                      expected, 0.05 * expected));
      if (std::abs(b.contraction_rate(u, v) - expected) > 1e-12 * expected)
        res.checks.push_back(make_check(std::string("B contraction rate formula, ") + names[p] + tag,
                                        b.contraction_rate(u, v), expected, 1e-12 * expected));
    }

    // Isotropy of the covariance function: C(z) = G^T C(G z) G.
    double worst_iso = 0.0, worst_ratio = 0.0;
    for (int r = 0; r < 20; ++r) {
      const Mat gm = random_orthogonal(n, rng);
      Vec z(n);
      for (int i = 0; i < n; ++i) z(i) = standard_normal(rng);
      const auto c1 = covariance_function(c.spectral, z, 20000, c.seed);
      const auto c2 = covariance_function(c.spectral, gm * z, 20000, c.seed + 1);
      const double diff = (c1.value - gm.transpose() * c2.value * gm).cwiseAbs().maxCoeff();
      const double tol = 3.0 * (c1.error + c2.error) * n;
      worst_iso = std::max(worst_iso, diff);
      worst_ratio = std::max(worst_ratio, diff / tol);
    }
    res.checks.push_back(make_check("isotropy, 20 random G (max diff / tolerance)" + tag, worst_ratio, 0.0, 1.0));
    res.extra["isotropy_max_abs_diff" + tag] = worst_iso;
  }
  return res;
}

}  // namespace

FlowEnsembleResult simulate_flow_ensemble(const FlowEnsembleOptions& opt,
                                          const SpectralMeasure& spectral, const Mat& start,
                                          const PointObservable& observe, std::size_t observables) {
  if (opt.replicas < 1) throw std::invalid_argument("flow ensemble: need replicas");
  if (!(opt.dt > 0.0) || !(opt.horizon > 0.0)) throw std::invalid_argument("flow ensemble: dt and horizon must be positive");
  const int n = static_cast<int>(start.rows());
  const long total = std::lround(opt.horizon / opt.dt);
  std::vector<long> obs;
  FlowEnsembleResult res;
  for (int g = 0; g <= opt.grid_points; ++g) {
    obs.push_back(std::lround(static_cast<double>(g) * total / opt.grid_points));
    res.times.push_back(static_cast<double>(obs.back()) * opt.dt);
  }
  const std::size_t nt = obs.size();
  res.values.assign(observables, Mat(opt.replicas, nt));
  parallel_for(static_cast<std::size_t>(opt.replicas), [&](std::size_t r) {
    FourierField field = sample_field(n, opt.features, spectral, replica_field_seed(opt.seed, r));
    FeatureStreams streams(opt.seed, r, opt.features);
    Mat x = start;
    std::size_t next = 0;
    for (long step = 0; step <= total; ++step) {
      if (next < nt && step == obs[next]) {
        const std::vector<double> v = observe(x);
        if (v.size() != observables) throw std::logic_error("observable count mismatch");
        for (std::size_t o = 0; o < observables; ++o) res.values[o](r, next) = v[o];
        ++next;
      }
      if (step == total) break;
      x = advect_heun(field, x, opt.dt, streams);
    }
    if (!x.allFinite()) throw std::runtime_error("flow ensemble: non-finite positions");
  });
  return res;
}

RateReport rate_report(const std::string& name, const std::vector<double>& times,
                       const Mat& values, double predicted, double mu2, std::uint64_t seed) {
  const Mat v = values.rightCols(values.cols() - 1);
  const RateFit fit = fit_rate(drop_first(times), v, 1000, seed);
  RateReport r;
  r.observable = name;
  r.predicted = predicted;
  r.fitted = fit.rate;
  r.ci_low = fit.ci_low;
  r.ci_high = fit.ci_high;
  r.ci_method = "bootstrap";
  r.replicas = static_cast<int>(values.rows());
  const ColumnStats s = column_stats(v);
  r.achieved_std_error = std::sqrt(s.var_of_mean.back()) / std::abs(s.mean.back());
  finish_rate(r, mu2);
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  if (e == "alpha-growth" || e == "alpha-sq-growth" || e == "kframe-growth" || e == "trace-growth")
    return run_track_a(c);
  if (e == "curve-length" || e == "curve-length-3d") return run_curve(c);
  if (e == "surface-area" || e == "mean-curvature-integral" || e == "euler-invariance")
    return run_surface(c);
  if (e == "tube-check") return run_tube(c);
  if (e == "noise-audit") return run_noise_audit(c);
  throw ConfigError("unknown experiment '" + e + "'");
}

}  // namespace curvflow
