#include "curvflow/local_jet.hpp"

#include <cmath>
#include <stdexcept>

#include "curvflow/predicted_rate.hpp"
#include "curvflow/rate_fit.hpp"

namespace curvflow {

int JetState::pair_index(int n, int a, int b) {
  if (a > b) std::swap(a, b);
  const int m = n - 1;
  return a * m - a * (a - 1) / 2 + (b - a);
}

namespace {

std::vector<double> preset_curvatures(const JetPreset& preset, int& n) {
  if (const auto* p = std::get_if<UnitSpherePreset>(&preset)) {
    n = p->n;
    if (n < 2) throw std::invalid_argument("init_jet: n must be >= 2");
    return std::vector<double>(n - 1, 1.0);
  }
  if (const auto* p = std::get_if<EllipsoidPreset>(&preset)) {
    const auto& a = p->semi_axes;
    n = static_cast<int>(a.size());
    if (n < 2) throw std::invalid_argument("init_jet: ellipsoid needs >= 2 semi-axes");
    for (double x : a)
      if (!(x > 0.0) || !std::isfinite(x))
        throw std::invalid_argument("init_jet: semi-axes must be positive");
    std::vector<double> k(n - 1);
    for (int i = 0; i < n - 1; ++i) k[i] = a[n - 1] / (a[i] * a[i]);
    return k;
  }
  const auto& p = std::get<CurvatureDiagPreset>(preset);
  n = static_cast<int>(p.kappas.size()) + 1;
  if (n < 2) throw std::invalid_argument("init_jet: need at least one curvature");
  for (double x : p.kappas)
    if (!std::isfinite(x)) throw std::invalid_argument("init_jet: non-finite curvature");
  return p.kappas;
}

// Scratch space for in-place stepping; one per replica task.
struct Workspace {
  explicit Workspace(int n)
      : n(n),
        m(n - 1),
        pairs(JetState::pair_count(n)),
        dV0(n, m),
        dV1(n, m),
        dZ0(n, pairs),
        dZ1(n, pairs),
        V1(n, m),
        Z1(n, pairs),
        BV(n, m),
        VBV(m, m) {}
  int n, m, pairs;
  Mat dV0, dV1, dZ0, dZ1, V1, Z1, BV, VBV;
};

// dV = dW V, dZ_ab = dW Z_ab + dB(V_a, V_b)
void drift(const Mat& V, const Mat& Z, const JetIncrement& inc, bool with_b, Workspace& ws,
           Mat& dV, Mat& dZ) {
  dV.noalias() = inc.dW * V;
  dZ.noalias() = inc.dW * Z;
  if (!with_b) return;
  const int n = ws.n, m = ws.m;
  for (int i = 0; i < n; ++i) {
    ws.BV.noalias() = inc.dB.slice(i) * V;
    ws.VBV.noalias() = V.transpose() * ws.BV;
    int c = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) dZ(i, c++) += ws.VBV(a, b);
  }
}

bool frame_ok(const Mat& V) {
  const Mat g = V.transpose() * V;
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 && std::isfinite(hi) && hi <= kMaxGramCondition * lo;
}

Vec normal_of(const Mat& V, const Vec& previous) {
  const int n = static_cast<int>(V.rows());
  Eigen::HouseholderQR<Mat> qr(V);
  Vec nu = qr.householderQ() * Vec::Unit(n, n - 1);
  if (previous.size() == n && nu.dot(previous) < 0.0) nu = -nu;
  return nu;
}

// Returns false on degeneracy; state is then left partially updated.
bool step_in_place(JetState& s, const JetIncrement& inc, bool heun, bool with_b,
                   Workspace& ws) {
  drift(s.V, s.Z, inc, with_b, ws, ws.dV0, ws.dZ0);
  if (heun) {
    ws.V1 = s.V + ws.dV0;
    ws.Z1 = s.Z + ws.dZ0;
    drift(ws.V1, ws.Z1, inc, with_b, ws, ws.dV1, ws.dZ1);
    s.V += 0.5 * (ws.dV0 + ws.dV1);
    s.Z += 0.5 * (ws.dZ0 + ws.dZ1);
  } else {
    s.V += ws.dV0;
    s.Z += ws.dZ0;
  }
  if (!s.V.allFinite() || !s.Z.allFinite() || !frame_ok(s.V)) return false;
  s.nu = normal_of(s.V, s.nu);
  return true;
}

std::optional<JetState> step_copy(const JetState& state, const JetIncrement& inc, bool heun) {
  if (inc.dW.rows() != state.n || inc.dB.dim() != state.n)
    throw std::invalid_argument("jet step: increment dimension mismatch");
  JetState s = state;
  Workspace ws(state.n);
  if (!step_in_place(s, inc, heun, true, ws)) return std::nullopt;
  return s;
}

}  // namespace

JetState init_jet(const JetPreset& preset) {
  int n = 0;
  const std::vector<double> kappa = preset_curvatures(preset, n);
  JetState s;
  s.n = n;
  s.V = Mat::Identity(n, n - 1);
  s.nu = -Vec::Unit(n, n - 1);
  s.Z = Mat::Zero(n, JetState::pair_count(n));
  for (int a = 0; a < n - 1; ++a) s.Z.col(JetState::pair_index(n, a, a)) = kappa[a] * s.nu;
  return s;
}

JetIncrement sample_jet_increment(const WCovariance& w, const BCovariance& b, double dt,
                                  Rng& rng) {
  // W first, then B, from the same step stream; the two Gaussian blocks are
  // disjoint draws, hence independent.
  JetIncrement inc;
  inc.dW = w.sample_increment(dt, rng);
  inc.dB = b.sample_increment(dt, rng);
  return inc;
}

std::optional<JetState> heun_step(const JetState& state, const JetIncrement& inc) {
  return step_copy(state, inc, true);
}

std::optional<JetState> heun_step(const JetState& state, double dt, const WCovariance& w,
                                  const BCovariance& b, Rng& rng) {
  return heun_step(state, sample_jet_increment(w, b, dt, rng));
}

std::optional<JetState> euler_step(const JetState& state, const JetIncrement& inc) {
  return step_copy(state, inc, false);
}

Frame frame_of(const JetState& state) { return Frame{state.V}; }

ShapeForm shape_of(const JetState& state) {
  const int m = state.n - 1;
  Mat h(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      const double v = state.Z.col(JetState::pair_index(state.n, a, b)).dot(state.nu);
      h(a, b) = v;
      h(b, a) = v;
    }
  return ShapeForm(std::move(h));
}

JetObservables observables(const JetState& state) {
  JetObservables o;
  const Frame f = frame_of(state);
  o.alpha_norm = alpha_norm(f);
  o.nu = state.nu;
  const ShapeForm s = shape_of(state);
  o.h = s.h;
  o.traces = trace_sk_all(f, s);
  o.products.resize(o.traces.size());
  for (std::size_t k = 0; k < o.traces.size(); ++k) o.products[k] = o.traces[k] * o.alpha_norm;
  return o;
}

std::string Functional::name() const {
  switch (kind) {
    case Kind::AlphaNorm: return "alpha_norm";
    case Kind::AlphaNormSq: return "alpha_norm_sq";
    case Kind::KFrameInner: return "kframe_inner(k=" + std::to_string(k) + ")";
    case Kind::TraceProduct: return "trace_product(k=" + std::to_string(k) + ")";
  }
  return "unknown";
}

double Functional::predicted_rate(int n, double mu2) const {
  switch (kind) {
    case Kind::AlphaNorm: return curvflow::predicted_rate(RateKind::alpha(n), mu2);
    case Kind::AlphaNormSq: return curvflow::predicted_rate(RateKind::alpha_sq(n), mu2);
    case Kind::KFrameInner: return curvflow::predicted_rate(RateKind::kframe(n, k), mu2);
    case Kind::TraceProduct: return curvflow::predicted_rate(RateKind::lk(n, k), mu2);
  }
  return 0.0;
}

namespace {

void check_functional(const Functional& f, int n) {
  if (f.kind == Functional::Kind::KFrameInner && (f.k < 1 || f.k > n - 1))
    throw std::invalid_argument("kframe_inner: k must be in 1..n-1");
  if (f.kind == Functional::Kind::TraceProduct && (f.k < 0 || f.k > n - 1))
    throw std::invalid_argument("trace_product: k must be in 0..n-1");
}

// Evaluates every functional at once so the shape operator is solved only
// when a trace product is requested.
void evaluate_all(const JetState& s, const std::vector<Functional>& fs, double* out) {
  const Mat g = s.V.transpose() * s.V;
  const double det = g.determinant();
  std::vector<double> products;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Functional& f = fs[i];
    switch (f.kind) {
      case Functional::Kind::AlphaNorm: out[i] = std::sqrt(det); break;
      case Functional::Kind::AlphaNormSq: out[i] = det; break;
      case Functional::Kind::KFrameInner:
        out[i] = g.topLeftCorner(f.k, f.k).determinant();
        break;
      case Functional::Kind::TraceProduct:
        if (products.empty()) products = observables(s).products;
        out[i] = products[f.k];
        break;
    }
  }
}

}  // namespace

double Functional::evaluate(const JetState& state) const {
  check_functional(*this, state.n);
  double v = 0.0;
  evaluate_all(state, {*this}, &v);
  return v;
}

JetEnsembleResult simulate_jet_ensemble(const JetEnsembleOptions& opt,
                                        const SpectralMeasure& spectral,
                                        const std::vector<Functional>& functionals) {
  const int n = opt.n;
  if (n < 2) throw std::invalid_argument("mc_growth: n must be >= 2");
  if (!(opt.dt > 0.0) || !(opt.horizon > 0.0))
    throw std::invalid_argument("mc_growth: dt and horizon must be positive");
  if (opt.dt > opt.horizon / 20.0 * (1 + 1e-12))
    throw std::invalid_argument("mc_growth: dt must be <= horizon / 20");
  if (opt.replicas < 100) throw std::invalid_argument("mc_growth: replicas must be >= 100");
  if (opt.grid_points < 5) throw std::invalid_argument("mc_growth: need >= 5 grid points");
  if (functionals.empty()) throw std::invalid_argument("mc_growth: no functionals");
  const JetState start = init_jet(opt.preset);
  if (start.n != n) throw std::invalid_argument("mc_growth: preset dimension differs from n");
  for (const auto& f : functionals) {
    check_functional(f, n);
    if (!opt.allow_long_horizon && f.predicted_rate(n, spectral.mu2()) * opt.horizon > 3.0)
      throw std::invalid_argument("mc_growth: horizon * predicted rate exceeds 3 for " +
                                  f.name());
  }

  const long total = std::lround(opt.horizon / opt.dt);
  std::vector<long> obs_steps;
  JetEnsembleResult res;
  for (int g = 0; g <= opt.grid_points; ++g) {
    obs_steps.push_back(std::lround(static_cast<double>(g) * total / opt.grid_points));
    res.times.push_back(static_cast<double>(obs_steps.back()) * opt.dt);
  }
  const std::size_t nt = obs_steps.size(), nf = functionals.size();

  const WCovariance wcov(n, spectral.mu2());
  const BCovariance bcov(n, spectral.mu4());
  const bool with_b = !opt.suppress_b;

  // Row r of rows[f] holds replica r; aborted replicas are flagged and dropped.
  std::vector<Mat> rows(nf, Mat(opt.replicas, nt));
  std::vector<char> alive(opt.replicas, 1);
  parallel_for(static_cast<std::size_t>(opt.replicas), [&](std::size_t r) {
    Rng rng = make_stream(opt.seed, r, 0, 0x6a6574);
    Workspace ws(n);
    JetState s = start;
    JetIncrement inc{Mat(n, n), Tensor3(n)};
    Vec scratch_w, scratch_b;
    std::vector<double> vals(nf);
    std::size_t next = 0;
    for (long step = 0; step <= total; ++step) {
      if (next < nt && step == obs_steps[next]) {
        try {
          evaluate_all(s, functionals, vals.data());
        } catch (const DegenerateFrameError&) {
          alive[r] = 0;
          return;
        }
        for (std::size_t f = 0; f < nf; ++f) rows[f](r, next) = vals[f];
        ++next;
      }
      if (step == total) break;
      wcov.sample_increment(opt.dt, rng, inc.dW, scratch_w);
      if (with_b) bcov.sample_increment(opt.dt, rng, inc.dB, scratch_b);
      if (!step_in_place(s, inc, !opt.euler, with_b, ws)) {
        alive[r] = 0;
        return;
      }
    }
  });

  std::vector<Eigen::Index> keep;
  for (int r = 0; r < opt.replicas; ++r)
    if (alive[r]) keep.push_back(r);
  res.replicas = opt.replicas;
  res.aborted = opt.replicas - static_cast<int>(keep.size());
  for (std::size_t f = 0; f < nf; ++f) {
    Mat v(keep.size(), nt);
    for (std::size_t i = 0; i < keep.size(); ++i) v.row(i) = rows[f].row(keep[i]);
    res.values.push_back(std::move(v));
  }
  return res;
}

std::vector<SeriesPoint> ensemble_series(const std::vector<double>& times, const Mat& values) {
  const ColumnStats s = column_stats(values);
  std::vector<SeriesPoint> out;
  for (std::size_t j = 0; j < times.size(); ++j)
    out.push_back({times[j], s.mean[j], std::sqrt(s.var_of_mean[j]),
                   static_cast<int>(values.rows())});
  return out;
}

GrowthEstimate growth_from_ensemble(const JetEnsembleResult& ens, std::size_t which,
                                    double horizon, int batches) {
  GrowthEstimate g;
  g.replicas = ens.replicas;
  g.aborted = ens.aborted;
  g.horizon = horizon;
  g.valid = ens.aborted <= ens.replicas / 100;
  const Mat& all = ens.values.at(which);
  std::vector<double> t(ens.times.begin() + 1, ens.times.end());
  const Mat v = all.rightCols(all.cols() - 1);
  const RateFit fit = fit_rate_batch_means(t, v, batches);
  g.rate = fit.rate;
  g.ci_low = fit.ci_low;
  g.ci_high = fit.ci_high;
  const ColumnStats s = column_stats(v);
  g.achieved_std_error = std::sqrt(s.var_of_mean.back()) / std::abs(s.mean.back());
  return g;
}

GrowthEstimate mc_growth(const Functional& functional, const JetEnsembleOptions& opt,
                         const SpectralMeasure& spectral) {
  const JetEnsembleResult ens = simulate_jet_ensemble(opt, spectral, {functional});
  return growth_from_ensemble(ens, 0, opt.horizon, opt.batches);
}

}  // namespace curvflow
