#include <cmath>
#include <cstdlib>
#include <set>

#include <doctest.h>

#include "curvflow/local_jet.hpp"
#include "curvflow/predicted_rate.hpp"

using namespace curvflow;

namespace {

JetIncrement zero_increment(int n) { return {Mat::Zero(n, n), Tensor3(n)}; }

// Ito drift rate of every tracked quantity at `state`, from central second
// differences along the columns of the noise covariance factors. The Euler
// map is linear in the increments, so this is the generator applied exactly
// up to the finite-difference error.
struct DriftRates {
  double alpha;
  std::vector<double> traces, products;
};

DriftRates exact_drift(const JetState& state, double mu2, double mu4) {
  const int n = state.n;
  const WCovariance w(n, mu2);
  const BCovariance b(n, mu4);
  auto eval = [&](const JetIncrement& inc) {
    const JetObservables o = observables(*euler_step(state, inc));
    std::vector<double> v{o.alpha_norm};
    v.insert(v.end(), o.traces.begin(), o.traces.end());
    v.insert(v.end(), o.products.begin(), o.products.end());
    return v;
  };
  const std::vector<double> f0 = eval(zero_increment(n));
  std::vector<double> d(f0.size(), 0.0);
  const double h = 1e-3;
  auto accumulate = [&](const JetIncrement& p, const JetIncrement& m) {
    const auto fp = eval(p), fm = eval(m);
    for (std::size_t q = 0; q < d.size(); ++q) d[q] += 0.5 * (fp[q] + fm[q] - 2 * f0[q]) / (h * h);
  };
  for (Eigen::Index r = 0; r < w.factor().cols(); ++r) {
    JetIncrement p = zero_increment(n), m = zero_increment(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        p.dW(i, j) = h * w.factor()(i * n + j, r);
        m.dW(i, j) = -p.dW(i, j);
      }
    accumulate(p, m);
  }
  const auto& idx = b.reduced_indices();
  for (Eigen::Index r = 0; r < b.factor().cols(); ++r) {
    JetIncrement p = zero_increment(n), m = zero_increment(n);
    for (std::size_t q = 0; q < idx.size(); ++q) {
      p.dB.set_symmetric(idx[q].i, idx[q].j, idx[q].k, h * b.factor()(q, r));
      m.dB.set_symmetric(idx[q].i, idx[q].j, idx[q].k, -h * b.factor()(q, r));
    }
    accumulate(p, m);
  }
  DriftRates out;
  out.alpha = d[0] / f0[0];
  for (int k = 0; k < n; ++k) {
    out.traces.push_back(d[1 + k] / f0[1 + k]);
    out.products.push_back(d[1 + n + k] / f0[1 + n + k]);
  }
  return out;
}

JetState perturbed_state(int n, Rng& rng) {
  JetState s = init_jet(UnitSpherePreset{n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n - 1; ++j) s.V(i, j) += 0.4 * standard_normal(rng);
  for (int c = 0; c < s.Z.cols(); ++c)
    for (int i = 0; i < n; ++i) s.Z(i, c) += 0.7 * standard_normal(rng);
  return *euler_step(s, zero_increment(n));  // recomputes the normal
}

}  // namespace

TEST_CASE("pair indices pack the upper triangle") {
  for (int n : {2, 3, 5}) {
    std::set<int> seen;
    for (int a = 0; a < n - 1; ++a)
      for (int b = a; b < n - 1; ++b) {
        const int p = JetState::pair_index(n, a, b);
        CHECK(p == JetState::pair_index(n, b, a));
        CHECK(p >= 0);
        CHECK(p < JetState::pair_count(n));
        seen.insert(p);
      }
    CHECK(static_cast<int>(seen.size()) == JetState::pair_count(n));
  }
}

TEST_CASE("presets") {
  const JetState s = init_jet(UnitSpherePreset{4});
  const JetObservables o = observables(s);
  CHECK(o.alpha_norm == doctest::Approx(1.0));
  CHECK(o.traces[1] == doctest::Approx(3.0));
  CHECK(o.traces[2] == doctest::Approx(3.0));
  CHECK(o.traces[3] == doctest::Approx(1.0));

  // Ellipsoid x^2 + y^2/4 + z^2/9 = 1 at (0, 0, 3): curvatures 3 and 3/4.
  const JetObservables e = observables(init_jet(EllipsoidPreset{{1.0, 2.0, 3.0}}));
  CHECK(e.traces[1] == doctest::Approx(3.75));
  CHECK(e.traces[2] == doctest::Approx(2.25));

  const JetObservables d = observables(init_jet(CurvatureDiagPreset{{2.0, -1.0}}));
  CHECK(d.traces[2] == doctest::Approx(-2.0));

  CHECK_THROWS_AS(init_jet(EllipsoidPreset{{1.0, -2.0, 3.0}}), std::invalid_argument);
  CHECK_THROWS_AS(init_jet(UnitSpherePreset{1}), std::invalid_argument);
}

TEST_CASE("zero increment is a fixed point and degenerate steps abort") {
  const JetState s = init_jet(UnitSpherePreset{3});
  const auto same = heun_step(s, zero_increment(3));
  REQUIRE(same);
  CHECK((same->V - s.V).norm() == 0.0);
  CHECK((same->Z - s.Z).norm() == 0.0);

  JetIncrement crush = zero_increment(3);
  crush.dW(0, 0) = -1.0;
  crush.dW(2, 2) = 1.0;
  CHECK_FALSE(euler_step(s, crush).has_value());
}

TEST_CASE("Euler step applies the increments linearly") {
  Rng rng = make_stream(4);
  const JetState s = perturbed_state(3, rng);
  const WCovariance w(3, 1.0);
  const BCovariance b(3, 3.0);
  const JetIncrement inc = sample_jet_increment(w, b, 1e-3, rng);
  const JetState t = *euler_step(s, inc);
  CHECK((t.V - (s.V + inc.dW * s.V)).norm() < 1e-14);
  const int p = JetState::pair_index(3, 0, 1);
  Vec want = s.Z.col(p) + inc.dW * s.Z.col(p) + inc.dB.contract(s.V.col(0), s.V.col(1));
  CHECK((t.Z.col(p) - want).norm() < 1e-14);
  CHECK(t.nu.norm() == doctest::Approx(1.0));
  CHECK(std::abs(t.nu.dot(t.V.col(0))) < 1e-12);
}

TEST_CASE("exact Ito drift matches the closed forms at arbitrary states") {
  Rng rng = make_stream(8);
  for (int n : {2, 3, 4, 5}) {
    for (int rep = 0; rep < 2; ++rep) {
      const JetState s = perturbed_state(n, rng);
      // mu4 does not enter any of these rates.
      const DriftRates d = exact_drift(s, 1.0, 2.0 + rep);
      CHECK(d.alpha == doctest::Approx(predicted_rate(RateKind::alpha(n), 1.0)).epsilon(1e-4));
      for (int k = 0; k < n; ++k) {
        const auto dec = drift_decomposition(n, k);
        if (k > 0)
          CHECK(d.traces[k] == doctest::Approx(dec.trace_drift.value()).epsilon(1e-4));
        const double want = predicted_rate(RateKind::lk(n, k), 1.0);
        CHECK(std::abs(d.products[k] - want) < 1e-4);
        // What is left over is the cross-variation of ||alpha|| and the trace.
        if (k > 0)
          CHECK(d.products[k] - d.alpha - d.traces[k] ==
                doctest::Approx(dec.cross_variation.value()).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("predicted rates") {
  CHECK(predicted_rate_coefficient(RateKind::alpha(2)) == Rational(3, 16));
  CHECK(predicted_rate_coefficient(RateKind::alpha(3)) == Rational(4, 15));
  CHECK(predicted_rate_coefficient(RateKind::alpha(4)) == Rational(5, 16));
  CHECK(predicted_rate_coefficient(RateKind::alpha_sq(3)) == Rational(2, 3));
  CHECK(predicted_rate_coefficient(RateKind::kframe(3, 1)) == Rational(2, 3));
  CHECK(predicted_rate_coefficient(RateKind::kframe(4, 2)) == Rational(1));
  CHECK(predicted_rate_coefficient(RateKind::lk(3, 1)) == Rational(4, 15));
  CHECK(predicted_rate_coefficient(RateKind::lk(4, 1)) == Rational(5, 12));
  CHECK(predicted_rate_coefficient(RateKind::lk(4, 2)) == Rational(5, 16));
  CHECK(predicted_rate_coefficient(RateKind::lk(3, 2)) == Rational(0));
  CHECK(predicted_rate_coefficient(RateKind::codim(3, 1)) == Rational(4, 15));
  CHECK(predicted_rate(RateKind::alpha(4), 2.0) == doctest::Approx(0.625));
  CHECK(Rational(6, -4).str() == "-3/2");
  CHECK_THROWS_AS(predicted_rate_coefficient(RateKind::lk(3, 3)), std::invalid_argument);
  CHECK_THROWS_AS(predicted_rate_coefficient(RateKind::kframe(3, 0)), std::invalid_argument);
}

TEST_CASE("drift decomposition sums to the LK rate for n <= 8") {
  for (int n = 2; n <= 8; ++n)
    for (int k = 0; k < n; ++k) {
      const auto d = drift_decomposition(n, k);
      CHECK(d.total() == predicted_rate_coefficient(RateKind::lk(n, k)));
      CHECK(d.norm_drift == predicted_rate_coefficient(RateKind::alpha(n)));
    }
}

TEST_CASE("ensemble validation and determinism") {
  JetEnsembleOptions opt;
  opt.n = 3;
  opt.preset = UnitSpherePreset{3};
  opt.dt = 0.01;
  opt.horizon = 0.2;
  opt.replicas = 100;
  opt.grid_points = 5;
  opt.seed = 12;
  const auto spectral = SpectralMeasure::point(1.0);
  const std::vector<Functional> fs{Functional::alpha_norm(), Functional::trace_product(1)};

  const char* old = std::getenv("CURVFLOW_THREADS");
  const std::string saved = old ? old : "";
  setenv("CURVFLOW_THREADS", "1", 1);
  const auto a = simulate_jet_ensemble(opt, spectral, fs);
  setenv("CURVFLOW_THREADS", "3", 1);
  const auto b = simulate_jet_ensemble(opt, spectral, fs);
  if (old)
    setenv("CURVFLOW_THREADS", saved.c_str(), 1);
  else
    unsetenv("CURVFLOW_THREADS");
  REQUIRE(a.values.size() == 2);
  CHECK(a.values[0] == b.values[0]);
  CHECK(a.values[1] == b.values[1]);
  CHECK(a.times.size() == 6);  // t = 0 plus the grid
  CHECK(a.values[0](0, 0) == 1.0);

  auto bad = opt;
  bad.dt = 0.05;
  CHECK_THROWS_AS(simulate_jet_ensemble(bad, spectral, fs), std::invalid_argument);
  bad = opt;
  bad.replicas = 50;
  CHECK_THROWS_AS(simulate_jet_ensemble(bad, spectral, fs), std::invalid_argument);
  bad = opt;
  bad.horizon = 20.0;
  bad.dt = 0.1;
  CHECK_THROWS_AS(simulate_jet_ensemble(bad, spectral, fs), std::invalid_argument);
  bad.allow_long_horizon = true;
  bad.replicas = 100;
  CHECK_NOTHROW(simulate_jet_ensemble(bad, spectral, {Functional::alpha_norm()}));
  bad = opt;
  bad.preset = UnitSpherePreset{4};
  CHECK_THROWS_AS(simulate_jet_ensemble(bad, spectral, fs), std::invalid_argument);
}

TEST_CASE("small ensemble recovers the planar rate") {
  JetEnsembleOptions opt;
  opt.n = 2;
  opt.preset = UnitSpherePreset{2};
  opt.dt = 0.005;
  opt.horizon = 1.0;
  opt.replicas = 4000;
  opt.seed = 3;
  const GrowthEstimate g = mc_growth(Functional::alpha_norm(), opt, SpectralMeasure::point(1.0));
  CHECK(g.valid);
  CHECK(g.aborted == 0);
  CHECK(g.rate == doctest::Approx(3.0 / 16.0).epsilon(0.1));
  CHECK(g.ci_low < g.rate);
  CHECK(g.rate < g.ci_high);
}
