#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <doctest.h>

#include "curvflow/spectral_noise.hpp"

using namespace curvflow;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sphere average of f over S^{n-1} for n = 2, 3 with rules exact for the
// low-degree polynomials used here.
template <class F>
double sphere_average(int n, F f) {
  double acc = 0.0;
  if (n == 2) {
    const int m = 64;
    for (int i = 0; i < m; ++i) {
      const double th = 2.0 * kPi * i / m;
      Vec t(2);
      t << std::cos(th), std::sin(th);
      acc += f(t);
    }
    return acc / m;
  }
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const int m = 32;
  for (int i = 0; i < m; ++i) {
    const double ph = 2.0 * kPi * i / m;
    auto g = [&](double z) {
      const double r = std::sqrt(1.0 - z * z);
      Vec t(3);
      t << r * std::cos(ph), r * std::sin(ph), z;
      return f(t);
    };
    acc += Rule::integrate(g, -1.0, 1.0) / 2.0;
  }
  return acc / m;
}

}  // namespace

TEST_CASE("spectral moments") {
  const auto p = SpectralMeasure::point(2.0, 0.5);
  CHECK(p.total_mass() == doctest::Approx(0.5));
  CHECK(p.mu2() == doctest::Approx(2.0));
  CHECK(p.mu4() == doctest::Approx(8.0));

  SpectralMeasure mix(FiniteMixture{{1.0, 3.0}, {1.0, 2.0}});
  CHECK(mix.total_mass() == doctest::Approx(4.0));
  CHECK(mix.mu2() == doctest::Approx(13.0));
  CHECK(mix.mu4() == doctest::Approx(49.0));

  SpectralMeasure flat(TruncatedDensity{2.0, {1.0, 1.0, 1.0}});
  CHECK(flat.total_mass() == doctest::Approx(2.0));
  CHECK(flat.mu2() == doctest::Approx(8.0 / 3.0));
  CHECK(flat.mu4() == doctest::Approx(32.0 / 5.0));

  // Ramp density f(r) = r on [0, 1]: moments 1/2, 1/4, 1/6.
  SpectralMeasure ramp(TruncatedDensity{1.0, {0.0, 0.5, 1.0}});
  CHECK(ramp.total_mass() == doctest::Approx(0.5));
  CHECK(ramp.mu2() == doctest::Approx(0.25));
  CHECK(ramp.mu4() == doctest::Approx(1.0 / 6.0));

  CHECK_THROWS_AS(p.moment(3), std::invalid_argument);
  CHECK_THROWS_AS(SpectralMeasure(FiniteMixture{{1.0}, {1.0, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralMeasure(PointMass{1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("frequency sampling follows the normalized measure") {
  SpectralMeasure mix(FiniteMixture{{1.0, 3.0}, {1.0, 2.0}});
  Rng rng = make_stream(3);
  int twos = 0;
  const int count = 40000;
  for (int i = 0; i < count; ++i) twos += mix.sample_frequency(rng) == 2.0;
  CHECK(twos / double(count) == doctest::Approx(0.75).epsilon(0.02));

  SpectralMeasure flat(TruncatedDensity{2.0, {1.0, 1.0, 1.0}});
  CHECK(flat.quantile(0.25) == doctest::Approx(0.5));
  CHECK(flat.quantile(0.5) == doctest::Approx(1.0));
}

TEST_CASE("pairing sums") {
  CHECK(pairing_sum({}) == 1.0);
  CHECK(pairing_sum({0, 1}) == 0.0);
  CHECK(pairing_sum({0, 0, 0, 0}) == 3.0);
  CHECK(pairing_sum({0, 0, 1, 1}) == 1.0);
  CHECK(pairing_sum({0, 0, 0, 0, 0, 0}) == 15.0);
  CHECK(pairing_sum({0, 0, 0, 0, 1, 1}) == 3.0);
  CHECK_THROWS_AS(pairing_sum({0, 0, 1}), std::invalid_argument);
}

TEST_CASE("W covariance is trace-null and matches the sphere integral") {
  for (int n : {2, 3, 4}) {
    WCovariance w(n, 1.0);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double tr = 0.0;
        for (int i = 0; i < n; ++i) tr += w.rate(i, i, k, l);
        CHECK(std::abs(tr) < 1e-15);
      }
    CHECK(w.rate(0, 1, 0, 1) == doctest::Approx(double(n + 1) / (n * (n + 2))));
    CHECK(w.rate(0, 1, 1, 0) == doctest::Approx(-1.0 / (n * (n + 2))));
    CHECK(w.rate(0, 0, 0, 0) == doctest::Approx(double(n - 1) / (n * (n + 2))));
  }
  // Oracle: mu2 * avg t_j t_l (d_ik - t_i t_k).
  for (int n : {2, 3}) {
    WCovariance w(n, 1.7);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double want = 1.7 * sphere_average(n, [&](const Vec& t) {
                                  return t(j) * t(l) * ((i == k) - t(i) * t(k));
                                });
            CHECK(w.rate(i, j, k, l) == doctest::Approx(want).epsilon(1e-12));
          }
  }
}

TEST_CASE("W increments are exactly trace-free with the right covariance") {
  const int n = 3;
  WCovariance w(n, 1.0);
  Rng rng = make_stream(5);
  const int count = 100000;
  Mat acc = Mat::Zero(n * n, n * n);
  for (int s = 0; s < count; ++s) {
    const Mat d = w.sample_increment(0.01, rng);
    CHECK(std::abs(d.trace()) <= 1e-12);
    const Eigen::Map<const Vec> v(d.data(), n * n);
    acc.noalias() += v * v.transpose();
  }
  acc /= count * 0.01;
  // Column-major map: entry (i, j) sits at j * n + i.
  auto rate = [&](int i, int j, int k, int l) { return acc(j * n + i, l * n + k); };
  const double se = std::sqrt(2.0) * w.rate(0, 1, 0, 1) / std::sqrt(double(count));
  CHECK(rate(0, 1, 0, 1) == doctest::Approx(w.rate(0, 1, 0, 1)).epsilon(5 * se / w.rate(0, 1, 0, 1)));
  CHECK(std::abs(rate(0, 1, 1, 0) - w.rate(0, 1, 1, 0)) < 5 * se);
  CHECK(w.sample_increment(0.0, rng).isZero(0.0));
  CHECK_THROWS_AS(w.sample_increment(-1.0, rng), std::invalid_argument);
}

TEST_CASE("B covariance matches the sphere integral") {
  for (int n : {2, 3}) {
    BCovariance b(n, 2.5);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k)
          for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
              for (int r = q; r < n; ++r) {
                const double want = 2.5 * sphere_average(n, [&](const Vec& t) {
                                      return t(j) * t(k) * t(q) * t(r) * ((i == p) - t(i) * t(p));
                                    });
                CHECK(b.rate(i, j, k, p, q, r) == doctest::Approx(want).epsilon(1e-12));
              }
  }
}

TEST_CASE("B contraction rate closed form") {
  Rng rng = make_stream(9);
  for (int n : {2, 3, 4, 5}) {
    BCovariance b(n, 1.3);
    for (int rep = 0; rep < 5; ++rep) {
      Vec u(n), v(n);
      for (int i = 0; i < n; ++i) {
        u(i) = standard_normal(rng);
        v(i) = standard_normal(rng);
      }
      const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
      const double want =
          3.0 * 1.3 / (n * (n + 2.0) * (n + 4.0)) * ((n + 3.0) * uu * uu * vv - 4.0 * uv * uv * uu);
      CHECK(b.contraction_rate(u, v) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("B increments are symmetric in the last two slots") {
  BCovariance b(3, 1.0);
  Rng rng = make_stream(2);
  const Tensor3 t = b.sample_increment(0.1, rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) CHECK(t(i, j, k) == t(i, k, j));
}

TEST_CASE("psd factor reconstructs") {
  Mat a(3, 3);
  a << 4, 2, 0, 2, 3, 0, 0, 0, 0;  // singular on purpose
  const Mat l = psd_factor(a);
  CHECK((l * l.transpose() - a).norm() < 1e-12);
}

TEST_CASE("covariance function against Bessel closed form in the plane") {
  const auto f = SpectralMeasure::point(1.5, 1.0);
  const Vec zero = Vec::Zero(2);
  const CovarianceValue c0 = covariance_function(f, zero, 4096);
  CHECK((c0.value - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 3 * c0.error);

  Vec z(2);
  z << 0.8, 0.0;
  const double a = 1.5 * 0.8;
  const double j0 = boost::math::cyl_bessel_j(0, a), j1 = boost::math::cyl_bessel_j(1, a);
  const CovarianceValue c = covariance_function(f, z, 20000);
  CHECK(std::abs(c.value(0, 0) - j1 / a) <= 3 * c.error);
  CHECK(std::abs(c.value(1, 1) - (j0 - j1 / a)) <= 3 * c.error);
  CHECK(std::abs(c.value(0, 1)) <= 3 * c.error);
  CHECK(c.error < 5e-3);
  CHECK_THROWS_AS(covariance_function(f, z, 10), std::invalid_argument);
}

TEST_CASE("sphere points are unit vectors") {
  const Mat p = sphere_points(4, 256, 1);
  for (Eigen::Index i = 0; i < p.cols(); ++i) CHECK(p.col(i).norm() == doctest::Approx(1.0));
}
