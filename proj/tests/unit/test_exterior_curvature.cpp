#include <cmath>

#include <doctest.h>

#include "curvflow/exterior_curvature.hpp"
#include "curvflow/random.hpp"

using namespace curvflow;

namespace {

Mat random_matrix(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = standard_normal(rng);
  return m;
}

Mat random_symmetric(int m, Rng& rng) {
  const Mat a = random_matrix(m, m, rng);
  return 0.5 * (a + a.transpose());
}

// Unit normal of span(V) via the full QR.
Vec normal_of(const Mat& v) {
  Eigen::HouseholderQR<Mat> qr{v};
  const Mat q = qr.householderQ();
  return q.col(v.rows() - 1);
}

}  // namespace

TEST_CASE("multi-indices and complements") {
  const auto idx = multi_indices(4, 2);
  REQUIRE(idx.size() == 6);
  CHECK(idx.front() == MultiIndex{0, 1});
  CHECK(idx[1] == MultiIndex{0, 2});
  CHECK(idx.back() == MultiIndex{2, 3});
  CHECK(multi_indices(3, 0).size() == 1);
  CHECK(complement({1, 3}, 5) == MultiIndex{0, 2, 4});
}

TEST_CASE("k-vector inner product is the Gram determinant") {
  Mat e = Mat::Identity(3, 2);
  CHECK(kvector_inner(e, e) == doctest::Approx(1.0));
  Mat swapped = e;
  swapped.col(0).swap(swapped.col(1));
  CHECK(kvector_inner(e, swapped) == doctest::Approx(-1.0));
  CHECK(kvector_inner(Mat(3, 0), Mat(3, 0)) == 1.0);

  Mat u(3, 2);
  u << 1, 1, 0, 2, 0, 0;
  // |u0 x u1|^2 = |(0, 0, 2)|^2
  CHECK(kvector_inner(u, u) == doctest::Approx(4.0));
  CHECK(alpha_norm(Frame{u}) == doctest::Approx(2.0));
}

TEST_CASE("alpha norm of a diagonal stretch") {
  Mat v = Mat::Zero(4, 3);
  v(0, 0) = 2.0;
  v(1, 1) = 3.0;
  v(2, 2) = 0.5;
  CHECK(alpha_norm(Frame{v}) == doctest::Approx(3.0));
  CHECK(gram_condition(Frame{v}) == doctest::Approx(36.0));
}

TEST_CASE("traces of an orthonormal frame are elementary symmetric polynomials") {
  Mat h = Mat::Zero(3, 3);
  h.diagonal() << 1.0, 2.0, 3.0;
  const Frame f{Mat::Identity(4, 3)};
  const ShapeForm s(h);
  CHECK(trace_sk_eigen(f, s, 0) == 1.0);
  CHECK(trace_sk_eigen(f, s, 1) == doctest::Approx(6.0));
  CHECK(trace_sk_eigen(f, s, 2) == doctest::Approx(11.0));
  CHECK(trace_sk_eigen(f, s, 3) == doctest::Approx(6.0));
  CHECK(trace_sk_minorsum(f, s, 2) == doctest::Approx(11.0));
  const auto all = trace_sk_all(f, s);
  CHECK(all[3] == doctest::Approx(6.0));
  Vec x(3);
  x << 1.0, 2.0, 3.0;
  const auto e = elementary_symmetric(x, 3);
  CHECK(e[0] == 1.0);
  CHECK(e[2] == doctest::Approx(11.0));
}

TEST_CASE("unit sphere and a cylinder") {
  // Unit sphere in R^3 with the inward normal: both principal curvatures 1.
  const Frame f{Mat::Identity(3, 2)};
  CHECK(trace_sk_eigen(f, ShapeForm(Mat::Identity(2, 2)), 2) == doctest::Approx(1.0));
  Mat cyl = Mat::Zero(2, 2);
  cyl(0, 0) = 1.0;
  CHECK(trace_sk_eigen(f, ShapeForm(cyl), 1) == doctest::Approx(1.0));
  CHECK(trace_sk_eigen(f, ShapeForm(cyl), 2) == doctest::Approx(0.0));
}

TEST_CASE("traces do not depend on the tangent basis") {
  Rng rng = make_stream(17);
  for (int n : {3, 4, 5}) {
    const Mat v = random_matrix(n, n - 1, rng);
    const Mat h = random_symmetric(n - 1, rng);
    const Mat a = random_matrix(n - 1, n - 1, rng);
    const Mat ha = a.transpose() * h * a;
    for (int k = 1; k < n; ++k)
      CHECK(trace_sk_eigen(Frame{v * a}, ShapeForm(0.5 * (ha + ha.transpose())), k) ==
            doctest::Approx(trace_sk_eigen(Frame{v}, ShapeForm(h), k)).epsilon(1e-8));
  }
}

TEST_CASE("minor sum agrees with the eigen route") {
  Rng rng = make_stream(23);
  for (int n : {3, 4, 5}) {
    for (int rep = 0; rep < 100; ++rep) {
      const Frame f{random_matrix(n, n - 1, rng)};
      const ShapeForm s(random_symmetric(n - 1, rng));
      for (int k = 1; k < n; ++k) {
        const double a = trace_sk_eigen(f, s, k), b = trace_sk_minorsum(f, s, k);
        CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
      }
    }
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(ShapeForm(Mat::Zero(2, 3)), std::invalid_argument);
  Mat asym = Mat::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(ShapeForm{asym}, std::invalid_argument);
  const Frame f{Mat::Identity(3, 2)};
  CHECK_THROWS_AS(trace_sk_eigen(f, ShapeForm(Mat::Identity(3, 3)), 1), std::invalid_argument);
  CHECK_THROWS_AS(trace_sk_minorsum(Frame{Mat::Identity(7, 6)}, ShapeForm(Mat::Identity(6, 6)), 1),
                  std::invalid_argument);
  Mat flat = Mat::Zero(3, 2);
  flat(0, 0) = 1.0;
  flat(0, 1) = 1.0;
  CHECK_THROWS_AS(trace_sk_eigen(Frame{flat}, ShapeForm(Mat::Identity(2, 2)), 1), DegenerateFrameError);
  CHECK_THROWS_AS(tau_apply(5, 0, Mat::Identity(3, 2)), std::invalid_argument);
}

TEST_CASE("tau is the derivative of a k-vector under a rank-one shear") {
  Rng rng = make_stream(31);
  const int n = 4, k = 2;
  const Mat xi = random_matrix(n, k, rng);
  const Mat zeta = random_matrix(n, k, rng);
  const double eps = 1e-6;
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      Mat plus = Mat::Identity(n, n), minus = plus;
      plus(j, l) += eps;
      minus(j, l) -= eps;
      const double fd = (kvector_inner(plus * xi, zeta) - kvector_inner(minus * xi, zeta)) / (2 * eps);
      CHECK(kvector_inner(tau_apply(j, l, xi), zeta) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("trace SDE loadings are first-order responses") {
  Rng rng = make_stream(41);
  for (int n : {3, 4, 5}) {
    const Mat v = random_matrix(n, n - 1, rng);
    const Vec nu = normal_of(v);
    const Mat h = random_symmetric(n - 1, rng);
    const Frame f{v};
    for (int k = 1; k < n; ++k) {
      const TraceSdeTerms t = trace_sde_terms(f, ShapeForm(h), nu, k, 1.0);
      CHECK(t.trace == doctest::Approx(trace_sk_eigen(f, ShapeForm(h), k)));
      CHECK(t.drift_rate == doctest::Approx((n + 1.0) * k * (n - k) / (2.0 * n * (n + 2.0))));

      // dB moves h by a symmetric perturbation beta.
      const Mat beta = random_symmetric(n - 1, rng);
      const double eps = 1e-6;
      const double fd_b = (trace_sk_eigen(f, ShapeForm(Mat(h + eps * beta)), k) -
                           trace_sk_eigen(f, ShapeForm(Mat(h - eps * beta)), k)) /
                          (2 * eps);
      CHECK(fd_b == doctest::Approx(t.b_coeff.cwiseProduct(beta).sum()).epsilon(1e-6));

      // dW moves the frame to (I + W) V and scales h by 1 + <nu, W nu>; the
      // tangential parts of the second derivatives cancel at first order.
      const Mat w = random_matrix(n, n, rng);
      auto moved = [&](double e) {
        const Mat hv = h * (1.0 + e * nu.dot(w * nu));
        return trace_sk_eigen(Frame{(Mat::Identity(n, n) + e * w) * v}, ShapeForm(hv), k);
      };
      const double fd_w = (moved(eps) - moved(-eps)) / (2 * eps);
      const double lin = (t.w_diag + t.w_tau).cwiseProduct(w).sum();
      CHECK(fd_w == doctest::Approx(lin).epsilon(1e-6));
    }
  }
}
