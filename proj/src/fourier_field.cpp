#include "curvflow/fourier_field.hpp"

#include <cmath>
#include <stdexcept>

#include "curvflow/detail/fast_trig.hpp"

namespace curvflow {

namespace {
constexpr std::uint64_t kSetupTag = 0xf1e1d5e7;
constexpr std::uint64_t kStepTag = 0xf1e1d57e;
}  // namespace

FeatureStreams::FeatureStreams(std::uint64_t seed, std::uint64_t replica, int count) {
  if (count < 1) throw std::invalid_argument("FeatureStreams: count must be >= 1");
  streams_.reserve(count);
  for (int m = 0; m < count; ++m) streams_.push_back(make_stream(seed, replica, m, kStepTag));
}

FourierField sample_field(int n, int features, const SpectralMeasure& spectral,
                          std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_field: n must be >= 2");
  if (features < 1) throw std::invalid_argument("sample_field: need at least one feature");
  FourierField f;
  f.n_ = n;
  const double mu0 = spectral.total_mass();
  f.sigma_ = std::sqrt(mu0 / features);
  f.dirs_.resize(n, features);
  f.k_.resize(n, features);
  f.rho_.resize(features);
  f.basis_.resize(n, static_cast<Eigen::Index>(features) * (n - 1));
  for (int m = 0; m < features; ++m) {
    Rng rng = make_stream(seed, m, 0, kSetupTag);
    Vec t(n);
    do {
      for (int i = 0; i < n; ++i) t(i) = standard_normal(rng);
    } while (t.norm() < 1e-12);
    t.normalize();
    f.dirs_.col(m) = t;
    f.rho_(m) = mu0 > 0.0 ? spectral.sample_frequency(rng) : 0.0;
    f.k_.col(m) = f.rho_(m) * t;
    // Columns 1..n-1 of the full Q of t are an orthonormal basis of t-perp.
    Eigen::HouseholderQR<Mat> qr{Mat(t)};
    const Mat q = qr.householderQ();
    f.basis_.middleCols(static_cast<Eigen::Index>(m) * (n - 1), n - 1) = q.rightCols(n - 1);
  }
  f.a_ = Mat::Zero(n, features);
  f.b_ = Mat::Zero(n, features);
  f.da_ = Mat::Zero(n, features);
  f.db_ = Mat::Zero(n, features);
  return f;
}

void FourierField::set_increment(int m, const double* xi, double scale) {
  const int r = n_ - 1;
  const auto e = basis_.middleCols(static_cast<Eigen::Index>(m) * r, r);
  da_.col(m) = scale * (e * Eigen::Map<const Vec>(xi, r));
  db_.col(m) = scale * (e * Eigen::Map<const Vec>(xi + r, r));
}

void FourierField::draw_increment(double dt, Rng& rng) {
  if (dt < 0.0) throw std::invalid_argument("field increment: dt must be >= 0");
  const double s = std::sqrt(dt);
  std::vector<double> xi(2 * (n_ - 1));
  for (int m = 0; m < features(); ++m) {
    fill_normal(rng, xi.data(), xi.size());
    set_increment(m, xi.data(), s);
  }
  a_ += da_;
  b_ += db_;
}

void FourierField::draw_increment(double dt, FeatureStreams& streams) {
  if (dt < 0.0) throw std::invalid_argument("field increment: dt must be >= 0");
  if (streams.size() < features())
    throw std::invalid_argument("field increment: fewer streams than features");
  const double s = std::sqrt(dt);
  std::vector<double> xi(2 * (n_ - 1));
  for (int m = 0; m < features(); ++m) {
    fill_normal(streams[m], xi.data(), xi.size());
    set_increment(m, xi.data(), s);
  }
  a_ += da_;
  b_ += db_;
}

void FourierField::evaluate(const Mat& a, const Mat& b, const Mat& x, Mat& out) const {
  if (x.rows() != n_) throw std::invalid_argument("field evaluation: point dimension mismatch");
  const Eigen::Index mcount = features(), p = x.cols();
  out.resize(n_, p);
  // Feature-major copies so every inner loop runs over contiguous features.
  phase_.resize(mcount, 3 * n_);
  phase_.leftCols(n_) = k_.transpose();
  phase_.middleCols(n_, n_) = a.transpose();
  phase_.rightCols(n_) = b.transpose();
  cos_.resize(mcount, 1);
  sin_.resize(mcount, 1);
  Vec ph(mcount);
  double* c = cos_.data();
  double* s = sin_.data();
  for (Eigen::Index j = 0; j < p; ++j) {
    ph.noalias() = phase_.leftCols(n_) * x.col(j);
    if (ph.cwiseAbs().maxCoeff() < detail::kFastTrigLimit) {
      for (Eigen::Index i = 0; i < mcount; ++i) detail::sincos_kernel(ph[i], s[i], c[i]);
    } else {
      for (Eigen::Index i = 0; i < mcount; ++i) {
        s[i] = std::sin(ph[i]);
        c[i] = std::cos(ph[i]);
      }
    }
    for (int d = 0; d < n_; ++d)
      out(d, j) = sigma_ * (phase_.col(n_ + d).dot(cos_.col(0)) + phase_.col(2 * n_ + d).dot(sin_.col(0)));
  }
}

void FourierField::evaluate_increment(const Mat& x, Mat& out) const { evaluate(da_, db_, x, out); }

Mat FourierField::evaluate_increment(const Mat& x) const {
  Mat out;
  evaluate(da_, db_, x, out);
  return out;
}

Mat FourierField::evaluate_field(const Mat& x) const {
  Mat out;
  evaluate(a_, b_, x, out);
  return out;
}

Mat FourierField::increment_jacobian(const Vec& x) const {
  if (x.size() != n_) throw std::invalid_argument("field jacobian: point dimension mismatch");
  Mat j = Mat::Zero(n_, n_);
  for (int m = 0; m < features(); ++m) {
    const double ph = k_.col(m).dot(x);
    const double c = std::cos(ph), s = std::sin(ph);
    // d/dx_j [a cos(<k,x>) + b sin(<k,x>)] = (-a sin + b cos) k_j
    j.noalias() += (-s * da_.col(m) + c * db_.col(m)) * k_.col(m).transpose();
  }
  return sigma_ * j;
}

Mat field_increment(FourierField& field, const Mat& points, double dt, Rng& rng) {
  field.draw_increment(dt, rng);
  return field.evaluate_increment(points);
}

namespace {

Mat heun_points(const FourierField& field, const Mat& points) {
  Mat u0, u1;
  field.evaluate_increment(points, u0);
  const Mat predictor = points + u0;
  field.evaluate_increment(predictor, u1);
  return points + 0.5 * (u0 + u1);
}

}  // namespace

Mat advect_heun(FourierField& field, const Mat& points, double dt, Rng& rng) {
  field.draw_increment(dt, rng);
  return heun_points(field, points);
}

Mat advect_heun(FourierField& field, const Mat& points, double dt, FeatureStreams& streams) {
  field.draw_increment(dt, streams);
  return heun_points(field, points);
}

}  // namespace curvflow
