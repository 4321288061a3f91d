#include "curvflow/spectral_noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

namespace curvflow {

namespace {

double delta(int a, int b) { return a == b ? 1.0 : 0.0; }

void check_nonneg(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("spectral measure: ") + what +
                                " must be finite and nonnegative");
}

// int_a^b rho^m (c0 + c1 rho) drho
double linear_moment(double a, double b, double c0, double c1, int m) {
  auto prim = [&](double x) {
    return c0 * std::pow(x, m + 1) / (m + 1) + c1 * std::pow(x, m + 2) / (m + 2);
  };
  return prim(b) - prim(a);
}

}  // namespace

SpectralMeasure::SpectralMeasure(Variant v) : v_(std::move(v)) {
  std::visit(
      [this](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          check_nonneg(f.rho, "rho");
          check_nonneg(f.mass, "mass");
          for (int q = 0; q < 3; ++q) mu_[q] = f.mass * std::pow(f.rho, 2 * q);
          cdf_ = {f.mass};
        } else if constexpr (std::is_same_v<T, FiniteMixture>) {
          if (f.weights.size() != f.rhos.size() || f.weights.empty())
            throw std::invalid_argument("mixture: weights and rhos must be non-empty and equal length");
          double acc = 0.0;
          for (std::size_t a = 0; a < f.weights.size(); ++a) {
            check_nonneg(f.weights[a], "weight");
            check_nonneg(f.rhos[a], "rho");
            for (int q = 0; q < 3; ++q) mu_[q] += f.weights[a] * std::pow(f.rhos[a], 2 * q);
            acc += f.weights[a];
            cdf_.push_back(acc);
          }
        } else {
          if (f.density.size() < 2)
            throw std::invalid_argument("truncated density: need at least two grid values");
          check_nonneg(f.rho_max, "rho_max");
          const std::size_t segs = f.density.size() - 1;
          const double h = f.rho_max / static_cast<double>(segs);
          double acc = 0.0;
          for (std::size_t s = 0; s < segs; ++s) {
            check_nonneg(f.density[s], "density");
            check_nonneg(f.density[s + 1], "density");
            const double a = h * s, b = h * (s + 1);
            const double c1 = (f.density[s + 1] - f.density[s]) / h;
            const double c0 = f.density[s] - c1 * a;
            for (int q = 0; q < 3; ++q) mu_[q] += linear_moment(a, b, c0, c1, 2 * q);
            acc += 0.5 * h * (f.density[s] + f.density[s + 1]);
            cdf_.push_back(acc);
          }
        }
      },
      v_);
}

double SpectralMeasure::moment(int m) const {
  switch (m) {
    case 0: return mu_[0];
    case 2: return mu_[1];
    case 4: return mu_[2];
    default:
      throw std::invalid_argument("moment: only m in {0, 2, 4} is supported, got " +
                                  std::to_string(m));
  }
}

std::vector<std::pair<double, double>> SpectralMeasure::atoms() const {
  std::vector<std::pair<double, double>> out;
  if (const auto* p = std::get_if<PointMass>(&v_)) {
    out.emplace_back(p->mass, p->rho);
  } else if (const auto* m = std::get_if<FiniteMixture>(&v_)) {
    for (std::size_t a = 0; a < m->weights.size(); ++a) out.emplace_back(m->weights[a], m->rhos[a]);
  }
  return out;
}

double SpectralMeasure::quantile(double u) const {
  if (!(mu_[0] > 0.0)) throw std::invalid_argument("spectral measure has zero total mass");
  const double target = u * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  const std::size_t s = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->rho;
  if (const auto* m = std::get_if<FiniteMixture>(&v_)) return m->rhos[s];
  const auto& d = std::get<TruncatedDensity>(v_);
  const double h = d.rho_max / static_cast<double>(d.density.size() - 1);
  const double before = s == 0 ? 0.0 : cdf_[s - 1];
  const double need = target - before;
  // mass of [a, a + x] in the segment: f0 x + (f1 - f0) x^2 / (2h)
  const double f0 = d.density[s], f1 = d.density[s + 1];
  const double qa = (f1 - f0) / (2.0 * h);
  double x;
  if (std::abs(qa) < 1e-300) {
    x = f0 > 0.0 ? need / f0 : 0.0;
  } else {
    const double disc = std::max(0.0, f0 * f0 + 4.0 * qa * need);
    x = (-f0 + std::sqrt(disc)) / (2.0 * qa);
  }
  return h * s + std::clamp(x, 0.0, h);
}

double SpectralMeasure::sample_frequency(Rng& rng) const { return quantile(uniform01(rng)); }

// ---------------------------------------------------------------------------

Mat psd_factor(const Mat& a) {
  const double ridge = 1e-14 * a.trace();
  Mat shifted = a;
  shifted.diagonal().array() += ridge;
  Eigen::LDLT<Mat> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw std::logic_error("psd_factor: LDLT failed");
  Vec d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Mat l = ldlt.matrixL();
  Mat f = ldlt.transpositionsP().transpose() * (l * d.asDiagonal());
  const double err = (f * f.transpose() - a).norm();
  if (err > 1e-12 * std::max(a.norm(), 1e-300))
    throw std::logic_error("psd_factor: reconstruction error " + std::to_string(err) +
                           " exceeds tolerance; covariance is not PSD");
  return f;
}

WCovariance::WCovariance(int n, double mu2) : n_(n), mu2_(mu2) {
  if (n < 2) throw std::invalid_argument("w_covariance: n must be >= 2");
  if (!(mu2 > 0.0)) throw std::invalid_argument("w_covariance: mu2 must be positive");
  const int nn = n * n;
  rate_.resize(nn, nn);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) rate_(i * n + j, k * n + l) = rate(i, j, k, l);
  chol_ = psd_factor(rate_);
}

double WCovariance::rate(int i, int j, int k, int l) const {
  const double n = n_;
  return mu2_ / (n * (n + 2.0)) *
         ((n + 1.0) * delta(i, k) * delta(j, l) - delta(i, j) * delta(k, l) -
          delta(i, l) * delta(k, j));
}

Mat WCovariance::sample_increment(double dt, Rng& rng) const {
  Mat out(n_, n_);
  Vec scratch(n_ * n_);
  sample_increment(dt, rng, out, scratch);
  return out;
}

void WCovariance::sample_increment(double dt, Rng& rng, Mat& out, Vec& scratch) const {
  if (dt < 0.0) throw std::invalid_argument("sample_w_increment: dt must be >= 0");
  const int nn = n_ * n_;
  scratch.resize(nn);
  fill_normal(rng, scratch.data(), nn);
  Vec flat = std::sqrt(dt) * (chol_ * scratch);
  out.resize(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out(i, j) = flat(i * n_ + j);
  const double tr = out.trace() / n_;
  out.diagonal().array() -= tr;
}

// ---------------------------------------------------------------------------

double pairing_sum(const std::vector<int>& idx) {
  if (idx.size() % 2 != 0) throw std::invalid_argument("pairing_sum: odd index count");
  if (idx.empty()) return 1.0;
  double s = 0.0;
  for (std::size_t m = 1; m < idx.size(); ++m) {
    if (idx[0] != idx[m]) continue;
    std::vector<int> rest;
    rest.reserve(idx.size() - 2);
    for (std::size_t q = 1; q < idx.size(); ++q)
      if (q != m) rest.push_back(idx[q]);
    s += pairing_sum(rest);
  }
  return s;
}

Vec Tensor3::contract(const Vec& u, const Vec& v) const {
  Vec out(n_);
  for (int i = 0; i < n_; ++i) out(i) = u.dot(slice(i) * v);
  return out;
}

BCovariance::BCovariance(int n, double mu4) : n_(n), mu4_(mu4) {
  if (n < 2) throw std::invalid_argument("b_covariance: n must be >= 2");
  if (!(mu4 > 0.0)) throw std::invalid_argument("b_covariance: mu4 must be positive");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) idx_.push_back({i, j, k});
  const int m = static_cast<int>(idx_.size());
  rate_.resize(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b <= a; ++b) {
      const auto& x = idx_[a];
      const auto& y = idx_[b];
      rate_(a, b) = rate_(b, a) = rate(x.i, x.j, x.k, y.i, y.j, y.k);
    }
  chol_ = psd_factor(rate_);
}

double BCovariance::rate(int i, int j, int k, int p, int q, int r) const {
  const double n = n_;
  const double p4 = pairing_sum({j, k, q, r});
  const double p6 = pairing_sum({i, p, j, k, q, r});
  return mu4_ * (delta(i, p) * p4 / (n * (n + 2.0)) - p6 / (n * (n + 2.0) * (n + 4.0)));
}

double BCovariance::contraction_rate(const Vec& u, const Vec& v) const {
  // <dB(u,u), v> = sum_ijk B_ijk v_i u_j u_k; rate is the quadratic form of
  // the coefficient vector over the full index set.
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) {
        const double cx = v(i) * u(j) * u(k);
        if (cx == 0.0) continue;
        for (int p = 0; p < n_; ++p)
          for (int q = 0; q < n_; ++q)
            for (int r = 0; r < n_; ++r) {
              const double cy = v(p) * u(q) * u(r);
              if (cy != 0.0) s += cx * cy * rate(i, j, k, p, q, r);
            }
      }
  return s;
}

Tensor3 BCovariance::sample_increment(double dt, Rng& rng) const {
  Tensor3 out(n_);
  Vec scratch;
  sample_increment(dt, rng, out, scratch);
  return out;
}

void BCovariance::sample_increment(double dt, Rng& rng, Tensor3& out, Vec& scratch) const {
  if (dt < 0.0) throw std::invalid_argument("sample_b_increment: dt must be >= 0");
  const int m = static_cast<int>(idx_.size());
  scratch.resize(m);
  fill_normal(rng, scratch.data(), m);
  const Vec flat = std::sqrt(dt) * (chol_ * scratch);
  if (out.dim() != n_) out = Tensor3(n_);
  for (int a = 0; a < m; ++a) out.set_symmetric(idx_[a].i, idx_[a].j, idx_[a].k, flat(a));
}

// ---------------------------------------------------------------------------

namespace {

// Sobol points in [0,1)^dims with a fixed-seed Cranley-Patterson shift.
// Column c is point c.
Mat shifted_sobol(int dims, std::size_t count, std::uint64_t seed) {
  boost::random::sobol engine(static_cast<std::size_t>(dims));
  Rng rng = make_stream(seed, static_cast<std::uint64_t>(dims), count, 0x50b01);
  std::vector<double> shift(dims);
  for (auto& s : shift) s = uniform01(rng);
  const double scale = std::ldexp(1.0, -64);
  Mat u(dims, static_cast<Eigen::Index>(count));
  for (std::size_t c = 0; c < count; ++c)
    for (int d = 0; d < dims; ++d) {
      double x = static_cast<double>(engine()) * scale + shift[d];
      x -= std::floor(x);
      u(d, static_cast<Eigen::Index>(c)) = x;
    }
  return u;
}

double normal_quantile(double u) {
  u = std::clamp(u, 1e-16, 1.0 - 1e-16);
  return std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
}

Mat to_sphere(const Mat& u, int n) {
  Mat pts(n, u.cols());
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    for (int d = 0; d < n; ++d) pts(d, c) = normal_quantile(u(d, c));
    pts.col(c).normalize();
  }
  return pts;
}

}  // namespace

Mat sphere_points(int n, std::size_t count, std::uint64_t seed) {
  return to_sphere(shifted_sobol(n, count, seed), n);
}

CovarianceValue covariance_function(const SpectralMeasure& f, const Vec& z,
                                    std::size_t quadrature_nodes, std::uint64_t seed) {
  if (quadrature_nodes < 1000)
    throw std::invalid_argument("covariance_function: need at least 1000 quadrature nodes");
  const int n = static_cast<int>(z.size());
  const auto atoms = f.atoms();
  const bool discrete = !atoms.empty();
  const Mat u = shifted_sobol(discrete ? n : n + 1, quadrature_nodes, seed);
  const Mat t = to_sphere(u.topRows(n), n);
  const Mat eye = Mat::Identity(n, n);

  Mat sum = Mat::Zero(n, n), sum_sq = Mat::Zero(n, n);
  for (Eigen::Index c = 0; c < t.cols(); ++c) {
    const Vec tc = t.col(c);
    const double tz = tc.dot(z);
    double w = 0.0;
    if (discrete) {
      for (const auto& [mass, rho] : atoms) w += mass * std::cos(rho * tz);
    } else {
      w = f.total_mass() * std::cos(f.quantile(u(n, c)) * tz);
    }
    const Mat sample = w * (eye - tc * tc.transpose());
    sum += sample;
    sum_sq += sample.cwiseProduct(sample);
  }
  const double count = static_cast<double>(t.cols());
  CovarianceValue out;
  out.value = sum / count;
  const Mat var = (sum_sq / count - out.value.cwiseProduct(out.value)).cwiseMax(0.0);
  out.error = std::sqrt(var.maxCoeff() / count);
  return out;
}

}  // namespace curvflow
