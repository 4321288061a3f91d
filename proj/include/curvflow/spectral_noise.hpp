#pragma once

// Spectral measure of the isotropic divergence-free driving field, the
// constant covariance rates of its first (W) and second (B) spatial
// derivatives at a point, and samplers for their increments.
//
// Index conventions are 0-based. W(i, j) = dU^i/dx^j and B(i, j, k) =
// d^2U^i/dx^j dx^k.

#include <utility>
#include <variant>
#include <vector>

#include "curvflow/random.hpp"
#include "curvflow/types.hpp"

namespace curvflow {

struct PointMass {
  double rho = 1.0;
  double mass = 1.0;
};

struct FiniteMixture {
  std::vector<double> weights;
  std::vector<double> rhos;
};

/// Piecewise-linear density tabulated on a uniform grid over [0, rho_max].
/// Moments of the interpolant are integrated in closed form, so they are
/// exact for the tabulated shape.
struct TruncatedDensity {
  double rho_max = 1.0;
  std::vector<double> density;
};

/// Unnormalized nonnegative measure F on radial frequencies. mu_m is the
/// m-th moment; total mass mu_0 need not be 1.
class SpectralMeasure {
 public:
  using Variant = std::variant<PointMass, FiniteMixture, TruncatedDensity>;

  explicit SpectralMeasure(Variant v);

  static SpectralMeasure point(double rho, double mass = 1.0) {
    return SpectralMeasure(PointMass{rho, mass});
  }

  const Variant& variant() const { return v_; }

  /// m in {0, 2, 4}; anything else throws std::invalid_argument.
  double moment(int m) const;
  double total_mass() const { return mu_[0]; }
  double mu2() const { return mu_[1]; }
  double mu4() const { return mu_[2]; }

  /// Draw a radial frequency from F / mu_0. Requires mu_0 > 0.
  double sample_frequency(Rng& rng) const;

  /// Inverse CDF of F / mu_0 at u in [0, 1).
  double quantile(double u) const;

  /// Atoms (weight, rho) when F is discrete; empty for densities.
  std::vector<std::pair<double, double>> atoms() const;

 private:
  Variant v_;
  double mu_[3] = {0.0, 0.0, 0.0};
  std::vector<double> cdf_;  // cumulative mass per atom / grid segment
};

/// Rate of <dW^i_j, dW^k_l>:
///   mu2 / (n(n+2)) * [(n+1) d_ik d_jl - d_ij d_kl - d_il d_kj].
/// Flattening of (i, j) is i * n + j.
class WCovariance {
 public:
  WCovariance(int n, double mu2);

  int dim() const { return n_; }
  double mu2() const { return mu2_; }
  double rate(int i, int j, int k, int l) const;
  const Mat& rate_matrix() const { return rate_; }
  /// L with L L^T = rate (up to the 1e-14 ridge).
  const Mat& factor() const { return chol_; }

  /// Gaussian increment with covariance dt * rate, projected to exact zero
  /// trace. dt = 0 gives the zero matrix.
  Mat sample_increment(double dt, Rng& rng) const;
  /// Same, writing into a preallocated n x n matrix; `scratch` holds n^2
  /// normals.
  void sample_increment(double dt, Rng& rng, Mat& out, Vec& scratch) const;

 private:
  int n_;
  double mu2_;
  Mat rate_;
  Mat chol_;
};

/// Dense n x n x n tensor, symmetric in the last two slots.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n, 0.0) {}

  int dim() const { return n_; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  /// Writes both (i, j, k) and (i, k, j).
  void set_symmetric(int i, int j, int k, double v) {
    data_[index(i, j, k)] = v;
    data_[index(i, k, j)] = v;
  }
  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  /// Row i as an n x n matrix view.
  Eigen::Map<const Mat> slice(int i) const {
    return Eigen::Map<const Mat>(data_.data() + static_cast<std::size_t>(i) * n_ * n_, n_, n_);
  }

  /// result_i = sum_jk T(i, j, k) u_j v_k
  Vec contract(const Vec& u, const Vec& v) const;

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// Reduced index (i; j <= k) of a B entry.
struct BIndex {
  int i, j, k;
};

/// Rate of <dB^i_jk, dB^p_qr>:
///   mu4 * [d_ip P4(j,k,q,r) / (n(n+2)) - P6(i,p,j,k,q,r) / (n(n+2)(n+4))]
/// where P4 and P6 are the sums over perfect pairings of Kronecker deltas.
/// This is mu4 * int t_j t_k t_q t_r (d_ip - t_i t_p) sigma(dt) over the
/// unit sphere.
class BCovariance {
 public:
  BCovariance(int n, double mu4);

  int dim() const { return n_; }
  double mu4() const { return mu4_; }
  double rate(int i, int j, int k, int p, int q, int r) const;
  const std::vector<BIndex>& reduced_indices() const { return idx_; }
  const Mat& rate_matrix() const { return rate_; }
  const Mat& factor() const { return chol_; }

  /// Contracted rate of <dB(u,u), v>.
  double contraction_rate(const Vec& u, const Vec& v) const;

  Tensor3 sample_increment(double dt, Rng& rng) const;
  void sample_increment(double dt, Rng& rng, Tensor3& out, Vec& scratch) const;

 private:
  int n_;
  double mu4_;
  std::vector<BIndex> idx_;
  Mat rate_;
  Mat chol_;
};

/// Sum over perfect pairings of the given indices of products of Kronecker
/// deltas (Isserlis counting). Size must be even.
double pairing_sum(const std::vector<int>& indices);

/// Factor a PSD matrix with a ridge of 1e-14 * trace. Throws std::logic_error
/// when the reconstruction misses by more than 1e-12 relative.
Mat psd_factor(const Mat& a);

struct CovarianceValue {
  Mat value;
  double error = 0.0;  // per-entry standard error estimate
};

/// Quasi-Monte Carlo evaluation of
///   C(z) = int int cos(rho <z, t>) (I - t t^T) sigma(dt) F(drho)
/// over a fixed-seed randomized Sobol point set on the sphere.
CovarianceValue covariance_function(const SpectralMeasure& f, const Vec& z,
                                    std::size_t quadrature_nodes,
                                    std::uint64_t seed = 0x5eed);

/// Quasi-random points on S^{n-1}: shifted Sobol points mapped through the
/// normal quantile and normalized. Columns are points.
Mat sphere_points(int n, std::size_t count, std::uint64_t seed);

}  // namespace curvflow
