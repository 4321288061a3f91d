#pragma once

// Finite random-Fourier-feature realization of the divergence-free Brownian
// velocity field:
//   U(x) = sigma * sum_m [a_m cos(rho_m <t_m, x>) + b_m sin(rho_m <t_m, x>)],
// sigma = sqrt(mu0 / M), with a_m, b_m Brownian motions in t_m-perp.
// Points are stored as columns of an n x P matrix.

#include <cstdint>
#include <vector>

#include "curvflow/random.hpp"
#include "curvflow/spectral_noise.hpp"

namespace curvflow {

/// One independent stream per feature. Feature m's draws do not depend on
/// the feature count, so a field with 2M features shares its first M
/// features (directions, frequencies and increments) with the M-feature
/// field of the same seed.
class FeatureStreams {
 public:
  FeatureStreams(std::uint64_t seed, std::uint64_t replica, int count);

  int size() const { return static_cast<int>(streams_.size()); }
  Rng& operator[](int m) { return streams_[m]; }

 private:
  std::vector<Rng> streams_;
};

class FourierField {
 public:
  FourierField() = default;

  int dim() const { return n_; }
  int features() const { return static_cast<int>(rho_.size()); }
  double sigma() const { return sigma_; }
  const Mat& directions() const { return dirs_; }      // n x M, unit columns
  const Vec& frequencies() const { return rho_; }      // M
  const Mat& wavevectors() const { return k_; }        // n x M, rho_m t_m
  /// Orthonormal basis of t_m-perp as columns (m(n-1) .. m(n-1)+n-2).
  const Mat& tangent_basis() const { return basis_; }  // n x M(n-1)
  /// Accumulated coefficients in ambient coordinates.
  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }
  /// Coefficient increments from the latest draw.
  const Mat& delta_a() const { return da_; }
  const Mat& delta_b() const { return db_; }

  /// Draws one set of coefficient increments (variance dt per tangential
  /// component) and adds it to the accumulators.
  void draw_increment(double dt, Rng& rng);
  void draw_increment(double dt, FeatureStreams& streams);

  /// sigma * sum_m [da_m cos + db_m sin] at each column of x, using the latest
  /// draw. `out` is n x P.
  void evaluate_increment(const Mat& x, Mat& out) const;
  Mat evaluate_increment(const Mat& x) const;

  /// Same with the accumulated coefficients: U_t(x).
  Mat evaluate_field(const Mat& x) const;

  /// Spatial Jacobian d(increment)^i / dx^j at one point.
  Mat increment_jacobian(const Vec& x) const;
  double increment_divergence(const Vec& x) const { return increment_jacobian(x).trace(); }

  friend FourierField sample_field(int n, int features, const SpectralMeasure& spectral,
                                   std::uint64_t seed);

 private:
  void evaluate(const Mat& a, const Mat& b, const Mat& x, Mat& out) const;
  void set_increment(int m, const double* xi, double scale);

  int n_ = 0;
  double sigma_ = 0.0;
  Mat dirs_, k_, basis_, a_, b_, da_, db_;
  Vec rho_;
  // Evaluation scratch, reused across calls.
  mutable Mat phase_, cos_, sin_;  // scratch: transposed k, a, b and per-point trig
};

/// Directions uniform on S^{n-1}, frequencies from F / mu0, coefficients
/// zero. Feature m is set up from its own stream, so prefixes agree across
/// feature counts. mu0 = 0 yields a zero-amplitude field.
FourierField sample_field(int n, int features, const SpectralMeasure& spectral,
                          std::uint64_t seed);

/// Draws one increment and returns Delta U at every column of `points`.
Mat field_increment(FourierField& field, const Mat& points, double dt, Rng& rng);

/// Stratonovich-Heun step for the points with one increment draw evaluated at
/// the current and predictor positions.
Mat advect_heun(FourierField& field, const Mat& points, double dt, Rng& rng);
Mat advect_heun(FourierField& field, const Mat& points, double dt, FeatureStreams& streams);

}  // namespace curvflow
