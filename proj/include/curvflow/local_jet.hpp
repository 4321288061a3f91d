#pragma once

// Track A: second-order jet of the flow at a single material point.
//
// The tangent frame V (columns u_a) and the pushed second derivatives
// Z_ab = D^2Phi(u_a, u_b) + DPhi(h_ab nu_0) obey the Stratonovich system
//   dV = dW V,   dZ_ab = dW Z_ab + dB(V_a, V_b),
// and the shape form of the image surface in the pushed basis is
// h_ab = <Z_ab, nu>.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "curvflow/exterior_curvature.hpp"
#include "curvflow/spectral_noise.hpp"

namespace curvflow {

struct JetState {
  int n = 0;
  Mat V;   // n x (n-1)
  Mat Z;   // n x npairs, column pair_index(a, b) for a <= b
  Vec nu;  // unit normal, orientation carried continuously

  static int pair_count(int n) { return (n - 1) * n / 2; }
  /// Packed column of the unordered pair {a, b}.
  static int pair_index(int n, int a, int b);
};

struct UnitSpherePreset {
  int n = 3;
};
/// Ellipsoid sum (x_i / a_i)^2 = 1 in R^n with n = semi_axes.size(), jet
/// taken at the pole a_n e_n.
struct EllipsoidPreset {
  std::vector<double> semi_axes;
};
/// Principal curvatures at the point; ambient dimension is size + 1.
struct CurvatureDiagPreset {
  std::vector<double> kappas;
};
using JetPreset = std::variant<UnitSpherePreset, EllipsoidPreset, CurvatureDiagPreset>;

/// Orthonormal frame, inward normal -e_n, Z_ab = h_ab nu.
JetState init_jet(const JetPreset& preset);

/// One step's ambient noise, shared by predictor and corrector.
struct JetIncrement {
  Mat dW;      // n x n
  Tensor3 dB;  // n x n x n
};

JetIncrement sample_jet_increment(const WCovariance& w, const BCovariance& b, double dt,
                                  Rng& rng);

/// Stratonovich-Heun step with the given increments. Returns nullopt when
/// the frame Gram condition exceeds 1e12 (replica abort).
std::optional<JetState> heun_step(const JetState& state, const JetIncrement& inc);

/// Draws (dW, dB) once from the step stream and applies heun_step.
std::optional<JetState> heun_step(const JetState& state, double dt, const WCovariance& w,
                                  const BCovariance& b, Rng& rng);

/// Ito-Euler step. The Ito correction of this system vanishes, so this is a
/// consistent scheme for the same SDE; used as a cross-check.
std::optional<JetState> euler_step(const JetState& state, const JetIncrement& inc);

struct JetObservables {
  double alpha_norm = 0.0;
  Vec nu;
  Mat h;
  std::vector<double> traces;    // k = 0..n-1
  std::vector<double> products;  // traces[k] * alpha_norm
};

/// h_ab = <Z_ab, nu>; traces through trace_sk_eigen. Throws
/// DegenerateFrameError for ill-conditioned frames.
JetObservables observables(const JetState& state);

Frame frame_of(const JetState& state);
ShapeForm shape_of(const JetState& state);

/// Functional tracked by the growth estimator.
struct Functional {
  enum class Kind { AlphaNorm, AlphaNormSq, KFrameInner, TraceProduct };
  Kind kind = Kind::AlphaNorm;
  int k = 0;

  static Functional alpha_norm() { return {Kind::AlphaNorm, 0}; }
  static Functional alpha_norm_sq() { return {Kind::AlphaNormSq, 0}; }
  static Functional kframe_inner(int k) { return {Kind::KFrameInner, k}; }
  static Functional trace_product(int k) { return {Kind::TraceProduct, k}; }

  std::string name() const;
  /// Closed-form expected growth rate for dimension n.
  double predicted_rate(int n, double mu2) const;
  double evaluate(const JetState& state) const;
};

struct GrowthEstimate {
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int replicas = 0;
  double horizon = 0.0;
  int aborted = 0;
  bool valid = true;
  double achieved_std_error = 0.0;  // relative SE of the ensemble mean at the horizon

  bool contains(double value) const { return ci_low <= value && value <= ci_high; }
};

/// One row per grid time of the ensemble CSV.
struct SeriesPoint {
  double t;
  double mean;
  double std_error;
  int alive;
};

struct JetEnsembleOptions {
  int n = 3;
  double dt = 1e-3;
  double horizon = 1.0;
  int replicas = 10000;
  std::uint64_t seed = 1;
  int grid_points = 20;
  JetPreset preset = UnitSpherePreset{3};
  bool euler = false;         // Ito-Euler instead of Heun
  bool suppress_b = false;    // noise ablation: dB = 0
  bool allow_long_horizon = false;
  int batches = 20;
};

struct JetEnsembleResult {
  std::vector<double> times;  // grid times including t = 0
  // values[f] is replicas x times for functional f; rows of aborted replicas
  // are excluded.
  std::vector<Mat> values;
  int replicas = 0;
  int aborted = 0;
};

/// Runs the ensemble once and records every functional on the time grid.
JetEnsembleResult simulate_jet_ensemble(const JetEnsembleOptions& opt,
                                        const SpectralMeasure& spectral,
                                        const std::vector<Functional>& functionals);

/// Fits the growth rate of one recorded functional: weighted least squares
/// of log(ensemble mean) vs t over grid times t > 0; CI from batch means.
GrowthEstimate growth_from_ensemble(const JetEnsembleResult& ens, std::size_t which,
                                    double horizon, int batches);

std::vector<SeriesPoint> ensemble_series(const std::vector<double>& times, const Mat& values);

GrowthEstimate mc_growth(const Functional& functional, const JetEnsembleOptions& opt,
                         const SpectralMeasure& spectral);

}  // namespace curvflow
