#pragma once

// Tube volumes around meshes and curves, for checking the normalization of
// the Lipschitz-Killing curvatures against
//   vol(Tube(M, rho)) = sum_j rho^{n-j} omega_{n-j} L_j(M).

#include <cstdint>
#include <vector>

#include "curvflow/mesh.hpp"

namespace curvflow {

struct VolumeEstimate {
  double volume = 0.0;
  double std_error = 0.0;
};

/// Reach estimate from vertex pairs: min over p, q of
/// |q - p|^2 / (2 |normal part of q - p at p|). Each vertex is paired with
/// its mesh neighbours and `random_pairs` random vertices.
double estimate_reach(const Geometry& g, int random_pairs = 64, std::uint64_t seed = 11);

/// Plain rejection sampling in the bounding box of the rho-inflated geometry.
/// Throws std::invalid_argument when rho > 0.5 * estimate_reach(g).
VolumeEstimate tube_volume_mc(const Geometry& g, double rho, std::size_t samples,
                              std::uint64_t seed = 1);

/// Line-sampling estimator for closed triangle meshes: exact chord lengths of
/// the tube along z-parallel lines at randomized Sobol (x, y) offsets.
/// `shifts` independent Cranley-Patterson shifts give the standard error.
VolumeEstimate tube_volume_lines(const TriMesh& mesh, double rho, std::size_t lines_per_shift,
                                 int shifts = 8, std::uint64_t seed = 3);

/// Exact distance from x to the geometry, by brute force (test oracle).
double distance_brute(const Geometry& g, const Vec& x);

struct TubeFit {
  std::vector<double> radii;
  std::vector<VolumeEstimate> volumes;
  // coefficients of rho, rho^2, rho^3 and their standard errors
  double c[3] = {0, 0, 0};
  double c_se[3] = {0, 0, 0};
  // L_2 = c1 / omega_1, L_1 = c2 / omega_2, L_0 = c3 / omega_3
  double L[3] = {0, 0, 0};
  double L_se[3] = {0, 0, 0};
};

/// Weighted least-squares fit of line-sampled tube volumes against
/// {rho, rho^2, rho^3}. Standard errors come from refitting each shift
/// separately. Radii must respect the reach precondition.
TubeFit fit_tube_coefficients(const TriMesh& mesh, const std::vector<double>& radii,
                              std::size_t lines_per_shift, int shifts = 8,
                              std::uint64_t seed = 3);

/// Volume of the unit ball in R^k.
double unit_ball_volume(int k);

}  // namespace curvflow
