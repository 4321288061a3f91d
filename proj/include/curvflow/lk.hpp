#pragma once

// Discrete Lipschitz-Killing curvatures, normalized by the tube formula:
// L_0 = Euler characteristic, L_{n-1} = surface content, and for closed
// surfaces the two-sided L_1 vanishes. The one-sided integral mean curvature
// is reported separately as H_int.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvflow/mesh.hpp"

namespace curvflow {

struct LKReport {
  std::string convention = "tube-normalized";
  int ambient_dim = 3;
  std::vector<double> L;  // L_0 .. L_{n-1}
  /// Surfaces: sum over edges of len * signed exterior dihedral angle, the
  /// discrete integral of (kappa_1 + kappa_2) w.r.t. the mesh orientation.
  double h_int = 0.0;
  /// Surfaces: sum over vertices of the angle defect (= 2 pi chi).
  double angle_defect_total = 0.0;
  /// angle_defect_total / (2 pi).
  double chi_combinatorial = 0.0;
  int genus = 0;
  /// Planar polylines: total signed turning / (2 pi).
  double turning_number = 0.0;
};

LKReport lk_polyline(const Polyline& curve);
LKReport lk_trimesh(const TriMesh& mesh);
LKReport lk(const Geometry& g);

/// Signed exterior dihedral angle at an edge: positive where the surface
/// bends away from the orientation normal (convex for outward orientation).
double dihedral_angle(const TriMesh& mesh, const Edge& e);

double polyline_length(const Polyline& curve);

nlohmann::json to_json(const LKReport& r);

}  // namespace curvflow
