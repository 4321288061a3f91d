#pragma once

// Closed polylines in R^2 / R^3 and closed oriented triangle meshes in R^3.
// Vertices are the columns of an n x V matrix.

#include <array>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "curvflow/types.hpp"

namespace curvflow {

/// Input violates a mesh or polyline invariant. The message names the
/// offending edge or vertex.
class MeshValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Polyline {
  Mat vertices;  // n x P, closed by the implicit edge P-1 -> 0

  int ambient_dim() const { return static_cast<int>(vertices.rows()); }
  int size() const { return static_cast<int>(vertices.cols()); }
  /// >= 8 vertices, n in {2, 3}, consecutive vertices distinct, all finite.
  void validate() const;
};

using Face = std::array<int, 3>;

struct Edge {
  int a, b;    // a < b
  int f0, f1;  // f0 traverses a -> b, f1 traverses b -> a
};

class TriMesh {
 public:
  TriMesh() = default;
  /// Builds edge adjacency and checks the closed-manifold and orientation
  /// invariants; throws MeshValidationError otherwise.
  TriMesh(Mat vertices, std::vector<Face> faces);

  const Mat& vertices() const { return v_; }
  Mat& vertices() { return v_; }  // topology is fixed; positions may move
  const std::vector<Face>& faces() const { return f_; }
  const std::vector<Edge>& edges() const { return e_; }
  int vertex_count() const { return static_cast<int>(v_.cols()); }
  int face_count() const { return static_cast<int>(f_.size()); }
  int edge_count() const { return static_cast<int>(e_.size()); }

  int euler_characteristic() const { return vertex_count() - edge_count() + face_count(); }
  /// From V - E + F = 2 - 2g; throws if the characteristic is odd or > 2.
  int genus() const;

  double area() const;
  double enclosed_volume() const;  // signed, positive for outward orientation
  Vec3 face_normal(int f) const;   // unit
  Mat vertex_normals() const;      // area-weighted, unit columns
  double max_edge_length() const;

 private:
  Mat v_;
  std::vector<Face> f_;
  std::vector<Edge> e_;
};

using Geometry = std::variant<TriMesh, Polyline>;

// Fixtures ------------------------------------------------------------------

/// Icosahedron subdivided `level` times, vertices projected to the sphere,
/// outward orientation.
TriMesh icosphere(int level, double radius = 1.0);

/// Regular polygon with `count` vertices on a circle of the given radius in
/// the xy-plane of R^dim (dim 2 or 3).
Polyline regular_polygon(int count, double radius = 1.0, int dim = 2);

/// Torus with tube radius r around a circle of radius R, nu x nv grid.
TriMesh torus(double major_radius, double minor_radius, int nu, int nv);

/// Circle traversed `turns` times; a closed planar curve with turning
/// number `turns`.
Polyline multiple_circle(int count, int turns, double radius = 1.0);

/// Longest-edge midpoint bisection until every edge is <= max_edge_length.
struct RefineResult {
  TriMesh mesh;
  bool interpolated = false;  // true when any vertex was inserted
};
RefineResult refine(const TriMesh& mesh, double max_edge_length);

// IO -------------------------------------------------------------------------

/// OFF text (see docs/formats.md) or polyline CSV with `x,y[,z]` rows.
/// Format is chosen by content: a leading "OFF" token selects OFF.
Geometry load_mesh(const std::string& path);
Geometry parse_mesh(const std::string& text);
std::string to_off(const TriMesh& mesh);
std::string to_csv(const Polyline& curve);

}  // namespace curvflow
