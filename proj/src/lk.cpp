#include "curvflow/lk.hpp"

#include <cmath>
#include <numbers>

namespace curvflow {

double polyline_length(const Polyline& c) {
  double s = 0.0;
  const int p = c.size();
  for (int i = 0; i < p; ++i) s += (c.vertices.col((i + 1) % p) - c.vertices.col(i)).norm();
  return s;
}

LKReport lk_polyline(const Polyline& c) {
  c.validate();
  LKReport r;
  r.ambient_dim = c.ambient_dim();
  // A closed curve has chi = 0, so its tube area / volume has no rho^n term.
  r.L = {0.0, polyline_length(c)};
  if (c.ambient_dim() == 2) {
    double turn = 0.0;
    const int p = c.size();
    for (int i = 0; i < p; ++i) {
      const Vec d0 = c.vertices.col(i) - c.vertices.col((i + p - 1) % p);
      const Vec d1 = c.vertices.col((i + 1) % p) - c.vertices.col(i);
      turn += std::atan2(d0(0) * d1(1) - d0(1) * d1(0), d0.dot(d1));
    }
    r.turning_number = turn / (2.0 * std::numbers::pi);
  }
  return r;
}

double dihedral_angle(const TriMesh& m, const Edge& e) {
  const Vec3 n0 = m.face_normal(e.f0), n1 = m.face_normal(e.f1);
  const Vec3 axis = (m.vertices().col(e.b) - m.vertices().col(e.a)).normalized();
  // f0 traverses a -> b, so n0 x n1 points along +axis on convex edges.
  return std::atan2(n0.cross(n1).dot(axis), n0.dot(n1));
}

LKReport lk_trimesh(const TriMesh& m) {
  LKReport r;
  r.ambient_dim = 3;
  const Mat& v = m.vertices();
  double h = 0.0;
  for (const Edge& e : m.edges()) h += (v.col(e.b) - v.col(e.a)).norm() * dihedral_angle(m, e);
  r.h_int = h;

  std::vector<double> angle_sum(m.vertex_count(), 0.0);
  for (const Face& f : m.faces())
    for (int c = 0; c < 3; ++c) {
      const Vec3 p = v.col(f[c]);
      const Vec3 a = Vec3(v.col(f[(c + 1) % 3])) - p, b = Vec3(v.col(f[(c + 2) % 3])) - p;
      angle_sum[f[c]] += std::atan2(a.cross(b).norm(), a.dot(b));
    }
  double defect = 0.0;
  for (double s : angle_sum) defect += 2.0 * std::numbers::pi - s;
  r.angle_defect_total = defect;
  r.chi_combinatorial = defect / (2.0 * std::numbers::pi);
  r.genus = m.genus();
  r.L = {r.chi_combinatorial, 0.0, m.area()};
  return r;
}

LKReport lk(const Geometry& g) {
  if (const auto* m = std::get_if<TriMesh>(&g)) return lk_trimesh(*m);
  return lk_polyline(std::get<Polyline>(g));
}

nlohmann::json to_json(const LKReport& r) {
  nlohmann::json j;
  j["convention"] = r.convention;
  j["ambient_dim"] = r.ambient_dim;
  j["L"] = r.L;
  if (r.ambient_dim == 3 && r.L.size() == 3) {
    j["H_int"] = r.h_int;
    j["angle_defect_total"] = r.angle_defect_total;
    j["chi_combinatorial"] = r.chi_combinatorial;
    j["genus"] = r.genus;
  }
  if (r.ambient_dim == 2) j["turning_number"] = r.turning_number;
  return j;
}

}  // namespace curvflow
