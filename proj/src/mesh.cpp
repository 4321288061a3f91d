#include "curvflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <unordered_map>

namespace curvflow {

namespace {

std::string edge_name(int a, int b) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

void Polyline::validate() const {
  const int n = ambient_dim();
  if (n != 2 && n != 3) throw MeshValidationError("polyline: ambient dimension must be 2 or 3");
  if (size() < 8) throw MeshValidationError("polyline: need at least 8 vertices");
  if (!vertices.allFinite()) throw MeshValidationError("polyline: non-finite coordinate");
  for (int i = 0; i < size(); ++i) {
    const int j = (i + 1) % size();
    if ((vertices.col(i) - vertices.col(j)).norm() == 0.0)
      throw MeshValidationError("polyline: consecutive vertices coincide at edge " +
                                edge_name(i, j));
  }
}

TriMesh::TriMesh(Mat vertices, std::vector<Face> faces) : v_(std::move(vertices)), f_(std::move(faces)) {
  if (v_.rows() != 3) throw MeshValidationError("mesh: vertices must be 3-dimensional");
  if (f_.empty()) throw MeshValidationError("mesh: no faces");
  if (!v_.allFinite()) throw MeshValidationError("mesh: non-finite coordinate");
  const int nv = vertex_count();
  // directed edge -> face
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(f_.size() * 3);
  for (int f = 0; f < face_count(); ++f) {
    const Face& t = f_[f];
    for (int c = 0; c < 3; ++c) {
      if (t[c] < 0 || t[c] >= nv)
        throw MeshValidationError("mesh: face " + std::to_string(f) + " references vertex " +
                                  std::to_string(t[c]) + " out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw MeshValidationError("mesh: face " + std::to_string(f) + " is degenerate");
    for (int c = 0; c < 3; ++c) {
      const int a = t[c], b = t[(c + 1) % 3];
      if (!directed.emplace(edge_key(a, b), f).second) {
        // Same direction twice: either a non-manifold edge or flipped faces.
        int count = 0;
        for (const Face& u : f_)
          for (int d = 0; d < 3; ++d) {
            const int x = u[d], y = u[(d + 1) % 3];
            if ((x == a && y == b) || (x == b && y == a)) ++count;
          }
        if (count > 2)
          throw MeshValidationError("mesh: non-manifold edge " + edge_name(std::min(a, b), std::max(a, b)) +
                                    " shared by " + std::to_string(count) + " faces");
        throw MeshValidationError("mesh: inconsistent orientation at edge " +
                                  edge_name(std::min(a, b), std::max(a, b)));
      }
    }
  }
  for (const auto& [key, f] : directed) {
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    const auto back = directed.find(edge_key(b, a));
    if (back == directed.end())
      throw MeshValidationError("mesh: boundary edge " + edge_name(std::min(a, b), std::max(a, b)) +
                                " has only one incident face");
    if (a < b) e_.push_back({a, b, f, back->second});
  }
  std::sort(e_.begin(), e_.end(),
            [](const Edge& x, const Edge& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
  // Every vertex must be used.
  std::vector<char> used(nv, 0);
  for (const Face& t : f_)
    for (int c : t) used[c] = 1;
  for (int i = 0; i < nv; ++i)
    if (!used[i]) throw MeshValidationError("mesh: vertex " + std::to_string(i) + " is unused");
}

int TriMesh::genus() const {
  const int chi = euler_characteristic();
  if (chi > 2 || (2 - chi) % 2 != 0)
    throw MeshValidationError("mesh: Euler characteristic " + std::to_string(chi) +
                              " is not that of a closed connected orientable surface");
  return (2 - chi) / 2;
}

double TriMesh::area() const {
  double s = 0.0;
  for (const Face& t : f_) {
    const Vec3 p = v_.col(t[0]), q = v_.col(t[1]), r = v_.col(t[2]);
    s += 0.5 * (q - p).cross(r - p).norm();
  }
  return s;
}

double TriMesh::enclosed_volume() const {
  double s = 0.0;
  for (const Face& t : f_) {
    const Vec3 p = v_.col(t[0]), q = v_.col(t[1]), r = v_.col(t[2]);
    s += p.dot(q.cross(r));
  }
  return s / 6.0;
}

Vec3 TriMesh::face_normal(int f) const {
  const Face& t = f_[f];
  const Vec3 p = v_.col(t[0]), q = v_.col(t[1]), r = v_.col(t[2]);
  return (q - p).cross(r - p).normalized();
}

Mat TriMesh::vertex_normals() const {
  Mat nrm = Mat::Zero(3, vertex_count());
  for (const Face& t : f_) {
    const Vec3 p = v_.col(t[0]), q = v_.col(t[1]), r = v_.col(t[2]);
    const Vec3 w = (q - p).cross(r - p);  // length = 2 * area
    for (int c : t) nrm.col(c) += w;
  }
  for (int i = 0; i < vertex_count(); ++i) nrm.col(i).normalize();
  return nrm;
}

double TriMesh::max_edge_length() const {
  double m = 0.0;
  for (const Edge& e : e_) m = std::max(m, (v_.col(e.a) - v_.col(e.b)).norm());
  return m;
}

// ---------------------------------------------------------------------------

TriMesh icosphere(int level, double radius) {
  if (level < 0 || level > 8) throw std::invalid_argument("icosphere: level must be in 0..8");
  if (!(radius > 0.0)) throw std::invalid_argument("icosphere: radius must be positive");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> pts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                           {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                           {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : pts) p.normalize();
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      pts.push_back((pts[a] + pts[b]).normalized());
      const int id = static_cast<int>(pts.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  Mat v(3, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) v.col(i) = radius * pts[i];
  return TriMesh(std::move(v), std::move(faces));
}

Polyline regular_polygon(int count, double radius, int dim) {
  if (count < 8) throw std::invalid_argument("regular_polygon: need at least 8 vertices");
  if (dim != 2 && dim != 3) throw std::invalid_argument("regular_polygon: dim must be 2 or 3");
  if (!(radius > 0.0)) throw std::invalid_argument("regular_polygon: radius must be positive");
  Polyline c;
  c.vertices = Mat::Zero(dim, count);
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * i / count;
    c.vertices(0, i) = radius * std::cos(a);
    c.vertices(1, i) = radius * std::sin(a);
  }
  return c;
}

TriMesh torus(double major_radius, double minor_radius, int nu, int nv) {
  if (nu < 3 || nv < 3) throw std::invalid_argument("torus: need at least 3 x 3 grid");
  if (!(major_radius > minor_radius) || !(minor_radius > 0.0))
    throw std::invalid_argument("torus: need R > r > 0");
  Mat v(3, nu * nv);
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double u = 2.0 * std::numbers::pi * i / nu, w = 2.0 * std::numbers::pi * j / nv;
      const double rr = major_radius + minor_radius * std::cos(w);
      v.col(i * nv + j) = Vec3(rr * std::cos(u), rr * std::sin(u), minor_radius * std::sin(w));
    }
  std::vector<Face> faces;
  auto id = [&](int i, int j) { return ((i + nu) % nu) * nv + (j + nv) % nv; };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return TriMesh(std::move(v), std::move(faces));
}

Polyline multiple_circle(int count, int turns, double radius) {
  if (turns < 1) throw std::invalid_argument("multiple_circle: turns must be >= 1");
  if (count < 8 * turns) throw std::invalid_argument("multiple_circle: too few vertices");
  Polyline c;
  c.vertices.resize(2, count);
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * turns * i / count;
    // The radius wobble keeps the passes apart; the curve is an elongated
    // zero traversed `turns` times.
    const double r = radius * (1.0 + 0.1 * std::sin(a / turns));
    c.vertices(0, i) = r * std::cos(a);
    c.vertices(1, i) = 1.5 * r * std::sin(a);
  }
  return c;
}

RefineResult refine(const TriMesh& mesh, double max_edge_length) {
  if (!(max_edge_length > 0.0)) throw std::invalid_argument("refine: bound must be positive");
  std::vector<Vec3> pts;
  for (int i = 0; i < mesh.vertex_count(); ++i) pts.push_back(mesh.vertices().col(i));
  std::vector<Face> faces = mesh.faces();
  bool inserted = false;
  auto len = [&](int a, int b) { return (pts[a] - pts[b]).norm(); };
  for (;;) {
    // Directed edge -> face, rebuilt per pass; each pass bisects a maximal
    // matching-free set by processing the longest edges first.
    std::unordered_map<std::uint64_t, int> owner;
    for (int f = 0; f < static_cast<int>(faces.size()); ++f)
      for (int c = 0; c < 3; ++c) owner[edge_key(faces[f][c], faces[f][(c + 1) % 3])] = f;
    std::vector<std::pair<double, std::pair<int, int>>> todo;
    for (const Face& f : faces)
      for (int c = 0; c < 3; ++c) {
        const int a = f[c], b = f[(c + 1) % 3];
        if (a < b && len(a, b) > max_edge_length) todo.push_back({len(a, b), {a, b}});
      }
    if (todo.empty()) break;
    std::sort(todo.begin(), todo.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    std::vector<char> touched(faces.size(), 0);
    for (const auto& item : todo) {
      const int a = item.second.first, b = item.second.second;
      const int f0 = owner.at(edge_key(a, b)), f1 = owner.at(edge_key(b, a));
      if (touched[f0] || touched[f1]) continue;
      // Only bisect an edge that is the longest of both incident faces.
      auto longest = [&](int f) {
        double m = 0;
        for (int c = 0; c < 3; ++c) m = std::max(m, len(faces[f][c], faces[f][(c + 1) % 3]));
        return m;
      };
      if (len(a, b) < longest(f0) || len(a, b) < longest(f1)) continue;
      touched[f0] = touched[f1] = 1;
      pts.push_back(0.5 * (pts[a] + pts[b]));
      const int m = static_cast<int>(pts.size()) - 1;
      inserted = true;
      for (int f : {f0, f1}) {
        Face t = faces[f];
        // rotate so that t = (x, y, opposite) with (x, y) the split edge
        while (!((t[0] == a && t[1] == b) || (t[0] == b && t[1] == a)))
          t = {t[1], t[2], t[0]};
        faces[f] = {t[0], m, t[2]};
        faces.push_back({m, t[1], t[2]});
        touched.push_back(1);
      }
    }
  }
  RefineResult out;
  Mat v(3, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) v.col(i) = pts[i];
  out.mesh = TriMesh(std::move(v), std::move(faces));
  out.interpolated = inserted;
  return out;
}

}  // namespace curvflow
