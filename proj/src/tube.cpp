#include "curvflow/tube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/random/sobol.hpp>

#include "curvflow/random.hpp"

namespace curvflow {

namespace {

// Ericson, Real-Time Collision Detection, 5.1.5.
double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.squaredNorm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.squaredNorm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (ap - (d1 / (d1 - d3)) * ab).squaredNorm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.squaredNorm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (ap - (d2 / (d2 - d6)) * ac).squaredNorm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (bp - w * (c - b)).squaredNorm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (ap - ab * v - ac * w).squaredNorm();
}

double point_segment_dist2(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double l2 = ab.squaredNorm();
  const double s = l2 > 0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (p - a - s * ab).squaredNorm();
}

// Primitive soup of a geometry: triangles for meshes, segments for curves.
struct Soup {
  int dim = 3;
  bool triangles = true;
  Mat v;                              // dim x V
  std::vector<std::array<int, 3>> p;  // segments use the first two slots

  explicit Soup(const Geometry& g) {
    if (const auto* m = std::get_if<TriMesh>(&g)) {
      v = m->vertices();
      p.assign(m->faces().begin(), m->faces().end());
    } else {
      const auto& c = std::get<Polyline>(g);
      c.validate();
      dim = c.ambient_dim();
      triangles = false;
      v = c.vertices;
      for (int i = 0; i < c.size(); ++i) p.push_back({i, (i + 1) % c.size(), 0});
    }
  }

  double dist2(std::size_t k, const Vec& x) const {
    const auto& t = p[k];
    if (triangles)
      return point_triangle_dist2(Vec3(x), Vec3(v.col(t[0])), Vec3(v.col(t[1])), Vec3(v.col(t[2])));
    return point_segment_dist2(x, v.col(t[0]), v.col(t[1]));
  }

  void bounds(std::size_t k, Vec& lo, Vec& hi) const {
    const int c = triangles ? 3 : 2;
    lo = v.col(p[k][0]);
    hi = lo;
    for (int i = 1; i < c; ++i) {
      lo = lo.cwiseMin(v.col(p[k][i]));
      hi = hi.cwiseMax(v.col(p[k][i]));
    }
  }
};

// Uniform grid over primitive bounding boxes for "is d(x, M) <= rho" queries.
class TubeGrid {
 public:
  TubeGrid(const Soup& soup, double rho) : soup_(soup), rho_(rho) {
    const int d = soup.dim;
    lo_ = soup.v.rowwise().minCoeff().array() - rho;
    Vec hi = soup.v.rowwise().maxCoeff().array() + rho;
    // Cells about rho/2 wide, capped so the table stays small.
    cell_ = std::max(0.5 * rho, (hi - lo_).maxCoeff() / 256.0);
    dims_.assign(3, 1);
    for (int i = 0; i < d; ++i) dims_[i] = static_cast<int>(std::ceil((hi(i) - lo_(i)) / cell_)) + 1;
    start_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2] + 1, 0);
    std::vector<std::pair<std::size_t, int>> entries;
    Vec blo, bhi;
    for (std::size_t k = 0; k < soup.p.size(); ++k) {
      soup.bounds(k, blo, bhi);
      box_lo_.push_back(blo);
      box_hi_.push_back(bhi);
      int a[3] = {0, 0, 0}, b[3] = {0, 0, 0};
      for (int i = 0; i < d; ++i) {
        a[i] = coord(blo(i), i);
        b[i] = coord(bhi(i), i);
      }
      for (int x = a[0]; x <= b[0]; ++x)
        for (int y = a[1]; y <= b[1]; ++y)
          for (int z = a[2]; z <= b[2]; ++z) entries.emplace_back(flat(x, y, z), static_cast<int>(k));
    }
    for (const auto& e : entries) ++start_[e.first + 1];
    for (std::size_t i = 1; i < start_.size(); ++i) start_[i] += start_[i - 1];
    items_.resize(entries.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (const auto& e : entries) items_[fill[e.first]++] = e.second;
    stamp_.assign(soup.p.size(), 0);
  }

  bool within(const Vec& x) {
    const int d = soup_.dim;
    int a[3] = {0, 0, 0}, b[3] = {0, 0, 0};
    for (int i = 0; i < d; ++i) {
      a[i] = coord(x(i) - rho_, i);
      b[i] = coord(x(i) + rho_, i);
    }
    ++epoch_;
    const double r2 = rho_ * rho_;
    for (int cx = a[0]; cx <= b[0]; ++cx)
      for (int cy = a[1]; cy <= b[1]; ++cy)
        for (int cz = a[2]; cz <= b[2]; ++cz) {
          const std::size_t c = flat(cx, cy, cz);
          for (std::size_t i = start_[c]; i < start_[c + 1]; ++i) {
            const int k = items_[i];
            if (stamp_[k] == epoch_) continue;
            stamp_[k] = epoch_;
            // Box distance prefilter.
            double bd = 0.0;
            for (int j = 0; j < d; ++j) {
              const double e = std::max({box_lo_[k](j) - x(j), 0.0, x(j) - box_hi_[k](j)});
              bd += e * e;
            }
            if (bd > r2) continue;
            if (soup_.dist2(k, x) <= r2) return true;
          }
        }
    return false;
  }

 private:
  int coord(double v, int i) const {
    return std::clamp(static_cast<int>(std::floor((v - lo_(i)) / cell_)), 0, dims_[i] - 1);
  }
  std::size_t flat(int x, int y, int z) const {
    return (static_cast<std::size_t>(x) * dims_[1] + y) * dims_[2] + z;
  }

  const Soup& soup_;
  double rho_;
  Vec lo_;
  double cell_ = 1.0;
  std::vector<int> dims_;
  std::vector<std::size_t> start_;
  std::vector<int> items_;
  std::vector<Vec> box_lo_, box_hi_;
  std::vector<unsigned> stamp_;
  unsigned epoch_ = 0;
};

void check_reach(const Geometry& g, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("tube: rho must be positive");
  const double reach = estimate_reach(g);
  if (rho > 0.5 * reach)
    throw std::invalid_argument("tube: rho = " + std::to_string(rho) +
                                " exceeds half the estimated reach " + std::to_string(reach));
}

}  // namespace

double unit_ball_volume(int k) {
  return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

double estimate_reach(const Geometry& g, int random_pairs, std::uint64_t seed) {
  Mat v, normals;  // normals: unit normal (surface) or unit tangent (curve)
  std::vector<std::vector<int>> nbr;
  bool surface = false;
  if (const auto* m = std::get_if<TriMesh>(&g)) {
    surface = true;
    v = m->vertices();
    normals = m->vertex_normals();
    nbr.resize(m->vertex_count());
    for (const Edge& e : m->edges()) {
      nbr[e.a].push_back(e.b);
      nbr[e.b].push_back(e.a);
    }
  } else {
    const auto& c = std::get<Polyline>(g);
    c.validate();
    v = c.vertices;
    const int p = c.size();
    normals.resize(v.rows(), p);
    nbr.resize(p);
    for (int i = 0; i < p; ++i) {
      normals.col(i) = (v.col((i + 1) % p) - v.col((i + p - 1) % p)).normalized();
      nbr[i] = {(i + 1) % p, (i + p - 1) % p};
    }
  }
  const int count = static_cast<int>(v.cols());
  Rng rng = make_stream(seed, 0, 0, 0x7eac);
  std::uniform_int_distribution<int> pick(0, count - 1);
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](int i, int j) {
    if (i == j) return;
    const Vec d = v.col(j) - v.col(i);
    const double off = surface ? std::abs(d.dot(normals.col(i)))
                               : (d - d.dot(normals.col(i)) * normals.col(i)).norm();
    if (off <= 0.0) return;
    best = std::min(best, d.squaredNorm() / (2.0 * off));
  };
  for (int i = 0; i < count; ++i) {
    for (int j : nbr[i]) consider(i, j);
    for (int r = 0; r < random_pairs; ++r) consider(i, pick(rng));
  }
  return best;
}

double distance_brute(const Geometry& g, const Vec& x) {
  const Soup soup(g);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < soup.p.size(); ++k) best = std::min(best, soup.dist2(k, x));
  return std::sqrt(best);
}

VolumeEstimate tube_volume_mc(const Geometry& g, double rho, std::size_t samples,
                              std::uint64_t seed) {
  check_reach(g, rho);
  if (samples < 1) throw std::invalid_argument("tube: need at least one sample");
  const Soup soup(g);
  const Vec lo = soup.v.rowwise().minCoeff().array() - rho;
  const Vec hi = soup.v.rowwise().maxCoeff().array() + rho;
  const double box = (hi - lo).prod();
  constexpr std::size_t kBlock = 1 << 16;
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<std::size_t> hits(blocks, 0);
  parallel_for(blocks, [&](std::size_t b) {
    TubeGrid grid(soup, rho);
    Rng rng = make_stream(seed, b, 0, 0x70be);
    const std::size_t n = std::min(kBlock, samples - b * kBlock);
    Vec x(soup.dim);
    std::size_t h = 0;
    for (std::size_t s = 0; s < n; ++s) {
      for (int i = 0; i < soup.dim; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * uniform01(rng);
      h += grid.within(x) ? 1 : 0;
    }
    hits[b] = h;
  });
  std::size_t total = 0;
  for (std::size_t h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(samples);
  return {box * p, box * std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

// ---------------------------------------------------------------------------
// Line sampling

namespace {

struct Interval {
  double lo, hi;
};

// Intersects [lo, hi] with {z : c0 + c1 z <= 0}.
inline bool clip_linear(double c0, double c1, double& lo, double& hi) {
  if (std::abs(c1) < 1e-300) return c0 <= 0.0;
  const double z = -c0 / c1;
  if (c1 > 0) hi = std::min(hi, z);
  else lo = std::max(lo, z);
  return lo < hi;
}

// Intersects [lo, hi] with {z : a z^2 + 2 b z + c <= 0}, a >= 0.
inline bool clip_quadratic(double a, double b, double c, double& lo, double& hi) {
  if (a < 1e-14) return clip_linear(c, 2.0 * b, lo, hi);
  const double disc = b * b - a * c;
  if (disc <= 0.0) return false;
  const double s = std::sqrt(disc);
  lo = std::max(lo, (-b - s) / a);
  hi = std::min(hi, (-b + s) / a);
  return lo < hi;
}

class LineTube {
 public:
  LineTube(const TriMesh& mesh, double rho) : m_(mesh), rho_(rho) {
    const Mat& v = mesh.vertices();
    lo_ = v.rowwise().minCoeff().array() - rho;
    hi_ = v.rowwise().maxCoeff().array() + rho;
    for (int f = 0; f < mesh.face_count(); ++f) {
      const auto& t = mesh.faces()[f];
      FacePrim p;
      p.a = v.col(t[0]);
      p.n = mesh.face_normal(f);
      for (int c = 0; c < 3; ++c) {
        const Vec3 q0 = v.col(t[c]), q1 = v.col(t[(c + 1) % 3]);
        p.side_p[c] = q0;
        p.side_m[c] = (q1 - q0).cross(p.n);
      }
      faces_.push_back(p);
    }
    for (const Edge& e : mesh.edges()) {
      EdgePrim p;
      p.a = v.col(e.a);
      const Vec3 d = Vec3(v.col(e.b)) - p.a;
      p.len = d.norm();
      p.d = d / p.len;
      edges_.push_back(p);
    }
    // xy grid
    const double w = std::max(hi_(0) - lo_(0), hi_(1) - lo_(1));
    nx_ = ny_ = std::clamp(static_cast<int>(w / (0.25 * rho)), 8, 1024);
    cx_ = (hi_(0) - lo_(0)) / nx_;
    cy_ = (hi_(1) - lo_(1)) / ny_;
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    // Each primitive goes into the cells under the xy-shadow of its exact
    // bounding box: triangle +- rho n for prisms, segment + rho-disk across
    // the axis for cylinders, rho-square for balls.
    auto insert = [&](double x0, double x1, double y0, double y1, double rx, double ry, int code) {
      const int a0 = cellx(x0 - rx), a1 = cellx(x1 + rx);
      const int b0 = celly(y0 - ry), b1 = celly(y1 + ry);
      for (int i = a0; i <= a1; ++i)
        for (int j = b0; j <= b1; ++j) cells_[static_cast<std::size_t>(i) * ny_ + j].push_back(code);
    };
    // code: 3k face, 3k+1 edge, 3k+2 vertex
    for (int f = 0; f < mesh.face_count(); ++f) {
      const auto& t = mesh.faces()[f];
      double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
      for (int c : t) {
        x0 = std::min(x0, v(0, c));
        x1 = std::max(x1, v(0, c));
        y0 = std::min(y0, v(1, c));
        y1 = std::max(y1, v(1, c));
      }
      const Vec3& n = faces_[f].n;
      insert(x0, x1, y0, y1, rho * std::abs(n(0)), rho * std::abs(n(1)), 3 * f);
    }
    for (int k = 0; k < mesh.edge_count(); ++k) {
      const Edge& e = mesh.edges()[k];
      const Vec3& d = edges_[k].d;
      insert(std::min(v(0, e.a), v(0, e.b)), std::max(v(0, e.a), v(0, e.b)),
             std::min(v(1, e.a), v(1, e.b)), std::max(v(1, e.a), v(1, e.b)),
             rho * std::sqrt(std::max(0.0, 1.0 - d(0) * d(0))),
             rho * std::sqrt(std::max(0.0, 1.0 - d(1) * d(1))), 3 * k + 1);
    }
    for (int i = 0; i < mesh.vertex_count(); ++i)
      insert(v(0, i), v(0, i), v(1, i), v(1, i), rho, rho, 3 * i + 2);
  }

  double area() const { return (hi_(0) - lo_(0)) * (hi_(1) - lo_(1)); }
  double x_at(double u) const { return lo_(0) + u * (hi_(0) - lo_(0)); }
  double y_at(double u) const { return lo_(1) + u * (hi_(1) - lo_(1)); }

  double chord(double x, double y, std::vector<Interval>& iv) const {
    iv.clear();
    const auto& cell = cells_[static_cast<std::size_t>(cellx(x)) * ny_ + celly(y)];
    const double zlo = lo_(2) - 1.0, zhi = hi_(2) + 1.0;
    const double r2 = rho_ * rho_;
    for (int code : cell) {
      const int k = code / 3;
      double lo = zlo, hi = zhi;
      bool ok = true;
      switch (code % 3) {
        case 0: {
          const FacePrim& p = faces_[k];
          const double g0 = (x - p.a(0)) * p.n(0) + (y - p.a(1)) * p.n(1) - p.a(2) * p.n(2);
          ok = clip_linear(g0 - rho_, p.n(2), lo, hi) && clip_linear(-g0 - rho_, -p.n(2), lo, hi);
          for (int c = 0; ok && c < 3; ++c) {
            const Vec3& q = p.side_p[c];
            const Vec3& mm = p.side_m[c];
            ok = clip_linear((x - q(0)) * mm(0) + (y - q(1)) * mm(1) - q(2) * mm(2), mm(2), lo, hi);
          }
          break;
        }
        case 1: {
          const EdgePrim& p = edges_[k];
          const Vec3 w0(x - p.a(0), y - p.a(1), -p.a(2));
          const double s0 = w0.dot(p.d), s1 = p.d(2);
          ok = clip_linear(-s0, -s1, lo, hi) && clip_linear(s0 - p.len, s1, lo, hi);
          if (ok) {
            const Vec3 wp = w0 - s0 * p.d;
            const Vec3 ep = Vec3(0, 0, 1) - s1 * p.d;
            ok = clip_quadratic(ep.squaredNorm(), wp.dot(ep), wp.squaredNorm() - r2, lo, hi);
          }
          break;
        }
        default: {
          const auto q = m_.vertices().col(k);
          const double rest = r2 - (x - q(0)) * (x - q(0)) - (y - q(1)) * (y - q(1));
          if (rest <= 0.0) {
            ok = false;
          } else {
            const double s = std::sqrt(rest);
            lo = q(2) - s;
            hi = q(2) + s;
          }
          break;
        }
      }
      if (ok && lo < hi) iv.push_back({lo, hi});
    }
    if (iv.empty()) return 0.0;
    std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    double total = 0.0, cur_lo = iv[0].lo, cur_hi = iv[0].hi;
    for (std::size_t i = 1; i < iv.size(); ++i) {
      if (iv[i].lo > cur_hi) {
        total += cur_hi - cur_lo;
        cur_lo = iv[i].lo;
        cur_hi = iv[i].hi;
      } else {
        cur_hi = std::max(cur_hi, iv[i].hi);
      }
    }
    return total + (cur_hi - cur_lo);
  }

 private:
  struct FacePrim {
    Vec3 a, n;
    Vec3 side_p[3], side_m[3];
  };
  struct EdgePrim {
    Vec3 a, d;
    double len;
  };
  int cellx(double x) const { return std::clamp(static_cast<int>((x - lo_(0)) / cx_), 0, nx_ - 1); }
  int celly(double y) const { return std::clamp(static_cast<int>((y - lo_(1)) / cy_), 0, ny_ - 1); }

  const TriMesh& m_;
  double rho_;
  Vec lo_, hi_;
  std::vector<FacePrim> faces_;
  std::vector<EdgePrim> edges_;
  int nx_ = 1, ny_ = 1;
  double cx_ = 1, cy_ = 1;
  std::vector<std::vector<int>> cells_;
};

std::vector<double> shift_volumes(const TriMesh& mesh, double rho, std::size_t lines,
                                  int shifts, std::uint64_t seed) {
  const LineTube tube(mesh, rho);
  boost::random::sobol sob(2);
  std::vector<double> pts(2 * lines);
  for (auto& x : pts) x = std::ldexp(static_cast<double>(sob()), -64);
  std::vector<double> out(shifts, 0.0);
  parallel_for(static_cast<std::size_t>(shifts), [&](std::size_t s) {
    Rng rng = make_stream(seed, s, 0, 0x11e5);
    const double sx = uniform01(rng), sy = uniform01(rng);
    std::vector<Interval> iv;
    double acc = 0.0;
    for (std::size_t i = 0; i < lines; ++i) {
      double u = pts[2 * i] + sx, w = pts[2 * i + 1] + sy;
      u -= std::floor(u);
      w -= std::floor(w);
      acc += tube.chord(tube.x_at(u), tube.y_at(w), iv);
    }
    out[s] = tube.area() * acc / static_cast<double>(lines);
  });
  return out;
}

VolumeEstimate summarize(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double k = static_cast<double>(v.size());
  return {m, v.size() > 1 ? std::sqrt(ss / (k - 1) / k) : 0.0};
}

// Weighted fit of vol = c1 rho + c2 rho^2 + c3 rho^3.
Eigen::Vector3d fit_cubic(const std::vector<double>& r, const std::vector<double>& vol,
                          const std::vector<double>& w) {
  Mat a(r.size(), 3);
  Vec b(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double sw = std::sqrt(w[i]);
    a(i, 0) = sw * r[i];
    a(i, 1) = sw * r[i] * r[i];
    a(i, 2) = sw * r[i] * r[i] * r[i];
    b(i) = sw * vol[i];
  }
  return a.colPivHouseholderQr().solve(b);
}

}  // namespace

VolumeEstimate tube_volume_lines(const TriMesh& mesh, double rho, std::size_t lines_per_shift,
                                 int shifts, std::uint64_t seed) {
  check_reach(mesh, rho);
  if (lines_per_shift < 1 || shifts < 2) throw std::invalid_argument("tube: need lines and >= 2 shifts");
  return summarize(shift_volumes(mesh, rho, lines_per_shift, shifts, seed));
}

TubeFit fit_tube_coefficients(const TriMesh& mesh, const std::vector<double>& radii,
                              std::size_t lines_per_shift, int shifts, std::uint64_t seed) {
  if (radii.size() < 3) throw std::invalid_argument("tube fit: need at least 3 radii");
  if (shifts < 2) throw std::invalid_argument("tube fit: need at least 2 shifts");
  for (double r : radii) check_reach(mesh, r);
  TubeFit fit;
  fit.radii = radii;
  std::vector<std::vector<double>> per_shift;  // [radius][shift]
  for (double r : radii) {
    per_shift.push_back(shift_volumes(mesh, r, lines_per_shift, shifts, seed));
    fit.volumes.push_back(summarize(per_shift.back()));
  }
  std::vector<double> vol, w;
  for (const auto& e : fit.volumes) {
    vol.push_back(e.volume);
    w.push_back(e.std_error > 0 ? 1.0 / (e.std_error * e.std_error) : 1.0);
  }
  const Eigen::Vector3d c = fit_cubic(radii, vol, w);
  // Spread of per-shift refits (same weights) estimates the coefficient SE.
  std::vector<Eigen::Vector3d> reps;
  for (int s = 0; s < shifts; ++s) {
    std::vector<double> vs;
    for (const auto& ps : per_shift) vs.push_back(ps[s]);
    reps.push_back(fit_cubic(radii, vs, w));
  }
  const double omega[3] = {unit_ball_volume(1), unit_ball_volume(2), unit_ball_volume(3)};
  for (int j = 0; j < 3; ++j) {
    double mu = 0, ss = 0;
    for (const auto& r : reps) mu += r(j);
    mu /= shifts;
    for (const auto& r : reps) ss += (r(j) - mu) * (r(j) - mu);
    fit.c[j] = c(j);
    fit.c_se[j] = std::sqrt(ss / (shifts - 1) / shifts);
    // c_j multiplies rho^{j+1} = rho^{n - (2 - j)}, so it carries L_{2-j}.
    fit.L[2 - j] = c(j) / omega[j];
    fit.L_se[2 - j] = fit.c_se[j] / omega[j];
  }
  return fit;
}

}  // namespace curvflow
