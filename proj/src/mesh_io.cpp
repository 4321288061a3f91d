#include <fstream>
#include <iomanip>
#include <sstream>

#include "curvflow/mesh.hpp"

namespace curvflow {

namespace {

// Splits into lines, dropping '#' comments and blank lines.
std::vector<std::string> content_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

TriMesh parse_off(const std::vector<std::string>& lines) {
  std::istringstream head(lines[0]);
  std::string magic;
  head >> magic;
  std::size_t at = 1;
  long nv = -1, nf = -1, ne = 0;
  // Counts may share the header line or follow it.
  if (!(head >> nv)) {
    if (lines.size() < 2) throw MeshValidationError("OFF: missing counts line");
    std::istringstream counts(lines[at++]);
    if (!(counts >> nv >> nf)) throw MeshValidationError("OFF: malformed counts line");
    counts >> ne;
  } else if (!(head >> nf)) {
    throw MeshValidationError("OFF: malformed counts line");
  }
  if (nv < 3 || nf < 1) throw MeshValidationError("OFF: need at least 3 vertices and 1 face");
  if (lines.size() < at + nv + nf) throw MeshValidationError("OFF: file ends early");
  Mat v(3, nv);
  for (long i = 0; i < nv; ++i) {
    std::istringstream row(lines[at++]);
    if (!(row >> v(0, i) >> v(1, i) >> v(2, i)))
      throw MeshValidationError("OFF: malformed vertex line " + std::to_string(i));
  }
  std::vector<Face> faces;
  for (long f = 0; f < nf; ++f) {
    std::istringstream row(lines[at++]);
    int k = 0;
    Face t{};
    if (!(row >> k) || k != 3 || !(row >> t[0] >> t[1] >> t[2]))
      throw MeshValidationError("OFF: face " + std::to_string(f) + " is not a triangle");
    faces.push_back(t);
  }
  return TriMesh(std::move(v), std::move(faces));
}

Polyline parse_csv(const std::vector<std::string>& lines) {
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<double> vals;
    std::stringstream row(lines[r]);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t\r", used) != std::string::npos) {
        if (r == 0 && rows.empty()) break;  // header row
        throw MeshValidationError("CSV: non-numeric value on row " + std::to_string(r + 1));
      }
      vals.push_back(x);
    }
    if (vals.empty() && r == 0) continue;
    if (vals.size() != 2 && vals.size() != 3)
      throw MeshValidationError("CSV: row " + std::to_string(r + 1) + " must have 2 or 3 values");
    if (!rows.empty() && rows[0].size() != vals.size())
      throw MeshValidationError("CSV: row " + std::to_string(r + 1) + " has a different dimension");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw MeshValidationError("CSV: no vertices");
  Polyline c;
  c.vertices.resize(static_cast<Eigen::Index>(rows[0].size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t d = 0; d < rows[i].size(); ++d) c.vertices(d, i) = rows[i][d];
  c.validate();
  return c;
}

}  // namespace

Geometry parse_mesh(const std::string& text) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw MeshValidationError("mesh input is empty");
  std::istringstream first(lines[0]);
  std::string token;
  first >> token;
  if (token == "OFF") return parse_off(lines);
  return parse_csv(lines);
}

Geometry load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mesh(buf.str());
}

std::string to_off(const TriMesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << ' ' << mesh.edge_count() << '\n';
  for (int i = 0; i < mesh.vertex_count(); ++i)
    out << mesh.vertices()(0, i) << ' ' << mesh.vertices()(1, i) << ' ' << mesh.vertices()(2, i) << '\n';
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  return out.str();
}

std::string to_csv(const Polyline& curve) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (int i = 0; i < curve.size(); ++i) {
    for (int d = 0; d < curve.ambient_dim(); ++d) out << (d ? "," : "") << curve.vertices(d, i);
    out << '\n';
  }
  return out.str();
}

}  // namespace curvflow
