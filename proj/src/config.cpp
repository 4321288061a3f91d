#include "curvflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "curvflow/predicted_rate.hpp"
#include "curvflow/random.hpp"

namespace curvflow {

using nlohmann::json;

namespace {

class LineParser {
 public:
  LineParser(const std::string& s, int line) : s_(s), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
  }
  bool at_end() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }
  bool eat(char c) {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  std::vector<std::string> key() {
    std::vector<std::string> parts;
    do {
      skip_ws();
      if (i_ < s_.size() && s_[i_] == '"') {
        parts.push_back(string());
      } else {
        const std::size_t start = i_;
        while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-')) ++i_;
        if (i_ == start) fail("expected a key");
        parts.push_back(s_.substr(start, i_ - start));
      }
    } while (eat('.'));
    return parts;
  }

  std::string string() {
    expect('"');
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) fail("unterminated escape");
        const char e = s_[i_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (i_ >= s_.size()) fail("unterminated string");
    ++i_;
    return out;
  }

  json value() {
    skip_ws();
    if (i_ >= s_.size()) fail("missing value");
    const char c = s_[i_];
    if (c == '"') return string();
    if (c == '[') {
      ++i_;
      json arr = json::array();
      if (eat(']')) return arr;
      do {
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ']') break;  // trailing comma
        arr.push_back(value());
      } while (eat(','));
      expect(']');
      return arr;
    }
    if (c == '{') {
      ++i_;
      json obj = json::object();
      if (eat('}')) return obj;
      do {
        const auto k = key();
        expect('=');
        assign(obj, k, value());
      } while (eat(','));
      expect('}');
      return obj;
    }
    const std::size_t start = i_;
    while (i_ < s_.size() && !std::strchr(",]} \t\r#", s_[i_])) ++i_;
    std::string tok = s_.substr(start, i_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) fail("missing value");
    const bool integral = tok.find_first_of(".eE") == std::string::npos &&
                          tok.find("inf") == std::string::npos && tok.find("nan") == std::string::npos;
    try {
      std::size_t used = 0;
      if (integral) {
        const long long v = std::stoll(tok, &used);
        if (used == tok.size()) return v;
      } else {
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

  void assign(json& root, const std::vector<std::string>& path, json v) const {
    json* node = &root;
    for (std::size_t p = 0; p + 1 < path.size(); ++p) {
      json& next = (*node)[path[p]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail("key '" + path[p] + "' is not a table");
      node = &next;
    }
    if (node->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*node)[path.back()] = std::move(v);
  }

 private:
  const std::string& s_;
  int line_;
  std::size_t i_ = 0;
};

const std::set<std::string>& known_top_keys() {
  static const std::set<std::string> keys = {
      "experiment", "n", "k", "spectral", "dt", "horizon", "replicas", "seed",
      "allow_long_horizon", "field", "geometry", "jet", "tube", "audit", "output", "fit"};
  return keys;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be a table");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown config key '" + where + (where.empty() ? "" : ".") + k + "'");
}

SpectralMeasure spectral_from(const json& j) {
  if (j.is_null()) return SpectralMeasure::point(1.0);
  check_keys(j, "spectral", {"kind", "rho", "mass", "weights", "rhos", "rho_max", "density"});
  const std::string kind = get_or<std::string>(j, "kind", "point");
  try {
    if (kind == "point") return SpectralMeasure(PointMass{get_or(j, "rho", 1.0), get_or(j, "mass", 1.0)});
    if (kind == "mixture")
      return SpectralMeasure(FiniteMixture{get_or(j, "weights", std::vector<double>{}),
                                           get_or(j, "rhos", std::vector<double>{})});
    if (kind == "density")
      return SpectralMeasure(TruncatedDensity{get_or(j, "rho_max", 1.0),
                                              get_or(j, "density", std::vector<double>{})});
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("spectral: ") + e.what());
  }
  throw ConfigError("spectral.kind must be point, mixture or density, got '" + kind + "'");
}

JetPreset preset_from(const json& jet, int n) {
  const std::string kind = get_or<std::string>(jet, "preset", "unit_sphere");
  if (kind == "unit_sphere") return UnitSpherePreset{n};
  if (kind == "ellipsoid") return EllipsoidPreset{get_or(jet, "semi_axes", std::vector<double>{})};
  if (kind == "curvature_diag") return CurvatureDiagPreset{get_or(jet, "kappas", std::vector<double>{})};
  throw ConfigError("jet.preset must be unit_sphere, ellipsoid or curvature_diag, got '" + kind + "'");
}

bool is_track_a(const std::string& e) {
  return e == "alpha-growth" || e == "alpha-sq-growth" || e == "kframe-growth" || e == "trace-growth";
}
bool is_track_b(const std::string& e) {
  return e == "curve-length" || e == "curve-length-3d" || e == "surface-area" ||
         e == "mean-curvature-integral" || e == "euler-invariance";
}

}  // namespace

json parse_config_text(const std::string& text) {
  json root = json::object();
  std::vector<std::string> section;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    LineParser p(line, number);
    if (p.at_end()) continue;
    if (p.eat('[')) {
      section = p.key();
      p.expect(']');
      if (!p.at_end()) p.fail("trailing characters after section header");
      json* node = &root;
      for (const auto& s : section) {
        json& next = (*node)[s];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) p.fail("section '" + s + "' collides with a value");
        node = &next;
      }
      continue;
    }
    auto path = p.key();
    p.expect('=');
    json v = p.value();
    if (!p.at_end()) p.fail("trailing characters after value");
    path.insert(path.begin(), section.begin(), section.end());
    p.assign(root, path, std::move(v));
  }
  return root;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "alpha-growth",   "alpha-sq-growth", "kframe-growth",           "trace-growth",
      "curve-length",   "curve-length-3d", "surface-area",            "mean-curvature-integral",
      "euler-invariance", "tube-check",    "noise-audit"};
  return names;
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "", known_top_keys());
  ExperimentConfig c;
  c.raw = j;
  const std::string dump = j.dump();
  c.hash = fnv1a64(dump.data(), dump.size());
  c.experiment = get_or<std::string>(j, "experiment", "");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end())
    throw ConfigError("unknown experiment '" + c.experiment + "'");

  // Dimension defaults follow the experiment where it is fixed.
  int default_n = 3;
  if (c.experiment == "curve-length") default_n = 2;
  c.n = get_or(j, "n", default_n);
  c.k = get_or(j, "k", c.experiment == "kframe-growth" ? 1 : 0);
  c.spectral = spectral_from(j.value("spectral", json()));
  c.dt = get_or(j, "dt", 1e-3);
  c.horizon = get_or(j, "horizon", 1.0);
  c.replicas = get_or(j, "replicas", is_track_a(c.experiment) ? 10000 : 200);
  c.seed = get_or<std::uint64_t>(j, "seed", 1);
  c.allow_long_horizon = get_or(j, "allow_long_horizon", false);

  const json fit = j.value("fit", json::object());
  check_keys(fit, "fit", {"grid_points", "batches"});
  c.grid_points = get_or(fit, "grid_points", 20);
  c.batches = get_or(fit, "batches", 20);

  const json field = j.value("field", json::object());
  check_keys(field, "field", {"features", "seed_offset", "compare_doubled"});
  c.features = get_or(field, "features", 256);
  c.field_seed_offset = get_or<std::uint64_t>(field, "seed_offset", 0);
  c.compare_doubled_features = get_or(field, "compare_doubled", false);

  const json geom = j.value("geometry", json::object());
  check_keys(geom, "geometry", {"kind", "level", "count", "radius", "path"});
  const bool curve = c.experiment == "curve-length" || c.experiment == "curve-length-3d";
  c.geometry.kind = get_or<std::string>(geom, "kind", curve ? "polygon" : "icosphere");
  c.geometry.level = get_or(geom, "level", 4);
  c.geometry.count = get_or(geom, "count", 1024);
  c.geometry.radius = get_or(geom, "radius", 1.0);
  c.geometry.path = get_or<std::string>(geom, "path", "");

  const json jet = j.value("jet", json::object());
  check_keys(jet, "jet", {"preset", "semi_axes", "kappas"});
  try {
    c.preset = preset_from(jet, c.n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const json tube = j.value("tube", json::object());
  check_keys(tube, "tube", {"radii", "rho", "samples", "lines", "shifts", "volume_level"});
  c.tube.radii = get_or(tube, "radii", c.tube.radii);
  c.tube.rho = get_or(tube, "rho", c.tube.rho);
  c.tube.samples = get_or<std::size_t>(tube, "samples", c.tube.samples);
  c.tube.lines = get_or<std::size_t>(tube, "lines", c.tube.lines);
  c.tube.shifts = get_or(tube, "shifts", c.tube.shifts);
  c.tube.volume_level = get_or(tube, "volume_level", c.tube.volume_level);

  const json audit = j.value("audit", json::object());
  check_keys(audit, "audit", {"samples", "oracle_samples"});
  c.audit_samples = get_or(audit, "samples", c.audit_samples);
  c.audit_oracle_samples = get_or(audit, "oracle_samples", c.audit_oracle_samples);

  const json out = j.value("output", json::object());
  check_keys(out, "output", {"dir", "plot"});
  c.out_dir = get_or<std::string>(out, "dir", "");
  c.plot = get_or(out, "plot", false);

  validate_config(c);
  return c;
}

ExperimentConfig parse_config(const std::string& text) { return config_from_json(parse_config_text(text)); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

double primary_predicted_rate(const ExperimentConfig& c) {
  const double mu2 = c.spectral.mu2();
  const std::string& e = c.experiment;
  if (e == "alpha-growth") return predicted_rate(RateKind::alpha(c.n), mu2);
  if (e == "alpha-sq-growth") return predicted_rate(RateKind::alpha_sq(c.n), mu2);
  if (e == "kframe-growth") return predicted_rate(RateKind::kframe(c.n, c.k), mu2);
  if (e == "trace-growth") return predicted_rate(RateKind::lk(c.n, c.k), mu2);
  if (e == "curve-length") return predicted_rate(RateKind::lk(2, 0), mu2);
  if (e == "curve-length-3d") return predicted_rate(RateKind::codim(3, 1), mu2);
  if (e == "surface-area") return predicted_rate(RateKind::lk(3, 0), mu2);
  if (e == "mean-curvature-integral") return predicted_rate(RateKind::lk(3, 1), mu2);
  return 0.0;
}

void validate_config(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  if (c.n < 2) throw ConfigError("n must be >= 2");
  if (e == "curve-length" && c.n != 2) throw ConfigError("curve-length runs in n = 2");
  if ((e == "curve-length-3d" || e == "surface-area" || e == "mean-curvature-integral" ||
       e == "euler-invariance" || e == "tube-check") && c.n != 3)
    throw ConfigError(e + " runs in n = 3");
  if (!is_track_a(e) && !is_track_b(e)) return;
  if (!(c.dt > 0.0) || !(c.horizon > 0.0)) throw ConfigError("dt and horizon must be positive");
  if (c.dt > c.horizon / 20.0 * (1.0 + 1e-12)) throw ConfigError("dt must be <= horizon / 20");
  if (c.replicas < 100) throw ConfigError("replicas must be >= 100");
  if (c.grid_points < 5) throw ConfigError("fit.grid_points must be >= 5");
  if (is_track_a(e) && (c.batches < 2 || c.replicas < 2 * c.batches))
    throw ConfigError("fit.batches must be >= 2 with at least 2 replicas per batch");
  if (is_track_b(e) && c.features < 1) throw ConfigError("field.features must be >= 1");
  if (is_track_b(e) && !(c.spectral.total_mass() > 0.0))
    throw ConfigError("spectral measure must have positive total mass");
  double rate = 0.0;
  try {
    rate = primary_predicted_rate(c);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  if (!c.allow_long_horizon && rate * c.horizon > 3.0)
    throw ConfigError("predicted rate * horizon = " + std::to_string(rate * c.horizon) +
                      " exceeds 3; set allow_long_horizon = true to override");
}

}  // namespace curvflow
