#include "plate/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace plate {

using nlohmann::json;

namespace {

// Typed access to one JSON object with field paths in every error.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return node_.contains(key); }
  const json& raw(const std::string& key) const { return node_.at(key); }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& item : node_.items())
      if (!known.count(item.key())) throw ConfigError(at(item.key()), "unknown field");
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return as_number(node_.at(key), at(key));
  }
  double required_number(const std::string& key) const {
    if (!has(key)) throw ConfigError(at(key), "required field missing");
    return as_number(node_.at(key), at(key));
  }
  Index integer(const std::string& key, Index fallback) const {
    if (!has(key)) return fallback;
    return as_integer(node_.at(key), at(key));
  }
  Index required_integer(const std::string& key) const {
    if (!has(key)) throw ConfigError(at(key), "required field missing");
    return as_integer(node_.at(key), at(key));
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!node_.at(key).is_string()) throw ConfigError(at(key), "expected a string");
    return node_.at(key).get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback,
                              size_t exact = 0) const {
    if (!has(key)) return fallback;
    return as_numbers(node_.at(key), at(key), exact);
  }
  Section child(const std::string& key) const { return Section(node_.at(key), at(key)); }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
  }
  static Index as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<Index>();
  }
  static std::vector<double> as_numbers(const json& v, const std::string& path, size_t exact) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    if (exact > 0 && v.size() != exact)
      throw ConfigError(path, "expected " + std::to_string(exact) + " entries");
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const json& node_;
  std::string path_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

std::pair<double, double> range(const Section& s, const std::string& key, std::pair<double, double> fallback,
                                bool allow_degenerate = false) {
  if (!s.has(key)) return fallback;
  const auto v = s.numbers(key, {}, 2);
  require(allow_degenerate ? v[1] >= v[0] : v[1] > v[0], s.at(key), "range must be nonempty [lo, hi]");
  return {v[0], v[1]};
}

Terms parse_terms(const Section& s, const std::string& key, const Terms& fallback) {
  if (!s.has(key)) return fallback;
  const json& v = s.raw(key);
  const std::string path = s.at(key);
  require(v.is_array() && !v.empty(), path, "expected a nonempty array of [i, j, coefficient]");
  Terms terms;
  for (size_t n = 0; n < v.size(); ++n) {
    const std::string item = path + "[" + std::to_string(n) + "]";
    require(v[n].is_array() && v[n].size() == 3, item, "expected [i, j, coefficient]");
    const Index i = Section::as_integer(v[n][0], item + "[0]");
    const Index j = Section::as_integer(v[n][1], item + "[1]");
    const double c = Section::as_number(v[n][2], item + "[2]");
    require(i >= 0 && j >= 0 && i + j <= Polynomial2::kMaxDegree, item, "monomial exceeds total degree 4");
    terms.emplace_back(static_cast<int>(i), static_cast<int>(j), c);
  }
  return terms;
}

RegionConfig parse_region(const Section& s, RegionConfig r) {
  if (s.has("region")) {
    const auto v = s.numbers("region", {}, 4);
    require(v[1] > v[0] && v[3] > v[2], s.at("region"), "expected [x_lo, x_hi, y_lo, y_hi] with lo < hi");
    r.x_lo = v[0];
    r.x_hi = v[1];
    r.y_lo = v[2];
    r.y_hi = v[3];
  }
  if (s.has("grid")) {
    const json& g = s.raw("grid");
    require(g.is_array() && g.size() == 2, s.at("grid"), "expected [nx, ny]");
    r.nx = Section::as_integer(g[0], s.at("grid") + "[0]");
    r.ny = Section::as_integer(g[1], s.at("grid") + "[1]");
    require(r.nx >= 16 && r.ny >= 16, s.at("grid"), "needs at least 16 samples per axis");
    require(r.nx * r.ny <= 1000000, s.at("grid"), "exceeds 10^6 samples");
  }
  return r;
}

Vec2 pair_vec(const Section& s, const std::string& key, const Vec2& fallback) {
  if (!s.has(key)) return fallback;
  const auto v = s.numbers(key, {}, 2);
  return {v[0], v[1]};
}

FlowConfig parse_flow(const Section& s) {
  s.allow({"psi", "region", "grid", "arcs", "tube_radius", "step"});
  FlowConfig f;
  f.psi = parse_terms(s, "psi", f.psi);
  f.region = parse_region(s, f.region);
  f.spec.tube_radius = s.number("tube_radius", f.spec.tube_radius);
  require(f.spec.tube_radius > 0.0, s.at("tube_radius"), "must be positive");
  f.spec.step = s.number("step", f.spec.step);
  require(f.spec.step > 0.0 && f.spec.step <= 0.1, s.at("step"), "must lie in (0, 0.1]");
  if (s.has("arcs")) {
    const json& arcs = s.raw("arcs");
    require(arcs.is_array(), s.at("arcs"), "expected an array of {center, direction}");
    f.spec.arcs.clear();
    for (size_t n = 0; n < arcs.size(); ++n) {
      const Section a(arcs[n], s.at("arcs") + "[" + std::to_string(n) + "]");
      a.allow({"center", "direction"});
      Arc arc;
      arc.center = pair_vec(a, "center", arc.center);
      arc.direction = pair_vec(a, "direction", arc.direction);
      require(arc.direction.norm() > 0.0, a.at("direction"), "must be nonzero");
      f.spec.arcs.push_back(arc);
    }
  }
  return f;
}

CarlemanConfig parse_carleman(const Section& s) {
  s.allow({"psi", "lambda_c", "gamma", "h_values", "region", "grid", "bump", "n_xi", "lambda_sweep",
           "bracket_samples", "flow"});
  CarlemanConfig c;
  c.psi = parse_terms(s, "psi", c.psi);
  c.lambda_c = s.number("lambda_c", c.lambda_c);
  require(c.lambda_c > 0.0, s.at("lambda_c"), "must be positive");
  try {
    c.gamma = parse_side(s.text("gamma", "left"));
  } catch (const ValidationError& e) {
    throw ConfigError(s.at("gamma"), e.what());
  }
  c.h_values = s.numbers("h_values", c.h_values);
  require(!c.h_values.empty(), s.at("h_values"), "must be nonempty");
  for (size_t k = 0; k < c.h_values.size(); ++k) {
    require(c.h_values[k] > 0.0, s.at("h_values"), "entries must be positive");
    require(k == 0 || c.h_values[k] < c.h_values[k - 1], s.at("h_values"), "must be strictly decreasing");
  }
  c.region = parse_region(s, c.region);
  c.bump.gamma = c.gamma;
  if (s.has("bump")) {
    const Section b = s.child("bump");
    b.allow({"center", "sigma", "amplitude"});
    c.bump.center = pair_vec(b, "center", c.bump.center);
    c.bump.sigma = b.number("sigma", c.bump.sigma);
    require(c.bump.sigma > 0.0, b.at("sigma"), "must be positive");
    c.bump.amplitude = b.number("amplitude", c.bump.amplitude);
  }
  c.n_xi = s.integer("n_xi", c.n_xi);
  require(c.n_xi >= 8, s.at("n_xi"), "must be at least 8");
  c.lambda_sweep = s.numbers("lambda_sweep", c.lambda_sweep);
  require(c.lambda_sweep.size() >= 2, s.at("lambda_sweep"), "needs at least two values");
  for (double l : c.lambda_sweep) require(l > 0.0, s.at("lambda_sweep"), "entries must be positive");
  c.bracket_samples = s.integer("bracket_samples", c.bracket_samples);
  require(c.bracket_samples >= 1 && c.bracket_samples <= 1000000, s.at("bracket_samples"),
          "must lie in [1, 10^6]");
  if (s.has("flow")) c.flow = parse_flow(s.child("flow"));
  return c;
}

json terms_json(const Terms& terms) {
  json out = json::array();
  for (const auto& [i, j, c] : terms) out.push_back({i, j, c});
  return out;
}

json region_json(const RegionConfig& r) {
  return {{"region", {r.x_lo, r.x_hi, r.y_lo, r.y_hi}}, {"grid", {r.nx, r.ny}}};
}

}  // namespace

const MeshConfig& ExperimentConfig::require_mesh() const {
  if (!mesh) throw ConfigError("mesh.N", "required field missing (no mesh section)");
  return *mesh;
}

ExperimentConfig parse_config(const json& raw) {
  const Section root(raw, "");
  root.allow({"seed", "mesh", "damping", "evolution", "scan", "resolvent", "carleman", "output"});
  ExperimentConfig config;

  if (root.has("seed")) {
    const json& s = root.raw("seed");
    require(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0), "seed",
            "expected a non-negative integer");
    config.seed = s.get<std::uint64_t>();
  }

  if (root.has("mesh")) {
    const Section s = root.child("mesh");
    s.allow({"L", "x0", "c1", "c2", "N"});
    MeshConfig m;
    m.L = s.number("L", m.L);
    require(m.L > 0.0, s.at("L"), "must be positive");
    m.x0 = s.number("x0", 0.5 * m.L);
    require(m.x0 > 0.0 && m.x0 < m.L, s.at("x0"), "must lie strictly inside (0, L)");
    m.c1 = s.number("c1", m.c1);
    require(m.c1 > 0.0, s.at("c1"), "must be positive");
    m.c2 = s.number("c2", m.c2);
    require(m.c2 > 0.0, s.at("c2"), "must be positive");
    m.N = s.required_integer("N");
    require(m.N >= 8 && m.N <= 1001, s.at("N"), "must lie in [8, 1001]");
    config.mesh = m;
  }

  if (root.has("damping")) {
    const Section s = root.child("damping");
    s.allow({"a", "b", "boundary"});
    DampingConfig& d = config.damping;
    d.a = s.number("a", d.a);
    d.b = s.number("b", d.b);
    require(d.a >= 0.0, s.at("a"), "must be >= 0");
    require(d.b >= 0.0, s.at("b"), "must be >= 0");
    const std::string end = s.text("boundary", "feedback");
    if (end == "feedback") {
      d.end = EndCondition::Feedback;
    } else if (end == "hinged") {
      d.end = EndCondition::Hinged;
      require(d.a == 0.0 && d.b == 0.0, s.at("boundary"), "the hinged end carries no feedback (a = b = 0)");
    } else {
      throw ConfigError(s.at("boundary"), "expected \"feedback\" or \"hinged\"");
    }
    if (d.a > 0.0 || d.b > 0.0)
      require(std::min(d.a, d.b) > 0.0, s.at(d.a > 0.0 ? "b" : "a"),
              "damped runs require min(a, b) > 0");
  }

  if (root.has("evolution")) {
    const Section s = root.child("evolution");
    s.allow({"dt", "T", "k", "output_stride", "initial_modes"});
    EvolutionConfig& e = config.evolution;
    e.dt = s.number("dt", e.dt);
    require(e.dt >= 0.0, s.at("dt"), "must be >= 0 (0 selects the default step)");
    e.T = s.number("T", e.T);
    require(e.T > 0.0, s.at("T"), "must be positive");
    e.k = static_cast<int>(s.integer("k", e.k));
    require(e.k >= 1, s.at("k"), "must be a positive integer");
    e.output_stride = s.integer("output_stride", e.output_stride);
    require(e.output_stride >= 1, s.at("output_stride"), "must be >= 1");
    e.initial_modes = s.integer("initial_modes", e.initial_modes);
    require(e.initial_modes >= 1 && e.initial_modes <= 64, s.at("initial_modes"), "must lie in [1, 64]");
    if (e.dt > 0.0) require(e.T / e.dt <= 2e7, s.at("T"), "more than 2e7 steps");
  }

  if (root.has("scan")) {
    const Section s = root.child("scan");
    s.allow({"re_range", "im_range", "resolution", "cutoff"});
    ScanConfig& c = config.scan;
    std::tie(c.re_lo, c.re_hi) = range(s, "re_range", {c.re_lo, c.re_hi});
    std::tie(c.im_lo, c.im_hi) = range(s, "im_range", {c.im_lo, c.im_hi}, true);
    if (s.has("resolution")) {
      const json& r = s.raw("resolution");
      require(r.is_array() && r.size() == 2, s.at("resolution"), "expected [n_re, n_im]");
      c.n_re = Section::as_integer(r[0], s.at("resolution") + "[0]");
      c.n_im = Section::as_integer(r[1], s.at("resolution") + "[1]");
    }
    require(c.n_re >= 2 && c.n_im >= 1, s.at("resolution"), "needs n_re >= 2 and n_im >= 1");
    require(c.n_re * c.n_im <= 10000, s.at("resolution"), "exceeds 10^4 grid points");
    c.cutoff = s.number("cutoff", c.cutoff);
    require(c.cutoff >= 0.0, s.at("cutoff"), "must be >= 0");
  }

  if (root.has("resolvent")) {
    const Section s = root.child("resolvent");
    s.allow({"samples", "re_range", "im_max", "data_modes"});
    ResolventConfig& r = config.resolvent;
    r.samples = s.integer("samples", r.samples);
    require(r.samples >= 1 && r.samples <= 1000, s.at("samples"), "must lie in [1, 1000]");
    std::tie(r.re_lo, r.re_hi) = range(s, "re_range", {r.re_lo, r.re_hi});
    require(r.re_lo > 0.0, s.at("re_range"), "Re lambda must stay positive");
    r.im_max = s.number("im_max", r.im_max);
    require(r.im_max >= 0.0, s.at("im_max"), "must be >= 0");
    r.data_modes = s.integer("data_modes", r.data_modes);
    require(r.data_modes >= 1 && r.data_modes <= 64, s.at("data_modes"), "must lie in [1, 64]");
  }

  if (root.has("carleman")) config.carleman = parse_carleman(root.child("carleman"));
  config.carleman.bump.gamma = config.carleman.gamma;

  if (root.has("output")) {
    const Section s = root.child("output");
    s.allow({"directory", "formats"});
    config.output.directory = s.text("directory", config.output.directory);
    require(!config.output.directory.empty(), s.at("directory"), "must be nonempty");
    if (s.has("formats")) {
      const json& f = s.raw("formats");
      require(f.is_array(), s.at("formats"), "expected an array of strings");
      config.output.formats.clear();
      for (size_t n = 0; n < f.size(); ++n) {
        const std::string path = s.at("formats") + "[" + std::to_string(n) + "]";
        require(f[n].is_string(), path, "expected a string");
        const std::string name = f[n].get<std::string>();
        require(name == "csv" || name == "json" || name == "svg", path, "expected csv, json or svg");
        config.output.formats.push_back(name);
      }
    }
  }
  return config;
}

json to_json(const ExperimentConfig& c) {
  json out;
  out["seed"] = c.seed;
  if (c.mesh) out["mesh"] = {{"L", c.mesh->L}, {"x0", c.mesh->x0}, {"c1", c.mesh->c1}, {"c2", c.mesh->c2}, {"N", c.mesh->N}};
  out["damping"] = {{"a", c.damping.a},
                    {"b", c.damping.b},
                    {"boundary", c.damping.end == EndCondition::Hinged ? "hinged" : "feedback"}};
  out["evolution"] = {{"dt", c.evolution.dt},
                      {"T", c.evolution.T},
                      {"k", c.evolution.k},
                      {"output_stride", c.evolution.output_stride},
                      {"initial_modes", c.evolution.initial_modes}};
  out["scan"] = {{"re_range", {c.scan.re_lo, c.scan.re_hi}},
                 {"im_range", {c.scan.im_lo, c.scan.im_hi}},
                 {"resolution", {c.scan.n_re, c.scan.n_im}},
                 {"cutoff", c.scan.cutoff}};
  out["resolvent"] = {{"samples", c.resolvent.samples},
                      {"re_range", {c.resolvent.re_lo, c.resolvent.re_hi}},
                      {"im_max", c.resolvent.im_max},
                      {"data_modes", c.resolvent.data_modes}};

  const CarlemanConfig& k = c.carleman;
  json carleman = region_json(k.region);
  carleman["psi"] = terms_json(k.psi);
  carleman["lambda_c"] = k.lambda_c;
  carleman["gamma"] = side_name(k.gamma);
  carleman["h_values"] = k.h_values;
  carleman["bump"] = {{"center", {k.bump.center.x(), k.bump.center.y()}},
                      {"sigma", k.bump.sigma},
                      {"amplitude", k.bump.amplitude}};
  carleman["n_xi"] = k.n_xi;
  carleman["lambda_sweep"] = k.lambda_sweep;
  carleman["bracket_samples"] = k.bracket_samples;
  json flow = region_json(k.flow.region);
  flow["psi"] = terms_json(k.flow.psi);
  flow["tube_radius"] = k.flow.spec.tube_radius;
  flow["step"] = k.flow.spec.step;
  flow["arcs"] = json::array();
  for (const Arc& a : k.flow.spec.arcs)
    flow["arcs"].push_back({{"center", {a.center.x(), a.center.y()}}, {"direction", {a.direction.x(), a.direction.y()}}});
  carleman["flow"] = flow;
  out["carleman"] = carleman;

  out["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace plate
