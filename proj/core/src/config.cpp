#include "morse/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "morse/errors.hpp"

namespace morse::config {
namespace {

using Json = nlohmann::ordered_json;

class Reader {
 public:
  void allow(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> keys) {
    if (!node) return;
    if (!node.IsMap()) {
      errors_.push_back("'" + path + "' must be a mapping");
      return;
    }
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        unknown_.push_back(path.empty() ? key : path + "." + key);
      }
    }
  }

  void require(const YAML::Node& node, const std::string& path) {
    if (!node) missing_.push_back(path);
  }

  template <class T>
  void get(const YAML::Node& node, const std::string& path, T& out) {
    if (!node) return;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      errors_.push_back("invalid value for '" + path + "'");
    }
  }

  void positive(double v, const std::string& path) {
    if (!(v > 0.0)) errors_.push_back("'" + path + "' must be positive");
  }

  void error(std::string msg) { errors_.push_back(std::move(msg)); }

  void finish() const {
    std::ostringstream os;
    if (!unknown_.empty()) {
      os << "unknown key" << (unknown_.size() > 1 ? "s" : "") << ":";
      for (const auto& k : unknown_) os << " '" << k << "'";
    }
    if (!missing_.empty()) {
      if (os.tellp() > 0) os << "; ";
      os << "missing key" << (missing_.size() > 1 ? "s" : "") << ":";
      for (const auto& k : missing_) os << " '" << k << "'";
    }
    for (const auto& e : errors_) {
      if (os.tellp() > 0) os << "; ";
      os << e;
    }
    if (os.tellp() > 0) throw ConfigError(os.str());
  }

 private:
  std::vector<std::string> unknown_;
  std::vector<std::string> missing_;
  std::vector<std::string> errors_;
};

Json to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Map: {
      Json j = Json::object();
      for (const auto& kv : n) j[kv.first.as<std::string>()] = to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      Json j = Json::array();
      for (const auto& v : n) j.push_back(to_json(v));
      return j;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = n.Scalar();
      if (n.Tag() != "!") {
        if (s == "true") return true;
        if (s == "false") return false;
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return d;
      }
      return s;
    }
    default:
      return nullptr;
  }
}

complex::Coefficients parse_coefficients(const std::string& text, Reader& r) {
  if (text == "Z") return complex::Coefficients::integers();
  if (text == "Q") return complex::Coefficients::rationals();
  if (text == "twisted") return complex::Coefficients::twisted({});
  if (text.rfind("Z/", 0) == 0) {
    std::int64_t p = 0;
    auto [ptr, ec] = std::from_chars(text.data() + 2, text.data() + text.size(), p);
    if (ec == std::errc() && ptr == text.data() + text.size() && p >= 2) return complex::Coefficients::mod(p);
  }
  r.error("unknown coefficient mode '" + text + "' (expected Z, Q, Z/p or twisted)");
  return complex::Coefficients::integers();
}

}  // namespace

geometry::ManifoldBackend RunConfig::manifold() const {
  if (manifold_kind == "sphere") return geometry::ManifoldBackend::unit_sphere(dim);
  if (manifold_kind == "torus") return geometry::ManifoldBackend::flat_torus(dim);
  if (manifold_kind == "klein") return geometry::ManifoldBackend::klein_bottle();
  if (manifold_kind == "implicit") {
    return geometry::ManifoldBackend::implicit(expr::parse(constraint, ambient_dim), euler, name);
  }
  throw ConfigError("unknown manifold kind '" + manifold_kind + "'");
}

expr::ScalarExpression RunConfig::function_expression(bool negate) const {
  const auto m = manifold();
  auto f = expr::parse(function, m.ambient_dim());
  return negate ? -f : f;
}

flow::FlowSpec RunConfig::flow_spec(bool negate) const {
  flow::FlowSpec spec = flow_kind == flow::FlowKind::Sphere17
                            ? flow::FlowSpec::sphere17(manifold(), direction)
                            : flow::FlowSpec::gradient(manifold(), function_expression(negate));
  spec.rtol = rtol;
  spec.atol = atol;
  spec.max_time = max_time;
  spec.capture_radius = capture_radius;
  return spec;
}

const NamedForm& RunConfig::form(const std::string& form_name) const {
  for (const auto& f : forms) {
    if (f.name == form_name) return f;
  }
  throw ConfigError("unknown form '" + form_name + "'");
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");

  Reader r;
  RunConfig c;
  r.allow(root, "", {"name", "manifold", "function", "flow", "critical", "integration", "connections", "residues",
                     "homology", "forms", "fme", "pairing", "chain_map", "output"});
  r.get(root["name"], "name", c.name);

  const YAML::Node man = root["manifold"];
  r.require(man, "manifold");
  r.allow(man, "manifold", {"kind", "dim", "ambient_dim", "constraint", "euler"});
  if (man) {
    r.require(man["kind"], "manifold.kind");
    r.get(man["kind"], "manifold.kind", c.manifold_kind);
    r.get(man["dim"], "manifold.dim", c.dim);
    r.get(man["ambient_dim"], "manifold.ambient_dim", c.ambient_dim);
    r.get(man["constraint"], "manifold.constraint", c.constraint);
    if (man["euler"]) {
      int e = 0;
      r.get(man["euler"], "manifold.euler", e);
      c.euler = e;
    }
    if (c.manifold_kind == "sphere" || c.manifold_kind == "torus") {
      r.require(man["dim"], "manifold.dim");
      if (man["dim"] && c.dim < 1) r.error("'manifold.dim' must be at least 1");
    } else if (c.manifold_kind == "klein") {
      c.dim = 2;
    } else if (c.manifold_kind == "implicit") {
      r.require(man["ambient_dim"], "manifold.ambient_dim");
      r.require(man["constraint"], "manifold.constraint");
      c.dim = c.ambient_dim - 1;
    } else if (!c.manifold_kind.empty()) {
      r.error("unknown manifold kind '" + c.manifold_kind + "'");
    }
  }

  const YAML::Node fl = root["flow"];
  r.allow(fl, "flow", {"kind", "direction"});
  std::string flow_kind = "gradient";
  if (fl) r.get(fl["kind"], "flow.kind", flow_kind);
  if (flow_kind == "sphere17") {
    c.flow_kind = flow::FlowKind::Sphere17;
    r.require(fl["direction"], "flow.direction");
    std::vector<double> d;
    if (fl) r.get(fl["direction"], "flow.direction", d);
    c.direction = Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
    if (c.manifold_kind != "sphere") r.error("the sphere17 flow lives on a sphere");
    if (fl["direction"] && static_cast<int>(d.size()) != c.dim) r.error("'flow.direction' needs one entry per chart axis");
  } else if (flow_kind == "gradient") {
    r.require(root["function"], "function");
    r.get(root["function"], "function", c.function);
  } else {
    r.error("unknown flow kind '" + flow_kind + "'");
  }

  const YAML::Node cr = root["critical"];
  r.allow(cr, "critical", {"grad_tol", "nondegen_tol", "merge_tol", "max_newton", "check_euler", "seed", "grid", "count", "box"});
  if (cr) {
    r.get(cr["grad_tol"], "critical.grad_tol", c.critical.grad_tol);
    r.get(cr["nondegen_tol"], "critical.nondegen_tol", c.critical.nondegen_tol);
    r.get(cr["merge_tol"], "critical.merge_tol", c.critical.merge_tol);
    r.get(cr["max_newton"], "critical.max_newton", c.critical.max_newton);
    r.get(cr["check_euler"], "critical.check_euler", c.critical.check_euler);
    r.get(cr["seed"], "critical.seed", c.seeds.seed);
    r.get(cr["grid"], "critical.grid", c.seeds.grid);
    r.get(cr["count"], "critical.count", c.seeds.count);
    r.get(cr["box"], "critical.box", c.seeds.box);
  }
  r.positive(c.critical.grad_tol, "critical.grad_tol");
  r.positive(c.critical.nondegen_tol, "critical.nondegen_tol");
  r.positive(c.critical.merge_tol, "critical.merge_tol");

  const YAML::Node in = root["integration"];
  r.allow(in, "integration", {"rtol", "atol", "max_time", "capture_radius"});
  if (in) {
    r.get(in["rtol"], "integration.rtol", c.rtol);
    r.get(in["atol"], "integration.atol", c.atol);
    r.get(in["max_time"], "integration.max_time", c.max_time);
    r.get(in["capture_radius"], "integration.capture_radius", c.capture_radius);
  }
  r.positive(c.rtol, "integration.rtol");
  r.positive(c.atol, "integration.atol");
  r.positive(c.max_time, "integration.max_time");
  r.positive(c.capture_radius, "integration.capture_radius");

  const YAML::Node cn = root["connections"];
  r.allow(cn, "connections", {"epsilon", "samples", "angle_tol"});
  if (cn) {
    r.get(cn["epsilon"], "connections.epsilon", c.connection.epsilon);
    r.get(cn["samples"], "connections.samples", c.connection.samples);
    r.get(cn["angle_tol"], "connections.angle_tol", c.connection.angle_tol);
  }
  r.positive(c.connection.epsilon, "connections.epsilon");
  r.positive(c.connection.angle_tol, "connections.angle_tol");

  const YAML::Node rs = root["residues"];
  r.allow(rs, "residues", {"epsilon0", "samples", "boundary_tol", "quad_tol", "full_measure_shortcut", "int_tol", "forms"});
  if (rs) {
    r.get(rs["epsilon0"], "residues.epsilon0", c.residue.epsilon0);
    r.get(rs["samples"], "residues.samples", c.residue.samples);
    r.get(rs["boundary_tol"], "residues.boundary_tol", c.residue.boundary_tol);
    r.get(rs["quad_tol"], "residues.quad_tol", c.residue.quad_tol);
    r.get(rs["full_measure_shortcut"], "residues.full_measure_shortcut", c.residue.full_measure_shortcut);
    r.get(rs["int_tol"], "residues.int_tol", c.int_tol);
    r.get(rs["forms"], "residues.forms", c.residue_forms);
  }
  r.positive(c.residue.epsilon0, "residues.epsilon0");
  r.positive(c.residue.boundary_tol, "residues.boundary_tol");
  r.positive(c.residue.quad_tol, "residues.quad_tol");
  r.positive(c.int_tol, "residues.int_tol");

  const YAML::Node ho = root["homology"];
  r.allow(ho, "homology", {"coefficients", "local_system", "duality"});
  if (ho) {
    if (ho["coefficients"]) {
      std::vector<std::string> modes;
      r.get(ho["coefficients"], "homology.coefficients", modes);
      c.coefficients.clear();
      for (const auto& m : modes) c.coefficients.push_back(parse_coefficients(m, r));
    }
    r.get(ho["duality"], "homology.duality", c.duality);
    const YAML::Node ls = ho["local_system"];
    r.allow(ls, "homology.local_system", {"rank", "generators"});
    complex::LocalSystem system;
    if (ls) {
      r.get(ls["rank"], "homology.local_system.rank", system.rank);
      std::vector<std::vector<std::vector<std::int64_t>>> gens;
      r.get(ls["generators"], "homology.local_system.generators", gens);
      for (const auto& g : gens) {
        if (static_cast<int>(g.size()) != system.rank) {
          r.error("local system matrices must be rank x rank");
          continue;
        }
        complex::IntMatrix m(system.rank, system.rank);
        for (int i = 0; i < system.rank; ++i) {
          if (static_cast<int>(g[static_cast<std::size_t>(i)].size()) != system.rank) {
            r.error("local system matrices must be rank x rank");
            break;
          }
          for (int j = 0; j < system.rank; ++j) m(i, j) = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        system.generators.push_back(m);
      }
    }
    for (auto& co : c.coefficients) {
      if (co.kind != complex::CoefficientKind::Twisted) continue;
      if (!ls) r.require(ls, "homology.local_system");
      co.local_system = system;
    }
  }

  const YAML::Node fo = root["forms"];
  if (fo && !fo.IsMap()) r.error("'forms' must be a mapping");
  std::set<std::string> form_names;
  if (fo && fo.IsMap()) {
    int nvars = 0;
    if (c.manifold_kind == "sphere") nvars = c.dim + 1;
    if (c.manifold_kind == "torus") nvars = c.dim;
    if (c.manifold_kind == "klein") nvars = 2;
    if (c.manifold_kind == "implicit") nvars = c.ambient_dim;
    for (const auto& kv : fo) {
      NamedForm nf;
      nf.name = kv.first.as<std::string>();
      if (!kv.second.IsMap()) {
        r.error("form '" + nf.name + "' must map monomials to coefficients");
        continue;
      }
      for (const auto& t : kv.second) nf.terms.emplace_back(t.first.as<std::string>(), t.second.as<std::string>());
      if (nvars > 0) {
        try {
          nf.form = expr::parse_form(nf.terms, nvars);
        } catch (const Error& e) {
          r.error("form '" + nf.name + "': " + e.what());
        }
      }
      form_names.insert(nf.name);
      c.forms.push_back(std::move(nf));
    }
  }
  auto check_form = [&](const std::string& name, const std::string& where) {
    if (!form_names.count(name)) r.error("'" + where + "' refers to unknown form '" + name + "'");
  };
  for (const auto& f : c.residue_forms) check_form(f, "residues.forms");

  const YAML::Node fm = root["fme"];
  r.allow(fm, "fme", {"form", "samples", "seed", "fd_step", "margin", "tolerance"});
  if (fm) {
    FmeConfig f;
    r.require(fm["form"], "fme.form");
    r.get(fm["form"], "fme.form", f.form);
    r.get(fm["samples"], "fme.samples", f.samples);
    r.get(fm["seed"], "fme.seed", f.seed);
    r.get(fm["fd_step"], "fme.fd_step", f.fd_step);
    r.get(fm["margin"], "fme.margin", f.margin);
    r.get(fm["tolerance"], "fme.tolerance", f.tolerance);
    r.positive(f.fd_step, "fme.fd_step");
    r.positive(f.margin, "fme.margin");
    r.positive(f.tolerance, "fme.tolerance");
    if (fm["form"]) check_form(f.form, "fme.form");
    c.fme = f;
  }

  const YAML::Node pa = root["pairing"];
  r.allow(pa, "pairing", {"forms", "tolerance"});
  if (pa) {
    r.get(pa["forms"], "pairing.forms", c.pairing_forms);
    r.get(pa["tolerance"], "pairing.tolerance", c.pairing_tol);
    r.positive(c.pairing_tol, "pairing.tolerance");
    for (const auto& f : c.pairing_forms) check_form(f, "pairing.forms");
  }

  const YAML::Node ch = root["chain_map"];
  r.allow(ch, "chain_map", {"forms", "tolerance"});
  if (ch) {
    r.get(ch["forms"], "chain_map.forms", c.chain_forms);
    r.get(ch["tolerance"], "chain_map.tolerance", c.chain_tol);
    r.positive(c.chain_tol, "chain_map.tolerance");
    for (const auto& f : c.chain_forms) check_form(f, "chain_map.forms");
  }

  r.get(root["output"], "output", c.output);
  if (c.name.empty()) c.name = c.manifold_kind;
  r.finish();

  for (const auto& kv : root) {
    c.sections[kv.first.as<std::string>()] = nlohmann::json(to_json(kv.second)).dump();
  }
  c.echo_json = to_json(root).dump();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace morse::config
