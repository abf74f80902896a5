#include "morse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "morse/errors.hpp"

#ifndef MORSE_VERSION_STRING
#define MORSE_VERSION_STRING "dev"
#endif

namespace morse::pipeline {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using critical::CriticalSet;
using connections::ConnectionData;

// ---------------------------------------------------------------------------
// JSON round trips (doubles are written shortest-round-trip by the library)

Json vec_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vec_from(const Json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json mat_json(const Mat& m) {
  Json cols = Json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) cols.push_back(vec_json(m.col(c)));
  return Json{{"rows", m.rows()}, {"cols", cols}};
}

Mat mat_from(const Json& j) {
  const auto& cols = j.at("cols");
  Mat m(j.at("rows").get<Eigen::Index>(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = vec_from(cols[c]);
  return m;
}

Json frame_json(const geometry::TangentFrame& f) {
  return Json{{"base", vec_json(f.base)}, {"vectors", mat_json(f.vectors)}, {"orientation", f.orientation_sign}};
}

geometry::TangentFrame frame_from(const Json& j) {
  geometry::TangentFrame f;
  f.base = vec_from(j.at("base"));
  f.vectors = mat_from(j.at("vectors"));
  f.orientation_sign = j.at("orientation").get<int>();
  return f;
}

Json critical_json(const CriticalSet& cs) {
  Json pts = Json::array();
  for (const auto& p : cs.points) {
    pts.push_back(Json{{"id", p.id},
                       {"location", vec_json(p.location)},
                       {"value", p.value},
                       {"index", p.index},
                       {"eigenvalues", vec_json(p.eigenvalues)},
                       {"unstable", frame_json(p.unstable_frame)},
                       {"stable", frame_json(p.stable_frame)},
                       {"hyperbolic_radius", p.hyperbolic_radius}});
  }
  return Json{{"pairing_radius", cs.pairing_radius}, {"points", pts}};
}

CriticalSet critical_from(const Json& j) {
  CriticalSet cs;
  cs.pairing_radius = j.at("pairing_radius").get<double>();
  for (const auto& e : j.at("points")) {
    critical::CriticalPoint p;
    p.id = e.at("id").get<int>();
    p.location = vec_from(e.at("location"));
    p.value = e.at("value").get<double>();
    p.index = e.at("index").get<int>();
    p.eigenvalues = vec_from(e.at("eigenvalues"));
    p.unstable_frame = frame_from(e.at("unstable"));
    p.stable_frame = frame_from(e.at("stable"));
    p.hyperbolic_radius = e.at("hyperbolic_radius").get<double>();
    cs.points.push_back(std::move(p));
  }
  return cs;
}

Json deck_json(const geometry::DeckElement& d) { return Json(d.shifts); }

geometry::DeckElement deck_from(const Json& j) { return {j.get<std::vector<long>>()}; }

Json connections_json(const ConnectionData& data) {
  Json lines = Json::array();
  for (const auto& [key, list] : data.lines) {
    for (const auto& l : list) {
      Json pts = Json::array();
      for (const auto& x : l.representative.points) pts.push_back(vec_json(x));
      lines.push_back(Json{{"from", l.from},
                           {"to", l.to},
                           {"sign", l.sign},
                           {"shot_from", l.shot_from},
                           {"parameter", l.parameter},
                           {"deck", deck_json(l.deck)},
                           {"times", l.representative.times},
                           {"points", pts},
                           {"converged", l.representative.status == flow::Status::Converged},
                           {"limit", l.representative.limit},
                           {"limit_deck", deck_json(l.representative.limit_deck)}});
    }
  }
  return Json{{"lines", lines}, {"warnings", data.warnings}};
}

ConnectionData connections_from(const Json& j) {
  ConnectionData data;
  for (const auto& e : j.at("lines")) {
    connections::FlowLine l;
    l.from = e.at("from").get<int>();
    l.to = e.at("to").get<int>();
    l.sign = e.at("sign").get<int>();
    l.shot_from = e.at("shot_from").get<int>();
    l.parameter = e.at("parameter").get<double>();
    l.deck = deck_from(e.at("deck"));
    l.representative.times = e.at("times").get<std::vector<double>>();
    for (const auto& x : e.at("points")) l.representative.points.push_back(vec_from(x));
    l.representative.status = e.at("converged").get<bool>() ? flow::Status::Converged : flow::Status::MaxTime;
    l.representative.limit = e.at("limit").get<int>();
    l.representative.limit_deck = deck_from(e.at("limit_deck"));
    data.lines[{l.to, l.from}].push_back(std::move(l));
  }
  data.warnings = j.at("warnings").get<std::vector<std::string>>();
  return data;
}

Json matrix_json(const complex::IntMatrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

Json homology_json(const complex::HomologyResult& h) {
  Json torsion = Json::array();
  for (const auto& t : h.torsion) {
    Json d = Json::array();
    for (const auto& v : t) d.push_back(v.str());
    torsion.push_back(d);
  }
  return Json{{"coefficients", h.coefficients},
              {"betti", h.betti},
              {"torsion", torsion},
              {"euler_characteristic", h.euler_characteristic()}};
}

std::string homology_text(const complex::HomologyResult& h) {
  std::ostringstream os;
  const std::string ring = h.coefficients == "Z" ? "Z" : h.coefficients;
  os << "(";
  for (std::size_t k = 0; k < h.betti.size(); ++k) {
    if (k) os << ", ";
    std::vector<std::string> parts;
    if (h.betti[k] == 1) parts.push_back(ring);
    if (h.betti[k] > 1) parts.push_back(ring + "^" + std::to_string(h.betti[k]));
    if (k < h.torsion.size()) {
      for (const auto& t : h.torsion[k]) parts.push_back("Z/" + t.str());
    }
    if (parts.empty()) os << "0";
    for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? " + " : "") << parts[i];
  }
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// cache

class Cache {
 public:
  Cache(fs::path dir, bool enabled) : dir_(std::move(dir)), enabled_(enabled) {}

  std::optional<Json> load(const std::string& stage, const std::string& key) const {
    if (!enabled_) return std::nullopt;
    std::ifstream in(path(stage, key));
    if (!in) return std::nullopt;
    try {
      Json j = Json::parse(in);
      if (j.value("key", "") != key) return std::nullopt;
      return j.at("data");
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void store(const std::string& stage, const std::string& key, const Json& data) const {
    fs::create_directories(dir_);
    const fs::path target = path(stage, key);
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << Json{{"key", key}, {"stage", stage}, {"data", data}}.dump();
    }
    fs::rename(tmp, target);
  }

 private:
  fs::path path(const std::string& stage, const std::string& key) const { return dir_ / (stage + "-" + key + ".json"); }

  fs::path dir_;
  bool enabled_;
};

std::string section(const config::RunConfig& cfg, const std::string& name) {
  const auto it = cfg.sections.find(name);
  return it == cfg.sections.end() ? std::string("~") : it->second;
}

std::string stage_key(const config::RunConfig& cfg, const std::string& stage, std::initializer_list<const char*> names,
                      const std::string& extra = "") {
  std::string text = std::string("morsecurrents ") + MORSE_VERSION_STRING + "\n" + stage + "\n" + extra + "\n";
  for (const char* n : names) text += std::string(n) + ":\n" + section(cfg, n) + "\n";
  return sha256_hex(text);
}

// ---------------------------------------------------------------------------
// CSV

std::string coord_header(int n) {
  std::string s;
  for (int i = 1; i <= n; ++i) s += ",x" + std::to_string(i);
  return s;
}

void write_coords(std::ostream& os, const Vec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) os << ',' << x[i];
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"critical-points", "connections", "complex", "homology", "residues",
                                              "verify-fme",      "pairing",     "report",  "all"};
  return names;
}

std::string sha256_hex(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string strip_timings(const std::string& report_json) {
  Json j = Json::parse(report_json);
  j.erase("timings");
  return j.dump(2);
}

namespace {

class Runner {
 public:
  Runner(const config::RunConfig& cfg, const Options& options)
      : cfg_(cfg),
        options_(options),
        out_(options.out_dir),
        cache_(out_ / "cache", options.use_cache),
        manifold_(cfg.manifold()),
        spec_(cfg.flow_spec()) {}

  Outcome run(const std::string& sub) {
    const auto& subs = subcommands();
    if (std::find(subs.begin(), subs.end(), sub) == subs.end()) throw ConfigError("unknown subcommand '" + sub + "'");
    const bool everything = sub == "all" || sub == "report";
    const bool gradient = cfg_.flow_kind == flow::FlowKind::GradientUphill;
    if (!gradient && !(sub == "verify-fme" || everything)) {
      throw ConfigError("'" + sub + "' needs a gradient flow; sphere17 configs support verify-fme only");
    }
    fs::create_directories(out_);

    report_["schema"] = kSchema;
    report_["version"] = MORSE_VERSION_STRING;
    report_["name"] = cfg_.name;
    report_["subcommand"] = sub;
    report_["config"] = Json::parse(cfg_.echo_json);
    report_["manifold"] = Json{{"kind", cfg_.manifold_kind},
                               {"name", manifold_.name()},
                               {"dim", manifold_.dim()},
                               {"ambient_dim", manifold_.ambient_dim()},
                               {"orientable", manifold_.orientable()}};
    text_ << "morsecurrents " << MORSE_VERSION_STRING << "  " << cfg_.name << "  [" << sub << "]\n";
    text_ << "manifold: " << manifold_.name() << " (dim " << manifold_.dim() << ")\n";

    if (gradient) {
      critical_stage();
      if (sub == "connections" || sub == "complex" || sub == "homology" || everything) {
        connections_stage();
        write_flow_lines();
      }
      if (sub == "complex" || sub == "homology" || everything) complex_stage();
      if (sub == "homology" || everything) {
        inequalities_stage();
        if (cfg_.duality) duality_stage();
      }
      if (sub == "residues" || everything) {
        residues_stage();
        if (!cfg_.chain_forms.empty()) chain_map_stage();
        clouds_stage();
      }
      if ((sub == "pairing" || everything) && !cfg_.pairing_forms.empty()) pairing_stage();
    }
    if ((sub == "verify-fme" || everything) && cfg_.fme) fme_stage();
    if (sub == "verify-fme" && !cfg_.fme) throw ConfigError("missing key: 'fme'");

    report_["verdict"] = Json{{"passed", failures_.empty()}, {"failures", failures_}};
    report_["timings"] = timings_;
    text_ << "\nverdict: " << (failures_.empty() ? "PASS" : "FAIL") << "\n";
    for (const auto& f : failures_) text_ << "  " << f << "\n";

    Outcome o;
    o.exit_code = failures_.empty() ? 0 : 2;
    o.failures = failures_;
    o.report_json = report_.dump(2);
    o.report_text = text_.str();
    o.cache_hits = hits_;
    std::ofstream(out_ / "report.json") << o.report_json << "\n";
    std::ofstream(out_ / "report.txt") << o.report_text;
    return o;
  }

 private:
  using Clock = std::chrono::steady_clock;

  void log(const std::string& line) const {
    if (options_.log) *options_.log << line << std::endl;
  }

  void timed(const std::string& name, bool cached, Clock::time_point start) {
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    timings_[name] = Json{{"seconds", s}, {"cached", cached}};
    if (cached) hits_.push_back(name);
    log(name + (cached ? " (cached)" : "") + ": " + std::to_string(s) + " s");
  }

  void fail(std::string what) { failures_.push_back(std::move(what)); }

  CriticalSet find_critical(bool negate, const std::string& stage) {
    const auto start = Clock::now();
    const std::string key =
        stage_key(cfg_, stage, {"manifold", "function", "flow", "critical"}, negate ? "negated" : "");
    if (auto hit = cache_.load(stage, key)) {
      timed(stage, true, start);
      return critical_from(*hit);
    }
    log(stage + ": searching");
    CriticalSet cs = critical::find_critical_points(manifold_, cfg_.function_expression(negate), cfg_.seeds, cfg_.critical);
    cache_.store(stage, key, critical_json(cs));
    timed(stage, false, start);
    return cs;
  }

  ConnectionData find_connections(const flow::FlowSpec& spec, const CriticalSet& cs, bool negate,
                                  const std::string& stage) {
    const auto start = Clock::now();
    const std::string key = stage_key(cfg_, stage, {"manifold", "function", "flow", "critical", "integration", "connections"},
                                      negate ? "negated" : "");
    if (auto hit = cache_.load(stage, key)) {
      timed(stage, true, start);
      return connections_from(*hit);
    }
    log(stage + ": shooting");
    ConnectionData data = connections::find_all_connections(spec, cs, cfg_.connection);
    cache_.store(stage, key, connections_json(data));
    timed(stage, false, start);
    return data;
  }

  void critical_stage() {
    cs_ = find_critical(false, "critical");
    Json table = Json::array();
    text_ << "\ncritical points\n  id  index  value         location\n";
    for (const auto& p : cs_.points) {
      table.push_back(Json{{"id", p.id},
                           {"location", vec_json(p.location)},
                           {"value", p.value},
                           {"index", p.index},
                           {"eigenvalues", vec_json(p.eigenvalues)}});
      std::ostringstream loc;
      loc << std::setprecision(6);
      for (Eigen::Index i = 0; i < p.location.size(); ++i) loc << (i ? " " : "") << p.location[i];
      text_ << "  " << std::setw(2) << p.id << "  " << std::setw(5) << p.index << "  " << std::setw(12)
            << std::setprecision(6) << p.value << "  (" << loc.str() << ")\n";
    }
    report_["critical_points"] = table;
    report_["critical_counts"] = cs_.counts_by_index(manifold_.dim());
  }

  void connections_stage() {
    connections_or_load();
    Json table = Json::array();
    text_ << "\nconnections (from -> to: signed count / lines)\n";
    for (const auto& [key, lines] : data_.lines) {
      int signed_count = 0;
      Json signs = Json::array();
      for (const auto& l : lines) {
        signed_count += l.sign;
        signs.push_back(l.sign);
      }
      table.push_back(Json{{"from", key.second},
                           {"to", key.first},
                           {"sign", signed_count},
                           {"count", static_cast<int>(lines.size())},
                           {"line_signs", signs}});
      text_ << "  " << key.second << " -> " << key.first << ": " << signed_count << " / " << lines.size() << "\n";
    }
    report_["connections"] = table;
    report_["connection_warnings"] = data_.warnings;
    for (const auto& w : data_.warnings) text_ << "  warning: " << w << "\n";
  }

  void write_flow_lines() {
    const int n = manifold_.ambient_dim();
    std::ofstream lines(out_ / "flow_lines.csv");
    lines << std::setprecision(17) << "line,from,to,sign,t" << coord_header(n) << "\n";
    const fs::path dir = out_ / "trajectories";
    fs::create_directories(dir);
    int k = 0;
    for (const auto& [key, list] : data_.lines) {
      for (const auto& l : list) {
        std::ofstream traj(dir / ("line_" + std::to_string(k) + ".csv"));
        traj << std::setprecision(17) << "t" << coord_header(n) << "\n";
        for (std::size_t i = 0; i < l.representative.points.size(); ++i) {
          const double t = l.representative.times[i];
          lines << k << ',' << l.from << ',' << l.to << ',' << l.sign << ',' << t;
          write_coords(lines, l.representative.points[i]);
          lines << "\n";
          traj << t;
          write_coords(traj, l.representative.points[i]);
          traj << "\n";
        }
        ++k;
      }
    }
  }

  void complex_stage() {
    const auto start = Clock::now();
    Json list = Json::array();
    for (const auto& coeffs : cfg_.coefficients) {
      Json entry{{"coefficients", coeffs.label()}};
      complex::MorseComplex c = complex::build_complex(manifold_, cs_, data_, coeffs);
      Json mats = Json::array();
      for (std::size_t k = 1; k < c.boundary.size(); ++k) mats.push_back(matrix_json(c.boundary[k]));
      entry["generators"] = c.generators;
      entry["block"] = c.block;
      entry["boundary"] = mats;
      try {
        complex::check_d_squared(c);
        entry["d_squared_zero"] = true;
      } catch (const VerificationError& e) {
        entry["d_squared_zero"] = false;
        fail(coeffs.label() + ": " + e.what());
      }
      text_ << "\ncomplex over " << coeffs.label() << "\n";
      for (std::size_t k = 1; k < c.boundary.size(); ++k) {
        text_ << "  d" << k << " = " << algebra::to_string(c.boundary[k]) << "\n";
      }
      if (coeffs.kind == complex::CoefficientKind::Integers) integral_ = c;
      complexes_.push_back(std::move(c));
      list.push_back(entry);
    }
    report_["complex"] = list;
    timed("complex", false, start);
  }

  void inequalities_stage() {
    const auto start = Clock::now();
    Json hom = Json::array();
    Json ineq = Json::array();
    text_ << "\nhomology\n";
    for (const auto& c : complexes_) {
      const complex::HomologyResult h = complex::homology(c);
      hom.push_back(homology_json(h));
      text_ << "  " << std::setw(8) << std::left << h.coefficients << std::right << " " << homology_text(h) << "\n";
      if (c.coefficients.kind == complex::CoefficientKind::Twisted) continue;
      const auto m = complex::morse_inequalities(cs_, h, manifold_.dim());
      ineq.push_back(Json{{"coefficients", h.coefficients},
                          {"critical_counts", m.critical_counts},
                          {"betti", m.betti},
                          {"strong", m.strong},
                          {"slack", m.slack},
                          {"euler_equal", m.euler_equal},
                          {"equalities", std::all_of(m.slack.begin(), m.slack.end(), [](long s) { return s == 0; })},
                          {"passed", m.passed()}});
      if (!m.passed()) fail("Morse inequalities fail over " + h.coefficients);
    }
    report_["homology"] = hom;
    report_["morse_inequalities"] = ineq;
    timed("homology", false, start);
  }

  void duality_stage() {
    Json rep;
    if (!manifold_.orientable()) {
      rep = Json{{"skipped", true}, {"reason", "non-orientable manifold"}};
      text_ << "\nduality: skipped (non-orientable manifold)\n";
    } else {
      const flow::FlowSpec neg_spec = cfg_.flow_spec(true);
      const CriticalSet neg = find_critical(true, "critical-dual");
      const ConnectionData neg_data = find_connections(neg_spec, neg, true, "connections-dual");
      const auto start = Clock::now();
      const complex::MorseComplex dual = complex::build_complex(manifold_, neg, neg_data);
      const complex::MorseComplex primal =
          integral_ ? *integral_ : complex::build_complex(manifold_, cs_, connections_or_load());
      const complex::DualityReport d = complex::poincare_dual(manifold_, cs_, primal, neg, dual);
      rep = Json{{"skipped", d.skipped},
                 {"reason", d.reason},
                 {"matrices_match", d.matrices_match},
                 {"generator_signs", d.generator_signs},
                 {"dual_homology", homology_json(d.dual_homology)},
                 {"cohomology", homology_json(d.cohomology)},
                 {"homology_match", d.homology_match},
                 {"mismatches", d.mismatches},
                 {"passed", d.passed()}};
      if (!d.passed()) fail("duality mismatch: " + (d.mismatches.empty() ? std::string("see report") : d.mismatches.front()));
      timed("duality", false, start);
      text_ << "\nduality (-f complex vs cohomology): " << (d.skipped ? "skipped" : d.passed() ? "ok" : "MISMATCH")
            << "\n";
      if (!d.skipped) text_ << "  dual homology " << homology_text(d.dual_homology) << "\n";
    }
    report_["duality"] = rep;
  }

  const expr::FormExpression& form(const std::string& name) const { return cfg_.form(name).form; }

  static Json residue_list(const std::vector<currents::Residue>& rs) {
    Json j = Json::array();
    for (const auto& r : rs) j.push_back(Json{{"id", r.id}, {"value", r.value}, {"error", r.error}});
    return j;
  }

  void residues_stage() {
    const auto start = Clock::now();
    Json list = Json::array();
    if (!cfg_.residue_forms.empty()) text_ << "\nresidues\n";
    for (const auto& name : cfg_.residue_forms) {
      const auto rv = currents::residues(spec_, cs_, form(name), cfg_.residue);
      bool integral = true;
      for (const auto& r : rv.residues) integral = integral && std::abs(r.value - std::round(r.value)) <= cfg_.int_tol;
      list.push_back(Json{{"form", name},
                          {"degree", rv.degree},
                          {"residues", residue_list(rv.residues)},
                          {"coresidues", residue_list(rv.coresidues)},
                          {"integral", integral},
                          {"empty", rv.residues.empty()}});
      text_ << "  " << name << " (degree " << rv.degree << "):";
      if (rv.residues.empty()) text_ << " P = 0";
      for (const auto& r : rv.residues) text_ << "  r_" << r.id << " = " << std::setprecision(10) << r.value;
      text_ << "\n";
    }
    report_["residues"] = list;
    timed("residues", false, start);
  }

  void chain_map_stage() {
    const auto start = Clock::now();
    Json list = Json::array();
    if (!integral_) integral_ = complex::build_complex(manifold_, cs_, connections_or_load());
    text_ << "\nchain map P d = d P\n";
    for (const auto& name : cfg_.chain_forms) {
      const auto rep = currents::verify_P_chain_map(spec_, cs_, *integral_, form(name), cfg_.residue);
      Json rows = Json::array();
      for (const auto& r : rep.rows) rows.push_back(Json{{"q", r.q}, {"lhs", r.lhs}, {"rhs", r.rhs}});
      const bool ok = rep.max_residual <= cfg_.chain_tol;
      list.push_back(Json{{"form", name}, {"rows", rows}, {"max_residual", rep.max_residual}, {"passed", ok}});
      text_ << "  " << name << ": max residual " << std::setprecision(3) << rep.max_residual << "\n";
      if (!ok) fail("chain map residual for " + name + " above tolerance");
    }
    report_["chain_map"] = list;
    timed("chain_map", false, start);
  }

  const ConnectionData& connections_or_load() {
    if (!have_connections_) {
      data_ = find_connections(spec_, cs_, false, "connections");
      have_connections_ = true;
    }
    return data_;
  }

  void clouds_stage() {
    const auto start = Clock::now();
    const int n = manifold_.ambient_dim();
    std::ofstream os(out_ / "clouds.csv");
    os << std::setprecision(17) << "id,role" << coord_header(n) << "\n";
    for (const auto& p : cs_.points) {
      for (const auto role : {currents::Role::Unstable, currents::Role::Stable}) {
        const auto cloud = currents::point_cloud(spec_, cs_, p.id, role, 32, 2e-3, cfg_.residue.epsilon0);
        for (const auto& x : cloud.points) {
          os << p.id << ',' << (role == currents::Role::Stable ? "stable" : "unstable");
          write_coords(os, x);
          os << "\n";
        }
      }
    }
    timed("clouds", false, start);
  }

  void pairing_stage() {
    const auto start = Clock::now();
    const auto& names = cfg_.pairing_forms;
    const std::size_t k = names.size();
    Json matrix = Json::array();
    Json direct = Json::array();
    double worst = 0.0;
    bool complete = true;
    Mat m = Mat::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    text_ << "\npairing matrix (residue / direct)\n";
    for (std::size_t i = 0; i < k; ++i) {
      Json row = Json::array();
      Json drow = Json::array();
      text_ << " ";
      for (std::size_t j = 0; j < k; ++j) {
        const auto& a = form(names[i]);
        const auto& b = form(names[j]);
        if (a.degree() + b.degree() != manifold_.dim()) {
          row.push_back(nullptr);
          drow.push_back(nullptr);
          complete = false;
          text_ << "  -";
          continue;
        }
        const auto p = currents::pairing(spec_, cs_, a, b, cfg_.residue);
        row.push_back(p.pairing);
        drow.push_back(p.direct);
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p.pairing;
        worst = std::max(worst, std::abs(p.difference));
        text_ << "  " << std::setprecision(8) << p.pairing << " / " << p.direct;
      }
      text_ << "\n";
      matrix.push_back(row);
      direct.push_back(drow);
    }
    Json rep{{"forms", names}, {"matrix", matrix}, {"direct", direct}, {"max_difference", worst},
             {"tolerance", cfg_.pairing_tol}};
    if (complete && k > 0) {
      rep["determinant"] = m.determinant();
      rep["antisymmetric"] = (m + m.transpose()).cwiseAbs().maxCoeff() <= cfg_.pairing_tol;
    }
    rep["passed"] = worst <= cfg_.pairing_tol;
    if (worst > cfg_.pairing_tol) fail("pairing differs from the direct integral by " + std::to_string(worst));
    report_["pairing"] = rep;
    timed("pairing", false, start);
  }

  void fme_stage() {
    const auto start = Clock::now();
    const config::FmeConfig& f = *cfg_.fme;
    const bool gradient = cfg_.flow_kind == flow::FlowKind::GradientUphill;
    const auto samples =
        currents::admissible_samples(spec_, gradient ? &cs_ : nullptr, f.samples, f.seed, f.margin);
    const auto rep = currents::verify_fme(spec_, form(f.form), samples, f.fd_step);
    Json rows = Json::array();
    for (const auto& s : rep.samples) rows.push_back(Json{{"x", vec_json(s.x)}, {"residual", s.residual}});
    const bool ok = rep.max_residual < f.tolerance && static_cast<int>(rep.samples.size()) >= f.samples;
    report_["fme"] = Json{{"form", f.form},          {"samples", rows},      {"count", rep.samples.size()},
                          {"max_residual", rep.max_residual}, {"tolerance", f.tolerance}, {"passed", ok}};
    text_ << "\nFME residual |dT + Td - (I - P)| on " << rep.samples.size() << " samples: max "
          << std::setprecision(3) << rep.max_residual << " (tolerance " << f.tolerance << ")\n";
    if (!ok) fail("FME residual " + std::to_string(rep.max_residual) + " above tolerance");
    timed("fme", false, start);
  }

  const config::RunConfig& cfg_;
  Options options_;
  fs::path out_;
  Cache cache_;
  geometry::ManifoldBackend manifold_;
  flow::FlowSpec spec_;

  CriticalSet cs_;
  ConnectionData data_;
  bool have_connections_ = false;
  std::vector<complex::MorseComplex> complexes_;
  std::optional<complex::MorseComplex> integral_;

  Json report_ = Json::object();
  Json timings_ = Json::object();
  std::ostringstream text_;
  std::vector<std::string> failures_;
  std::vector<std::string> hits_;
};

}  // namespace

Outcome run(const config::RunConfig& cfg, const std::string& subcommand, const Options& options) {
  Runner runner(cfg, options);
  return runner.run(subcommand);
}

}  // namespace morse::pipeline
