// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>

#include "morse/complex.hpp"
#include "morse/config.hpp"
#include "morse/connections.hpp"
#include "morse/currents.hpp"
#include "oracles.hpp"
#include "suites.hpp"

using namespace morse;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [broken: " << what << "]";
    }
  }
};

struct Run {
  config::RunConfig cfg;
  flow::FlowSpec spec;
  critical::CriticalSet cs;
  connections::ConnectionData data;
};

config::RunConfig load(const std::string& name) {
  return config::load_config(std::string(MORSE_CONFIG_DIR) + "/" + name + ".yaml");
}

Run run(const std::string& name, bool connect = true) {
  Run r{load(name), {}, {}, {}};
  r.spec = r.cfg.flow_spec();
  r.cs = critical::find_critical_points(r.cfg.manifold(), r.cfg.function_expression(), r.cfg.seeds, r.cfg.critical);
  if (connect) r.data = connections::find_all_connections(r.spec, r.cs, r.cfg.connection);
  return r;
}

complex::HomologyResult homology(const Run& r, const complex::Coefficients& c = complex::Coefficients::integers()) {
  auto mc = complex::build_complex(r.spec.manifold, r.cs, r.data, c);
  complex::check_d_squared(mc);
  return complex::homology(mc);
}

std::string text(const complex::HomologyResult& h) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < h.betti.size(); ++k) {
    os << (k ? "," : "") << h.betti[k];
    for (const auto& t : h.torsion[k]) os << "+Z/" << t;
  }
  os << ")";
  return os.str();
}

bool free_homology(const complex::HomologyResult& h, const std::vector<long>& betti) {
  if (h.betti != betti) return false;
  for (const auto& t : h.torsion)
    if (!t.empty()) return false;
  return true;
}

int failures = 0;

void criterion(int number, const std::string& title, double budget_s, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.ok = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0 && s > budget_s) {
    v.ok = false;
    v.detail << " [over the " << budget_s << " s budget]";
  }
  if (!v.ok) ++failures;
  std::printf("%s %2d %s:%s (%.2f s)\n", v.ok ? "PASS" : "FAIL", number, title.c_str(), v.detail.str().c_str(), s);
  std::fflush(stdout);
}

}  // namespace

int main() {
  criterion(1, "sphere height", 10.0, [](Verdict& v) {
    const Run r = run("sphere-height");
    const auto counts = r.cs.counts_by_index(2);
    const auto h = homology(r);
    const auto m = complex::morse_inequalities(r.cs, h, 2);
    const bool equalities = std::all_of(m.slack.begin(), m.slack.end(), [](long s) { return s == 0; });
    v.detail << " counts " << counts[0] << "," << counts[1] << "," << counts[2] << "; H " << text(h);
    v.require(r.cs.points.size() == 2 && counts == std::vector<int>{1, 0, 1}, "critical points");
    v.require(free_homology(h, {1, 0, 1}), "homology");
    v.require(m.passed() && equalities, "Morse equalities");
  });

  criterion(2, "perturbed sphere", 60.0, [](Verdict& v) {
    const Run r = run("sphere-perturbed");
    const auto counts = r.cs.counts_by_index(2);
    v.require(counts == std::vector<int>{1, 1, 2}, "need one minimum, one saddle, two maxima");
    const int s = r.cs.ids_of_index(1).at(0);
    const auto maxima = r.cs.ids_of_index(2);
    const int n1 = r.data.count(maxima.at(0), s);
    const int n2 = r.data.count(maxima.at(1), s);
    auto mc = complex::build_complex(r.spec.manifold, r.cs, r.data);
    bool d2 = true;
    try {
      complex::check_d_squared(mc);
    } catch (const VerificationError&) {
      d2 = false;
    }
    const auto h = complex::homology(mc);
    v.detail << " N(m1,s)=" << n1 << " N(m2,s)=" << n2 << "; d2 " << (d2 ? "= 0" : "!= 0") << "; H " << text(h);
    v.require(d2, "d^2");
    v.require(std::abs(n1) == 1 && n1 == -n2, "saddle counts");
    v.require(free_homology(h, {1, 0, 1}), "homology");
  });

  criterion(3, "flat torus", 0, [](Verdict& v) {
    const Run r = run("torus-separable");
    bool cancel = !r.data.lines.empty();
    for (const auto& [key, lines] : r.data.lines) {
      cancel = cancel && lines.size() == 2 && lines[0].sign == -lines[1].sign && r.data.count(key.first, key.second) == 0;
    }
    const auto h = homology(r);
    v.detail << " " << r.cs.points.size() << " critical points; " << r.data.lines.size()
             << " index pairs, all N=0 by cancellation: " << (cancel ? "yes" : "no") << "; H " << text(h);
    v.require(r.cs.points.size() == 4, "critical points");
    v.require(cancel, "sign cancellation");
    v.require(free_homology(h, {1, 2, 1}), "homology");
  });

  criterion(4, "circle", 0, [](Verdict& v) {
    const Run r = run("circle-cos");
    const auto& lines = r.data.lines.at({1, 0});
    const auto h = homology(r);
    v.detail << " " << lines.size() << " flow lines, signs";
    for (const auto& l : lines) v.detail << " " << l.sign;
    v.detail << "; H " << text(h);
    v.require(lines.size() == 2 && lines[0].sign == -lines[1].sign && lines[0].sign != 0, "opposite signs");
    v.require(free_homology(h, {1, 1}), "homology");
  });

  criterion(5, "residues on S2", 0, [](Verdict& v) {
    const Run r = run("sphere-height", false);
    const auto area = r.cfg.form("area").form;
    const auto rv = currents::residues(r.spec, r.cs, area, r.cfg.residue);
    const double rmin = rv.residues.at(0).value;
    currents::ResidueOptions sweep = r.cfg.residue;
    sweep.full_measure_shortcut = false;
    const double swept = currents::integrate_over_unstable(r.spec, r.cs, r.cs.ids_of_index(0).at(0), area, sweep);
    v.detail << " r_min(area/4pi) = " << std::setprecision(12) << rmin << " (sweep " << swept << ")";
    v.require(std::abs(rmin - 1.0) < 1e-4 && std::abs(swept - 1.0) < 1e-4, "r_min");
    morse::testing::Gen g(5);
    int empty = 0;
    for (int i = 0; i < 10; ++i) {
      const auto beta = expr::parse_form(
          {{"dx", g.expression(3, 2)}, {"dy", g.expression(3, 2)}, {"dz", g.expression(3, 2)}}, 3);
      empty += currents::P_apply(r.spec, r.cs, beta, r.cfg.residue).terms.empty() ? 1 : 0;
    }
    v.detail << "; P(1-form) empty for " << empty << "/10 random 1-forms";
    v.require(empty == 10, "P of 1-forms");
  });

  criterion(6, "fundamental Morse equation", 0, [](Verdict& v) {
    for (const char* name : {"circle-cos", "sphere-height", "sphere17-fme"}) {
      const config::RunConfig cfg = load(name);
      const auto spec = cfg.flow_spec();
      const auto& f = *cfg.fme;
      critical::CriticalSet cs;
      const bool gradient = cfg.flow_kind == flow::FlowKind::GradientUphill;
      if (gradient) cs = critical::find_critical_points(cfg.manifold(), cfg.function_expression(), cfg.seeds, cfg.critical);
      const auto samples = currents::admissible_samples(spec, gradient ? &cs : nullptr, f.samples, f.seed, f.margin);
      const auto rep = currents::verify_fme(spec, cfg.form(f.form).form, samples, f.fd_step);
      v.detail << " " << name << " max " << std::setprecision(2) << std::scientific << rep.max_residual << std::defaultfloat
               << " @" << rep.samples.size() << ";";
      v.require(rep.samples.size() >= 20 && rep.max_residual < 1e-3, name);
    }
  });

  criterion(7, "chain map P d = d P", 0, [](Verdict& v) {
    const Run r = run("torus-separable");
    const auto mc = complex::build_complex(r.spec.manifold, r.cs, r.data);
    const auto rep = currents::verify_P_chain_map(r.spec, r.cs, mc, r.cfg.form("bumpy").form, r.cfg.residue);
    v.detail << " torus: " << rep.rows.size() << " rows, max residual " << std::setprecision(2) << rep.max_residual;
    v.require(!rep.rows.empty() && rep.max_residual < 1e-4, "torus");
    // the torus differential vanishes; the perturbed sphere exercises nonzero n_pq
    const Run s = run("sphere-perturbed");
    const auto ms = complex::build_complex(s.spec.manifold, s.cs, s.data);
    const auto rs = currents::verify_P_chain_map(s.spec, s.cs, ms, s.cfg.form("linear").form, s.cfg.residue);
    v.detail << "; perturbed sphere: max residual " << rs.max_residual;
    v.require(!rs.rows.empty() && rs.max_residual < 1e-4, "perturbed sphere");
  });

  criterion(8, "Poincare duality", 0, [](Verdict& v) {
    for (const char* name : {"sphere-height", "torus-separable"}) {
      const Run r = run(name);
      const auto neg_spec = r.cfg.flow_spec(true);
      const auto neg = critical::find_critical_points(r.cfg.manifold(), r.cfg.function_expression(true), r.cfg.seeds,
                                                      r.cfg.critical);
      const auto neg_data = connections::find_all_connections(neg_spec, neg, r.cfg.connection);
      const auto rep = complex::poincare_dual(r.spec.manifold, r.cs, complex::build_complex(r.spec.manifold, r.cs, r.data),
                                              neg, complex::build_complex(r.spec.manifold, neg, neg_data));
      v.detail << " " << name << ": dual " << text(rep.dual_homology) << " vs H^{n-*} " << text(rep.cohomology)
               << ", matrices " << (rep.matrices_match ? "match" : "differ") << ";";
      v.require(!rep.skipped && rep.passed() && rep.dual_homology == rep.cohomology, name);
    }
  });

  criterion(9, "pairing on T2", 0, [](Verdict& v) {
    const Run r = run("torus-separable", false);
    const char* names[] = {"dx", "dy"};
    Mat m(2, 2);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const auto p = currents::pairing(r.spec, r.cs, r.cfg.form(names[i]).form, r.cfg.form(names[j]).form, r.cfg.residue);
        m(i, j) = p.pairing;
        worst = std::max(worst, std::abs(p.difference));
      }
    v.detail << " [" << m(0, 0) << " " << m(0, 1) << "; " << m(1, 0) << " " << m(1, 1) << "], det "
             << m.determinant() << ", max |residue - direct| " << std::setprecision(2) << worst;
    v.require((m + m.transpose()).cwiseAbs().maxCoeff() < 1e-5, "antisymmetry");
    v.require(std::abs(std::abs(m.determinant()) - 1.0) < 1e-5, "|det| = 1");
    v.require(worst < 1e-5, "direct integral");
  });

  criterion(10, "Klein mod 2 and twisted torus", 0, [](Verdict& v) {
    const Run k = run("klein-mod2");
    const auto hk = homology(k, complex::Coefficients::mod(2));
    v.detail << " Klein Z/2 dims " << text(hk);
    v.require(hk.betti == std::vector<long>{1, 2, 1}, "Klein");
    const Run t = run("torus-twisted");
    const auto& tw = t.cfg.coefficients.at(0);
    const auto ht = homology(t, tw);
    const auto& gens = tw.local_system.generators;
    const auto oracle = morse::testing::brute_homology(morse::testing::twisted_torus_cw(gens.at(0), gens.at(1)));
    v.detail << "; twisted T2 " << text(ht) << " vs CW oracle " << text(oracle);
    v.require(ht == oracle, "twisted");
  });

  criterion(11, "Smith normal form properties", 0, [](Verdict& v) {
    const std::string failure = morse::testing::snf_suite(1000, 11);
    v.detail << " 1000 random matrices up to 8x8" << (failure.empty() ? "" : ": " + failure);
    v.require(failure.empty(), "SNF");
  });

  criterion(12, "automatic differentiation properties", 0, [](Verdict& v) {
    const std::string failure = morse::testing::ad_suite(100, 12);
    v.detail << " 100 random expressions, gradients and Hessians vs central differences"
             << (failure.empty() ? "" : ": " + failure);
    v.require(failure.empty(), "AD");
  });

  return failures == 0 ? 0 : 1;
}
