#include "morse/currents.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "morse/connections.hpp"
#include "morse/errors.hpp"
#include "morse/parallel.hpp"

namespace morse::currents {
namespace {

using flow::Direction;
using flow::FlowSpec;
constexpr double kPi = std::numbers::pi;

struct Node {
  double x;
  double w;
};

// Composite 20-point Gauss-Legendre rule on [a, b].
std::vector<Node> gauss_rule(double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  std::vector<Node> out;
  const double width = (b - a) / panels;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * width;
    const double mid = lo + 0.5 * width;
    const double half = 0.5 * width;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
      const double x = Rule::abscissa()[i];
      const double w = Rule::weights()[i];
      out.push_back({mid + half * x, half * w});
      if (x != 0.0) out.push_back({mid - half * x, half * w});
    }
  }
  return out;
}

// Maps a in R^k to the manifold near base: affine in the frame E, then projected
// along the normal at base. `jac` receives the exact derivative.
class Chart {
 public:
  Chart(const geometry::ManifoldBackend& m, const Vec& base, const Mat& frame) : m_(m), base_(base), frame_(frame) {
    if (!m.is_quotient()) normal_ = geometry::unit_normal(m, base);
  }

  Vec point(const Vec& a, Mat* jac = nullptr) const {
    const Vec affine = base_ + frame_ * a;
    if (m_.is_quotient()) {
      if (jac) *jac = frame_;
      return affine;
    }
    const Vec y = geometry::project_along(m_, affine, normal_);
    if (jac) {
      const Vec g = expr::eval_gradient(m_.implicit_data()->constraint, y).gradient;
      const double gn = g.dot(normal_);
      *jac = frame_ - normal_ * (g.transpose() * frame_) / gn;
    }
    return y;
  }

 private:
  const geometry::ManifoldBackend& m_;
  Vec base_;
  Mat frame_;
  Vec normal_;
};

struct Label {
  int id = -1;
  geometry::DeckElement deck;
  bool operator==(const Label&) const = default;
};

Label label_of(const geometry::ManifoldBackend& m, const critical::CriticalSet& cs, const Vec& x) {
  Label l;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cs.points) {
    const double d = geometry::manifold_distance(m, c.location, x);
    if (d < best) {
      best = d;
      l.id = c.id;
    }
  }
  if (m.is_quotient()) l.deck = geometry::deck_between(m, cs.at(l.id).location, x);
  return l;
}

double form_on(const expr::FormExpression& form, const Vec& x, const Vec& first, const Mat& rest) {
  Mat m(x.size(), rest.cols() + 1);
  m.col(0) = first;
  if (rest.cols() > 0) m.rightCols(rest.cols()) = rest;
  return expr::eval_form(form, x, m);
}

bool direct_integration_supported(const geometry::ManifoldBackend& m) {
  return m.orientable() && (m.is_quotient() || (m.is_unit_sphere() && m.dim() <= 2));
}

// Integral over the flow-out of the eigen-disk: S_p (backward, stable frame)
// or U_p (forward, unstable frame).
double sweep_integral(const FlowSpec& spec, const critical::CriticalSet& cs, int p_id,
                      const expr::FormExpression& form, Direction dir, const ResidueOptions& options,
                      double* error) {
  if (spec.kind != flow::FlowKind::GradientUphill) {
    throw DomainError("residues are defined for gradient flows with a critical set");
  }
  const auto& m = spec.manifold;
  const auto& p = cs.at(p_id);
  const Mat& frame = dir == Direction::Forward ? p.unstable_frame.vectors : p.stable_frame.vectors;
  const int d = static_cast<int>(frame.cols());
  const int big = m.ambient_dim();
  if (error) *error = 0.0;
  if (form.degree() != d) return 0.0;
  if (d == 0) return expr::eval_form(form, p.location, Mat(big, 0));
  if (options.full_measure_shortcut && d == m.dim() && direct_integration_supported(m)) {
    // A unique open cell has full measure.
    int cells = 0;
    for (const auto& c : cs.points) cells += (dir == Direction::Forward ? c.index == 0 : c.index == m.dim()) ? 1 : 0;
    if (cells == 1) return integrate_over_manifold(m, form);
  }
  if (d > 2) throw DimensionError("integration over " + std::to_string(d) + "-dimensional flow-outs is not supported");

  const Chart chart(m, p.location, frame);
  const double eps = options.epsilon0;
  flow::FrameFlowOptions fo;

  if (d == 1) {
    double disk = 0.0;
    for (const Node& nd : gauss_rule(-eps, eps, 1)) {
      Mat jac;
      const Vec y = chart.point(Vec::Constant(1, nd.x), &jac);
      disk += nd.w * expr::eval_form(form, y, jac);
    }
    double tails = 0.0;
    for (const double side : {1.0, -1.0}) {
      const Vec x = chart.point(Vec::Constant(1, side * eps));
      const auto ff = flow::flow_with_frame(spec, x, Mat(big, 0), dir, fo,
                                            [&](const Vec& y, const Vec& v, const Mat&) {
                                              return form_on(form, y, v, Mat(big, 0));
                                            });
      tails += side * ff.integral;
    }
    return disk + tails;
  }

  // d == 2: polar eigen-disk plus the swept annulus parametrized by (t, theta).
  double disk = 0.0;
  const auto radial = gauss_rule(0.0, eps, 1);
  for (const Node& a : gauss_rule(0.0, 2.0 * kPi, 4)) {
    for (const Node& r : radial) {
      Mat jac;
      const Vec y = chart.point(Vec{{r.x * std::cos(a.x), r.x * std::sin(a.x)}}, &jac);
      disk += a.w * r.w * r.x * expr::eval_form(form, y, jac);
    }
  }

  auto shell = [&](double theta, Label* label) {
    Mat jac;
    const Vec x = chart.point(Vec{{eps * std::cos(theta), eps * std::sin(theta)}}, &jac);
    const Mat tangent = jac * Vec{{-eps * std::sin(theta), eps * std::cos(theta)}};
    const auto ff = flow::flow_with_frame(spec, x, tangent, dir, fo, [&](const Vec& y, const Vec& v, const Mat& w) {
      return form_on(form, y, v, w);
    });
    if (label) *label = label_of(m, cs, ff.x);
    return ff.integral;
  };

  const int k = std::max(8, options.samples);
  const double offset = 0.5 * (std::sqrt(5.0) - 1.0);
  std::vector<double> thetas(static_cast<std::size_t>(k));
  std::vector<Label> labels(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) thetas[static_cast<std::size_t>(i)] = 2.0 * kPi * (i + offset) / k;
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t i) { shell(thetas[i], &labels[i]); });

  std::vector<double> cuts;
  for (int i = 0; i < k; ++i) {
    const std::size_t a = static_cast<std::size_t>(i);
    const std::size_t b = static_cast<std::size_t>((i + 1) % k);
    if (labels[a] == labels[b]) continue;
    double lo = thetas[a];
    double hi = b == 0 ? thetas[b] + 2.0 * kPi : thetas[b];
    while (hi - lo > options.boundary_tol) {
      const double mid = 0.5 * (lo + hi);
      Label l;
      shell(mid, &l);
      (l == labels[a] ? lo : hi) = mid;
    }
    cuts.push_back(0.5 * (lo + hi));
  }
  if (cuts.empty()) cuts.push_back(thetas[0]);
  std::sort(cuts.begin(), cuts.end());

  double sweep = 0.0;
  double err_sum = 0.0;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + 2.0 * kPi;
    double err = 0.0;
    sweep += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double th) { return shell(th, nullptr); }, a, b, 8, options.quad_tol, &err);
    err_sum += err;
  }
  if (error) *error = err_sum;
  return disk + sweep;
}

std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

Mat columns(const Mat& m, const std::vector<int>& idx) {
  Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

void densify(std::vector<Vec>& out, const std::vector<Vec>& path, double spacing) {
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) {
      const double gap = (path[i] - path[i - 1]).norm();
      const int pieces = static_cast<int>(std::ceil(gap / spacing));
      for (int s = 1; s < pieces; ++s) out.push_back(path[i - 1] + (path[i] - path[i - 1]) * (double(s) / pieces));
    }
    out.push_back(path[i]);
  }
}

}  // namespace

double integrate_over_unstable(const FlowSpec& spec, const critical::CriticalSet& cs, int p,
                               const expr::FormExpression& alpha, const ResidueOptions& options, double* error) {
  return sweep_integral(spec, cs, p, alpha, Direction::Forward, options, error);
}

double integrate_over_stable(const FlowSpec& spec, const critical::CriticalSet& cs, int p,
                             const expr::FormExpression& beta, const ResidueOptions& options, double* error) {
  return sweep_integral(spec, cs, p, beta, Direction::Backward, options, error);
}

ResidueVector residues(const FlowSpec& spec, const critical::CriticalSet& cs, const expr::FormExpression& alpha,
                       const ResidueOptions& options) {
  ResidueVector rv;
  rv.degree = alpha.degree();
  const int n = spec.manifold.dim();
  for (const auto& p : cs.points) {
    if (n - p.index == rv.degree) {
      Residue r{p.id, 0.0, 0.0};
      r.value = integrate_over_unstable(spec, cs, p.id, alpha, options, &r.error);
      rv.residues.push_back(r);
    }
    if (p.index == rv.degree) {
      Residue r{p.id, 0.0, 0.0};
      r.value = integrate_over_stable(spec, cs, p.id, alpha, options, &r.error);
      rv.coresidues.push_back(r);
    }
  }
  return rv;
}

CurrentSum P_apply(const FlowSpec& spec, const critical::CriticalSet& cs, const expr::FormExpression& alpha,
                   const ResidueOptions& options) {
  CurrentSum sum;
  const int n = spec.manifold.dim();
  for (const auto& p : cs.points) {
    if (n - p.index != alpha.degree()) continue;
    sum.terms.push_back({integrate_over_unstable(spec, cs, p.id, alpha, options), p.id, Role::Stable});
  }
  return sum;
}

double T_apply_pointwise(const FlowSpec& spec, const expr::FormExpression& alpha, const Vec& x, const Mat& vectors) {
  if (alpha.degree() == 0) return 0.0;
  if (vectors.cols() != alpha.degree() - 1) {
    throw DimensionError("T of a " + std::to_string(alpha.degree()) + "-form takes " +
                         std::to_string(alpha.degree() - 1) + " vectors");
  }
  flow::FrameFlowOptions fo;
  const auto ff = flow::flow_with_frame(spec, x, vectors, Direction::Forward, fo,
                                        [&](const Vec& y, const Vec& v, const Mat& w) { return form_on(alpha, y, v, w); });
  if (!ff.settled) throw ConvergenceError("forward orbit did not settle; T quadrature incomplete");
  return -ff.integral;
}

PointCloud point_cloud(const FlowSpec& spec, const critical::CriticalSet& cs, int p_id, Role role, int directions,
                       double spacing, double epsilon0) {
  const auto& m = spec.manifold;
  const auto& p = cs.at(p_id);
  PointCloud cloud;
  cloud.id = p_id;
  cloud.role = role;
  cloud.points.push_back(p.location);
  const Mat& frame = role == Role::Stable ? p.stable_frame.vectors : p.unstable_frame.vectors;
  const Direction dir = role == Role::Stable ? Direction::Backward : Direction::Forward;
  const int d = static_cast<int>(frame.cols());
  if (d == 0) return cloud;

  std::vector<Vec> dirs;
  if (d == 1) {
    dirs = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  } else if (d == 2) {
    for (int i = 0; i < directions; ++i) {
      const double th = 2.0 * kPi * i / directions;
      dirs.push_back(Vec{{std::cos(th), std::sin(th)}});
    }
  } else {
    std::mt19937_64 rng(20240917);
    std::normal_distribution<double> g;
    for (int i = 0; i < directions; ++i) {
      Vec s(d);
      for (int j = 0; j < d; ++j) s[j] = g(rng);
      dirs.push_back(s / s.norm());
    }
  }
  const Chart chart(m, p.location, frame);
  std::vector<std::vector<Vec>> paths(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    const Vec x = chart.point(epsilon0 * dirs[i]);
    paths[i] = flow::integrate(spec, x, dir, &cs).points;
  });
  for (const auto& path : paths) {
    std::vector<Vec> dense;
    densify(dense, path, spacing);
    for (const Vec& y : dense) cloud.points.push_back(geometry::retract(m, y));
  }
  return cloud;
}

std::vector<Vec> admissible_samples(const FlowSpec& spec, const critical::CriticalSet* cs, int count,
                                    std::uint64_t seed, double margin) {
  const auto& m = spec.manifold;
  std::vector<Vec> avoid;
  if (spec.kind == flow::FlowKind::Sphere17) {
    avoid.push_back(-Vec::Unit(m.ambient_dim(), m.ambient_dim() - 1));
  } else {
    if (!cs) throw DomainError("admissible samples for a gradient flow need its critical set");
    for (const auto& p : cs->points) {
      if (p.index == m.dim()) {
        avoid.push_back(p.location);
        continue;
      }
      const auto cloud = point_cloud(spec, *cs, p.id, Role::Stable, 32, 0.25 * margin);
      avoid.insert(avoid.end(), cloud.points.begin(), cloud.points.end());
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out;
  const int budget = 200 * std::max(count, 1);
  for (int attempt = 0; attempt < budget && static_cast<int>(out.size()) < count; ++attempt) {
    Vec x(m.ambient_dim());
    if (m.is_quotient()) {
      const Vec box = m.fundamental_box();
      for (int i = 0; i < x.size(); ++i) x[i] = box[i] * unit(rng);
    } else {
      for (int i = 0; i < x.size(); ++i) x[i] = gauss(rng);
      if (x.norm() < 1e-6) continue;
      if (m.is_unit_sphere()) {
        x /= x.norm();
      } else {
        try {
          x = geometry::retract(m, x);
        } catch (const ConvergenceError&) {
          continue;
        }
      }
    }
    bool ok = true;
    for (const Vec& a : avoid) {
      if (geometry::manifold_distance(m, a, x) <= margin) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(x);
  }
  if (static_cast<int>(out.size()) < count) {
    throw ConvergenceError("only " + std::to_string(out.size()) + " admissible samples found");
  }
  return out;
}

FmeReport verify_fme(const FlowSpec& spec, const expr::FormExpression& alpha, const std::vector<Vec>& samples,
                     double fd_step) {
  const auto& m = spec.manifold;
  const int k = alpha.degree();
  const int n = m.dim();
  if (k < 1 || k > n) throw DomainError("the FME check needs a form of degree 1..n");
  std::optional<expr::FormExpression> dalpha;
  if (k < alpha.num_vars()) dalpha = expr::exterior_derivative(alpha);

  FmeReport rep;
  rep.samples.resize(samples.size());
  const auto subsets = combinations(n, k);
  parallel_for(samples.size(), [&](std::size_t s) {
    const Vec& x0 = samples[s];
    const Mat basis = geometry::tangent_basis(m, x0);
    const Chart chart(m, x0, basis);
    // T(alpha) on coordinate fields of the chart at parameter u.
    auto g = [&](const std::vector<int>& idx, const Vec& u) {
      Mat jac;
      const Vec y = chart.point(u, &jac);
      return T_apply_pointwise(spec, alpha, y, columns(jac, idx));
    };
    double worst = 0.0;
    for (const auto& J : subsets) {
      double dt = 0.0;
      for (std::size_t a = 0; a < J.size(); ++a) {
        std::vector<int> rest = J;
        rest.erase(rest.begin() + static_cast<long>(a));
        Vec h = Vec::Zero(n);
        h[J[a]] = fd_step;
        const double deriv = (g(rest, h) - g(rest, -h)) / (2.0 * fd_step);
        dt += (a % 2 == 0 ? 1.0 : -1.0) * deriv;
      }
      const Mat vj = columns(basis, J);
      const double td = dalpha ? T_apply_pointwise(spec, *dalpha, x0, vj) : 0.0;
      const double a = expr::eval_form(alpha, x0, vj);
      worst = std::max(worst, std::abs(dt + td - a));
    }
    rep.samples[s] = {x0, worst};
  });
  for (const auto& s : rep.samples) rep.max_residual = std::max(rep.max_residual, s.residual);
  return rep;
}

ChainMapReport verify_P_chain_map(const FlowSpec& spec, const critical::CriticalSet& cs,
                                  const complex::MorseComplex& c, const expr::FormExpression& beta,
                                  const ResidueOptions& options) {
  if (c.block != 1 || c.coefficients.kind == complex::CoefficientKind::ModP) {
    throw DomainError("the chain-map check needs an integral complex");
  }
  ChainMapReport rep;
  const int n = c.dim;
  const int k = n - beta.degree();
  if (k < 1 || k > n) return rep;
  const expr::FormExpression dbeta = expr::exterior_derivative(beta);
  const auto& ps = c.generators[static_cast<std::size_t>(k)];
  const auto& qs = c.generators[static_cast<std::size_t>(k - 1)];
  std::vector<double> r(ps.size());
  for (std::size_t j = 0; j < ps.size(); ++j) r[j] = integrate_over_unstable(spec, cs, ps[j], beta, options);
  const double sign = (n + 1) % 2 == 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    ChainMapRow row;
    row.q = qs[i];
    for (std::size_t j = 0; j < ps.size(); ++j) {
      row.lhs += sign * static_cast<double>(c.boundary[static_cast<std::size_t>(k)](static_cast<int>(i), static_cast<int>(j))) * r[j];
    }
    row.rhs = integrate_over_unstable(spec, cs, row.q, dbeta, options);
    rep.max_residual = std::max(rep.max_residual, std::abs(row.lhs - row.rhs));
    rep.rows.push_back(row);
  }
  return rep;
}

double integrate_over_manifold(const geometry::ManifoldBackend& m, const expr::FormExpression& omega, int panels) {
  const int n = m.dim();
  if (omega.degree() != n) throw DimensionError("only top-degree forms integrate over the manifold");
  if (!m.orientable()) throw DomainError("integration over a non-orientable manifold");
  if (m.is_quotient()) {
    const Vec box = m.fundamental_box();
    std::vector<std::vector<Node>> rules;
    for (int i = 0; i < n; ++i) rules.push_back(gauss_rule(0.0, box[i], panels));
    const Mat id = Mat::Identity(n, n);
    double total = 0.0;
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      Vec x(n);
      double w = 1.0;
      for (int i = 0; i < n; ++i) {
        const Node& nd = rules[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        x[i] = nd.x;
        w *= nd.w;
      }
      total += w * expr::eval_form(omega, x, id);
      int axis = 0;
      while (axis < n && ++idx[static_cast<std::size_t>(axis)] == rules[static_cast<std::size_t>(axis)].size()) {
        idx[static_cast<std::size_t>(axis)] = 0;
        ++axis;
      }
      if (axis == n) break;
    }
    return total;
  }
  if (!m.is_unit_sphere() || n > 2) {
    throw DimensionError("direct integration is implemented for S^1, S^2 and flat quotients");
  }
  double total = 0.0;
  if (n == 1) {
    for (const Node& a : gauss_rule(0.0, 2.0 * kPi, 4 * panels)) {
      const Vec x{{std::cos(a.x), std::sin(a.x)}};
      Mat t(2, 1);
      t << -std::sin(a.x), std::cos(a.x);
      total += a.w * expr::eval_form(omega, x, t);
    }
    return total;
  }
  // (polar angle, azimuth) is positively oriented; split at the equator.
  std::vector<Node> polar = gauss_rule(0.0, 0.5 * kPi, panels);
  const auto south = gauss_rule(0.5 * kPi, kPi, panels);
  polar.insert(polar.end(), south.begin(), south.end());
  const auto azimuth = gauss_rule(0.0, 2.0 * kPi, 2 * panels);
  for (const Node& a : polar) {
    for (const Node& b : azimuth) {
      const double sp = std::sin(a.x), cp = std::cos(a.x), st = std::sin(b.x), ct = std::cos(b.x);
      const Vec x{{sp * ct, sp * st, cp}};
      Mat t(3, 2);
      t << cp * ct, -sp * st, cp * st, sp * ct, -sp, 0.0;
      total += a.w * b.w * expr::eval_form(omega, x, t);
    }
  }
  return total;
}

PairingReport pairing(const FlowSpec& spec, const critical::CriticalSet& cs, const expr::FormExpression& alpha,
                      const expr::FormExpression& beta, const ResidueOptions& options) {
  const int n = spec.manifold.dim();
  if (alpha.degree() + beta.degree() != n) throw DimensionError("pairing needs complementary degrees");
  PairingReport rep;
  const auto ids = cs.ids_of_index(beta.degree());
  for (int p : ids) {
    PairingTerm t;
    t.p = p;
    t.residue = integrate_over_unstable(spec, cs, p, alpha, options);
    t.coresidue = integrate_over_stable(spec, cs, p, beta, options);
    rep.terms.push_back(t);
  }
  for (const auto& a : rep.terms) {
    for (const auto& b : rep.terms) {
      const int meet = connections::intersection_pairing(spec, cs, b.p, a.p);
      rep.pairing += meet * a.residue * b.coresidue;
    }
  }
  rep.direct = integrate_over_manifold(spec.manifold, expr::wedge(alpha, beta));
  rep.difference = std::abs(rep.pairing - rep.direct);
  return rep;
}

IntegralityReport check_integral_residues(const FlowSpec& spec, const critical::CriticalSet& cs,
                                          const expr::FormExpression& alpha, double int_tol,
                                          const ResidueOptions& options) {
  IntegralityReport rep;
  rep.tolerance = int_tol;
  rep.table = residues(spec, cs, alpha, options).residues;
  for (const auto& r : rep.table) {
    if (std::abs(r.value - std::round(r.value)) > int_tol) rep.integral = false;
  }
  return rep;
}

}  // namespace morse::currents
