#include "morse/critical.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "morse/parallel.hpp"

namespace morse::critical {
namespace {

constexpr double kTikhonov = 1e-9;
constexpr double kStepCap = 0.25;

void sign_normalize(Vec& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k] < 0) v = -v;
}

std::string describe(const Vec& x) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

std::vector<int> CriticalSet::ids_of_index(int k) const {
  std::vector<int> out;
  for (const auto& p : points) {
    if (p.index == k) out.push_back(p.id);
  }
  return out;
}

std::vector<int> CriticalSet::counts_by_index(int n) const {
  std::vector<int> c(static_cast<std::size_t>(n + 1), 0);
  for (const auto& p : points) ++c[static_cast<std::size_t>(p.index)];
  return c;
}

int CriticalSet::euler_characteristic() const {
  int chi = 0;
  for (const auto& p : points) chi += (p.index % 2 == 0) ? 1 : -1;
  return chi;
}

std::vector<Vec> generate_seeds(const geometry::ManifoldBackend& m, const SeedSpec& spec) {
  const int big = m.ambient_dim();
  std::vector<Vec> raw;
  Vec lo = Vec::Constant(big, -spec.box);
  Vec width = Vec::Constant(big, 2.0 * spec.box);
  if (m.is_quotient()) {
    lo.setZero();
    width = m.fundamental_box();
  }
  if (!spec.grid.empty()) {
    std::vector<int> counts = spec.grid;
    if (counts.size() == 1) counts.assign(static_cast<std::size_t>(big), spec.grid[0]);
    if (static_cast<int>(counts.size()) != big) throw ConfigError("seed grid needs one count per ambient axis");
    std::vector<int> idx(static_cast<std::size_t>(big), 0);
    while (true) {
      Vec x(big);
      for (int i = 0; i < big; ++i) {
        const double c = counts[static_cast<std::size_t>(i)];
        // cell centres for quotients, endpoints-inclusive lattice otherwise
        x[i] = m.is_quotient() ? lo[i] + width[i] * (idx[static_cast<std::size_t>(i)] + 0.5) / c
                               : lo[i] + width[i] * (c > 1 ? idx[static_cast<std::size_t>(i)] / (c - 1) : 0.5);
      }
      raw.push_back(x);
      int axis = 0;
      while (axis < big && ++idx[static_cast<std::size_t>(axis)] == counts[static_cast<std::size_t>(axis)]) {
        idx[static_cast<std::size_t>(axis)] = 0;
        ++axis;
      }
      if (axis == big) break;
    }
  } else {
    int count = spec.count;
    if (count <= 0) count = 32 * static_cast<int>(std::pow(3, m.dim()));
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss;
    for (int s = 0; s < count; ++s) {
      Vec x(big);
      if (m.is_unit_sphere()) {
        for (int i = 0; i < big; ++i) x[i] = gauss(rng);
      } else {
        for (int i = 0; i < big; ++i) x[i] = lo[i] + width[i] * unit(rng);
      }
      raw.push_back(x);
    }
  }
  std::vector<Vec> seeds;
  seeds.reserve(raw.size());
  for (const Vec& x : raw) {
    try {
      if (m.is_unit_sphere()) {
        if (x.norm() < 1e-6) continue;
        seeds.push_back(x / x.norm());
      } else {
        seeds.push_back(geometry::retract(m, x));
      }
    } catch (const ConvergenceError&) {
      // seed too far from the manifold
    }
  }
  return seeds;
}

bool newton_refine(const geometry::ManifoldBackend& m, const expr::ScalarExpression& f, Vec& x,
                   const CriticalOptions& options) {
  try {
    for (int it = 0; it < options.max_newton; ++it) {
      const Mat basis = geometry::tangent_basis(m, x);
      const Vec g = basis.transpose() * expr::eval_gradient(f, x).gradient;
      if (g.norm() < options.grad_tol) return true;
      const Mat h = geometry::lagrangian_hessian(m, f, x, basis);
      Eigen::SelfAdjointEigenSolver<Mat> es(h);
      Vec lam = es.eigenvalues();
      for (int i = 0; i < lam.size(); ++i) {
        if (std::abs(lam[i]) < kTikhonov) lam[i] = lam[i] < 0 ? -kTikhonov : kTikhonov;
      }
      Vec step = -(es.eigenvectors() * (es.eigenvectors().transpose() * g).cwiseQuotient(lam));
      if (step.norm() > kStepCap) step *= kStepCap / step.norm();
      x = geometry::retract(m, x + basis * step);
    }
  } catch (const Error&) {
    return false;
  }
  const Vec g = geometry::riemannian_gradient(m, f, x);
  return g.norm() < options.grad_tol;
}

void orient(CriticalPoint& c, const geometry::ManifoldBackend& m) {
  Mat& u = c.unstable_frame.vectors;
  Mat& s = c.stable_frame.vectors;
  for (int j = 0; j < u.cols(); ++j) {
    Vec v = u.col(j);
    sign_normalize(v);
    u.col(j) = v;
  }
  for (int j = 0; j < s.cols(); ++j) {
    Vec v = s.col(j);
    sign_normalize(v);
    s.col(j) = v;
  }
  c.unstable_frame.orientation_sign = 0;
  c.stable_frame.orientation_sign = 0;
  if (!m.orientable()) return;
  Mat full(m.ambient_dim(), m.dim());
  full << u, s;
  if (geometry::orientation_sign(m, c.location, full) < 0) {
    if (s.cols() > 0) {
      s.col(s.cols() - 1) *= -1.0;
    } else {
      u.col(u.cols() - 1) *= -1.0;
    }
  }
}

CriticalPoint classify(const geometry::ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x,
                       const CriticalOptions& options) {
  Mat basis;
  const Mat h = geometry::tangent_hessian(m, f, x, std::max(options.grad_tol, 1e-8), &basis);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Vec lam = es.eigenvalues();
  const double smallest = lam.cwiseAbs().minCoeff();
  if (smallest < options.nondegen_tol) {
    throw DegenerateCriticalPoint("degenerate critical point at " + describe(x) + ": smallest |eigenvalue| " +
                                  std::to_string(smallest) + " below " + std::to_string(options.nondegen_tol));
  }
  const Mat vectors = basis * es.eigenvectors();
  CriticalPoint c;
  c.location = x;
  c.value = expr::evaluate(f, x);
  c.eigenvalues = lam;
  c.index = static_cast<int>((lam.array() < 0).count());
  const int n = m.dim();
  c.stable_frame.base = x;
  c.unstable_frame.base = x;
  c.stable_frame.vectors = vectors.leftCols(c.index);
  c.unstable_frame.vectors = vectors.rightCols(n - c.index);
  orient(c, m);
  return c;
}

CriticalSet find_critical_points(const geometry::ManifoldBackend& m, const expr::ScalarExpression& f,
                                 const SeedSpec& seeds, const CriticalOptions& options) {
  if (f.num_vars() != m.ambient_dim()) {
    throw DimensionError("function has " + std::to_string(f.num_vars()) + " variables, manifold ambient dimension is " +
                         std::to_string(m.ambient_dim()));
  }
  const std::vector<Vec> starts = generate_seeds(m, seeds);
  std::vector<std::optional<Vec>> converged(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    Vec x = starts[i];
    if (newton_refine(m, f, x, options)) converged[i] = geometry::retract(m, x);
  });

  std::vector<Vec> unique;
  for (const auto& c : converged) {
    if (!c) continue;
    bool seen = false;
    for (const Vec& u : unique) {
      if (geometry::manifold_distance(m, u, *c) < options.merge_tol) {
        seen = true;
        break;
      }
    }
    if (!seen) unique.push_back(*c);
  }

  CriticalSet set;
  for (const Vec& x : unique) set.points.push_back(classify(m, f, x, options));
  std::sort(set.points.begin(), set.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    if (std::abs(a.value - b.value) > 1e-9) return a.value < b.value;
    for (int i = 0; i < a.location.size(); ++i) {
      if (std::abs(a.location[i] - b.location[i]) > 1e-9) return a.location[i] < b.location[i];
    }
    return false;
  });
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    set.points[i].id = static_cast<int>(i);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < set.points.size(); ++j) {
      if (i != j) nearest = std::min(nearest, geometry::manifold_distance(m, set.points[i].location, set.points[j].location));
    }
    set.points[i].hyperbolic_radius = std::min(0.05, 0.25 * nearest);
    min_sep = std::min(min_sep, nearest);
  }
  set.pairing_radius = std::min(0.05, 0.25 * min_sep);

  if (set.points.empty()) throw ConvergenceError("no critical point found from " + std::to_string(starts.size()) + " seeds");
  if (options.check_euler && m.euler_characteristic() && set.euler_characteristic() != *m.euler_characteristic()) {
    throw ConvergenceError("critical set incomplete: alternating count " + std::to_string(set.euler_characteristic()) +
                           " differs from Euler characteristic " + std::to_string(*m.euler_characteristic()) +
                           " of " + m.name());
  }
  return set;
}

}  // namespace morse::critical
