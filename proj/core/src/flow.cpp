#include "morse/flow.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace morse::flow {
namespace {

// Minimal forward-mode dual number for the closed-form chart flow.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual operator+(double a, Dual b) { return {a + b.v, b.d}; }
inline Dual operator-(double a, Dual b) { return {a - b.v, -b.d}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }

template <class T>
std::vector<T> chart_flow(const std::vector<T>& p, const Vec& u, T t) {
  const std::size_t n = p.size() - 1;
  const T denom = 1.0 + p[n];
  std::vector<T> y(n);
  T r2{};
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = p[i] / denom + t * T{u[static_cast<int>(i)]};
    r2 = r2 + y[i] * y[i];
  }
  const T s = 1.0 + r2;
  std::vector<T> out(n + 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = 2.0 * y[i] / s;
  out[n] = (1.0 - r2) / s;
  return out;
}

bool at_sphere17_zero(const Vec& x) { return 1.0 + x[x.size() - 1] < 1e-14; }

Vec s17_map(const Vec& x, const Vec& u, double t) {
  if (at_sphere17_zero(x)) return x;
  std::vector<double> p(x.data(), x.data() + x.size());
  const auto q = chart_flow<double>(p, u, t);
  return Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
}

// d/dt of phi_t(x) and d phi_t applied to the columns of w.
void s17_derivatives(const Vec& x, const Vec& u, double t, const Mat& w, Vec* vel, Mat* dw) {
  const int big = static_cast<int>(x.size());
  if (vel) {
    vel->setZero(big);
    if (!at_sphere17_zero(x)) {
      std::vector<Dual> p(static_cast<std::size_t>(big));
      for (int i = 0; i < big; ++i) p[static_cast<std::size_t>(i)] = {x[i], 0.0};
      const auto q = chart_flow<Dual>(p, u, Dual{t, 1.0});
      for (int i = 0; i < big; ++i) (*vel)[i] = q[static_cast<std::size_t>(i)].d;
    }
  }
  if (dw) {
    dw->setZero(big, w.cols());
    if (at_sphere17_zero(x)) return;
    for (int j = 0; j < w.cols(); ++j) {
      std::vector<Dual> p(static_cast<std::size_t>(big));
      for (int i = 0; i < big; ++i) p[static_cast<std::size_t>(i)] = {x[i], w(i, j)};
      const auto q = chart_flow<Dual>(p, u, Dual{t, 0.0});
      for (int i = 0; i < big; ++i) (*dw)(i, j) = q[static_cast<std::size_t>(i)].d;
    }
  }
}

double sign_of(Direction dir) { return dir == Direction::Forward ? 1.0 : -1.0; }

bool captured(const FlowSpec& spec, const critical::CriticalPoint& p, const Vec& x, Direction dir,
              geometry::DeckElement* deck) {
  const auto& m = spec.manifold;
  Vec d;
  geometry::DeckElement g;
  if (m.is_quotient()) {
    g = geometry::deck_between(m, p.location, x);
    d = x - geometry::apply_deck(m, g, p.location);
    if (d.norm() >= spec.capture_radius) return false;
    d = geometry::deck_linear(m, g).transpose() * d;
  } else {
    d = x - p.location;
    if (d.norm() >= spec.capture_radius) return false;
  }
  const Mat& expanding = dir == Direction::Forward ? p.unstable_frame.vectors : p.stable_frame.vectors;
  if (expanding.cols() > 0 && (expanding.transpose() * d).norm() >= spec.capture_radius * 1e-2) return false;
  if (deck) *deck = g;
  return true;
}

}  // namespace

FlowSpec FlowSpec::gradient(geometry::ManifoldBackend m, expr::ScalarExpression f) {
  if (f.num_vars() != m.ambient_dim()) throw DimensionError("function and manifold dimensions differ");
  FlowSpec s;
  s.kind = FlowKind::GradientUphill;
  s.manifold = std::move(m);
  s.f = std::move(f);
  return s;
}

FlowSpec FlowSpec::sphere17(geometry::ManifoldBackend m, Vec u) {
  if (!m.is_unit_sphere()) throw DimensionError("the chart-translation flow needs the unit sphere backend");
  if (u.size() != m.dim()) throw DimensionError("chart direction must have one entry per sphere dimension");
  if (u.norm() == 0.0) throw DomainError("chart direction must be nonzero");
  FlowSpec s;
  s.kind = FlowKind::Sphere17;
  s.manifold = std::move(m);
  s.u = u / u.norm();
  return s;
}

ode::Options FlowSpec::ode_options() const {
  ode::Options o;
  o.rtol = rtol;
  o.atol = atol;
  o.max_step = 0.5;
  return o;
}

Vec velocity(const FlowSpec& spec, const Vec& x) {
  if (spec.kind == FlowKind::Sphere17) {
    Vec v;
    s17_derivatives(x, spec.u, 0.0, Mat(), &v, nullptr);
    return v;
  }
  const expr::JetValue jf = expr::eval_gradient(spec.f, x);
  const auto* s = spec.manifold.implicit_data();
  if (!s) return jf.gradient;
  const expr::JetValue jc = expr::eval_gradient(s->constraint, x);
  const double mu = jf.gradient.dot(jc.gradient) / jc.gradient.squaredNorm();
  return jf.gradient - mu * jc.gradient;
}

Mat velocity_jacobian(const FlowSpec& spec, const Vec& x) {
  const int big = static_cast<int>(x.size());
  if (spec.kind == FlowKind::Sphere17) {
    // J = d/dt (d phi_t) at t = 0, by symmetric difference of the closed form.
    Mat plus, minus;
    const double h = 1e-6;
    s17_derivatives(x, spec.u, h, Mat::Identity(big, big), nullptr, &plus);
    s17_derivatives(x, spec.u, -h, Mat::Identity(big, big), nullptr, &minus);
    return (plus - minus) / (2.0 * h);
  }
  const expr::JetValue jf = expr::eval_jet(spec.f, x);
  const auto* s = spec.manifold.implicit_data();
  if (!s) return jf.hessian;
  const expr::JetValue jc = expr::eval_jet(s->constraint, x);
  const double g2 = jc.gradient.squaredNorm();
  const double dot = jf.gradient.dot(jc.gradient);
  const double mu = dot / g2;
  const Vec grad_mu = (jf.hessian * jc.gradient + jc.hessian * jf.gradient) / g2 -
                      (2.0 * dot / (g2 * g2)) * (jc.hessian * jc.gradient);
  return jf.hessian - jc.gradient * grad_mu.transpose() - mu * jc.hessian;
}

Mat orthonormalize(const Mat& w) {
  Mat q = w;
  for (int j = 0; j < q.cols(); ++j) {
    for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    const double norm = q.col(j).norm();
    if (norm < 1e-300) throw ConvergenceError("frame collapsed during transport");
    q.col(j) /= norm;
  }
  return q;
}

Trajectory integrate(const FlowSpec& spec, const Vec& x0, Direction dir, const critical::CriticalSet* critical,
                     double max_time) {
  if (max_time <= 0) max_time = spec.max_time;
  const auto& m = spec.manifold;
  Trajectory traj;
  const Vec start = m.is_quotient() ? x0 : geometry::retract(m, x0);
  traj.times.push_back(0.0);
  traj.points.push_back(start);

  auto check = [&](const Vec& x) {
    if (critical) {
      for (const auto& p : critical->points) {
        geometry::DeckElement g;
        if (captured(spec, p, x, dir, &g)) {
          traj.status = Status::Converged;
          traj.limit = p.id;
          traj.limit_deck = g;
          return true;
        }
      }
      return false;
    }
    if (velocity(spec, x).norm() < 1e-13) {
      traj.status = Status::Converged;
      return true;
    }
    return false;
  };
  if (check(start)) return traj;

  if (spec.kind == FlowKind::Sphere17) {
    const double s = sign_of(dir);
    for (int k = 1;; ++k) {
      const double t = std::min(std::expm1(k / 20.0), max_time);
      const Vec x = s17_map(start, spec.u, s * t);
      traj.times.push_back(t);
      traj.points.push_back(x);
      if ((x - Vec::Unit(x.size(), x.size() - 1) * -1.0).norm() < spec.capture_radius) {
        traj.status = Status::Converged;
        return traj;
      }
      if (t >= max_time) return traj;
    }
  }

  const double s = sign_of(dir);
  ode::Rhs rhs = [&](double, const ode::State& y, ode::State& dy) { dy = s * velocity(spec, Vec(y)); };
  ode::StepHook hook = [&](double t, ode::State& y) {
    Vec x = y;
    if (!m.is_quotient()) {
      x = geometry::retract(m, x);
      y = x;
    }
    traj.times.push_back(t);
    traj.points.push_back(x);
    return check(x);
  };
  ode::dormand_prince(rhs, 0.0, ode::State(start), max_time, spec.ode_options(), hook);
  return traj;
}

int limit(const FlowSpec& spec, const critical::CriticalSet& critical, const Vec& x0, Direction dir) {
  const Trajectory t = integrate(spec, x0, dir, &critical);
  if (t.status != Status::Converged) {
    throw ConvergenceError("flow did not converge within max_time " + std::to_string(spec.max_time));
  }
  return t.limit;
}

Vec flow_map(const FlowSpec& spec, const Vec& x, double t) {
  if (t == 0.0) return x;
  if (spec.kind == FlowKind::Sphere17) return s17_map(x, spec.u, t);
  FrameFlowOptions o;
  o.t_end = std::abs(t);
  o.settle_speed = 0.0;
  return flow_with_frame(spec, x, Mat(x.size(), 0), t > 0 ? Direction::Forward : Direction::Backward, o).x;
}

FrameFlow flow_with_frame(const FlowSpec& spec, const Vec& x0, const Mat& w0, Direction dir,
                          const FrameFlowOptions& options, const FrameIntegrand& integrand) {
  const auto& m = spec.manifold;
  const double s = sign_of(dir);
  const int big = m.ambient_dim();
  const int k = static_cast<int>(w0.cols());
  const double t_end = options.t_end > 0 ? options.t_end : spec.max_time;
  FrameFlow out;

  if (spec.kind == FlowKind::Sphere17) {
    auto state_at = [&](double t, Vec& x, Vec& v, Mat& w) {
      x = s17_map(x0, spec.u, s * t);
      s17_derivatives(x0, spec.u, s * t, w0, &v, &w);
      v *= s;
    };
    if (integrand) {
      auto g = [&](double t) {
        Vec x, v;
        Mat w;
        state_at(t, x, v, w);
        // the integrand decays at the zero; overflow far out means 0
        const double val = integrand(x, v, w);
        return std::isfinite(val) ? val : 0.0;
      };
      if (options.t_end > 0) {
        out.integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, t_end, 15, 1e-13);
      } else {
        boost::math::quadrature::exp_sinh<double> rule;
        out.integral = rule.integrate(g, 1e-12);
      }
    }
    const double t_final = options.t_end > 0 ? t_end : std::numeric_limits<double>::infinity();
    if (std::isfinite(t_final)) {
      Vec v;
      state_at(t_final, out.x, v, out.frame);
      out.time = t_final;
    } else {
      out.x = -Vec::Unit(big, big - 1);
      out.frame = Mat::Zero(big, k);
      out.time = t_final;
      out.settled = true;
    }
    if (options.renormalize && k > 0) out.frame = orthonormalize(out.frame);
    return out;
  }

  const Eigen::Index dim = big + big * k + 1;
  ode::State y0(dim);
  y0.head(big) = m.is_quotient() ? x0 : geometry::retract(m, x0);
  for (int j = 0; j < k; ++j) y0.segment(big + big * j, big) = geometry::tangent_project(m, y0.head(big), w0.col(j));
  y0[dim - 1] = 0.0;

  ode::Rhs rhs = [&](double, const ode::State& y, ode::State& dy) {
    dy.resize(dim);
    const Vec x = y.head(big);
    const Vec v = s * velocity(spec, x);
    dy.head(big) = v;
    Mat w(big, k);
    if (k > 0) {
      const Mat j = s * velocity_jacobian(spec, x);
      for (int c = 0; c < k; ++c) {
        w.col(c) = y.segment(big + big * c, big);
        dy.segment(big + big * c, big) = j * w.col(c);
      }
    }
    dy[dim - 1] = integrand ? integrand(x, v, w) : 0.0;
  };
  bool settled = false;
  ode::StepHook hook = [&](double, ode::State& y) {
    Vec x = y.head(big);
    if (!m.is_quotient()) {
      x = geometry::retract(m, x);
      y.head(big) = x;
    }
    Mat w(big, k);
    for (int c = 0; c < k; ++c) w.col(c) = geometry::tangent_project(m, x, y.segment(big + big * c, big));
    if (options.renormalize && k > 0) w = orthonormalize(w);
    for (int c = 0; c < k; ++c) y.segment(big + big * c, big) = w.col(c);
    if (options.settle_speed > 0 && velocity(spec, x).norm() < options.settle_speed) {
      settled = true;
      return true;
    }
    return false;
  };
  ode::Options opts = spec.ode_options();
  if (integrand) opts.atol = std::min(opts.atol, 1e-13);
  const ode::Result r = ode::dormand_prince(rhs, 0.0, y0, t_end, opts, hook);
  out.x = r.y.head(big);
  out.frame.resize(big, k);
  for (int c = 0; c < k; ++c) out.frame.col(c) = r.y.segment(big + big * c, big);
  out.integral = r.y[dim - 1];
  out.time = r.t;
  out.settled = settled;
  if (settled && integrand && k == 0) {
    const Mat basis = geometry::tangent_basis(m, out.x);
    const Mat jt = basis.transpose() * velocity_jacobian(spec, out.x) * basis;
    const Vec v = basis.transpose() * velocity(spec, out.x);
    Eigen::FullPivLU<Mat> lu(jt);
    if (lu.isInvertible()) out.integral += integrand(out.x, -(basis * lu.solve(v)), Mat(big, 0));
  }
  return out;
}

Mat transport(const FlowSpec& spec, const Trajectory& traj, const Mat& w0, Direction dir) {
  if (traj.points.empty()) throw DimensionError("transport along an empty trajectory");
  if (traj.times.back() == 0.0) return w0;
  FrameFlowOptions o;
  o.t_end = traj.times.back();
  o.settle_speed = 0.0;
  return flow_with_frame(spec, traj.points.front(), w0, dir, o).frame;
}

double pullback_form(const FlowSpec& spec, const expr::FormExpression& alpha, double t, const Vec& x,
                     const Mat& vectors) {
  if (t == 0.0) return expr::eval_form(alpha, x, vectors);
  FrameFlowOptions o;
  o.t_end = std::abs(t);
  o.settle_speed = 0.0;
  const FrameFlow ff = flow_with_frame(spec, x, vectors, t > 0 ? Direction::Forward : Direction::Backward, o);
  return expr::eval_form(alpha, ff.x, ff.frame);
}

}  // namespace morse::flow
