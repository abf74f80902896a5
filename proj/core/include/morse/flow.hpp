#pragma once

#include <functional>
#include <vector>

#include "morse/critical.hpp"
#include "morse/expr.hpp"
#include "morse/geometry.hpp"
#include "morse/ode.hpp"

namespace morse::flow {

enum class FlowKind { GradientUphill, Sphere17 };
enum class Direction { Forward, Backward };

struct FlowSpec {
  FlowKind kind = FlowKind::GradientUphill;
  geometry::ManifoldBackend manifold;
  expr::ScalarExpression f;  // GradientUphill only
  Vec u;                     // Sphere17 only: translation direction in the stereographic chart
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_time = 200.0;
  double capture_radius = 1e-4;

  static FlowSpec gradient(geometry::ManifoldBackend m, expr::ScalarExpression f);
  /// Flow conjugate to y -> y + t*u in the chart y = (p_1..p_n)/(1 + p_{n+1});
  /// its only zero is the point (0, .., 0, -1).
  static FlowSpec sphere17(geometry::ManifoldBackend m, Vec u);

  ode::Options ode_options() const;
};

/// Vector field V at x (ambient coordinates, tangent).
Vec velocity(const FlowSpec& spec, const Vec& x);

/// Ambient Jacobian J of the extension of V used by the variational equation.
Mat velocity_jacobian(const FlowSpec& spec, const Vec& x);

enum class Status { Converged, MaxTime };

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> points;  // lifted (unreduced) coordinates on quotients
  Status status = Status::MaxTime;
  int limit = -1;                   // critical id when Converged
  geometry::DeckElement limit_deck;  // points.back() is near limit_deck(location of limit)
};

/// Adaptive integration with per-step retraction. With a critical set, stops
/// once inside the capture radius of a critical point with the expanding
/// component (in its eigenframe) below capture_radius * 1e-2.
Trajectory integrate(const FlowSpec& spec, const Vec& x0, Direction dir, const critical::CriticalSet* critical,
                     double max_time = -1.0);

/// Terminal critical point of the flow from x0; throws ConvergenceError
/// (non-convergent) when max_time is reached.
int limit(const FlowSpec& spec, const critical::CriticalSet& critical, const Vec& x0, Direction dir);

/// phi_t(x); negative t flows backward.
Vec flow_map(const FlowSpec& spec, const Vec& x, double t);

struct FrameFlow {
  Vec x;
  Mat frame;  // ambient_dim x k, transported by the linearized flow
  double time = 0.0;
  double integral = 0.0;
  bool settled = false;  // |V| dropped below the settle speed
};

/// Integrand evaluated along the flow: (point, velocity in the flow direction, transported frame).
using FrameIntegrand = std::function<double(const Vec& x, const Vec& v, const Mat& frame)>;

struct FrameFlowOptions {
  double t_end = 0.0;           // <= 0 means run until settled or max_time
  /// Stop when |V| falls below this. For integrands of a single vector
  /// (empty frame) the remaining linearized tail -J^{-1} v is added.
  double settle_speed = 1e-7;
  bool renormalize = false;     // orientation-preserving QR of the frame after each step
};

/// Flows x0 with the tangent frame W0 and accumulates the integral of the
/// integrand over time. Sphere17 flows use the closed form plus quadrature.
FrameFlow flow_with_frame(const FlowSpec& spec, const Vec& x0, const Mat& w0, Direction dir,
                          const FrameFlowOptions& options, const FrameIntegrand& integrand = {});

/// Frame transported along the stored trajectory from its start to its end.
Mat transport(const FlowSpec& spec, const Trajectory& traj, const Mat& w0, Direction dir);

/// (phi_t^* alpha)(x) on the tangent vectors in `vectors`.
double pullback_form(const FlowSpec& spec, const expr::FormExpression& alpha, double t, const Vec& x,
                     const Mat& vectors);

/// Orientation-preserving Gram-Schmidt: Q with R having positive diagonal.
Mat orthonormalize(const Mat& w);

}  // namespace morse::flow
