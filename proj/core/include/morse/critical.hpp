#pragma once

#include <cstdint>
#include <vector>

#include "morse/expr.hpp"
#include "morse/geometry.hpp"

namespace morse::critical {

struct CriticalPoint {
  int id = 0;
  Vec location;
  double value = 0.0;
  int index = 0;
  Vec eigenvalues;  // ascending
  /// Positive-eigenvalue eigenvectors (ambient coordinates), ascending; spans T_p U_p.
  geometry::TangentFrame unstable_frame;
  /// Negative-eigenvalue eigenvectors, ascending; spans T_p S_p.
  geometry::TangentFrame stable_frame;
  /// Radius of the ball in which the linearization is trusted.
  double hyperbolic_radius = 0.05;

  int dim_stable() const { return static_cast<int>(stable_frame.vectors.cols()); }
  int dim_unstable() const { return static_cast<int>(unstable_frame.vectors.cols()); }
};

struct SeedSpec {
  std::uint64_t seed = 20240917;
  std::vector<int> grid;  // per-axis counts; empty means random seeds
  int count = 0;          // random seeds; 0 means 32 * 3^n
  double box = 1.5;       // implicit backends sample [-box, box]^N before retraction
};

struct CriticalOptions {
  double grad_tol = 1e-10;
  double nondegen_tol = 1e-6;
  double merge_tol = 1e-6;
  int max_newton = 100;
  bool check_euler = true;
};

struct CriticalSet {
  std::vector<CriticalPoint> points;  // sorted by (value, id); id == position
  double pairing_radius = 0.05;

  const CriticalPoint& at(int id) const { return points.at(static_cast<std::size_t>(id)); }
  std::vector<int> ids_of_index(int k) const;
  std::vector<int> counts_by_index(int n) const;
  int euler_characteristic() const;
};

/// Seeds, runs damped Newton on the projected gradient, merges and classifies.
/// Throws DegenerateCriticalPoint for a non-Morse point and ConvergenceError
/// when the alternating count disagrees with the manifold's Euler characteristic.
CriticalSet find_critical_points(const geometry::ManifoldBackend& m, const expr::ScalarExpression& f,
                                 const SeedSpec& seeds, const CriticalOptions& options = {});

/// Newton from one seed; returns false if it did not converge.
bool newton_refine(const geometry::ManifoldBackend& m, const expr::ScalarExpression& f, Vec& x,
                   const CriticalOptions& options);

/// Eigen-decomposition and index at a converged point; frames are oriented.
CriticalPoint classify(const geometry::ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x,
                       const CriticalOptions& options);

/// Fixes deterministic signs: every eigenvector has its largest-magnitude
/// coordinate positive, then (orientable X) the last stable vector, or the
/// last unstable vector if S_p is a point, is flipped so that the frame
/// (unstable, stable) is positively oriented.
void orient(CriticalPoint& c, const geometry::ManifoldBackend& m);

std::vector<Vec> generate_seeds(const geometry::ManifoldBackend& m, const SeedSpec& seeds);

}  // namespace morse::critical
