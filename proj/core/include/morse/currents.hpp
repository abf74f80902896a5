#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morse/complex.hpp"
#include "morse/critical.hpp"
#include "morse/expr.hpp"
#include "morse/flow.hpp"

namespace morse::currents {

struct ResidueOptions {
  double epsilon0 = 1e-3;      // radius of the eigen-disk around p
  int samples = 96;            // boundary directions probed for basin changes (2-dimensional sweeps)
  double boundary_tol = 1e-10; // angular width to which basin changes are localized
  double quad_tol = 1e-10;     // relative tolerance of the adaptive angular quadrature
  /// Open cells that are the only ones of their kind have full measure; integrate
  /// over the manifold directly instead of sweeping.
  bool full_measure_shortcut = true;
};

enum class Role { Stable, Unstable };

struct Residue {
  int id = -1;
  double value = 0.0;
  double error = 0.0;
};

struct ResidueVector {
  int degree = 0;
  std::vector<Residue> residues;    // r_p = integral over U_p, n - lambda_p = degree
  std::vector<Residue> coresidues;  // s_p = integral over S_p, lambda_p = degree
};

struct CurrentTerm {
  double coefficient = 0.0;
  int generator = -1;
  Role role = Role::Stable;
};

struct CurrentSum {
  std::vector<CurrentTerm> terms;
};

/// Integral of alpha over U_p (deg alpha = n - lambda_p), oriented by the
/// unstable frame. Returns 0 for other degrees.
double integrate_over_unstable(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int p,
                               const expr::FormExpression& alpha, const ResidueOptions& options = {},
                               double* error = nullptr);

/// Integral of beta over S_p (deg beta = lambda_p), oriented by the stable frame.
double integrate_over_stable(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int p,
                             const expr::FormExpression& beta, const ResidueOptions& options = {},
                             double* error = nullptr);

ResidueVector residues(const flow::FlowSpec& spec, const critical::CriticalSet& cs,
                       const expr::FormExpression& alpha, const ResidueOptions& options = {});

/// P(alpha) = sum r_p(alpha) [S_p].
CurrentSum P_apply(const flow::FlowSpec& spec, const critical::CriticalSet& cs, const expr::FormExpression& alpha,
                   const ResidueOptions& options = {});

/// T(alpha) at x on the deg(alpha) - 1 tangent vectors in `vectors`:
/// -int_0^inf alpha(V, dphi_s w_1, ...) at phi_s(x) ds. Zero for functions.
double T_apply_pointwise(const flow::FlowSpec& spec, const expr::FormExpression& alpha, const Vec& x,
                         const Mat& vectors);

struct PointCloud {
  int id = -1;
  Role role = Role::Stable;
  std::vector<Vec> points;
};

/// Samples of S_p or U_p: flow lines from `directions` points on the eigen-sphere
/// of radius epsilon0, densified to the given spacing.
PointCloud point_cloud(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int p, Role role,
                       int directions = 32, double spacing = 2e-3, double epsilon0 = 1e-3);

/// Random points at distance > margin from critical points (or from the zero
/// of a Sphere17 flow) and from the stable manifolds S_p with lambda_p < n.
/// `cs` may be null for Sphere17 flows.
std::vector<Vec> admissible_samples(const flow::FlowSpec& spec, const critical::CriticalSet* cs, int count,
                                    std::uint64_t seed, double margin = 1e-2);

struct FmeSample {
  Vec x;
  double residual = 0.0;
};

struct FmeReport {
  std::vector<FmeSample> samples;
  double max_residual = 0.0;
};

/// |d(T alpha) + T(d alpha) - alpha| at each sample in a tangent chart, with
/// d(T alpha) by central differences of step fd_step. deg alpha >= 1.
FmeReport verify_fme(const flow::FlowSpec& spec, const expr::FormExpression& alpha, const std::vector<Vec>& samples,
                     double fd_step = 1e-4);

struct ChainMapRow {
  int q = -1;
  double lhs = 0.0;  // sign * sum_p n_pq r_p(beta)
  double rhs = 0.0;  // r_q(d beta)
};

struct ChainMapReport {
  std::vector<ChainMapRow> rows;
  double max_residual = 0.0;
};

/// r_q(d beta) against (-1)^{n+1} sum_p n_pq r_p(beta) for every q one index below
/// the generators paired with beta. Integral complexes only.
ChainMapReport verify_P_chain_map(const flow::FlowSpec& spec, const critical::CriticalSet& cs,
                                  const complex::MorseComplex& c, const expr::FormExpression& beta,
                                  const ResidueOptions& options = {});

/// Integral of a top-degree form over the manifold: unit spheres of dimension
/// 1 or 2 by latitude-split spherical coordinates, orientable quotients by a
/// tensor Gauss rule on the fundamental box.
double integrate_over_manifold(const geometry::ManifoldBackend& m, const expr::FormExpression& omega,
                               int panels = 4);

struct PairingTerm {
  int p = -1;
  double residue = 0.0;    // r_p(alpha)
  double coresidue = 0.0;  // s_p(beta)
};

struct PairingReport {
  double pairing = 0.0;
  double direct = 0.0;
  double difference = 0.0;
  std::vector<PairingTerm> terms;
};

/// sum over p, p' of r_p(alpha) s_p'(beta) [S_p' . U_p], against the direct
/// integral of alpha ^ beta. deg alpha + deg beta = n.
PairingReport pairing(const flow::FlowSpec& spec, const critical::CriticalSet& cs, const expr::FormExpression& alpha,
                      const expr::FormExpression& beta, const ResidueOptions& options = {});

struct IntegralityReport {
  bool integral = true;
  double tolerance = 1e-4;
  std::vector<Residue> table;
};

IntegralityReport check_integral_residues(const flow::FlowSpec& spec, const critical::CriticalSet& cs,
                                          const expr::FormExpression& alpha, double int_tol = 1e-4,
                                          const ResidueOptions& options = {});

}  // namespace morse::currents
