#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "morse/critical.hpp"
#include "morse/flow.hpp"

namespace morse::connections {

/// A connecting orbit from q (lower index) up to p (index + 1).
struct FlowLine {
  int from = -1;  // q
  int to = -1;    // p
  int sign = 0;   // n_gamma
  int shot_from = -1;      // critical point whose direction sphere was sampled
  double parameter = 0.0;  // shooting angle on that sphere
  flow::Trajectory representative;
  /// The line runs from q's location to deck(p's location) in lifted coordinates.
  geometry::DeckElement deck;
};

struct ConnectionOptions {
  double epsilon = 1e-3;     // shooting radius around q
  int samples = 96;          // initial directions on a circle of directions
  double angle_tol = 1e-8;   // width at which a basin boundary is considered localized
  bool compute_signs = true;
};

struct ConnectionData {
  /// Keyed by (p, q) = (to, from).
  std::map<std::pair<int, int>, std::vector<FlowLine>> lines;
  std::vector<std::string> warnings;

  /// N_{p,q} = sum of signs; 0 when there are no lines.
  int count(int p, int q) const;
  int line_count(int p, int q) const;
};

/// All flow lines from index-k points up to index-(k + 1) points. Shots start
/// on the lower-dimensional of the two direction spheres: forward from the
/// unstable sphere of the index-k point, or backward from the stable sphere of
/// the index-(k + 1) point. Lines are returned unsigned.
std::vector<FlowLine> find_flow_lines_between(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int k,
                                              const ConnectionOptions& options,
                                              std::vector<std::string>* warnings = nullptr);

/// Flow lines from q to p (lambda_p = lambda_q + 1 required).
std::vector<FlowLine> find_flow_lines(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int q, int p,
                                      const ConnectionOptions& options = {});

ConnectionData find_all_connections(const flow::FlowSpec& spec, const critical::CriticalSet& cs,
                                    const ConnectionOptions& options = {});

/// n_gamma by backward transport of the boundary frame of S_p near p.
/// Throws ConvergenceError if the projected determinant stays degenerate.
int sign_of(const flow::FlowSpec& spec, const critical::CriticalSet& cs, const FlowLine& line);

/// Oriented intersection number of S_p with U_{p2} for equal indices:
/// +1 when p == p2, 0 otherwise after checking numerically that no shot from
/// p2's unstable sphere approaches p (VerificationError otherwise).
int intersection_pairing(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int p, int p2,
                         const ConnectionOptions& options = {});

/// Closest approach of a lifted trajectory to any lift of critical point p.
double closest_approach(const geometry::ManifoldBackend& m, const flow::Trajectory& traj,
                        const critical::CriticalPoint& p, geometry::DeckElement* deck = nullptr,
                        std::size_t* sample = nullptr);

}  // namespace morse::connections
