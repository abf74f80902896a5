#include "morse/connections.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <algorithm>
#include <tuple>

#include "morse/parallel.hpp"

namespace morse::connections {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGolden = 0.6180339887498949;

struct Label {
  int id = -1;  // -1: no convergence within max_time
  geometry::DeckElement deck;
  bool operator==(const Label&) const = default;
};

struct Shot {
  double angle = 0.0;
  Label label;
  flow::Trajectory traj;
};

bool same_line(const FlowLine& a, const FlowLine& b) {
  if (a.from != b.from || a.to != b.to || !(a.deck == b.deck)) return false;
  double d = std::fmod(std::abs(a.parameter - b.parameter), kTwoPi);
  d = std::min(d, kTwoPi - d);
  return d < 1e-6;
}

class Shooter {
 public:
  Shooter(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int base, flow::Direction dir,
          const ConnectionOptions& options)
      : spec_(spec), cs_(cs), base_(cs.at(base)), dir_(dir), options_(options) {}

  const Mat& directions() const {
    return dir_ == flow::Direction::Forward ? base_.unstable_frame.vectors : base_.stable_frame.vectors;
  }
  int sphere_dim() const { return static_cast<int>(directions().cols()) - 1; }
  int target_index() const { return base_.index + (dir_ == flow::Direction::Forward ? 1 : -1); }

  Vec start(double angle) const {
    const Mat& u = directions();
    Vec dir = std::cos(angle) * u.col(0);
    if (u.cols() > 1) dir += std::sin(angle) * u.col(1);
    const Vec x = base_.location + options_.epsilon * dir;
    return spec_.manifold.is_quotient() ? x : geometry::retract(spec_.manifold, x);
  }

  Shot shoot(double angle) const {
    Shot s;
    s.angle = angle;
    s.traj = flow::integrate(spec_, start(angle), dir_, &cs_);
    if (s.traj.status == flow::Status::Converged) s.label = {s.traj.limit, s.traj.limit_deck};
    return s;
  }

  bool is_target(const Label& l) const { return l.id >= 0 && cs_.at(l.id).index == target_index(); }
  bool is_special(const Label& l) const { return l.id < 0 || is_target(l); }

  // The shot reaches (or passes) `target` at deck(target); express it as a
  // forward line from the lower point.
  FlowLine make_line(const Shot& shot, int target, const geometry::DeckElement& deck) const {
    const auto& m = spec_.manifold;
    FlowLine line;
    line.shot_from = base_.id;
    line.parameter = shot.angle;
    if (dir_ == flow::Direction::Forward) {
      line.from = base_.id;
      line.to = target;
      line.deck = deck;
      line.representative = shot.traj;
      return line;
    }
    // Backward shot from p reaching h(q): the forward line runs from q to h^-1(p).
    const geometry::DeckElement inv = geometry::deck_inverse(m, deck);
    line.from = target;
    line.to = base_.id;
    line.deck = m.is_quotient() ? inv : geometry::DeckElement{};
    const auto& src = shot.traj;
    flow::Trajectory& t = line.representative;
    const double total = src.times.back();
    for (std::size_t i = src.points.size(); i-- > 0;) {
      t.times.push_back(total - src.times[i]);
      t.points.push_back(m.is_quotient() ? geometry::apply_deck(m, inv, src.points[i]) : src.points[i]);
    }
    t.status = flow::Status::Converged;
    t.limit = base_.id;
    t.limit_deck = line.deck;
    return line;
  }

  // Nearest target-index point passed by the shot, if unambiguous.
  std::optional<FlowLine> line_through(const Shot& shot, std::vector<std::string>& warnings) const {
    if (is_target(shot.label)) return make_line(shot, shot.label.id, shot.label.deck);
    std::optional<FlowLine> best;
    int hits = 0;
    for (int p : cs_.ids_of_index(target_index())) {
      const auto& cp = cs_.at(p);
      geometry::DeckElement g;
      const double d = closest_approach(spec_.manifold, shot.traj, cp, &g);
      if (d < cp.hyperbolic_radius) {
        ++hits;
        best = make_line(shot, p, g);
      }
    }
    if (hits > 1) {
      throw ConvergenceError("ambiguous connection from critical point " + std::to_string(base_.id) + " at angle " +
                             std::to_string(shot.angle) + ": the boundary shot passes " + std::to_string(hits) +
                             " candidate critical points");
    }
    if (hits == 0) {
      warnings.push_back("basin boundary from critical point " + std::to_string(base_.id) + " at angle " +
                         std::to_string(shot.angle) + " passes no critical point of index " +
                         std::to_string(target_index()) + "; discarded");
    }
    return best;
  }

  void refine(Shot a, Shot b, std::vector<FlowLine>& out, std::vector<std::string>& warnings, int depth = 0) const {
    if (depth > 8) {
      warnings.push_back("too many nested basins near angle " + std::to_string(a.angle) + "; interval skipped");
      return;
    }
    while (b.angle - a.angle > options_.angle_tol) {
      Shot mid = shoot(0.5 * (a.angle + b.angle));
      if (mid.label == a.label) {
        a = std::move(mid);
      } else if (mid.label == b.label) {
        b = std::move(mid);
      } else if (is_special(mid.label)) {
        if (auto l = line_through(mid, warnings)) out.push_back(std::move(*l));
        return;
      } else {
        refine(a, mid, out, warnings, depth + 1);
        refine(mid, b, out, warnings, depth + 1);
        return;
      }
    }
    if (auto l = line_through(shoot(0.5 * (a.angle + b.angle)), warnings)) out.push_back(std::move(*l));
  }

  /// Lines found from this base point.
  std::vector<FlowLine> search(std::vector<std::string>& warnings) const {
    std::vector<FlowLine> lines;
    const int d = sphere_dim();
    if (d < 0 || cs_.ids_of_index(target_index()).empty()) return lines;
    if (d == 0) {
      for (double angle : {0.0, std::numbers::pi}) {
        Shot s = shoot(angle);
        if (is_special(s.label)) {
          if (auto l = line_through(s, warnings)) lines.push_back(std::move(*l));
        }
      }
      return lines;
    }
    if (d > 1) {
      throw DimensionError("flow-line search from critical point " + std::to_string(base_.id) + " needs a " +
                           std::to_string(d) + "-sphere of directions; only 0- and 1-spheres are supported");
    }
    const int k = std::max(options_.samples, 8);
    std::vector<Shot> shots(static_cast<std::size_t>(k));
    parallel_for(shots.size(), [&](std::size_t i) {
      shots[i] = shoot(kTwoPi * (static_cast<double>(i) + kGolden) / k);
    });
    std::vector<std::vector<FlowLine>> found(shots.size());
    std::vector<std::vector<std::string>> notes(shots.size());
    parallel_for(shots.size(), [&](std::size_t i) {
      const Shot& a = shots[i];
      Shot b = shots[(i + 1) % shots.size()];
      if (i + 1 == shots.size()) b.angle += kTwoPi;
      if (is_special(a.label)) {
        if (auto l = line_through(a, notes[i])) found[i].push_back(std::move(*l));
        return;
      }
      if (is_special(b.label) || a.label == b.label) return;
      refine(a, b, found[i], notes[i]);
    });
    for (std::size_t i = 0; i < shots.size(); ++i) {
      for (auto& l : found[i]) {
        l.parameter = std::fmod(l.parameter, kTwoPi);
        bool dup = false;
        for (const auto& e : lines) dup = dup || same_line(e, l);
        if (!dup) lines.push_back(std::move(l));
      }
      warnings.insert(warnings.end(), notes[i].begin(), notes[i].end());
    }
    return lines;
  }

 private:
  const flow::FlowSpec& spec_;
  const critical::CriticalSet& cs_;
  const critical::CriticalPoint& base_;
  flow::Direction dir_;
  const ConnectionOptions& options_;
};

Mat complement_basis(const Vec& r) {
  // Orthonormal basis of r-perp with det[r, basis] > 0.
  const int k = static_cast<int>(r.size());
  Vec w = r;
  w[0] -= 1.0;
  Mat h = Mat::Identity(k, k);
  if (w.squaredNorm() > 1e-24) h -= (2.0 / w.squaredNorm()) * (w * w.transpose());
  Mat basis = h.rightCols(k - 1);
  Mat full(k, k);
  full.col(0) = r;
  full.rightCols(k - 1) = basis;
  if (full.determinant() < 0) basis.col(k - 2) *= -1.0;
  return basis;
}

}  // namespace

int ConnectionData::count(int p, int q) const {
  auto it = lines.find({p, q});
  if (it == lines.end()) return 0;
  int n = 0;
  for (const auto& l : it->second) n += l.sign;
  return n;
}

int ConnectionData::line_count(int p, int q) const {
  auto it = lines.find({p, q});
  return it == lines.end() ? 0 : static_cast<int>(it->second.size());
}

double closest_approach(const geometry::ManifoldBackend& m, const flow::Trajectory& traj,
                        const critical::CriticalPoint& p, geometry::DeckElement* deck, std::size_t* sample) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const Vec& x = traj.points[i];
    geometry::DeckElement g;
    double d;
    if (m.is_quotient()) {
      g = geometry::deck_between(m, p.location, x);
      d = (x - geometry::apply_deck(m, g, p.location)).norm();
    } else {
      d = (x - p.location).norm();
    }
    if (d < best) {
      best = d;
      if (deck) *deck = g;
      if (sample) *sample = i;
    }
  }
  return best;
}

std::vector<FlowLine> find_flow_lines_between(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int k,
                                              const ConnectionOptions& options, std::vector<std::string>* warnings) {
  std::vector<std::string> local_warnings;
  std::vector<std::string>& warn = warnings ? *warnings : local_warnings;
  const int n = spec.manifold.dim();
  std::vector<FlowLine> lines;
  if (cs.ids_of_index(k).empty() || cs.ids_of_index(k + 1).empty()) return lines;
  const bool backward = k < n - k - 1;  // stable sphere of the upper point is smaller
  const int base_index = backward ? k + 1 : k;
  const auto dir = backward ? flow::Direction::Backward : flow::Direction::Forward;
  for (int base : cs.ids_of_index(base_index)) {
    const Shooter shooter(spec, cs, base, dir, options);
    for (auto& l : shooter.search(warn)) lines.push_back(std::move(l));
  }
  return lines;
}

std::vector<FlowLine> find_flow_lines(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int q, int p,
                                      const ConnectionOptions& options) {
  const int k = cs.at(q).index;
  if (cs.at(p).index != k + 1) throw DomainError("flow lines are counted only between adjacent indices");
  std::vector<FlowLine> out;
  for (auto& l : find_flow_lines_between(spec, cs, k, options)) {
    if (l.from != q || l.to != p) continue;
    if (options.compute_signs) l.sign = sign_of(spec, cs, l);
    out.push_back(std::move(l));
  }
  return out;
}

int sign_of(const flow::FlowSpec& spec, const critical::CriticalSet& cs, const FlowLine& line) {
  const auto& m = spec.manifold;
  const auto& p = cs.at(line.to);
  const auto& q = cs.at(line.from);
  const auto& traj = line.representative;
  const Mat lin = m.is_quotient() ? geometry::deck_linear(m, line.deck) : Mat::Identity(m.ambient_dim(), m.ambient_dim());
  const Vec gp = m.is_quotient() ? geometry::apply_deck(m, line.deck, p.location) : p.location;
  const Mat e = lin * p.stable_frame.vectors;
  const int k = static_cast<int>(e.cols());

  double radius = std::min(0.02, 0.5 * p.hyperbolic_radius);
  double last_det = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt, radius *= 0.5) {
    std::size_t i = 0;
    while (i < traj.points.size() && (traj.points[i] - gp).norm() >= radius) ++i;
    if (i == traj.points.size()) {
      throw ConvergenceError("flow line " + std::to_string(q.id) + " -> " + std::to_string(p.id) +
                             " never enters the sign ball of radius " + std::to_string(radius));
    }
    const Vec y = traj.points[i];
    const Vec a = e.transpose() * (y - gp);
    if (a.norm() < 1e-14) continue;
    const Vec r = a / a.norm();
    if (k == 1) return r[0] > 0 ? 1 : -1;
    const Mat w = e * complement_basis(r);
    flow::FrameFlowOptions o;
    o.t_end = traj.times[i];
    o.settle_speed = 0.0;
    o.renormalize = true;
    const flow::FrameFlow back = flow::flow_with_frame(spec, y, w, flow::Direction::Backward, o);
    const Mat projected = q.stable_frame.vectors.transpose() * back.frame;
    last_det = projected.determinant();
    if (std::abs(last_det) > 1e-8) return last_det > 0 ? 1 : -1;
  }
  throw ConvergenceError("sign of flow line " + std::to_string(q.id) + " -> " + std::to_string(p.id) +
                         " undetermined: projected determinant " + std::to_string(last_det));
}

ConnectionData find_all_connections(const flow::FlowSpec& spec, const critical::CriticalSet& cs,
                                    const ConnectionOptions& options) {
  ConnectionData data;
  for (int k = 0; k < spec.manifold.dim(); ++k) {
    for (auto& l : find_flow_lines_between(spec, cs, k, options, &data.warnings)) {
      if (options.compute_signs) l.sign = sign_of(spec, cs, l);
      data.lines[{l.to, l.from}].push_back(std::move(l));
    }
  }
  for (auto& [key, ls] : data.lines) {
    std::sort(ls.begin(), ls.end(), [](const FlowLine& a, const FlowLine& b) {
      return std::tie(a.shot_from, a.parameter) < std::tie(b.shot_from, b.parameter);
    });
  }
  return data;
}

int intersection_pairing(const flow::FlowSpec& spec, const critical::CriticalSet& cs, int p, int p2,
                         const ConnectionOptions& options) {
  const auto& a = cs.at(p);
  const auto& b = cs.at(p2);
  if (a.index != b.index) throw DomainError("intersection pairing needs stable and unstable manifolds of equal index");
  if (p == p2) return 1;
  const Shooter shooter(spec, cs, p2, flow::Direction::Forward, options);
  const int d = shooter.sphere_dim();
  if (d < 0) return 0;
  const int k = d == 0 ? 2 : std::max(options.samples, 8);
  std::vector<double> approach(static_cast<std::size_t>(k));
  parallel_for(approach.size(), [&](std::size_t i) {
    const double angle = d == 0 ? std::numbers::pi * static_cast<double>(i)
                                : kTwoPi * (static_cast<double>(i) + kGolden) / k;
    approach[i] = closest_approach(spec.manifold, shooter.shoot(angle).traj, a);
  });
  for (double dist : approach) {
    if (dist < 1e-6) {
      throw VerificationError("unstable manifold of critical point " + std::to_string(p2) +
                              " meets the stable manifold of " + std::to_string(p) +
                              " (equal index): the flow is not Morse-Smale");
    }
  }
  return 0;
}

}  // namespace morse::connections
