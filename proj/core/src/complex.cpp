#include "morse/complex.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include "morse/errors.hpp"

namespace morse::complex {
namespace {

using algebra::multiply;
using algebra::rank_mod;
using algebra::smith_normal_form;

IntMatrix power(const IntMatrix& a, long e) {
  IntMatrix base = e < 0 ? algebra::unimodular_inverse(a) : a;
  IntMatrix out = IntMatrix::identity(a.rows());
  for (long i = 0; i < std::labs(e); ++i) out = multiply(out, base);
  return out;
}

void check_local_system(const geometry::ManifoldBackend& m, const LocalSystem& ls) {
  if (!m.is_quotient()) throw DomainError("twisted coefficients need a flat quotient manifold");
  if (ls.rank < 1) throw DomainError("local system rank must be positive");
  const std::size_t want = m.quotient_data()->kind == geometry::QuotientKind::Klein ? 2 : static_cast<std::size_t>(m.dim());
  if (ls.generators.size() != want) {
    throw DomainError("local system needs " + std::to_string(want) + " generator matrices, got " +
                      std::to_string(ls.generators.size()));
  }
  for (const auto& g : ls.generators) {
    if (g.rows() != ls.rank || g.cols() != ls.rank) throw DomainError("local system matrix has the wrong shape");
    const BigInt det = algebra::determinant(algebra::to_big(g));
    if (det != 1 && det != -1) throw DomainError("local system matrix is not invertible over the integers");
  }
  if (m.quotient_data()->kind == geometry::QuotientKind::Klein) {
    // glide a, translation b: a b a^-1 = b^-1
    const IntMatrix& a = ls.generators[0];
    const IntMatrix& b = ls.generators[1];
    if (!(multiply(multiply(a, b), algebra::unimodular_inverse(a)) == algebra::unimodular_inverse(b))) {
      throw DomainError("local system violates the Klein bottle relation");
    }
  } else {
    for (std::size_t i = 0; i < ls.generators.size(); ++i)
      for (std::size_t j = i + 1; j < ls.generators.size(); ++j)
        if (!(multiply(ls.generators[i], ls.generators[j]) == multiply(ls.generators[j], ls.generators[i])))
          throw DomainError("torus local system matrices must commute");
  }
}

std::int64_t reduce(std::int64_t v, std::int64_t p) { return ((v % p) + p) % p; }

HomologyResult mod_homology(const std::vector<int>& ranks, const std::vector<IntMatrix>& boundary, std::int64_t p) {
  HomologyResult h;
  const std::size_t n = ranks.size();
  std::vector<int> rk(n + 1, 0);
  for (std::size_t k = 1; k < n; ++k) rk[k] = rank_mod(boundary[k], p);
  for (std::size_t k = 0; k < n; ++k) {
    h.betti.push_back(ranks[k] - rk[k] - rk[k + 1]);
    h.torsion.emplace_back();
  }
  return h;
}

}  // namespace

std::string Coefficients::label() const {
  switch (kind) {
    case CoefficientKind::Integers:
      return "Z";
    case CoefficientKind::Rationals:
      return "Q";
    case CoefficientKind::ModP:
      return "Z/" + std::to_string(modulus);
    case CoefficientKind::Twisted:
      return "twisted(rank " + std::to_string(local_system.rank) + ")";
  }
  return "?";
}

IntMatrix holonomy(const geometry::ManifoldBackend& m, const LocalSystem& ls, const geometry::DeckElement& g) {
  IntMatrix out = IntMatrix::identity(ls.rank);
  if (m.quotient_data()->kind == geometry::QuotientKind::Klein) {
    // E(a, b) = T^b G^a
    out = multiply(power(ls.generators[1], g.shifts[1]), power(ls.generators[0], g.shifts[0]));
  } else {
    for (std::size_t i = 0; i < g.shifts.size(); ++i) out = multiply(out, power(ls.generators[i], g.shifts[i]));
  }
  return out;
}

void check_d_squared(const MorseComplex& c) {
  for (int k = 2; k <= c.dim; ++k) {
    const IntMatrix& a = c.boundary[static_cast<std::size_t>(k - 1)];
    const IntMatrix& b = c.boundary[static_cast<std::size_t>(k)];
    if (a.empty() || b.empty()) continue;
    IntMatrix prod = multiply(a, b);
    for (int r = 0; r < prod.rows(); ++r) {
      for (int col = 0; col < prod.cols(); ++col) {
        std::int64_t v = prod(r, col);
        if (c.coefficients.kind == CoefficientKind::ModP) v = reduce(v, c.coefficients.modulus);
        if (v != 0) {
          std::ostringstream os;
          os << "d^2 != 0: (D_" << (k - 1) << " D_" << k << ")(" << r << ", " << col << ") = " << v
             << " (missed flow line or wrong sign)";
          throw VerificationError(os.str());
        }
      }
    }
  }
}

MorseComplex build_complex(const geometry::ManifoldBackend& m, const critical::CriticalSet& cs,
                           const connections::ConnectionData& data, const Coefficients& coefficients) {
  const CoefficientKind kind = coefficients.kind;
  if (!m.orientable() && !(kind == CoefficientKind::ModP && coefficients.modulus == 2)) {
    throw DomainError(m.name() + " is not orientable: only Z/2 coefficients are supported");
  }
  if (kind == CoefficientKind::ModP && coefficients.modulus < 2) throw DomainError("modulus must be at least 2");
  if (kind == CoefficientKind::Twisted) check_local_system(m, coefficients.local_system);

  MorseComplex c;
  c.dim = m.dim();
  c.coefficients = coefficients;
  c.block = kind == CoefficientKind::Twisted ? coefficients.local_system.rank : 1;
  c.generators.resize(static_cast<std::size_t>(c.dim + 1));
  for (int k = 0; k <= c.dim; ++k) c.generators[static_cast<std::size_t>(k)] = cs.ids_of_index(k);
  c.boundary.emplace_back(0, c.rank_of(0));

  const int r = c.block;
  for (int k = 1; k <= c.dim; ++k) {
    const auto& lower = c.generators[static_cast<std::size_t>(k - 1)];
    const auto& upper = c.generators[static_cast<std::size_t>(k)];
    IntMatrix d(c.rank_of(k - 1), c.rank_of(k));
    const int sign = k % 2 == 0 ? 1 : -1;  // (-1)^{lambda_p}
    for (std::size_t j = 0; j < upper.size(); ++j) {
      for (std::size_t i = 0; i < lower.size(); ++i) {
        const int p = upper[j];
        const int q = lower[i];
        const auto it = data.lines.find({p, q});
        if (it == data.lines.end()) continue;
        const auto& lines = it->second;
        switch (kind) {
          case CoefficientKind::Integers:
          case CoefficientKind::Rationals:
            d(static_cast<int>(i), static_cast<int>(j)) = sign * data.count(p, q);
            break;
          case CoefficientKind::ModP: {
            const std::int64_t v = m.orientable() ? sign * data.count(p, q) : data.line_count(p, q);
            d(static_cast<int>(i), static_cast<int>(j)) = reduce(v, coefficients.modulus);
            break;
          }
          case CoefficientKind::Twisted: {
            IntMatrix h(r, r);
            for (const auto& line : lines) {
              const IntMatrix rho = holonomy(m, coefficients.local_system, line.deck);
              for (int a = 0; a < r; ++a)
                for (int b = 0; b < r; ++b) h(a, b) += sign * line.sign * rho(a, b);
            }
            for (int a = 0; a < r; ++a)
              for (int b = 0; b < r; ++b) d(static_cast<int>(i) * r + a, static_cast<int>(j) * r + b) = h(a, b);
            break;
          }
        }
      }
    }
    c.boundary.push_back(std::move(d));
  }
  check_d_squared(c);
  return c;
}

int HomologyResult::euler_characteristic() const {
  int chi = 0;
  for (std::size_t k = 0; k < betti.size(); ++k) chi += (k % 2 == 0 ? 1 : -1) * static_cast<int>(betti[k]);
  return chi;
}

HomologyResult chain_homology(const std::vector<int>& ranks, const std::vector<IntMatrix>& boundary) {
  HomologyResult h;
  h.coefficients = "Z";
  const std::size_t n = ranks.size();
  std::vector<int> rk(n + 1, 0);
  std::vector<std::vector<BigInt>> factors(n + 1);
  for (std::size_t k = 1; k < n; ++k) {
    if (boundary[k].empty()) continue;
    const auto snf = smith_normal_form(boundary[k]);
    rk[k] = snf.rank;
    for (const auto& s : snf.invariants) {
      if (s > 1) factors[k].push_back(s);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    h.betti.push_back(ranks[k] - rk[k] - rk[k + 1]);
    h.torsion.push_back(factors[k + 1]);
  }
  return h;
}

HomologyResult homology(const MorseComplex& c) {
  std::vector<int> ranks;
  for (int k = 0; k <= c.dim; ++k) ranks.push_back(c.rank_of(k));
  HomologyResult h;
  if (c.coefficients.kind == CoefficientKind::ModP) {
    h = mod_homology(ranks, c.boundary, c.coefficients.modulus);
  } else {
    h = chain_homology(ranks, c.boundary);
    if (c.coefficients.kind == CoefficientKind::Rationals) {
      for (auto& t : h.torsion) t.clear();
    }
  }
  h.coefficients = c.coefficients.label();
  return h;
}

bool MorseInequalityReport::passed() const {
  for (bool s : strong) {
    if (!s) return false;
  }
  return euler_equal;
}

MorseInequalityReport morse_inequalities(const critical::CriticalSet& cs, const HomologyResult& h, int dim) {
  MorseInequalityReport r;
  r.critical_counts = cs.counts_by_index(dim);
  r.betti = h.betti;
  for (int k = 0; k <= dim; ++k) {
    long lhs = 0, rhs = 0;
    for (int i = 0; i <= k; ++i) {
      const long s = (k - i) % 2 == 0 ? 1 : -1;
      lhs += s * r.critical_counts[static_cast<std::size_t>(i)];
      rhs += s * h.betti[static_cast<std::size_t>(i)];
    }
    r.slack.push_back(lhs - rhs);
    r.strong.push_back(lhs >= rhs);
    if (k == dim) r.euler_equal = lhs == rhs;
  }
  return r;
}

DualityReport poincare_dual(const geometry::ManifoldBackend& m, const critical::CriticalSet& primal_set,
                            const MorseComplex& primal, const critical::CriticalSet& dual_set,
                            const MorseComplex& dual) {
  DualityReport rep;
  if (!m.orientable()) {
    rep.skipped = true;
    rep.reason = "non-orientable manifold";
    return rep;
  }
  if (primal.coefficients.kind != CoefficientKind::Integers || dual.coefficients.kind != CoefficientKind::Integers) {
    rep.skipped = true;
    rep.reason = "duality is checked for integral coefficients only";
    return rep;
  }
  const int n = primal.dim;
  const std::size_t count = primal_set.points.size();
  if (dual_set.points.size() != count) {
    rep.mismatches.push_back("critical sets of f and -f differ in size");
    return rep;
  }

  // dual id -> primal id
  std::vector<int> to_primal(count, -1);
  for (const auto& d : dual_set.points) {
    for (const auto& p : primal_set.points) {
      if (geometry::manifold_distance(m, d.location, p.location) < 1e-6) {
        to_primal[static_cast<std::size_t>(d.id)] = p.id;
        if (d.index != n - p.index) rep.mismatches.push_back("index of point " + std::to_string(p.id) + " is not reversed");
      }
    }
    if (to_primal[static_cast<std::size_t>(d.id)] < 0) {
      rep.mismatches.push_back("dual critical point " + std::to_string(d.id) + " has no primal partner");
    }
  }
  if (!rep.mismatches.empty()) return rep;

  // Entry relation: D'(p, q) = eps_p eps_q D(q, p) for lambda_p = lambda_q + 1.
  struct Edge {
    int to;
    int parity;
  };
  std::vector<std::vector<Edge>> graph(count);
  std::map<std::pair<int, int>, std::int64_t> dual_entries;
  for (int j = 1; j <= n; ++j) {
    const auto& cols = dual.generators[static_cast<std::size_t>(j)];
    const auto& rows = dual.generators[static_cast<std::size_t>(j - 1)];
    for (std::size_t c = 0; c < cols.size(); ++c)
      for (std::size_t r = 0; r < rows.size(); ++r)
        dual_entries[{to_primal[static_cast<std::size_t>(rows[r])], to_primal[static_cast<std::size_t>(cols[c])]}] =
            dual.boundary[static_cast<std::size_t>(j)](static_cast<int>(r), static_cast<int>(c));
  }
  bool ok = true;
  for (int k = 1; k <= n; ++k) {
    const auto& upper = primal.generators[static_cast<std::size_t>(k)];
    const auto& lower = primal.generators[static_cast<std::size_t>(k - 1)];
    for (std::size_t j = 0; j < upper.size(); ++j) {
      for (std::size_t i = 0; i < lower.size(); ++i) {
        const int p = upper[j], q = lower[i];
        const std::int64_t a = primal.boundary[static_cast<std::size_t>(k)](static_cast<int>(i), static_cast<int>(j));
        const std::int64_t b = dual_entries[{p, q}];
        if (std::llabs(a) != std::llabs(b)) {
          ok = false;
          rep.mismatches.push_back("|n(" + std::to_string(p) + "," + std::to_string(q) + ")| = " + std::to_string(a) +
                                   " but reversed entry is " + std::to_string(b));
          continue;
        }
        if (a == 0) continue;
        const int parity = (a == b) ? 0 : 1;
        graph[static_cast<std::size_t>(p)].push_back({q, parity});
        graph[static_cast<std::size_t>(q)].push_back({p, parity});
      }
    }
  }
  rep.generator_signs.assign(count, 0);
  for (std::size_t s = 0; s < count && ok; ++s) {
    if (rep.generator_signs[s] != 0) continue;
    rep.generator_signs[s] = 1;
    std::deque<int> queue{static_cast<int>(s)};
    while (!queue.empty() && ok) {
      const int u = queue.front();
      queue.pop_front();
      for (const Edge& e : graph[static_cast<std::size_t>(u)]) {
        const int want = rep.generator_signs[static_cast<std::size_t>(u)] * (e.parity ? -1 : 1);
        int& have = rep.generator_signs[static_cast<std::size_t>(e.to)];
        if (have == 0) {
          have = want;
          queue.push_back(e.to);
        } else if (have != want) {
          ok = false;
          rep.mismatches.push_back("no orientation diagonal relates the reversed complex to the transpose (cycle through " +
                                   std::to_string(e.to) + ")");
        }
      }
    }
  }
  rep.matrices_match = ok;

  rep.dual_homology = homology(dual);
  // Cochains E_j = C^{n-j}, boundary E_j -> E_{j-1} is D_{n-j+1}^T.
  std::vector<int> ranks;
  std::vector<IntMatrix> maps;
  for (int j = 0; j <= n; ++j) {
    ranks.push_back(primal.rank_of(n - j));
    maps.push_back(j == 0 ? IntMatrix(0, primal.rank_of(n)) : primal.boundary[static_cast<std::size_t>(n - j + 1)].transpose());
  }
  rep.cohomology = chain_homology(ranks, maps);
  rep.cohomology.coefficients = "Z";
  rep.homology_match = rep.dual_homology == rep.cohomology;
  if (!rep.homology_match) rep.mismatches.push_back("homology of the reversed complex differs from cohomology");
  return rep;
}

}  // namespace morse::complex
