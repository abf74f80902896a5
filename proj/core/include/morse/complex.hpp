#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morse/connections.hpp"
#include "morse/critical.hpp"
#include "morse/geometry.hpp"
#include "morse/integer_matrix.hpp"

namespace morse::complex {

using algebra::BigInt;
using algebra::IntMatrix;

/// Representation of the deck group of a flat quotient by integer matrices.
/// Torus: one matrix per lattice axis. Klein bottle: the glide (x + 1/2, -y)
/// first, then the translation (x, y + 1).
struct LocalSystem {
  int rank = 1;
  std::vector<IntMatrix> generators;
};

enum class CoefficientKind { Integers, Rationals, ModP, Twisted };

struct Coefficients {
  CoefficientKind kind = CoefficientKind::Integers;
  std::int64_t modulus = 2;
  LocalSystem local_system;

  static Coefficients integers() { return {}; }
  static Coefficients rationals() { return {CoefficientKind::Rationals, 2, {}}; }
  static Coefficients mod(std::int64_t p) { return {CoefficientKind::ModP, p, {}}; }
  static Coefficients twisted(LocalSystem ls) { return {CoefficientKind::Twisted, 2, std::move(ls)}; }

  std::string label() const;
};

struct MorseComplex {
  int dim = 0;
  Coefficients coefficients;
  /// Block size: local-system rank in twisted mode, 1 otherwise.
  int block = 1;
  std::vector<std::vector<int>> generators;  // critical ids by degree 0..dim
  /// boundary[k] : C_k -> C_{k-1}; boundary[0] is 0 x |C_0|.
  std::vector<IntMatrix> boundary;

  int rank_of(int k) const { return block * static_cast<int>(generators[static_cast<std::size_t>(k)].size()); }
};

/// rho of a deck element. Throws DomainError for invalid systems.
IntMatrix holonomy(const geometry::ManifoldBackend& m, const LocalSystem& ls, const geometry::DeckElement& g);

/// Throws VerificationError if D_{k-1} D_k != 0 (mod p in ModP mode).
void check_d_squared(const MorseComplex& c);

MorseComplex build_complex(const geometry::ManifoldBackend& m, const critical::CriticalSet& cs,
                           const connections::ConnectionData& data,
                           const Coefficients& coefficients = Coefficients::integers());

struct HomologyResult {
  std::string coefficients;
  /// Rank over Z (or Q), or dimension over Z/p.
  std::vector<long> betti;
  /// Invariant factors >= 2 per degree (integral and twisted modes only).
  std::vector<std::vector<BigInt>> torsion;

  int euler_characteristic() const;
  bool operator==(const HomologyResult& o) const { return betti == o.betti && torsion == o.torsion; }
};

/// Homology of a chain complex given by ranks and boundary maps over Z.
HomologyResult chain_homology(const std::vector<int>& ranks, const std::vector<IntMatrix>& boundary);

HomologyResult homology(const MorseComplex& c);

struct MorseInequalityReport {
  std::vector<int> critical_counts;
  std::vector<long> betti;
  std::vector<bool> strong;       // per k
  std::vector<long> slack;        // lhs - rhs per k
  bool euler_equal = false;
  bool passed() const;
};

MorseInequalityReport morse_inequalities(const critical::CriticalSet& cs, const HomologyResult& h, int dim);

struct DualityReport {
  bool skipped = false;
  std::string reason;
  bool matrices_match = false;
  /// Orientation-convention diagonal per primal critical id. Per-degree signs
  /// are absorbed into it.
  std::vector<int> generator_signs;
  HomologyResult dual_homology;     // H_j of the reversed complex, j = 0..n
  HomologyResult cohomology;        // H^{n-j}(Hom(C, Z)) reindexed by j
  bool homology_match = false;
  std::vector<std::string> mismatches;
  bool passed() const { return skipped || (matrices_match && homology_match); }
};

/// Compare the complex of f with the complex of -f (built from its own
/// critical set and connections). Dual critical points are matched to primal
/// ones by location.
DualityReport poincare_dual(const geometry::ManifoldBackend& m, const critical::CriticalSet& primal_set,
                            const MorseComplex& primal, const critical::CriticalSet& dual_set,
                            const MorseComplex& dual);

}  // namespace morse::complex
