#pragma once

// Brute-force references: CW chain complexes of the torus with twisted
// coefficients, and homology from determinantal divisors (no elimination).

#include <vector>

#include "morse/complex.hpp"
#include "suites.hpp"

namespace morse::testing {

struct CwComplex {
  std::vector<int> ranks;
  std::vector<algebra::IntMatrix> boundary;  // boundary[k] : C_k -> C_{k-1}
};

/// One 0-cell, 1-cells a and b, one 2-cell attached along a b a^-1 b^-1, with
/// local system rho(a) = A, rho(b) = B (commuting, r x r).
inline CwComplex twisted_torus_cw(const algebra::IntMatrix& a, const algebra::IntMatrix& b) {
  const int r = a.rows();
  const auto id = algebra::IntMatrix::identity(r);
  CwComplex c;
  c.ranks = {r, 2 * r, r};
  c.boundary.emplace_back(0, r);
  algebra::IntMatrix d1(r, 2 * r), d2(2 * r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      d1(i, j) = a(i, j) - id(i, j);
      d1(i, r + j) = b(i, j) - id(i, j);
      d2(i, j) = id(i, j) - b(i, j);
      d2(r + i, j) = a(i, j) - id(i, j);
    }
  c.boundary.push_back(d1);
  c.boundary.push_back(d2);
  return c;
}

/// Invariant factors of a from ratios of determinantal divisors.
inline std::vector<algebra::BigInt> invariant_factors(const algebra::IntMatrix& a) {
  std::vector<algebra::BigInt> out;
  algebra::BigInt prev = 1;
  for (int k = 1; k <= std::min(a.rows(), a.cols()); ++k) {
    const algebra::BigInt d = determinantal_divisor(a, k);
    if (d == 0) break;
    out.push_back(d / prev);
    prev = d;
  }
  return out;
}

inline complex::HomologyResult brute_homology(const CwComplex& c) {
  complex::HomologyResult h;
  const int top = static_cast<int>(c.ranks.size()) - 1;
  std::vector<std::vector<algebra::BigInt>> inv(c.ranks.size() + 1);
  for (int k = 1; k <= top; ++k) inv[static_cast<std::size_t>(k)] = invariant_factors(c.boundary[static_cast<std::size_t>(k)]);
  for (int k = 0; k <= top; ++k) {
    const auto& in = inv[static_cast<std::size_t>(k + 1)];
    const long out_rank = static_cast<long>(inv[static_cast<std::size_t>(k)].size());
    h.betti.push_back(c.ranks[static_cast<std::size_t>(k)] - out_rank - static_cast<long>(in.size()));
    std::vector<algebra::BigInt> t;
    for (const auto& d : in)
      if (d > 1) t.push_back(d);
    h.torsion.push_back(t);
  }
  return h;
}

}  // namespace morse::testing
