#pragma once

// Small random generators for the property tests.

#include <cstdint>
#include <random>
#include <string>

#include "morse/integer_matrix.hpp"
#include "morse/types.hpp"

namespace morse::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  Vec vec(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = real(lo, hi);
    return v;
  }

  Vec unit(int n) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng_);
    return v.normalized();
  }

  algebra::IntMatrix int_matrix(int rows, int cols, int lo, int hi) {
    algebra::IntMatrix a(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a(i, j) = integer(lo, hi);
    return a;
  }

  /// Product of random elementary matrices.
  algebra::IntMatrix unimodular(int n, int steps = 12) {
    auto u = algebra::IntMatrix::identity(n);
    for (int s = 0; s < steps; ++s) {
      const int i = integer(0, n - 1);
      const int j = integer(0, n - 1);
      if (i == j) {
        for (int k = 0; k < n; ++k) u(i, k) = -u(i, k);
        continue;
      }
      const int c = integer(-2, 2);
      for (int k = 0; k < n; ++k) u(i, k) += c * u(j, k);
    }
    return u;
  }

  /// Random expression text over the first n variables (x1..xn or x,y,z,w),
  /// smooth on the box [-1, 1]^n.
  std::string expression(int n, int depth) {
    if (depth == 0 || integer(0, 5) == 0) return leaf(n);
    switch (integer(0, 8)) {
      case 0: return "(" + expression(n, depth - 1) + " + " + expression(n, depth - 1) + ")";
      case 1: return "(" + expression(n, depth - 1) + " - " + expression(n, depth - 1) + ")";
      case 2: return "(" + expression(n, depth - 1) + " * " + expression(n, depth - 1) + ")";
      case 3: return "(" + expression(n, depth - 1) + ")^" + std::to_string(integer(2, 3));
      case 4: return "sin(" + expression(n, depth - 1) + ")";
      case 5: return "cos(" + expression(n, depth - 1) + ")";
      case 6: return "exp(0.3*" + expression(n, depth - 1) + ")";
      case 7: return "log(2 + sin(" + expression(n, depth - 1) + "))";
      default: return "sqrt(1.5 + cos(" + expression(n, depth - 1) + "))/(2 + " + leaf(n) + "^2)";
    }
  }

  std::string variable(int n) {
    const int i = integer(0, n - 1);
    if (n <= 4) return std::string(1, "xyzw"[i]);
    return "x" + std::to_string(i + 1);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::string leaf(int n) {
    if (coin()) return variable(n);
    return std::to_string(integer(0, 1)) + "." + std::to_string(integer(1, 9));
  }

  std::mt19937_64 rng_;
};

}  // namespace morse::testing
