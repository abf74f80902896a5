#pragma once

// Exact integer matrices, Smith normal form and ranks over Z, Q and Z/p.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace morse::algebra {

using BigInt = boost::multiprecision::cpp_int;

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, T(0)) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  bool is_zero() const {
    for (const auto& v : data_) {
      if (v != 0) return false;
    }
    return true;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using IntMatrix = Matrix<std::int64_t>;
using BigMatrix = Matrix<BigInt>;

BigMatrix to_big(const IntMatrix& a);
/// Throws VerificationError if an entry does not fit in 64 bits.
IntMatrix to_small(const BigMatrix& a);

/// Exact products; the int64 overload throws VerificationError on overflow.
IntMatrix multiply(const IntMatrix& a, const IntMatrix& b);
BigMatrix multiply(const BigMatrix& a, const BigMatrix& b);

BigInt determinant(const BigMatrix& a);

/// Inverse over the integers of a unimodular matrix (adjugate formula).
IntMatrix unimodular_inverse(const IntMatrix& a);

struct SmithResult {
  BigMatrix U;  // rows x rows, unimodular
  BigMatrix S;  // rows x cols, diagonal, s_i | s_{i+1}, s_i >= 0
  BigMatrix V;  // cols x cols, unimodular
  std::vector<BigInt> invariants;  // nonzero diagonal entries
  int rank = 0;
  bool escalated = false;  // int64 arithmetic overflowed; recomputed with BigInt
};

/// U * A * V = S.
SmithResult smith_normal_form(const IntMatrix& a);
SmithResult smith_normal_form(const BigMatrix& a);

/// Rank over Q.
int rank(const IntMatrix& a);
/// Rank over Z/p (p prime).
int rank_mod(const IntMatrix& a, std::int64_t p);

std::string to_string(const IntMatrix& a);

}  // namespace morse::algebra
