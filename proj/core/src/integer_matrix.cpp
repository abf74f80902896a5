#include "morse/integer_matrix.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "morse/errors.hpp"

namespace morse::algebra {
namespace {

struct Overflow {};

// Checked arithmetic: int64 throws Overflow, BigInt never does.
inline std::int64_t mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Overflow{};
  return r;
}
inline std::int64_t sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw Overflow{};
  return r;
}
inline std::int64_t add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Overflow{};
  return r;
}
inline std::int64_t neg(std::int64_t a) { return sub(0, a); }
inline BigInt mul(const BigInt& a, const BigInt& b) { return a * b; }
inline BigInt sub(const BigInt& a, const BigInt& b) { return a - b; }
inline BigInt add(const BigInt& a, const BigInt& b) { return a + b; }
inline BigInt neg(const BigInt& a) { return -a; }
inline std::int64_t magnitude(std::int64_t a) {
  if (a == INT64_MIN) throw Overflow{};
  return a < 0 ? -a : a;
}
inline BigInt magnitude(const BigInt& a) { return abs(a); }

template <class T>
void swap_rows(Matrix<T>& m, int a, int b) {
  if (a == b) return;
  for (int c = 0; c < m.cols(); ++c) std::swap(m(a, c), m(b, c));
}
template <class T>
void swap_cols(Matrix<T>& m, int a, int b) {
  if (a == b) return;
  for (int r = 0; r < m.rows(); ++r) std::swap(m(r, a), m(r, b));
}
// row_dst -= q * row_src
template <class T>
void row_axpy(Matrix<T>& m, int dst, int src, const T& q) {
  if (q == 0) return;
  for (int c = 0; c < m.cols(); ++c) {
    if (m(src, c) != 0) m(dst, c) = sub(m(dst, c), mul(q, m(src, c)));
  }
}
template <class T>
void col_axpy(Matrix<T>& m, int dst, int src, const T& q) {
  if (q == 0) return;
  for (int r = 0; r < m.rows(); ++r) {
    if (m(r, src) != 0) m(r, dst) = sub(m(r, dst), mul(q, m(r, src)));
  }
}

template <class T>
void smith(Matrix<T>& a, Matrix<T>& u, Matrix<T>& v) {
  const int rows = a.rows();
  const int cols = a.cols();
  u = Matrix<T>::identity(rows);
  v = Matrix<T>::identity(cols);
  const int limit = std::min(rows, cols);
  for (int t = 0; t < limit; ++t) {
    while (true) {
      // Smallest nonzero magnitude in the trailing block becomes the pivot.
      int pr = -1, pc = -1;
      T best = 0;
      for (int r = t; r < rows; ++r) {
        for (int c = t; c < cols; ++c) {
          if (a(r, c) == 0) continue;
          const T mag = magnitude(a(r, c));
          if (pr < 0 || mag < best) {
            best = mag;
            pr = r;
            pc = c;
          }
        }
      }
      if (pr < 0) return;  // trailing block is zero
      swap_rows(a, t, pr);
      swap_rows(u, t, pr);
      swap_cols(a, t, pc);
      swap_cols(v, t, pc);

      bool clean = true;
      for (int r = t + 1; r < rows; ++r) {
        if (a(r, t) == 0) continue;
        const T q = a(r, t) / a(t, t);
        row_axpy(a, r, t, q);
        row_axpy(u, r, t, q);
        if (a(r, t) != 0) clean = false;
      }
      for (int c = t + 1; c < cols; ++c) {
        if (a(t, c) == 0) continue;
        const T q = a(t, c) / a(t, t);
        col_axpy(a, c, t, q);
        col_axpy(v, c, t, q);
        if (a(t, c) != 0) clean = false;
      }
      if (!clean) continue;

      // Divisibility: fold an offending row into the pivot row and repeat.
      int bad = -1;
      for (int r = t + 1; r < rows && bad < 0; ++r) {
        for (int c = t + 1; c < cols; ++c) {
          if (a(r, c) % a(t, t) != 0) {
            bad = r;
            break;
          }
        }
      }
      if (bad < 0) break;
      row_axpy(a, t, bad, T(-1));
      row_axpy(u, t, bad, T(-1));
    }
    if (a(t, t) < 0) {
      for (int c = 0; c < cols; ++c) a(t, c) = neg(a(t, c));
      for (int c = 0; c < rows; ++c) u(t, c) = neg(u(t, c));
    }
  }
}

SmithResult finish(BigMatrix s, BigMatrix u, BigMatrix v, bool escalated) {
  SmithResult r;
  for (int i = 0; i < std::min(s.rows(), s.cols()); ++i) {
    if (s(i, i) != 0) r.invariants.push_back(s(i, i));
  }
  r.rank = static_cast<int>(r.invariants.size());
  r.U = std::move(u);
  r.S = std::move(s);
  r.V = std::move(v);
  r.escalated = escalated;
  return r;
}

template <class T>
Matrix<T> multiply_impl(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw DimensionError("matrix product shape mismatch");
  Matrix<T> out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) = add(out(i, j), mul(a(i, k), b(k, j)));
    }
  }
  return out;
}

}  // namespace

BigMatrix to_big(const IntMatrix& a) {
  BigMatrix b(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) b(r, c) = a(r, c);
  return b;
}

IntMatrix to_small(const BigMatrix& a) {
  IntMatrix s(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) {
      if (a(r, c) > INT64_MAX || a(r, c) < INT64_MIN) throw VerificationError("integer entry exceeds 64 bits");
      s(r, c) = static_cast<std::int64_t>(a(r, c));
    }
  }
  return s;
}

IntMatrix multiply(const IntMatrix& a, const IntMatrix& b) {
  try {
    return multiply_impl(a, b);
  } catch (const Overflow&) {
    throw VerificationError("64-bit overflow in integer matrix product");
  }
}

BigMatrix multiply(const BigMatrix& a, const BigMatrix& b) { return multiply_impl(a, b); }

BigInt determinant(const BigMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("determinant of a non-square matrix");
  // Bareiss fraction-free elimination.
  BigMatrix m = a;
  const int n = m.rows();
  if (n == 0) return 1;
  BigInt sign = 1, prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m(k, k) == 0) {
      int p = k + 1;
      while (p < n && m(p, k) == 0) ++p;
      if (p == n) return 0;
      swap_rows(m, k, p);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
    }
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

IntMatrix unimodular_inverse(const IntMatrix& a) {
  const int n = a.rows();
  if (n != a.cols()) throw DimensionError("inverse of a non-square matrix");
  const BigMatrix b = to_big(a);
  const BigInt det = determinant(b);
  if (det != 1 && det != -1) throw DomainError("matrix is not invertible over the integers (det = " + det.str() + ")");
  BigMatrix inv(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      BigMatrix minor(n - 1, n - 1);
      for (int r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (int c = 0, cc = 0; c < n; ++c) {
          if (c == i) continue;
          minor(rr, cc++) = b(r, c);
        }
        ++rr;
      }
      const BigInt cof = ((i + j) % 2 == 0 ? 1 : -1) * determinant(minor);
      inv(i, j) = cof * det;  // det = +-1, so 1/det == det
    }
  }
  return to_small(inv);
}

SmithResult smith_normal_form(const IntMatrix& a) {
  try {
    IntMatrix s = a, u, v;
    smith(s, u, v);
    return finish(to_big(s), to_big(u), to_big(v), false);
  } catch (const Overflow&) {
    SmithResult r = smith_normal_form(to_big(a));
    r.escalated = true;
    return r;
  }
}

SmithResult smith_normal_form(const BigMatrix& a) {
  BigMatrix s = a, u, v;
  smith(s, u, v);
  return finish(std::move(s), std::move(u), std::move(v), false);
}

int rank(const IntMatrix& a) { return smith_normal_form(a).rank; }

int rank_mod(const IntMatrix& a, std::int64_t p) {
  if (p < 2) throw DomainError("modulus must be at least 2");
  const int rows = a.rows();
  const int cols = a.cols();
  std::vector<std::vector<std::int64_t>> m(static_cast<std::size_t>(rows), std::vector<std::int64_t>(cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m[r][c] = ((a(r, c) % p) + p) % p;
  auto inverse = [p](std::int64_t x) {
    std::int64_t result = 1, base = x, e = p - 2;
    while (e > 0) {
      if (e & 1) result = static_cast<std::int64_t>((static_cast<__int128>(result) * base) % p);
      base = static_cast<std::int64_t>((static_cast<__int128>(base) * base) % p);
      e >>= 1;
    }
    return result;
  };
  int rank = 0;
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = rank;
    while (piv < rows && m[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[rank]);
    const std::int64_t inv = inverse(m[rank][c]);
    for (int r = 0; r < rows; ++r) {
      if (r == rank || m[r][c] == 0) continue;
      const std::int64_t f = static_cast<std::int64_t>((static_cast<__int128>(m[r][c]) * inv) % p);
      for (int k = c; k < cols; ++k) {
        m[r][k] = static_cast<std::int64_t>(((m[r][k] - static_cast<__int128>(f) * m[rank][k]) % p + p) % p);
      }
    }
    ++rank;
  }
  return rank;
}

std::string to_string(const IntMatrix& a) {
  std::ostringstream os;
  os << "[";
  for (int r = 0; r < a.rows(); ++r) {
    os << (r ? "; " : "");
    for (int c = 0; c < a.cols(); ++c) os << (c ? " " : "") << a(r, c);
  }
  os << "]";
  return os.str();
}

}  // namespace morse::algebra
