#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

#include "morse/expr.hpp"

namespace morse::expr {
namespace {

// Sorts `index` in place; returns the permutation sign or 0 on a repeated entry.
int canonicalize(MultiIndex& index) {
  int sign = 1;
  for (std::size_t i = 0; i < index.size(); ++i) {
    for (std::size_t j = 0; j + 1 < index.size() - i; ++j) {
      if (index[j] > index[j + 1]) {
        std::swap(index[j], index[j + 1]);
        sign = -sign;
      }
    }
  }
  for (std::size_t i = 1; i < index.size(); ++i) {
    if (index[i] == index[i - 1]) return 0;
  }
  return sign;
}

int parse_differential(const std::string& token, int num_vars) {
  std::string t;
  for (char c : token) {
    if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
  }
  if (t.size() < 2 || t[0] != 'd') throw ConfigError("malformed form monomial '" + token + "'");
  const std::string name = t.substr(1);
  if (num_vars <= 4 && name.size() == 1) {
    static constexpr std::string_view aliases = "xyzw";
    auto k = aliases.find(name[0]);
    if (k != std::string_view::npos && static_cast<int>(k) < num_vars) return static_cast<int>(k);
  }
  if (name.size() >= 2 && name[0] == 'x') {
    int idx = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
    if (ec == std::errc() && ptr == name.data() + name.size() && idx >= 1 && idx <= num_vars) return idx - 1;
  }
  throw ConfigError("unknown differential '" + token + "'");
}

}  // namespace

FormExpression::FormExpression(int degree, int num_vars) : degree_(degree), num_vars_(num_vars) {
  if (degree < 0 || degree > num_vars) throw DimensionError("form degree out of range");
}

FormExpression FormExpression::function(const ScalarExpression& f) {
  FormExpression out(0, f.num_vars());
  out.add_term({}, f);
  return out;
}

void FormExpression::add_term(MultiIndex index, const ScalarExpression& coeff) {
  if (static_cast<int>(index.size()) != degree_) throw DimensionError("multi-index length differs from form degree");
  if (coeff.num_vars() != num_vars_) throw DimensionError("coefficient variable count differs from form");
  for (int i : index) {
    if (i < 0 || i >= num_vars_) throw DimensionError("multi-index entry out of range");
  }
  const int sign = canonicalize(index);
  if (double c; sign == 0 || (coeff.is_constant(&c) && c == 0.0)) return;
  const ScalarExpression signed_coeff = sign > 0 ? coeff : -coeff;
  auto it = terms_.find(index);
  if (it == terms_.end()) {
    terms_.emplace(std::move(index), signed_coeff);
  } else {
    it->second = it->second + signed_coeff;
    double c;
    if (it->second.is_constant(&c) && c == 0.0) terms_.erase(it);
  }
}

std::string FormExpression::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const auto& [index, coeff] : terms_) {
    if (!out.empty()) out += " + ";
    out += "(" + coeff.to_string() + ")";
    for (std::size_t j = 0; j < index.size(); ++j) out += (j == 0 ? " dx" : "^dx") + std::to_string(index[j] + 1);
  }
  return out;
}

FormExpression operator+(const FormExpression& a, const FormExpression& b) {
  if (a.degree() != b.degree() || a.num_vars() != b.num_vars()) throw DimensionError("adding forms of different shape");
  FormExpression out = a;
  for (const auto& [index, coeff] : b.terms()) out.add_term(index, coeff);
  return out;
}

FormExpression operator*(double s, const FormExpression& a) {
  FormExpression out(a.degree(), a.num_vars());
  for (const auto& [index, coeff] : a.terms()) out.add_term(index, s * coeff);
  return out;
}

FormExpression parse_form(const std::vector<std::pair<std::string, std::string>>& terms, int num_vars) {
  std::optional<FormExpression> out;
  for (const auto& [monomial, text] : terms) {
    MultiIndex index;
    std::string trimmed;
    for (char c : monomial) {
      if (!std::isspace(static_cast<unsigned char>(c))) trimmed.push_back(c);
    }
    if (trimmed != "1") {
      std::size_t start = 0;
      while (start <= trimmed.size()) {
        const std::size_t end = std::min(trimmed.find('^', start), trimmed.size());
        index.push_back(parse_differential(trimmed.substr(start, end - start), num_vars));
        start = end + 1;
      }
    }
    if (!out) {
      out.emplace(static_cast<int>(index.size()), num_vars);
    } else if (out->degree() != static_cast<int>(index.size())) {
      throw ConfigError("form mixes monomials of different degree ('" + monomial + "')");
    }
    out->add_term(std::move(index), parse(text, num_vars));
  }
  if (!out) throw ConfigError("form has no terms");
  return *out;
}

double minor_determinant(const Mat& vectors, const MultiIndex& rows) {
  const int k = static_cast<int>(rows.size());
  switch (k) {
    case 0: return 1.0;
    case 1: return vectors(rows[0], 0);
    case 2: return vectors(rows[0], 0) * vectors(rows[1], 1) - vectors(rows[0], 1) * vectors(rows[1], 0);
    case 3: {
      auto m = [&](int i, int j) { return vectors(rows[i], j); };
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    }
    default: {
      Mat sub(k, k);
      for (int i = 0; i < k; ++i) sub.row(i) = vectors.row(rows[i]);
      return sub.determinant();
    }
  }
}

double eval_form(const FormExpression& form, const Vec& point, const Mat& vectors) {
  if (vectors.cols() != form.degree()) {
    throw DimensionError("form of degree " + std::to_string(form.degree()) + " evaluated on " +
                         std::to_string(vectors.cols()) + " vectors");
  }
  if (vectors.cols() > 0 && vectors.rows() != form.num_vars()) throw DimensionError("vector length differs from form");
  if (point.size() != form.num_vars()) throw DimensionError("point length differs from form");
  double total = 0.0;
  for (const auto& [index, coeff] : form.terms()) {
    const double det = minor_determinant(vectors, index);
    if (det != 0.0) total += evaluate(coeff, point) * det;
  }
  return total;
}

FormExpression wedge(const FormExpression& a, const FormExpression& b) {
  if (a.num_vars() != b.num_vars()) throw DimensionError("wedge of forms over different spaces");
  const int degree = a.degree() + b.degree();
  if (degree > a.num_vars()) throw DimensionError("wedge product exceeds the top degree");
  FormExpression out(degree, a.num_vars());
  for (const auto& [ia, ca] : a.terms()) {
    for (const auto& [ib, cb] : b.terms()) {
      MultiIndex index = ia;
      index.insert(index.end(), ib.begin(), ib.end());
      out.add_term(std::move(index), ca * cb);
    }
  }
  return out;
}

FormExpression exterior_derivative(const FormExpression& form) {
  const int n = form.num_vars();
  if (form.degree() == n) throw DimensionError("exterior derivative of a top-degree form");
  FormExpression out(form.degree() + 1, n);
  for (const auto& [index, coeff] : form.terms()) {
    for (int j = 0; j < n; ++j) {
      if (std::find(index.begin(), index.end(), j) != index.end()) continue;
      ScalarExpression partial = differentiate(coeff, j);
      if (double c; partial.is_constant(&c) && c == 0.0) continue;
      MultiIndex next{j};
      next.insert(next.end(), index.begin(), index.end());
      out.add_term(std::move(next), partial);
    }
  }
  return out;
}

}  // namespace morse::expr
