#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ratrec/errors.hpp"

namespace ratrec {

/// Sparse exponent vector over integer variable ids.  Only strictly positive
/// exponents are stored; the pair list is kept sorted by variable id.
class MultiIndex {
 public:
  MultiIndex() = default;

  static MultiIndex unit(int var, int exp = 1) {
    MultiIndex m;
    if (exp > 0) m.e_.emplace_back(var, exp);
    return m;
  }

  int degree() const {
    int d = 0;
    for (const auto& [v, e] : e_) d += e;
    return d;
  }

  int exponent(int var) const {
    for (const auto& [v, e] : e_)
      if (v == var) return e;
    return 0;
  }

  bool is_constant() const { return e_.empty(); }

  /// Product of two monomials: exponents add.
  MultiIndex times(const MultiIndex& o) const {
    MultiIndex r;
    std::size_t i = 0, j = 0;
    while (i < e_.size() || j < o.e_.size()) {
      if (j == o.e_.size() || (i < e_.size() && e_[i].first < o.e_[j].first)) {
        r.e_.push_back(e_[i++]);
      } else if (i == e_.size() || o.e_[j].first < e_[i].first) {
        r.e_.push_back(o.e_[j++]);
      } else {
        r.e_.emplace_back(e_[i].first, e_[i].second + o.e_[j].second);
        ++i;
        ++j;
      }
    }
    return r;
  }

  const std::vector<std::pair<int, int>>& entries() const { return e_; }

  bool operator==(const MultiIndex& o) const { return e_ == o.e_; }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }

  double eval(const std::map<int, double>& assignment) const {
    double r = 1.0;
    for (const auto& [v, e] : e_) {
      auto it = assignment.find(v);
      if (it == assignment.end())
        throw MissingAssignment("no value for variable id " + std::to_string(v));
      r *= std::pow(it->second, e);
    }
    return r;
  }

 private:
  std::vector<std::pair<int, int>> e_;
};

/// Strict weak order: total degree first, then within a degree the monomial
/// with the larger exponent on the smallest differing variable id comes first.
struct GradedLex {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    const auto& ea = a.entries();
    const auto& eb = b.entries();
    std::size_t i = 0, j = 0;
    while (i < ea.size() && j < eb.size()) {
      if (ea[i].first != eb[j].first) return ea[i].first < eb[j].first;
      if (ea[i].second != eb[j].second) return ea[i].second > eb[j].second;
      ++i;
      ++j;
    }
    return false;  // equal degree and equal entries up to the shorter list
  }
};

/// Multivariate polynomial with real coefficients in canonical form: the term
/// map never holds a zero coefficient and iteration follows graded-lex order.
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, double, GradedLex>;

  Polynomial() = default;

  static Polynomial constant(double c) {
    Polynomial p;
    if (c != 0.0) p.t_[MultiIndex{}] = c;
    return p;
  }

  static Polynomial variable(int id) {
    Polynomial p;
    p.t_[MultiIndex::unit(id)] = 1.0;
    return p;
  }

  static Polynomial monomial(const MultiIndex& m, double c) {
    Polynomial p;
    if (c != 0.0) p.t_[m] = c;
    return p;
  }

  const TermMap& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }

  /// Degree of the zero polynomial is 0 by convention.
  int degree() const {
    if (t_.empty()) return 0;
    return t_.rbegin()->first.degree();
  }

  std::vector<int> support_vars() const {
    std::vector<int> vars;
    for (const auto& [m, c] : t_)
      for (const auto& [v, e] : m.entries()) vars.push_back(v);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    return vars;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [m, c] : o.t_) add_term(m, c);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
  }

  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      t_.clear();
      return *this;
    }
    for (auto& [m, c] : t_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(double s, Polynomial p) { return p *= s; }
  friend Polynomial operator*(Polynomial p, double s) { return p *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r;
    for (const auto& [ma, ca] : a.t_)
      for (const auto& [mb, cb] : b.t_) r.add_term(ma.times(mb), ca * cb);
    return r;
  }

  Polynomial pow(int n) const {
    Polynomial r = constant(1.0);
    for (int i = 0; i < n; ++i) r = r * (*this);
    return r;
  }

  void add_term(const MultiIndex& m, double c) {
    auto it = t_.find(m);
    if (it == t_.end()) {
      if (c != 0.0) t_[m] = c;
    } else {
      it->second += c;
      if (it->second == 0.0) t_.erase(it);
    }
  }

  double eval(const std::map<int, double>& assignment) const {
    double r = 0.0;
    for (const auto& [m, c] : t_) r += c * m.eval(assignment);
    return r;
  }

  bool operator==(const Polynomial& o) const { return t_ == o.t_; }

  /// Debug form, terms in graded-lex order: "1 + 2*x0^2*x3 - 0.5*x1".
  std::string to_string() const {
    if (t_.empty()) return "0";
    std::ostringstream out;
    bool first = true;
    for (const auto& [m, c] : t_) {
      double mag = std::abs(c);
      if (first) {
        if (c < 0) out << "-";
        first = false;
      } else {
        out << (c < 0 ? " - " : " + ");
      }
      if (m.is_constant()) {
        out << mag;
      } else {
        if (mag != 1.0) out << mag << "*";
        bool fv = true;
        for (const auto& [v, e] : m.entries()) {
          if (!fv) out << "*";
          fv = false;
          out << "x" << v;
          if (e > 1) out << "^" << e;
        }
      }
    }
    return out.str();
  }

 private:
  TermMap t_;
};

}  // namespace ratrec
