#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ratrec/polynomial.hpp"

namespace ratrec {

/// All monomials of total degree <= max_degree over an ordered variable set,
/// listed in graded-lex order.  The position of a monomial in `monos` is its
/// index into any moment vector built on this basis.
struct MonomialBasis {
  std::vector<int> vars;  // ascending ids
  int max_degree = 0;
  std::vector<MultiIndex> monos;
  std::map<MultiIndex, int, GradedLex> pos;

  std::size_t size() const { return monos.size(); }

  int index_of(const MultiIndex& m) const {
    auto it = pos.find(m);
    if (it == pos.end())
      throw OutOfBasis("monomial of degree " + std::to_string(m.degree()) +
                       " not in basis (max degree " + std::to_string(max_degree) + ")");
    return it->second;
  }

  bool contains(const MultiIndex& m) const { return pos.count(m) != 0; }
};

namespace detail {

inline void enumerate_rec(const std::vector<int>& vars, std::size_t at, int remaining,
                          MultiIndex prefix, std::vector<MultiIndex>& out) {
  if (at == vars.size()) {
    if (remaining == 0) out.push_back(prefix);
    return;
  }
  if (at + 1 == vars.size()) {
    out.push_back(prefix.times(MultiIndex::unit(vars[at], remaining)));
    return;
  }
  for (int e = remaining; e >= 0; --e)
    enumerate_rec(vars, at + 1, remaining - e, prefix.times(MultiIndex::unit(vars[at], e)),
                  out);
}

}  // namespace detail

inline MonomialBasis enumerate_basis(std::vector<int> vars, int max_degree) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  MonomialBasis b;
  b.vars = vars;
  b.max_degree = max_degree;
  if (vars.empty()) {
    b.monos.push_back(MultiIndex{});
  } else {
    for (int d = 0; d <= max_degree; ++d)
      detail::enumerate_rec(vars, 0, d, MultiIndex{}, b.monos);
  }
  for (std::size_t i = 0; i < b.monos.size(); ++i) b.pos[b.monos[i]] = static_cast<int>(i);
  return b;
}

/// Truncated moment sequence on a basis.
struct MomentVector {
  MonomialBasis basis;
  std::vector<double> values;
};

/// Linear functional y -> sum_g p_g * y_g applied to a polynomial.
inline double riesz(const MonomialBasis& basis, const std::vector<double>& y,
                    const Polynomial& p) {
  double r = 0.0;
  for (const auto& [m, c] : p.terms()) r += c * y[static_cast<std::size_t>(basis.index_of(m))];
  return r;
}

inline double riesz(const MomentVector& mv, const Polynomial& p) {
  return riesz(mv.basis, mv.values, p);
}

/// One linear term of a matrix entry: coefficient times a moment position.
struct EntryTerm {
  int pos;
  double coeff;
};

/// Symmetric-matrix-valued linear map of a moment vector.  Entries are stored
/// for i <= j only; (i,j) and (j,i) share the same term list by construction.
struct LinearMatrixMap {
  int m = 0;                               // matrix dimension
  std::vector<MultiIndex> row_basis;       // size m
  std::vector<std::vector<EntryTerm>> up;  // packed upper triangle, row-major

  std::size_t packed(int i, int j) const {
    // caller guarantees i <= j
    return static_cast<std::size_t>(i) * m - static_cast<std::size_t>(i) * (i - 1) / 2 +
           (j - i);
  }

  const std::vector<EntryTerm>& entry(int i, int j) const {
    return i <= j ? up[packed(i, j)] : up[packed(j, i)];
  }

  /// Dense symmetric result, row-major m*m.
  void apply(const std::vector<double>& y, std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double v = 0.0;
        for (const EntryTerm& t : up[packed(i, j)]) v += t.coeff * y[t.pos];
        out[static_cast<std::size_t>(i) * m + j] = v;
        out[static_cast<std::size_t>(j) * m + i] = v;
      }
  }
};

/// Map sending a degree-2k moment vector to its order-k moment matrix:
/// entry (a,b) reads the moment at position of a+b with coefficient 1.
inline LinearMatrixMap moment_matrix_map(const MonomialBasis& ybasis, int k) {
  LinearMatrixMap map;
  MonomialBasis rows = enumerate_basis(ybasis.vars, k);
  map.m = static_cast<int>(rows.size());
  map.row_basis = rows.monos;
  map.up.resize(static_cast<std::size_t>(map.m) * (map.m + 1) / 2);
  for (int i = 0; i < map.m; ++i)
    for (int j = i; j < map.m; ++j) {
      MultiIndex prod = rows.monos[i].times(rows.monos[j]);
      map.up[map.packed(i, j)] = {{ybasis.index_of(prod), 1.0}};
    }
  return map;
}

/// Map sending a moment vector to the order-k_loc localizing matrix of g:
/// entry (a,b) = sum_g g_c * y_{c+a+b}.  Requires 2*k_loc + deg g within the
/// basis degree.
inline LinearMatrixMap localizing_matrix_map(const MonomialBasis& ybasis, int k_loc,
                                             const Polynomial& g) {
  LinearMatrixMap map;
  MonomialBasis rows = enumerate_basis(ybasis.vars, k_loc);
  map.m = static_cast<int>(rows.size());
  map.row_basis = rows.monos;
  map.up.resize(static_cast<std::size_t>(map.m) * (map.m + 1) / 2);
  for (int i = 0; i < map.m; ++i)
    for (int j = i; j < map.m; ++j) {
      MultiIndex prod = rows.monos[i].times(rows.monos[j]);
      std::vector<EntryTerm>& terms = map.up[map.packed(i, j)];
      for (const auto& [gm, gc] : g.terms())
        terms.push_back({ybasis.index_of(prod.times(gm)), gc});
    }
  return map;
}

}  // namespace ratrec
