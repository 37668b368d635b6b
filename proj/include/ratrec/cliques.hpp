#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "ratrec/model.hpp"

namespace ratrec {

struct VarInfo {
  int id = 0;
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool pad = false;  // zero-pinned window slot
};

/// Measure layout of the split criterion.  Measures are ordered fit 1..T then
/// penalty 1..T.  `cliques` holds the active support of each fraction;
/// `windows` the variable set its measure is built on.  A fit window always
/// spans exactly L taps, so windows near the left edge carry pad variables
/// standing in for x_s with s <= 0; pads are constrained to zero and keep
/// every fit measure the same shape.
struct CliqueStructure {
  ModelSpec model;
  std::vector<std::vector<int>> cliques;
  std::vector<std::vector<int>> windows;
  std::vector<std::vector<int>> overlaps;  // entry t-2: active I_t with I_{t-1}, t = 2..T
  std::vector<std::pair<int, Polynomial>> side_conditions;  // (measure, poly == 0)
  std::vector<VarInfo> variables;  // indexed by variable id

  VariableRegistry registry() const {
    return VariableRegistry(model.T, model.L(), model.regime);
  }
};

inline CliqueStructure build_cliques(const ModelSpec& m) {
  m.validate();
  CliqueStructure cs;
  cs.model = m;
  VariableRegistry reg = cs.registry();
  int T = m.T, L = m.L();
  double box = std::max(std::abs(m.b_low), std::abs(m.b_high));
  double h1 = 0.0;
  for (double hi : m.h) h1 += std::abs(hi);

  for (int t = 1; t <= T; ++t)
    cs.variables.push_back({reg.x(t), reg.name(reg.x(t)), m.b_low, m.b_high, false});
  if (m.regime == Regime::real_valued) {
    for (int t = 1; t <= T; ++t)
      cs.variables.push_back({reg.w(t), reg.name(reg.w(t)), 0.0, h1 * box, false});
    for (int t = 1; t <= T; ++t)
      cs.variables.push_back({reg.u(t), reg.name(reg.u(t)), 0.0, box, false});
  }
  for (int j = 1; j <= L - 1; ++j)
    cs.variables.push_back({reg.pad(1 - j), reg.name(reg.pad(1 - j)), 0.0, 0.0, true});

  for (int t = 1; t <= T; ++t) {
    std::vector<int> active;
    for (int s : window_support(t, L)) active.push_back(reg.x(s));
    std::vector<int> window;
    for (int s = t - L + 1; s <= t; ++s)
      window.push_back(s >= 1 ? reg.x(s) : reg.pad(s));
    if (m.regime == Regime::real_valued) {
      active.push_back(reg.w(t));
      window.push_back(reg.w(t));
    }
    std::sort(window.begin(), window.end());
    cs.cliques.push_back(active);
    cs.windows.push_back(window);
  }
  for (int t = 1; t <= T; ++t) {
    std::vector<int> pen{reg.x(t)};
    if (m.regime == Regime::real_valued) pen.push_back(reg.u(t));
    cs.cliques.push_back(pen);
    cs.windows.push_back(pen);
  }

  for (int t = 2; t <= T; ++t) {
    std::vector<int> shared;
    for (int s = std::max(1, t - L + 1); s <= t - 1; ++s) shared.push_back(reg.x(s));
    cs.overlaps.push_back(shared);
  }

  if (m.regime == Regime::real_valued) {
    for (int t = 1; t <= T; ++t) {
      Polynomial v = conv_poly(m, reg, t);
      Polynomial w = Polynomial::variable(reg.w(t));
      cs.side_conditions.emplace_back(t - 1, w * w - v * v);
      Polynomial x = Polynomial::variable(reg.x(t));
      Polynomial u = Polynomial::variable(reg.u(t));
      cs.side_conditions.emplace_back(T + t - 1, u * u - x * x);
    }
  }
  return cs;
}

/// Running intersection: each clique's overlap with the union of its
/// predecessors must sit inside a single earlier clique.
inline bool verify_rip(const std::vector<std::vector<int>>& cliques) {
  std::vector<int> seen;
  for (std::size_t i = 0; i < cliques.size(); ++i) {
    if (i > 0) {
      std::vector<int> overlap;
      for (int v : cliques[i])
        if (std::count(seen.begin(), seen.end(), v)) overlap.push_back(v);
      if (!overlap.empty()) {
        bool covered = false;
        for (std::size_t j = 0; j < i && !covered; ++j) {
          covered = std::all_of(overlap.begin(), overlap.end(), [&](int v) {
            return std::count(cliques[j].begin(), cliques[j].end(), v) != 0;
          });
        }
        if (!covered) return false;
      }
    }
    for (int v : cliques[i])
      if (!std::count(seen.begin(), seen.end(), v)) seen.push_back(v);
  }
  return true;
}

}  // namespace ratrec
