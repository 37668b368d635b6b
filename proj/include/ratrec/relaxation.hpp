#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ratrec/cliques.hpp"
#include "ratrec/moments.hpp"

namespace ratrec {

struct SdpBlock {
  int measure = 0;
  LinearMatrixMap map;
  std::string tag;
};

struct EqTerm {
  int pos;
  double coeff;
};

struct EqRow {
  std::vector<EqTerm> terms;
  double rhs = 0.0;
  std::string tag;
};

/// Moment relaxation of the split criterion in solver-ready form: one moment
/// vector per measure (concatenated, graded-lex within each measure), a
/// linear objective, equality rows, and symmetric blocks required PSD.
struct SdpProblem {
  ModelSpec model;
  int order = 0;
  bool dense = false;
  CliqueStructure cs;
  std::vector<MonomialBasis> bases;  // per measure
  std::vector<int> offsets;
  int n_moments = 0;
  std::vector<Polynomial> nums, dens;  // per measure, fit 1..T then penalty 1..T
  std::vector<double> objective;
  std::vector<EqRow> equalities;
  std::vector<SdpBlock> blocks;
};

struct SizeReport {
  int n_moments = 0;
  int n_equalities = 0;
  std::vector<int> block_sizes;
  int max_block = 0;
  std::vector<int> measure_basis_sizes;
};

namespace detail {

inline int min_order(const SplitTerms& st, const CliqueStructure& cs) {
  int k = 1;  // box localizers have half-degree 1
  auto half = [](int d) { return (d + 1) / 2; };
  for (const auto& list : {st.fit, st.penalty})
    for (const RationalTerm& rt : list) {
      k = std::max(k, half(rt.num.degree()));
      k = std::max(k, half(rt.den.degree()));
    }
  for (const auto& [ci, p] : cs.side_conditions) k = std::max(k, half(p.degree()));
  return k;
}

inline void add_poly_terms(std::map<int, double>& row, const SdpProblem& prob, int measure,
                           const Polynomial& p, double sign) {
  const MonomialBasis& b = prob.bases[measure];
  int off = prob.offsets[measure];
  for (const auto& [mono, c] : p.terms()) row[off + b.index_of(mono)] += sign * c;
}

inline EqRow finish_row(std::map<int, double>&& row, double rhs, std::string tag) {
  EqRow r;
  r.rhs = rhs;
  r.tag = std::move(tag);
  for (const auto& [pos, c] : row)
    if (c != 0.0) r.terms.push_back({pos, c});
  return r;
}

inline SdpProblem assemble(const ModelSpec& m, const std::vector<double>& d, int k,
                           bool dense, std::size_t dense_cap) {
  SplitTerms st = build_split_terms(m, d);
  CliqueStructure cs = build_cliques(m);
  int kmin = min_order(st, cs);
  if (k < kmin)
    throw OrderTooSmall("relaxation order " + std::to_string(k) + " below minimum " +
                        std::to_string(kmin));

  SdpProblem prob;
  prob.model = m;
  prob.order = k;
  prob.dense = dense;
  prob.cs = cs;
  int T = m.T;
  VariableRegistry reg = cs.registry();

  std::vector<int> full_vars;
  if (dense) {
    for (const VarInfo& v : cs.variables)
      if (!v.pad) full_vars.push_back(v.id);
    std::sort(full_vars.begin(), full_vars.end());
    double count = 1.0;
    int n = static_cast<int>(full_vars.size());
    for (int i = 1; i <= 2 * k; ++i) count = count * (n + i) / i;
    if (2.0 * T * count > static_cast<double>(dense_cap))
      throw SizeCapExceeded("dense relaxation needs about " +
                            std::to_string(static_cast<long long>(2.0 * T * count)) +
                            " moments, cap is " + std::to_string(dense_cap));
  }

  for (int mi = 0; mi < 2 * T; ++mi) {
    const std::vector<int>& vars = dense ? full_vars : cs.windows[mi];
    prob.bases.push_back(enumerate_basis(vars, 2 * k));
    prob.offsets.push_back(prob.n_moments);
    prob.n_moments += static_cast<int>(prob.bases.back().size());
  }

  for (int t = 0; t < T; ++t) {
    prob.nums.push_back(st.fit[t].num);
    prob.dens.push_back(st.fit[t].den);
  }
  for (int t = 0; t < T; ++t) {
    prob.nums.push_back(st.penalty[t].num);
    prob.dens.push_back(st.penalty[t].den);
  }

  prob.objective.assign(prob.n_moments, 0.0);
  for (int mi = 0; mi < 2 * T; ++mi) {
    const MonomialBasis& b = prob.bases[mi];
    for (const auto& [mono, c] : prob.nums[mi].terms())
      prob.objective[prob.offsets[mi] + b.index_of(mono)] += c;
  }

  // normalizations: the denominator-weighted mass of each measure is one
  for (int mi = 0; mi < 2 * T; ++mi) {
    std::map<int, double> row;
    add_poly_terms(row, prob, mi, prob.dens[mi], 1.0);
    prob.equalities.push_back(finish_row(std::move(row), 1.0, "norm" + std::to_string(mi)));
  }

  // pad slots carry no mass: every moment touching one vanishes
  if (!dense) {
    for (int mi = 0; mi < 2 * T; ++mi) {
      const MonomialBasis& b = prob.bases[mi];
      for (std::size_t i = 0; i < b.size(); ++i) {
        bool has_pad = false;
        for (const auto& [v, e] : b.monos[i].entries())
          if (reg.is_pad(v)) has_pad = true;
        if (has_pad)
          prob.equalities.push_back(
              {{{prob.offsets[mi] + static_cast<int>(i), 1.0}}, 0.0, "pin" + std::to_string(mi)});
      }
    }
  }

  // lifted-variable definitions, shifted by every admissible monomial
  for (const auto& [mi, poly] : cs.side_conditions) {
    const std::vector<int>& vars = dense ? full_vars : cs.windows[mi];
    MonomialBasis shifts = enumerate_basis(vars, 2 * k - poly.degree());
    for (const MultiIndex& alpha : shifts.monos) {
      std::map<int, double> row;
      add_poly_terms(row, prob, mi, Polynomial::monomial(alpha, 1.0) * poly, 1.0);
      prob.equalities.push_back(finish_row(std::move(row), 0.0, "side" + std::to_string(mi)));
    }
  }

  // consecutive fit measures agree on shared denominator-weighted moments
  for (int t = 2; t <= T; ++t) {
    const std::vector<int>& shared = dense ? full_vars : cs.overlaps[t - 2];
    MonomialBasis shifts = enumerate_basis(
        shared, 2 * k - std::max(prob.dens[t - 1].degree(), prob.dens[t - 2].degree()));
    for (const MultiIndex& alpha : shifts.monos) {
      Polynomial mono = Polynomial::monomial(alpha, 1.0);
      std::map<int, double> row;
      add_poly_terms(row, prob, t - 1, mono * prob.dens[t - 1], 1.0);
      add_poly_terms(row, prob, t - 2, mono * prob.dens[t - 2], -1.0);
      prob.equalities.push_back(finish_row(std::move(row), 0.0, "ovl" + std::to_string(t)));
    }
  }

  // each penalty measure agrees with its fit measure on x_t moments
  for (int t = 1; t <= T; ++t) {
    int fit = t - 1, pen = T + t - 1;
    int max_shift = 2 * k - std::max(prob.dens[fit].degree(), prob.dens[pen].degree());
    std::vector<MultiIndex> shifts;
    if (dense) {
      shifts = enumerate_basis(full_vars, max_shift).monos;
    } else {
      for (int a = 0; a <= max_shift; ++a) shifts.push_back(MultiIndex::unit(reg.x(t), a));
    }
    for (const MultiIndex& alpha : shifts) {
      Polynomial mono = Polynomial::monomial(alpha, 1.0);
      std::map<int, double> row;
      add_poly_terms(row, prob, pen, mono * prob.dens[pen], 1.0);
      add_poly_terms(row, prob, fit, mono * prob.dens[fit], -1.0);
      prob.equalities.push_back(finish_row(std::move(row), 0.0, "cpl" + std::to_string(t)));
    }
  }

  // PSD blocks: one moment matrix per measure plus a box localizer per
  // active variable (pads are pinned by the equality rows instead)
  std::map<int, const VarInfo*> vinfo;
  for (const VarInfo& v : cs.variables) vinfo[v.id] = &v;
  for (int mi = 0; mi < 2 * T; ++mi) {
    SdpBlock mom;
    mom.measure = mi;
    mom.map = moment_matrix_map(prob.bases[mi], k);
    mom.tag = "mom" + std::to_string(mi);
    for (auto& terms : mom.map.up)
      for (EntryTerm& t : terms) t.pos += prob.offsets[mi];
    prob.blocks.push_back(std::move(mom));
    const std::vector<int>& vars = dense ? full_vars : cs.windows[mi];
    for (int v : vars) {
      const VarInfo* info = vinfo.at(v);
      if (info->pad) continue;
      Polynomial xv = Polynomial::variable(v);
      Polynomial g = Polynomial::constant(-info->lo * info->hi) +
                     (info->lo + info->hi) * xv - xv * xv;
      SdpBlock loc;
      loc.measure = mi;
      loc.map = localizing_matrix_map(prob.bases[mi], k - 1, g);
      loc.tag = "box" + std::to_string(mi) + "_" + reg.name(v);
      for (auto& terms : loc.map.up)
        for (EntryTerm& t : terms) t.pos += prob.offsets[mi];
      prob.blocks.push_back(std::move(loc));
    }
  }
  return prob;
}

}  // namespace detail

inline SdpProblem assemble_sparse(const ModelSpec& m, const std::vector<double>& d, int k) {
  return detail::assemble(m, d, k, false, 0);
}

inline SdpProblem assemble_dense(const ModelSpec& m, const std::vector<double>& d, int k,
                                 std::size_t moment_cap = 200000) {
  return detail::assemble(m, d, k, true, moment_cap);
}

inline SizeReport size_report(const SdpProblem& prob) {
  SizeReport r;
  r.n_moments = prob.n_moments;
  r.n_equalities = static_cast<int>(prob.equalities.size());
  for (const SdpBlock& b : prob.blocks) {
    r.block_sizes.push_back(b.map.m);
    r.max_block = std::max(r.max_block, b.map.m);
  }
  for (const MonomialBasis& b : prob.bases)
    r.measure_basis_sizes.push_back(static_cast<int>(b.size()));
  return r;
}

/// Moments of the q-weighted Dirac mass at a box point, per measure.  Lifted
/// variables take their defining absolute values, pads take zero.  The result
/// is feasible for the relaxation and its objective equals eval_J(x).
inline std::vector<double> dirac_moments(const SdpProblem& prob,
                                         const std::vector<double>& x) {
  const ModelSpec& m = prob.model;
  VariableRegistry reg = prob.cs.registry();
  std::vector<double> v = convolve(m.h, x);
  std::map<int, double> pt;
  for (int t = 1; t <= m.T; ++t) {
    pt[reg.x(t)] = x[t - 1];
    if (m.regime == Regime::real_valued) {
      pt[reg.w(t)] = std::abs(v[t - 1]);
      pt[reg.u(t)] = std::abs(x[t - 1]);
    }
  }
  for (int j = 1; j <= m.L() - 1; ++j) pt[reg.pad(1 - j)] = 0.0;

  std::vector<double> y(prob.n_moments, 0.0);
  for (std::size_t mi = 0; mi < prob.bases.size(); ++mi) {
    double q = prob.dens[mi].eval(pt);
    const MonomialBasis& b = prob.bases[mi];
    for (std::size_t i = 0; i < b.size(); ++i)
      y[prob.offsets[mi] + i] = b.monos[i].eval(pt) / q;
  }
  return y;
}

/// First-order readout: x_t = L_y(x_t * q_t) on the penalty measure, clipped
/// to the box.
inline std::vector<double> extract_estimate(const SdpProblem& prob,
                                            const std::vector<double>& y) {
  const ModelSpec& m = prob.model;
  VariableRegistry reg = prob.cs.registry();
  std::vector<double> x(m.T);
  for (int t = 1; t <= m.T; ++t) {
    int pen = m.T + t - 1;
    const MonomialBasis& b = prob.bases[pen];
    Polynomial p = Polynomial::variable(reg.x(t)) * prob.dens[pen];
    double val = 0.0;
    for (const auto& [mono, c] : p.terms())
      val += c * y[prob.offsets[pen] + b.index_of(mono)];
    x[t - 1] = std::min(m.b_high, std::max(m.b_low, val));
  }
  return x;
}

inline double objective_value(const SdpProblem& prob, const std::vector<double>& y) {
  double r = 0.0;
  for (int i = 0; i < prob.n_moments; ++i) r += prob.objective[i] * y[i];
  return r;
}

/// Plain sparse text dump: one line per nonzero as
///   kind id i j pos coeff
/// with kinds meta/measure/obj/eq/rhs/blk/dim.  Round-trips coefficients via
/// %.17g.
inline void export_problem(const SdpProblem& prob, std::ostream& out) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "# sdp export v1\n";
  out << "meta moments " << prob.n_moments << "\n";
  out << "meta equalities " << prob.equalities.size() << "\n";
  out << "meta blocks " << prob.blocks.size() << "\n";
  out << "meta order " << prob.order << "\n";
  out << "meta measures " << prob.bases.size() << "\n";
  for (std::size_t mi = 0; mi < prob.bases.size(); ++mi)
    out << "measure " << mi << " " << prob.offsets[mi] << " " << prob.bases[mi].size()
        << "\n";
  for (int i = 0; i < prob.n_moments; ++i)
    if (prob.objective[i] != 0.0)
      out << "obj 0 0 0 " << i << " " << fmt(prob.objective[i]) << "\n";
  for (std::size_t r = 0; r < prob.equalities.size(); ++r) {
    for (const EqTerm& t : prob.equalities[r].terms)
      out << "eq " << r << " 0 0 " << t.pos << " " << fmt(t.coeff) << "\n";
    if (prob.equalities[r].rhs != 0.0)
      out << "rhs " << r << " 0 0 0 " << fmt(prob.equalities[r].rhs) << "\n";
  }
  for (std::size_t l = 0; l < prob.blocks.size(); ++l) {
    const LinearMatrixMap& map = prob.blocks[l].map;
    out << "dim " << l << " " << map.m << " 0 0 0\n";
    for (int i = 0; i < map.m; ++i)
      for (int j = i; j < map.m; ++j)
        for (const EntryTerm& t : map.entry(i, j))
          out << "blk " << l << " " << i << " " << j << " " << t.pos << " " << fmt(t.coeff)
              << "\n";
  }
}

}  // namespace ratrec
