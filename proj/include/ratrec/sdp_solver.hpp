#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "ratrec/relaxation.hpp"

namespace ratrec {

struct SolverConfig {
  int max_iter = 50000;
  double tol = 1e-7;         // absolute primal/dual residual target
  double rho = 1.0;          // initial splitting penalty
  int refine_steps = 2;      // equality polishing rounds on the final iterate
  int refine_inner = 1;      // refinement rounds inside each sweep
  double over_relax = 1.6;
  int adapt_every = 25;      // residual-balancing cadence; doubles per event
  double adapt_ratio = 10.0;
  double adapt_factor = 2.0;
  int max_adapt = 100;
  double sigma = 1e-10;      // quasi-definite shift of the projection system
  int scale_iters = 15;      // equilibration rounds; 0 disables scaling
  int accel_memory = 16;     // fixed-point acceleration depth; 0 disables
  double accel_safeguard = 10.0;  // reject factor for accelerated steps
  int accel_restart = 0;     // forced history clear cadence; 0 disables
  int trace_every = 50;
  double diverge_tol = 1e10;
};

enum class SolveStatus { optimal, max_iter, infeasible };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    default: return "infeasible";
  }
}

struct TracePoint {
  int iter;
  double primal;
  double dual;
  double objective;
};

struct SdpSolution {
  std::vector<double> y;
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double eq_residual = 0.0;
  int iterations = 0;
  int accel_accepts = 0;
  int accel_rejects = 0;
  int penalty_updates = 0;
  std::vector<TracePoint> trace;
  double seconds = 0.0;
};

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.  `s` is row-major
/// m*m and must be symmetric.  Returns eigenvalues ascending; `vecs` is
/// row-major with column j holding the eigenvector of evals[j].
inline void eigh(const std::vector<double>& s, int m, std::vector<double>& evals,
                 std::vector<double>& vecs) {
  std::vector<double> a = s;
  vecs.assign(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) vecs[static_cast<std::size_t>(i) * m + i] = 1.0;
  auto at = [&](std::vector<double>& mat, int i, int j) -> double& {
    return mat[static_cast<std::size_t>(i) * m + j];
  };
  double norm = 0.0;
  for (double v : a) norm += v * v;
  norm = std::sqrt(norm);
  const double stop = 1e-13 * (1.0 + norm);
  const int sweep_cap = 100;
  bool converged = false;
  for (int sweep = 0; sweep < sweep_cap && !converged; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) off += at(a, p, q) * at(a, p, q);
    if (std::sqrt(2.0 * off) <= stop) {
      converged = true;
      break;
    }
    for (int p = 0; p < m; ++p) {
      for (int q = p + 1; q < m; ++q) {
        double apq = at(a, p, q);
        if (std::abs(apq) <= 1e-300) continue;
        double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double sn = t * c;
        for (int r = 0; r < m; ++r) {
          double arp = at(a, r, p), arq = at(a, r, q);
          at(a, r, p) = c * arp - sn * arq;
          at(a, r, q) = sn * arp + c * arq;
        }
        for (int r = 0; r < m; ++r) {
          double apr = at(a, p, r), aqr = at(a, q, r);
          at(a, p, r) = c * apr - sn * aqr;
          at(a, q, r) = sn * apr + c * aqr;
        }
        for (int r = 0; r < m; ++r) {
          double vrp = at(vecs, r, p), vrq = at(vecs, r, q);
          at(vecs, r, p) = c * vrp - sn * vrq;
          at(vecs, r, q) = sn * vrp + c * vrq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) off += at(a, p, q) * at(a, p, q);
    if (std::sqrt(2.0 * off) > stop)
      throw NoConvergence("jacobi sweeps exhausted at dimension " + std::to_string(m));
  }
  evals.resize(m);
  for (int i = 0; i < m; ++i) evals[i] = at(a, i, i);
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) { return evals[i] < evals[j]; });
  std::vector<double> ev(m);
  std::vector<double> vv(vecs.size());
  for (int j = 0; j < m; ++j) {
    ev[j] = evals[order[j]];
    for (int i = 0; i < m; ++i) vv[static_cast<std::size_t>(i) * m + j] =
        at(vecs, i, order[j]);
  }
  evals = std::move(ev);
  vecs = std::move(vv);
}

/// Frobenius-nearest PSD matrix: clamp negative eigenvalues at zero.
inline std::vector<double> project_psd(const std::vector<double>& s, int m) {
  Eigen::Map<const Eigen::MatrixXd> S(s.data(), m, m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw NoConvergence("eigendecomposition failed at dimension " + std::to_string(m));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd X = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return std::vector<double>(X.data(), X.data() + static_cast<std::size_t>(m) * m);
}

/// Smallest eigenvalue over all blocks of the solution y, via eigh.
inline double min_block_eigenvalue(const SdpProblem& prob, const std::vector<double>& y) {
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> s, evals, vecs;
  for (const SdpBlock& b : prob.blocks) {
    b.map.apply(y, s);
    eigh(s, b.map.m, evals, vecs);
    worst = std::min(worst, evals.front());
  }
  return worst;
}

inline double equality_residual(const SdpProblem& prob, const std::vector<double>& y) {
  double worst = 0.0;
  for (const EqRow& r : prob.equalities) {
    double s = -r.rhs;
    for (const EqTerm& t : r.terms) s += t.coeff * y[t.pos];
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

namespace detail {

/// Denominator-weighted mass seed: unit normalized mass on each measure,
/// all higher moments zero.
inline std::vector<double> mass_seed(const SdpProblem& prob) {
  std::vector<double> y(prob.n_moments, 0.0);
  if (prob.dens.size() != prob.bases.size()) return y;
  for (std::size_t mi = 0; mi < prob.bases.size(); ++mi) {
    double q0 = 0.0;
    for (const auto& [mono, c] : prob.dens[mi].terms())
      if (mono.is_constant()) q0 = c;
    if (q0 != 0.0) y[prob.offsets[mi]] = 1.0 / q0;
  }
  return y;
}

}  // namespace detail

/// Operator-splitting solve of the assembled relaxation.  The problem is
/// equilibrated first (scalar congruence per semidefinite block, free row
/// scaling of equalities, diagonal column scaling of the moment vector);
/// the iteration then alternates an equality-constrained least-squares step
/// (pre-factorized quasi-definite system) with per-block PSD projections,
/// over-relaxed and with residual-balanced penalty updates.  Residuals are
/// reported in the units of the unscaled problem.  The returned y is the
/// affine-feasible iterate, polished by `refine_steps` rounds of iterative
/// refinement against the unregularized system.
inline SdpSolution solve(const SdpProblem& prob, const SolverConfig& cfg = {},
                         const std::vector<double>* warm_start = nullptr) {
  using Clock = std::chrono::steady_clock;
  auto t0 = Clock::now();
  using SpMat = Eigen::SparseMatrix<double>;
  using Trip = Eigen::Triplet<double>;

  const int N = prob.n_moments;
  const int E = static_cast<int>(prob.equalities.size());
  const int B = static_cast<int>(prob.blocks.size());

  std::vector<int> blk_off(B + 1, 0);
  for (int l = 0; l < B; ++l)
    blk_off[l + 1] = blk_off[l] + prob.blocks[l].map.m * prob.blocks[l].map.m;
  const int SR = blk_off[B];
  std::vector<int> row_blk(SR);
  for (int l = 0; l < B; ++l)
    for (int r = blk_off[l]; r < blk_off[l + 1]; ++r) row_blk[r] = l;

  struct RawEntry {
    int row, col;
    double val;
  };
  std::vector<RawEntry> mraw;
  for (int l = 0; l < B; ++l) {
    const LinearMatrixMap& map = prob.blocks[l].map;
    int m = map.m;
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j)
        for (const EntryTerm& t : map.entry(i, j)) {
          mraw.push_back({blk_off[l] + i * m + j, t.pos, t.coeff});
          if (i != j) mraw.push_back({blk_off[l] + j * m + i, t.pos, t.coeff});
        }
  }
  std::vector<RawEntry> araw;
  for (int r = 0; r < E; ++r)
    for (const EqTerm& t : prob.equalities[r].terms) araw.push_back({r, t.pos, t.coeff});

  // equilibration: y scaled by D, block l congruence-scaled by Eb, row r of
  // the equalities scaled by Fa
  std::vector<double> D(N, 1.0), Eb(B, 1.0), Fa(E, 1.0);
  if (cfg.scale_iters > 0) {
    std::vector<double> colmax(N), blkmax(B), eqmax(E);
    for (int it = 0; it < cfg.scale_iters; ++it) {
      std::fill(colmax.begin(), colmax.end(), 0.0);
      std::fill(blkmax.begin(), blkmax.end(), 0.0);
      std::fill(eqmax.begin(), eqmax.end(), 0.0);
      for (const RawEntry& e : mraw) {
        double v = std::abs(e.val) * Eb[row_blk[e.row]] * D[e.col];
        colmax[e.col] = std::max(colmax[e.col], v);
        blkmax[row_blk[e.row]] = std::max(blkmax[row_blk[e.row]], v);
      }
      for (const RawEntry& e : araw) {
        double v = std::abs(e.val) * Fa[e.row] * D[e.col];
        colmax[e.col] = std::max(colmax[e.col], v);
        eqmax[e.row] = std::max(eqmax[e.row], v);
      }
      for (int j = 0; j < N; ++j)
        if (colmax[j] > 0) D[j] /= std::sqrt(colmax[j]);
      for (int l = 0; l < B; ++l)
        if (blkmax[l] > 0) Eb[l] /= std::sqrt(blkmax[l]);
      for (int r = 0; r < E; ++r)
        if (eqmax[r] > 0) Fa[r] /= std::sqrt(eqmax[r]);
    }
  }

  std::vector<Trip> trips;
  trips.reserve(mraw.size());
  for (const RawEntry& e : mraw)
    trips.emplace_back(e.row, e.col, e.val * Eb[row_blk[e.row]] * D[e.col]);
  SpMat M(SR, N);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  SpMat MT = M.transpose();

  trips.clear();
  for (const RawEntry& e : araw)
    trips.emplace_back(e.row, e.col, e.val * Fa[e.row] * D[e.col]);
  SpMat A(E, N);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  SpMat AT = A.transpose();

  Eigen::VectorXd c(N);
  for (int i = 0; i < N; ++i) c[i] = prob.objective[i] * D[i];
  Eigen::VectorXd b(E);
  for (int r = 0; r < E; ++r) b[r] = prob.equalities[r].rhs * Fa[r];
  Eigen::VectorXd rowscale(SR), dcol(N);
  for (int r = 0; r < SR; ++r) rowscale[r] = Eb[row_blk[r]];
  for (int j = 0; j < N; ++j) dcol[j] = D[j];

  // each block carries its own penalty; rhow expands it to packed rows
  Eigen::VectorXd rho_blk = Eigen::VectorXd::Constant(B, cfg.rho);
  Eigen::VectorXd rhow(SR);
  auto refresh_rhow = [&]() {
    for (int r = 0; r < SR; ++r) rhow[r] = rho_blk[row_blk[r]];
  };
  refresh_rhow();
  // Qr is kept unpruned so its sparsity pattern survives penalty changes
  SpMat Qr;
  Eigen::SimplicialLDLT<SpMat> kkt;
  bool analyzed = false;
  auto factorize = [&]() {
    SpMat Mw = rhow.asDiagonal() * M;
    Qr = MT * Mw;
    std::vector<Trip> kt;
    kt.reserve(Qr.nonZeros() + 2 * A.nonZeros() + N + E);
    for (int col = 0; col < N; ++col)
      for (SpMat::InnerIterator it(Qr, col); it; ++it)
        kt.emplace_back(static_cast<int>(it.row()), col, it.value());
    for (int i = 0; i < N; ++i) kt.emplace_back(i, i, cfg.sigma);
    for (int col = 0; col < N; ++col)
      for (SpMat::InnerIterator it(A, col); it; ++it) {
        kt.emplace_back(N + static_cast<int>(it.row()), col, it.value());
        kt.emplace_back(col, N + static_cast<int>(it.row()), it.value());
      }
    for (int r = 0; r < E; ++r) kt.emplace_back(N + r, N + r, -cfg.sigma);
    SpMat K(N + E, N + E);
    K.setFromTriplets(kt.begin(), kt.end());
    K.makeCompressed();
    if (!analyzed) {
      kkt.analyzePattern(K);
      analyzed = true;
    }
    kkt.factorize(K);
    if (kkt.info() != Eigen::Success)
      throw NumericalBreakdown("projection system factorization failed");
  };
  factorize();

  Eigen::VectorXd y(N);
  {
    std::vector<double> seed = warm_start ? *warm_start : detail::mass_seed(prob);
    for (int i = 0; i < N; ++i) y[i] = seed[i] / D[i];
  }
  Eigen::VectorXd s = M * y;
  Eigen::VectorXd X(SR), U = Eigen::VectorXd::Zero(SR);
  auto project_blocks = [&](const Eigen::VectorXd& src, Eigen::VectorXd& dst) {
    for (int l = 0; l < B; ++l) {
      int m = prob.blocks[l].map.m;
      Eigen::Map<const Eigen::MatrixXd> Bm(src.data() + blk_off[l], m, m);
      Eigen::MatrixXd Sym = 0.5 * (Bm + Bm.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sym);
      if (es.info() != Eigen::Success)
        throw NumericalBreakdown("block eigendecomposition failed");
      const Eigen::VectorXd& lam = es.eigenvalues();
      int first = 0;
      while (first < m && lam[first] <= 0.0) ++first;
      Eigen::Map<Eigen::MatrixXd> out(dst.data() + blk_off[l], m, m);
      if (first == m) {
        out.setZero();
      } else {
        Eigen::MatrixXd Vp = es.eigenvectors().rightCols(m - first);
        out.noalias() = Vp * lam.tail(m - first).asDiagonal() * Vp.transpose();
      }
    }
  };
  project_blocks(s, X);

  SdpSolution sol;
  Eigen::VectorXd rhs(N + E), z(N + E), w(SR), shat(SR), Xin(SR);
  auto solve_kkt = [&](int refine) {
    z = kkt.solve(rhs);
    for (int r = 0; r < refine; ++r) {
      Eigen::VectorXd res(N + E);
      res.head(N) = rhs.head(N) - Qr * z.head(N) - AT * z.tail(E);
      res.tail(E) = rhs.tail(E) - A * z.head(N);
      z += kkt.solve(res);
    }
  };

  double r_pri = 0.0, r_dual = 0.0;
  // one splitting sweep on the (X, U) pair; residuals in unscaled units
  auto sweep = [&]() {
    w = X - U;
    rhs.head(N) = MT * rhow.cwiseProduct(w) - c;
    rhs.tail(E) = b;
    solve_kkt(cfg.refine_inner);
    y = z.head(N);
    s.noalias() = M * y;
    shat = cfg.over_relax * s + (1.0 - cfg.over_relax) * X;
    w = shat + U;
    Xin = X;
    project_blocks(w, X);
    U = w - X;
    r_pri = ((s - X).cwiseQuotient(rowscale)).norm();
    r_dual = ((MT * rhow.cwiseProduct(X - Xin)).cwiseQuotient(dcol)).norm();
  };

  // accelerated fixed-point driver: the sweep map is iterated on the
  // stacked state v = (X, U); a least-squares extrapolation over the
  // recent residual history proposes the next state and is rolled back
  // whenever it fails to contract the fixed-point residual
  const int VS = 2 * SR;
  const int mem = std::max(0, std::min(cfg.accel_memory, 128));
  Eigen::VectorXd vcur(VS), Fv(VS), rvec(VS), v_fallback(VS), prev_r(VS), prev_Fv(VS);
  Eigen::MatrixXd dR(VS, std::max(mem, 1)), dF(VS, std::max(mem, 1));
  int mcount = 0, mnext = 0;
  bool have_prev = false, last_accel = false;
  double base_res = 0.0;
  vcur.head(SR) = X;
  vcur.tail(SR) = U;

  int adapts = 0;
  int adapt_interval = std::max(1, cfg.adapt_every);
  int iters_run = 0;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    iters_run = iter;
    X = vcur.head(SR);
    U = vcur.tail(SR);
    sweep();
    Fv.head(SR) = X;
    Fv.tail(SR) = U;
    rvec = Fv - vcur;
    double fp_res = rvec.norm();
    double obj = c.dot(y);
    if (cfg.trace_every > 0 && (iter % cfg.trace_every == 0 || iter == 1))
      sol.trace.push_back({iter, r_pri, r_dual, obj});
    if (!std::isfinite(fp_res) || r_pri > cfg.diverge_tol || !std::isfinite(obj)) {
      sol.status = SolveStatus::infeasible;
      break;
    }
    if (std::max(r_pri, r_dual) <= cfg.tol) {
      sol.status = SolveStatus::optimal;
      break;
    }
    if (last_accel && fp_res > cfg.accel_safeguard * base_res) {
      // extrapolation regressed: restart from the plain iterate
      ++sol.accel_rejects;
      vcur = v_fallback;
      mcount = 0;
      mnext = 0;
      have_prev = false;
      last_accel = false;
      continue;
    }
    if (last_accel) ++sol.accel_accepts;
    if (cfg.adapt_every > 0 && iter % adapt_interval == 0 && adapts < cfg.max_adapt) {
      // balance each block's penalty against its own residual pair; the
      // scaled dual variable U_b must track its penalty, so it is rescaled
      const double lo = cfg.rho * 1e-4, hi = cfg.rho * 1e4;
      bool changed = false;
      for (int l = 0; l < B; ++l) {
        int off = blk_off[l], len = blk_off[l + 1] - off;
        double sp = (s.segment(off, len) - X.segment(off, len)).norm();
        double sd = rho_blk[l] * (X.segment(off, len) - Xin.segment(off, len)).norm();
        double target = rho_blk[l];
        if (sp > cfg.adapt_ratio * sd)
          target = std::min(hi, rho_blk[l] * cfg.adapt_factor);
        else if (sd > cfg.adapt_ratio * sp)
          target = std::max(lo, rho_blk[l] / cfg.adapt_factor);
        if (target != rho_blk[l]) {
          U.segment(off, len) *= rho_blk[l] / target;
          rho_blk[l] = target;
          changed = true;
        }
      }
      if (changed) {
        ++adapts;
        // each refactorization is expensive; geometric backoff keeps the
        // total rebuild cost logarithmic in the iteration count
        adapt_interval *= 2;
        refresh_rhow();
        factorize();
        vcur.head(SR) = X;
        vcur.tail(SR) = U;
        mcount = 0;
        mnext = 0;
        have_prev = false;
        last_accel = false;
        continue;
      }
    }
    if (cfg.accel_restart > 0 && iter % cfg.accel_restart == 0) {
      // periodic restart; stale directions hold the iterate on flat faces
      mcount = 0;
      mnext = 0;
      have_prev = false;
    }
    if (mem > 0 && have_prev) {
      dR.col(mnext) = rvec - prev_r;
      dF.col(mnext) = Fv - prev_Fv;
      mnext = (mnext + 1) % mem;
      mcount = std::min(mcount + 1, mem);
    }
    prev_r = rvec;
    prev_Fv = Fv;
    have_prev = true;
    if (mem > 0 && mcount >= 1) {
      auto G = dR.leftCols(mcount);
      Eigen::MatrixXd gram = G.transpose() * G;
      double reg = 1e-12 * (1.0 + gram.diagonal().maxCoeff());
      gram.diagonal().array() += reg;
      Eigen::VectorXd gamma = gram.ldlt().solve(G.transpose() * rvec);
      v_fallback = Fv;
      base_res = fp_res;
      last_accel = true;
      vcur = Fv - dF.leftCols(mcount) * gamma;
    } else {
      vcur = Fv;
      last_accel = false;
    }
  }

  // polish the affine step so equality residuals sit at factorization level
  w = X - U;
  rhs.head(N) = MT * rhow.cwiseProduct(w) - c;
  rhs.tail(E) = b;
  solve_kkt(cfg.refine_steps);
  y = z.head(N);

  sol.y.resize(N);
  for (int i = 0; i < N; ++i) sol.y[i] = y[i] * D[i];
  sol.objective = c.dot(y);
  sol.primal_residual = ((M * y - X).cwiseQuotient(rowscale)).norm();
  sol.dual_residual = r_dual;
  sol.eq_residual = equality_residual(prob, sol.y);
  sol.iterations = iters_run;
  sol.penalty_updates = adapts;
  if (cfg.trace_every > 0)
    sol.trace.push_back({iters_run, sol.primal_residual, sol.dual_residual, sol.objective});
  sol.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return sol;
}

}  // namespace ratrec
