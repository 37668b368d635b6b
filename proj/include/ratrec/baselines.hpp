#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ratrec/errors.hpp"
#include "ratrec/model.hpp"

namespace ratrec {

/// Keeps v strictly above the threshold, zeroes everything else (ties to 0).
inline double hard_threshold(double v, double a) {
  return std::abs(v) > a ? v : 0.0;
}

inline double soft_threshold(double v, double a) {
  double m = std::abs(v) - a;
  if (m <= 0.0) return 0.0;
  return v < 0.0 ? -m : m;
}

/// Spectral norm of the causal banded Toeplitz operator of h acting on R^T,
/// by power iteration on H'H through convolve / convolve_adjoint.  The
/// successive-change stop is deliberately tight: near the band edge the top
/// eigenvalues cluster and a loose stop would exit on a slow tail.
inline double spectral_norm(const std::vector<double>& h, int T) {
  std::mt19937_64 gen(0x5150ULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(T);
  for (double& vi : v) vi = unif(gen);

  double rho = 0.0;
  int quiet = 0;
  const int max_iter = 100000;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> hv = convolve(h, v);
    double num = 0.0, den = 0.0;
    for (int t = 0; t < T; ++t) num += hv[t] * hv[t];
    for (int t = 0; t < T; ++t) den += v[t] * v[t];
    if (den == 0.0) return 0.0;
    double rho_next = num / den;
    if (std::abs(rho_next - rho) <= 1e-15 * std::max(1.0, rho_next)) {
      if (++quiet >= 5) { rho = rho_next; break; }
    } else {
      quiet = 0;
    }
    rho = rho_next;
    v = convolve_adjoint(h, hv);
    double nrm = 0.0;
    for (double vi : v) nrm += vi * vi;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;
    for (double& vi : v) vi /= nrm;
  }
  return std::sqrt(rho);
}

/// Largest valid step for the hard-thresholding iteration:
///   eta_max = chi^2 / (||H||_S^2 (1 + 2 max_t |d_t|)).
inline double eta_max(const ModelSpec& m, const std::vector<double>& d) {
  double hs = spectral_norm(m.h, m.T);
  double dmax = 0.0;
  for (double dt : d) dmax = std::max(dmax, std::abs(dt));
  return m.chi * m.chi / (hs * hs * (1.0 + 2.0 * dmax));
}

struct IhtConfig {
  double lambda0 = 0.15;
  double eta = 0.0;  // <= 0 means: use eta_max(spec, d)
  int max_iter = 10000;
  double stop_tol = 1e-10;
};

struct IhtResult {
  std::vector<double> x;
  std::vector<double> objective_trace;  // F(x^(n)) including the start point
  int iterations = 0;
};

/// F(x) = ||d - phi(Hx)||^2 + lambda0 ||x||_0.  The counting term assumes
/// exact zeros, which the hard threshold produces.
inline double eval_F_l0(const ModelSpec& m, const std::vector<double>& d,
                        const std::vector<double>& x, double lambda0) {
  double f = eval_fit(m, d, x);
  for (double xt : x)
    if (xt != 0.0) f += lambda0;
  return f;
}

/// Proximal gradient on the l0-penalized nonlinear criterion:
///   x+ = HardThreshold_{sqrt(lambda0 eta)}( x - eta H' Diag(phi'(Hx)) (phi(Hx) - d) ).
/// The step direction is half the gradient of the squared fit, and the
/// threshold matches: the update is exact proximal gradient on F/2, whose
/// smooth part has Lipschitz constant 1/eta_max, so F descends for any
/// eta in (0, eta_max].
inline IhtResult iht_solve(const std::vector<double>& x0, const ModelSpec& m,
                           const std::vector<double>& d, const IhtConfig& cfg) {
  double emax = eta_max(m, d);
  double eta = cfg.eta > 0.0 ? cfg.eta : emax;
  if (eta > emax * (1.0 + 1e-12))
    throw StepTooLarge("iht step exceeds the Lipschitz bound");
  double thr = std::sqrt(cfg.lambda0 * eta);

  IhtResult res;
  res.x = x0;
  res.objective_trace.push_back(eval_F_l0(m, d, res.x, cfg.lambda0));
  for (int n = 0; n < cfg.max_iter; ++n) {
    std::vector<double> v = convolve(m.h, res.x);
    std::vector<double> z(m.T);
    for (int t = 0; t < m.T; ++t)
      z[t] = phi_deriv(v[t], m.chi) * (phi(v[t], m.chi) - d[t]);
    std::vector<double> g = convolve_adjoint(m.h, z);
    double change = 0.0;
    std::vector<double> next(m.T);
    for (int t = 0; t < m.T; ++t) {
      next[t] = hard_threshold(res.x[t] - eta * g[t], thr);
      change = std::max(change, std::abs(next[t] - res.x[t]));
    }
    res.x.swap(next);
    res.objective_trace.push_back(eval_F_l0(m, d, res.x, cfg.lambda0));
    res.iterations = n + 1;
    if (change <= cfg.stop_tol) break;
  }
  return res;
}

struct L1Config {
  double lambda1 = 0.15;
  int max_iter = 20000;
  double stop_tol = 1e-10;   // iterate-change stall guard
  double opt_tol = 1e-6;     // subgradient optimality target
};

struct L1Result {
  std::vector<double> x;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;  // optimality residual within opt_tol at exit
};

/// Distance of -grad to lambda1 * subdifferential of the l1 norm, inf-norm.
/// Zero exactly at minimizers of J_l1.
inline double l1_optimality_residual(const ModelSpec& m,
                                     const std::vector<double>& d,
                                     const std::vector<double>& x,
                                     double lambda1) {
  // grad of ||d - (1/chi) Hx||^2 is (2/chi) H'((1/chi) Hx - d)
  std::vector<double> v = convolve(m.h, x);
  std::vector<double> z(m.T);
  for (int t = 0; t < m.T; ++t) z[t] = (2.0 / m.chi) * (v[t] / m.chi - d[t]);
  std::vector<double> g = convolve_adjoint(m.h, z);
  double r = 0.0;
  for (int t = 0; t < m.T; ++t) {
    if (x[t] != 0.0)
      r = std::max(r, std::abs(g[t] + lambda1 * (x[t] > 0.0 ? 1.0 : -1.0)));
    else
      r = std::max(r, std::max(0.0, std::abs(g[t]) - lambda1));
  }
  return r;
}

/// Accelerated proximal gradient (FISTA) on the linearized criterion
///   ||d - (1/chi) Hx||^2 + lambda1 ||x||_1
/// with the constant step 1/Lip, Lip = 2 ||H||_S^2 / chi^2.
inline L1Result l1_solve(const ModelSpec& m, const std::vector<double>& d,
                         const L1Config& cfg) {
  double hs = spectral_norm(m.h, m.T);
  double lip = 2.0 * hs * hs / (m.chi * m.chi);
  double step = 1.0 / lip;
  double a = cfg.lambda1 * step;

  L1Result res;
  res.x.assign(m.T, 0.0);
  std::vector<double> x_prev = res.x;
  std::vector<double> y = res.x;
  double tk = 1.0;
  res.objective_trace.push_back(eval_J_l1(m, d, res.x, cfg.lambda1));
  for (int n = 0; n < cfg.max_iter; ++n) {
    std::vector<double> v = convolve(m.h, y);
    std::vector<double> z(m.T);
    for (int t = 0; t < m.T; ++t) z[t] = (2.0 / m.chi) * (v[t] / m.chi - d[t]);
    std::vector<double> g = convolve_adjoint(m.h, z);

    x_prev = res.x;
    double change = 0.0;
    for (int t = 0; t < m.T; ++t) {
      res.x[t] = soft_threshold(y[t] - step * g[t], a);
      change = std::max(change, std::abs(res.x[t] - x_prev[t]));
    }
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    for (int t = 0; t < m.T; ++t)
      y[t] = res.x[t] + ((tk - 1.0) / t_next) * (res.x[t] - x_prev[t]);
    tk = t_next;

    res.objective_trace.push_back(eval_J_l1(m, d, res.x, cfg.lambda1));
    res.iterations = n + 1;
    if (l1_optimality_residual(m, d, res.x, cfg.lambda1) <= cfg.opt_tol) break;
    if (change <= cfg.stop_tol) break;
  }
  res.converged =
      l1_optimality_residual(m, d, res.x, cfg.lambda1) <= cfg.opt_tol;
  return res;
}

}  // namespace ratrec
