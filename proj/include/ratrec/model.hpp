#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ratrec/polynomial.hpp"

namespace ratrec {

enum class Regime { nonnegative, real_valued };

inline std::string to_string(Regime r) {
  return r == Regime::nonnegative ? "nonnegative" : "real_valued";
}

/// Observation model: d = phi(H x) + noise, with H the causal banded Toeplitz
/// operator of the filter h, phi the saturation u -> u/(chi+|u|) applied
/// componentwise, and a penalized criterion
///   J(x) = ||d - phi(Hx)||^2 + lambda * sum_t |x_t|/(delta+|x_t|)
/// minimized over the box [b_low, b_high]^T.
struct ModelSpec {
  std::vector<double> h;
  double chi = 0.3;
  double delta = 0.01;
  double lambda = 0.15;
  double b_low = 0.0;
  double b_high = 1.0;
  Regime regime = Regime::nonnegative;
  int T = 0;

  int L() const { return static_cast<int>(h.size()); }

  void validate() const {
    if (T < 1) throw InvalidModel("T must be >= 1");
    if (h.empty()) throw InvalidModel("filter h must be nonempty");
    if (!(chi > 0.0)) throw InvalidModel("chi must be positive");
    if (!(delta > 0.0)) throw InvalidModel("delta must be positive");
    if (lambda < 0.0) throw InvalidModel("lambda must be nonnegative");
    if (!(b_low < b_high)) throw InvalidModel("bounds must satisfy b_low < b_high");
    if (regime == Regime::nonnegative) {
      if (b_low < 0.0)
        throw InvalidRegime("nonnegative regime requires b_low >= 0");
      for (double hi : h)
        if (hi < 0.0)
          throw InvalidRegime("nonnegative regime requires a nonnegative filter");
    }
  }
};

struct SignalInstance {
  std::vector<double> x_true;
  std::vector<double> d;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
};

inline double phi(double u, double chi) { return u / (chi + std::abs(u)); }

/// Derivative of phi; at u = 0 both one-sided limits equal 1/chi.
inline double phi_deriv(double u, double chi) {
  double a = chi + std::abs(u);
  return chi / (a * a);
}

inline double psi(double xi, double delta) {
  double a = std::abs(xi);
  return a / (delta + a);
}

/// v_t = sum_{i=1..L} h_i x_{t-i+1}, with x_s = 0 outside 1..T.
inline std::vector<double> convolve(const std::vector<double>& h,
                                    const std::vector<double>& x) {
  int T = static_cast<int>(x.size());
  int L = static_cast<int>(h.size());
  std::vector<double> v(T, 0.0);
  for (int t = 1; t <= T; ++t) {
    double s = 0.0;
    for (int i = 1; i <= L; ++i) {
      int src = t - i + 1;
      if (src >= 1) s += h[i - 1] * x[src - 1];
    }
    v[t - 1] = s;
  }
  return v;
}

/// Adjoint of convolve: (H' z)_s = sum_{i} h_i z_{s+i-1} for s+i-1 <= T.
inline std::vector<double> convolve_adjoint(const std::vector<double>& h,
                                            const std::vector<double>& z) {
  int T = static_cast<int>(z.size());
  int L = static_cast<int>(h.size());
  std::vector<double> g(T, 0.0);
  for (int s = 1; s <= T; ++s) {
    double a = 0.0;
    for (int i = 1; i <= L; ++i) {
      int dst = s + i - 1;
      if (dst <= T) a += h[i - 1] * z[dst - 1];
    }
    g[s - 1] = a;
  }
  return g;
}

inline double eval_fit(const ModelSpec& m, const std::vector<double>& d,
                       const std::vector<double>& x) {
  std::vector<double> v = convolve(m.h, x);
  double f = 0.0;
  for (int t = 0; t < m.T; ++t) {
    double r = d[t] - phi(v[t], m.chi);
    f += r * r;
  }
  return f;
}

inline double eval_J(const ModelSpec& m, const std::vector<double>& d,
                     const std::vector<double>& x) {
  double f = eval_fit(m, d, x);
  for (int t = 0; t < m.T; ++t) f += m.lambda * psi(x[t], m.delta);
  return f;
}

/// Surrogate criterion with the saturation linearized at 0 (slope 1/chi) and
/// an l1 penalty: ||d - (1/chi) Hx||^2 + lambda1 ||x||_1.
inline double eval_J_l1(const ModelSpec& m, const std::vector<double>& d,
                        const std::vector<double>& x, double lambda1) {
  std::vector<double> v = convolve(m.h, x);
  double f = 0.0;
  for (int t = 0; t < m.T; ++t) {
    double r = d[t] - v[t] / m.chi;
    f += r * r;
  }
  for (int t = 0; t < m.T; ++t) f += lambda1 * std::abs(x[t]);
  return f;
}

/// Exact (factor-2) gradient of the fit term x -> ||d - phi(Hx)||^2.
inline std::vector<double> grad_fit(const ModelSpec& m, const std::vector<double>& d,
                                    const std::vector<double>& x) {
  std::vector<double> v = convolve(m.h, x);
  std::vector<double> z(m.T);
  for (int t = 0; t < m.T; ++t)
    z[t] = 2.0 * phi_deriv(v[t], m.chi) * (phi(v[t], m.chi) - d[t]);
  return convolve_adjoint(m.h, z);
}

/// Global variable ids for the polynomial encoding.  Signal variables come
/// first, then (real-valued regime) the lifted |Hx| and |x| variables, then
/// the zero-pinned slots that pad the left edge of each convolution window.
///   x_t  (t = 1..T)       -> t-1
///   w_t  (t = 1..T, real) -> T + t - 1
///   u_t  (t = 1..T, real) -> 2T + t - 1
///   pad x_{1-j} (j = 1..L-1) -> base + j - 1, base = T or 3T
class VariableRegistry {
 public:
  VariableRegistry(int T, int L, Regime regime) : T_(T), L_(L), regime_(regime) {}

  int x(int t) const { return t - 1; }
  int w(int t) const { return T_ + t - 1; }
  int u(int t) const { return 2 * T_ + t - 1; }

  int pad_base() const { return regime_ == Regime::real_valued ? 3 * T_ : T_; }

  /// Variable standing in for x_s with s <= 0; constrained to zero.
  int pad(int s) const { return pad_base() + (1 - s) - 1; }

  bool is_pad(int id) const { return id >= pad_base(); }

  std::string name(int id) const {
    if (id < T_) return "x" + std::to_string(id + 1);
    if (regime_ == Regime::real_valued && id < 2 * T_)
      return "w" + std::to_string(id - T_ + 1);
    if (regime_ == Regime::real_valued && id < 3 * T_)
      return "u" + std::to_string(id - 2 * T_ + 1);
    return "x" + std::to_string(-(id - pad_base()));
  }

  int T() const { return T_; }
  int L() const { return L_; }
  Regime regime() const { return regime_; }

 private:
  int T_, L_;
  Regime regime_;
};

/// One fraction of the criterion: numerator / denominator with the listed
/// support variables (lifted variables included in the real-valued regime).
struct RationalTerm {
  Polynomial num;
  Polynomial den;
  std::vector<int> clique_vars;
};

struct SplitTerms {
  std::vector<RationalTerm> fit;      // one per t
  std::vector<RationalTerm> penalty;  // one per t
};

/// Active support of v_t: {max(1, t-L+1), .., t}.
inline std::vector<int> window_support(int t, int L) {
  std::vector<int> s;
  for (int j = std::max(1, t - L + 1); j <= t; ++j) s.push_back(j);
  return s;
}

/// v_t as a polynomial in the signal variables (out-of-range taps dropped).
inline Polynomial conv_poly(const ModelSpec& m, const VariableRegistry& reg, int t) {
  Polynomial v;
  for (int i = 1; i <= m.L(); ++i) {
    int src = t - i + 1;
    if (src >= 1) v += m.h[i - 1] * Polynomial::variable(reg.x(src));
  }
  return v;
}

/// Split J into 2T rational fractions.  In the nonnegative regime the
/// saturation and penalty absolute values resolve to the arguments
/// themselves; in the real-valued regime they are replaced by the lifted
/// variables w_t = |v_t| and u_t = |x_t|, whose defining equations are added
/// at the relaxation layer.
inline SplitTerms build_split_terms(const ModelSpec& m, const std::vector<double>& d) {
  m.validate();
  if (static_cast<int>(d.size()) != m.T)
    throw InvalidModel("data length does not match T");
  VariableRegistry reg(m.T, m.L(), m.regime);
  SplitTerms out;
  for (int t = 1; t <= m.T; ++t) {
    Polynomial v = conv_poly(m, reg, t);
    Polynomial sat = m.regime == Regime::nonnegative
                         ? v
                         : Polynomial::variable(reg.w(t));
    Polynomial e = Polynomial::constant(d[t - 1] * m.chi) + d[t - 1] * sat - v;
    Polynomial den = (Polynomial::constant(m.chi) + sat).pow(2);
    RationalTerm fit;
    fit.num = e * e;
    fit.den = den;
    for (int j : window_support(t, m.L())) fit.clique_vars.push_back(reg.x(j));
    if (m.regime == Regime::real_valued) fit.clique_vars.push_back(reg.w(t));
    out.fit.push_back(std::move(fit));

    RationalTerm pen;
    if (m.regime == Regime::nonnegative) {
      pen.num = m.lambda * Polynomial::variable(reg.x(t));
      pen.den = Polynomial::constant(m.delta) + Polynomial::variable(reg.x(t));
      pen.clique_vars = {reg.x(t)};
    } else {
      pen.num = m.lambda * Polynomial::variable(reg.u(t));
      pen.den = Polynomial::constant(m.delta) + Polynomial::variable(reg.u(t));
      pen.clique_vars = {reg.x(t), reg.u(t)};
    }
    out.penalty.push_back(std::move(pen));
  }
  return out;
}

}  // namespace ratrec
