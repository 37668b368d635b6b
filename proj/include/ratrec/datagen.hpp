#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ratrec/errors.hpp"
#include "ratrec/model.hpp"

namespace ratrec {

// Reference impulse responses used throughout the experiments.
inline const std::vector<double>& filter_a() {
  static const std::vector<double> h{0.1, 0.8, 0.1};
  return h;
}
inline const std::vector<double>& filter_b() {
  static const std::vector<double> h{0.2254, 0.3361, 0.4385};
  return h;
}
inline const std::vector<double>& filter_c() {
  static const std::vector<double> h{-0.1127, -0.0683, 0.8191};
  return h;
}

struct GenConfig {
  int T = 50;
  double sparsity_fraction = 0.10;
  double noise_sigma = 0.15;
  bool random_filter = false;
  int filter_len = 3;  // only used when random_filter
  std::uint64_t rng_seed = 0;
};

/// One generator per realization index.  The Weyl-style increment keeps the
/// streams far apart without coordinating between workers.
inline std::mt19937_64 instance_stream(std::uint64_t seed, int index) {
  return std::mt19937_64(seed +
                         static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ULL);
}

/// Draws signal, filter (when random), and noise for one realization.  The
/// template carries chi, delta, lambda, bounds, and regime; T and h are
/// overwritten here.  The support has exactly round(fraction * T) entries,
/// amplitudes are uniform on [2/3, 1] with a random sign in the real regime.
inline std::pair<ModelSpec, SignalInstance> generate_instance(
    const GenConfig& cfg, const ModelSpec& tmpl, int index = 0) {
  ModelSpec m = tmpl;
  m.T = cfg.T;

  std::mt19937_64 rng = instance_stream(cfg.rng_seed, index);
  if (cfg.random_filter) {
    bool nonneg = (m.regime == Regime::nonnegative);
    std::uniform_real_distribution<double> hc(nonneg ? 0.0 : -1.0, 1.0);
    m.h.resize(cfg.filter_len);
    for (double& hi : m.h) hi = hc(rng);
  }
  m.validate();

  int n_spikes = static_cast<int>(std::lround(cfg.sparsity_fraction * cfg.T));
  std::vector<int> idx(cfg.T);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);

  SignalInstance inst;
  inst.x_true.assign(cfg.T, 0.0);
  std::uniform_real_distribution<double> amp(2.0 / 3.0, 1.0);
  std::bernoulli_distribution flip(0.5);
  for (int s = 0; s < n_spikes; ++s) {
    double a = amp(rng);
    if (m.regime == Regime::real_valued && flip(rng)) a = -a;
    inst.x_true[idx[s]] = a;
  }

  std::vector<double> v = convolve(m.h, inst.x_true);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  inst.d.resize(cfg.T);
  for (int t = 0; t < cfg.T; ++t)
    inst.d[t] = phi(v[t], m.chi) +
                (cfg.noise_sigma > 0.0 ? noise(rng) : 0.0);
  inst.noise_sigma = cfg.noise_sigma;
  inst.rng_seed = cfg.rng_seed;
  return {std::move(m), std::move(inst)};
}

}  // namespace ratrec
