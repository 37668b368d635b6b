#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratrec/baselines.hpp"
#include "ratrec/datagen.hpp"
#include "ratrec/errors.hpp"
#include "ratrec/model.hpp"
#include "ratrec/sdp_solver.hpp"

namespace ratrec {

using nlohmann::json;

inline Regime regime_from_string(const std::string& s) {
  if (s == "nonnegative") return Regime::nonnegative;
  if (s == "real_valued") return Regime::real_valued;
  throw InvalidModel("unknown regime: " + s);
}

inline void to_json(json& j, const ModelSpec& m) {
  j = json{{"h", m.h},
           {"chi", m.chi},
           {"delta", m.delta},
           {"lambda", m.lambda},
           {"bounds", {m.b_low, m.b_high}},
           {"regime", to_string(m.regime)},
           {"T", m.T}};
}

inline void from_json(const json& j, ModelSpec& m) {
  j.at("h").get_to(m.h);
  j.at("chi").get_to(m.chi);
  j.at("delta").get_to(m.delta);
  j.at("lambda").get_to(m.lambda);
  m.b_low = j.at("bounds").at(0).get<double>();
  m.b_high = j.at("bounds").at(1).get<double>();
  m.regime = regime_from_string(j.at("regime").get<std::string>());
  j.at("T").get_to(m.T);
}

inline void to_json(json& j, const SignalInstance& inst) {
  j = json{{"x_true", inst.x_true},
           {"d", inst.d},
           {"noise_sigma", inst.noise_sigma},
           {"rng_seed", inst.rng_seed}};
}

inline void from_json(const json& j, SignalInstance& inst) {
  j.at("x_true").get_to(inst.x_true);
  j.at("d").get_to(inst.d);
  j.at("noise_sigma").get_to(inst.noise_sigma);
  j.at("rng_seed").get_to(inst.rng_seed);
}

// Config blocks tolerate missing keys so config files can stay minimal.
namespace detail {
template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}
}  // namespace detail

inline void to_json(json& j, const GenConfig& c) {
  j = json{{"T", c.T},
           {"sparsity_fraction", c.sparsity_fraction},
           {"noise_sigma", c.noise_sigma},
           {"random_filter", c.random_filter},
           {"filter_len", c.filter_len},
           {"rng_seed", c.rng_seed}};
}

inline void from_json(const json& j, GenConfig& c) {
  detail::maybe(j, "T", c.T);
  detail::maybe(j, "sparsity_fraction", c.sparsity_fraction);
  detail::maybe(j, "noise_sigma", c.noise_sigma);
  detail::maybe(j, "random_filter", c.random_filter);
  detail::maybe(j, "filter_len", c.filter_len);
  detail::maybe(j, "rng_seed", c.rng_seed);
}

inline void to_json(json& j, const IhtConfig& c) {
  j = json{{"lambda0", c.lambda0},
           {"eta", c.eta},
           {"max_iter", c.max_iter},
           {"stop_tol", c.stop_tol}};
}

inline void from_json(const json& j, IhtConfig& c) {
  detail::maybe(j, "lambda0", c.lambda0);
  detail::maybe(j, "eta", c.eta);
  detail::maybe(j, "max_iter", c.max_iter);
  detail::maybe(j, "stop_tol", c.stop_tol);
}

inline void to_json(json& j, const L1Config& c) {
  j = json{{"lambda1", c.lambda1},
           {"max_iter", c.max_iter},
           {"stop_tol", c.stop_tol},
           {"opt_tol", c.opt_tol}};
}

inline void from_json(const json& j, L1Config& c) {
  detail::maybe(j, "lambda1", c.lambda1);
  detail::maybe(j, "max_iter", c.max_iter);
  detail::maybe(j, "stop_tol", c.stop_tol);
  detail::maybe(j, "opt_tol", c.opt_tol);
}

inline void to_json(json& j, const SolverConfig& c) {
  j = json{{"max_iter", c.max_iter},
           {"tol", c.tol},
           {"rho", c.rho},
           {"over_relax", c.over_relax},
           {"accel_memory", c.accel_memory},
           {"trace_every", c.trace_every}};
}

inline void from_json(const json& j, SolverConfig& c) {
  detail::maybe(j, "max_iter", c.max_iter);
  detail::maybe(j, "tol", c.tol);
  detail::maybe(j, "rho", c.rho);
  detail::maybe(j, "over_relax", c.over_relax);
  detail::maybe(j, "accel_memory", c.accel_memory);
  detail::maybe(j, "trace_every", c.trace_every);
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

/// Shortest round-trip decimal form, identical bytes on every run.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == v) {
    // try to shorten while the value still survives the round trip
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      double b2 = 0.0;
      std::sscanf(shorter, "%lg", &b2);
      if (b2 == v) return shorter;
    }
  }
  return buf;
}

struct CsvWriter {
  std::ofstream out;

  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out(path) {
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
      out << (i ? "," : "") << header[i];
    out << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out << (i ? "," : "") << cells[i];
    out << "\n";
  }
};

}  // namespace ratrec
