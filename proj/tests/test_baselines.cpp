#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ratrec/baselines.hpp"
#include "ratrec/model.hpp"

using namespace ratrec;

namespace {

ModelSpec make_spec(std::vector<double> h, int T, Regime regime) {
  ModelSpec m;
  m.h = std::move(h);
  m.T = T;
  m.regime = regime;
  if (regime == Regime::real_valued) m.b_low = -1.0;
  return m;
}

// Dense oracle for the operator norm: materialize H, take the largest
// eigenvalue of H'H.
double dense_spectral_norm(const std::vector<double>& h, int T) {
  int L = static_cast<int>(h.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(T, T);
  for (int t = 1; t <= T; ++t)
    for (int i = 1; i <= L; ++i)
      if (t - i + 1 >= 1) H(t - 1, t - i) = h[i - 1];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.transpose() * H);
  return std::sqrt(es.eigenvalues().maxCoeff());
}

std::vector<double> random_vec(std::mt19937_64& rng, int n, double lo,
                               double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& vi : v) vi = u(rng);
  return v;
}

// One instance of measurements from a sparse signal plus Gaussian noise.
std::vector<double> noisy_data(std::mt19937_64& rng, const ModelSpec& m,
                               const std::vector<double>& x_true,
                               double sigma) {
  std::vector<double> v = convolve(m.h, x_true);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> d(m.T);
  for (int t = 0; t < m.T; ++t) d[t] = phi(v[t], m.chi) + g(rng);
  return d;
}

}  // namespace

TEST_CASE("thresholding operators", "[baselines]") {
  CHECK(hard_threshold(3.0, 2.0) == 3.0);
  CHECK(hard_threshold(1.5, 2.0) == 0.0);
  CHECK(hard_threshold(-3.0, 2.0) == -3.0);
  CHECK(hard_threshold(2.0, 2.0) == 0.0);  // tie zeroes
  CHECK(hard_threshold(-2.0, 2.0) == 0.0);
  CHECK(soft_threshold(3.0, 2.0) == 1.0);
  CHECK(soft_threshold(-0.5, 2.0) == 0.0);
  CHECK(soft_threshold(0.0, 2.0) == 0.0);
  CHECK(soft_threshold(-3.0, 2.0) == -1.0);
}

TEST_CASE("spectral norm of the band operator", "[baselines]") {
  CHECK(spectral_norm({1.0}, 7) == Catch::Approx(1.0).margin(1e-10));
  // pure delay: an isometry except for the last sample falling off the window
  CHECK(spectral_norm({0.0, 1.0}, 64) == Catch::Approx(1.0).margin(1e-8));

  CHECK(spectral_norm({0.1, 0.8, 0.1}, 200) ==
        Catch::Approx(dense_spectral_norm({0.1, 0.8, 0.1}, 200)).margin(1e-6));

  std::vector<double> hs{0.7, -0.4, 0.25, 0.1};
  CHECK(spectral_norm(hs, 57) ==
        Catch::Approx(dense_spectral_norm(hs, 57)).margin(1e-6));

  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 5; ++rep) {
    int T = 3 + static_cast<int>(rng() % 40);
    int L = 1 + static_cast<int>(rng() % 4);
    std::vector<double> h = random_vec(rng, L, -1.0, 1.0);
    CHECK(spectral_norm(h, T) ==
          Catch::Approx(dense_spectral_norm(h, T)).margin(1e-6));
  }
}

TEST_CASE("step-size bound", "[baselines]") {
  ModelSpec m = make_spec({1.0}, 4, Regime::nonnegative);
  std::vector<double> d{0.2, -1.0, 0.5, 0.0};
  CHECK(eta_max(m, d) == Catch::Approx(0.09 / 3.0).epsilon(1e-9));
  std::vector<double> zero(4, 0.0);
  CHECK(eta_max(m, zero) == Catch::Approx(m.chi * m.chi).epsilon(1e-9));
  ModelSpec half = m;
  half.chi = 0.15;
  CHECK(eta_max(half, d) == Catch::Approx(0.25 * eta_max(m, d)).epsilon(1e-9));
}

TEST_CASE("hard-thresholding iteration is stationary at a noiseless solution",
          "[baselines]") {
  ModelSpec m = make_spec({0.1, 0.8, 0.1}, 10, Regime::nonnegative);
  std::vector<double> x_true(m.T, 0.0);
  x_true[2] = 0.9;
  x_true[7] = 0.8;
  std::vector<double> v = convolve(m.h, x_true);
  std::vector<double> d(m.T);
  for (int t = 0; t < m.T; ++t) d[t] = phi(v[t], m.chi);

  IhtConfig cfg;
  REQUIRE(std::sqrt(cfg.lambda0 * eta_max(m, d)) < 0.8);
  IhtResult res = iht_solve(x_true, m, d, cfg);
  REQUIRE(res.iterations == 1);
  for (int t = 0; t < m.T; ++t)
    CHECK(res.x[t] == Catch::Approx(x_true[t]).margin(1e-12));
  for (double f : res.objective_trace)
    CHECK(f == Catch::Approx(res.objective_trace.front()).margin(1e-12));
}

TEST_CASE("hard-thresholding iteration keeps zero on zero data",
          "[baselines]") {
  ModelSpec m = make_spec({0.5, 0.5}, 6, Regime::nonnegative);
  std::vector<double> d(m.T, 0.0);
  IhtResult res = iht_solve(std::vector<double>(m.T, 0.0), m, d, IhtConfig{});
  REQUIRE(res.iterations == 1);
  for (double xt : res.x) CHECK(xt == 0.0);
}

TEST_CASE("hard-thresholding iteration descends and reaches a fixed point",
          "[baselines]") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 100; ++rep) {
    int T = 8 + static_cast<int>(rng() % 8);
    int L = 1 + static_cast<int>(rng() % 3);
    Regime regime = (rep % 2 == 0) ? Regime::nonnegative : Regime::real_valued;
    double lo = regime == Regime::nonnegative ? 0.0 : -1.0;
    ModelSpec m = make_spec(random_vec(rng, L, lo < 0.0 ? -1.0 : 0.05, 1.0), T,
                            regime);
    std::vector<double> x_true(T, 0.0);
    x_true[rng() % T] = regime == Regime::nonnegative ? 0.9 : -0.9;
    std::vector<double> d = noisy_data(rng, m, x_true, 0.15);
    std::vector<double> x0 = random_vec(rng, T, lo, 1.0);

    IhtResult res = iht_solve(x0, m, d, IhtConfig{});
    for (std::size_t n = 1; n < res.objective_trace.size(); ++n)
      REQUIRE(res.objective_trace[n] <= res.objective_trace[n - 1] + 1e-10);

    if (res.iterations < IhtConfig{}.max_iter) {
      IhtConfig one;
      one.max_iter = 1;
      IhtResult again = iht_solve(res.x, m, d, one);
      double change = 0.0;
      for (int t = 0; t < T; ++t)
        change = std::max(change, std::abs(again.x[t] - res.x[t]));
      CHECK(change <= IhtConfig{}.stop_tol);
    }
  }
}

TEST_CASE("hard-thresholding step bound is enforced", "[baselines]") {
  ModelSpec m = make_spec({0.3, 0.9}, 5, Regime::nonnegative);
  std::vector<double> d(m.T, 0.4);
  IhtConfig cfg;
  cfg.eta = 2.0 * eta_max(m, d);
  CHECK_THROWS_AS(iht_solve(std::vector<double>(m.T, 0.0), m, d, cfg),
                  StepTooLarge);
  cfg.eta = eta_max(m, d);  // the boundary value is allowed
  CHECK_NOTHROW(iht_solve(std::vector<double>(m.T, 0.0), m, d, cfg));
}

TEST_CASE("l1 surrogate solver trivial optima", "[baselines]") {
  ModelSpec m = make_spec({0.2, 0.6, 0.2}, 9, Regime::nonnegative);
  L1Config cfg;
  L1Result res = l1_solve(m, std::vector<double>(m.T, 0.0), cfg);
  CHECK(res.converged);
  for (double xt : res.x) CHECK(xt == 0.0);

  // identity operator, chi = 1: zero survives when lambda1 dominates 2|d|
  ModelSpec id = make_spec({1.0}, 5, Regime::nonnegative);
  id.chi = 1.0;
  std::vector<double> d{0.1, -0.2, 0.05, 0.0, 0.15};
  L1Config big;
  big.lambda1 = 0.5;
  L1Result zr = l1_solve(id, d, big);
  CHECK(zr.converged);
  for (double xt : zr.x) CHECK(xt == 0.0);
}

TEST_CASE("l1 surrogate solver reaches the convex optimum", "[baselines]") {
  std::mt19937_64 rng(771);
  for (int rep = 0; rep < 10; ++rep) {
    int T = 10 + static_cast<int>(rng() % 10);
    int L = 1 + static_cast<int>(rng() % 4);
    ModelSpec m = make_spec(random_vec(rng, L, -1.0, 1.0), T,
                            Regime::real_valued);
    std::vector<double> x_true(T, 0.0);
    x_true[rng() % T] = 0.8;
    std::vector<double> d = noisy_data(rng, m, x_true, 0.15);

    L1Config cfg;
    L1Result res = l1_solve(m, d, cfg);
    REQUIRE(res.converged);
    CHECK(l1_optimality_residual(m, d, res.x, cfg.lambda1) <= 1e-6);

    double jx = eval_J_l1(m, d, res.x, cfg.lambda1);
    for (int probe = 0; probe < 20; ++probe) {
      std::vector<double> z = random_vec(rng, T, -1.0, 1.0);
      double jz = eval_J_l1(m, d, z, cfg.lambda1);
      CHECK(jx <= jz + 1e-6 * (1.0 + std::abs(jz)));
    }
  }
}

TEST_CASE("accelerated and plain proximal runs agree", "[baselines]") {
  std::mt19937_64 rng(515);
  for (int rep = 0; rep < 3; ++rep) {
    int T = 12;
    ModelSpec m = make_spec(random_vec(rng, 3, -1.0, 1.0), T,
                            Regime::real_valued);
    std::vector<double> x_true(T, 0.0);
    x_true[3] = -0.7;
    x_true[9] = 0.9;
    std::vector<double> d = noisy_data(rng, m, x_true, 0.1);

    L1Config cfg;
    L1Result fast = l1_solve(m, d, cfg);
    REQUIRE(fast.converged);

    // plain (unaccelerated) proximal gradient, long run
    double hs = spectral_norm(m.h, T);
    double step = m.chi * m.chi / (2.0 * hs * hs);
    double a = cfg.lambda1 * step;
    std::vector<double> x(T, 0.0);
    for (int n = 0; n < 200000; ++n) {
      std::vector<double> v = convolve(m.h, x);
      std::vector<double> z(T);
      for (int t = 0; t < T; ++t) z[t] = (2.0 / m.chi) * (v[t] / m.chi - d[t]);
      std::vector<double> g = convolve_adjoint(m.h, z);
      for (int t = 0; t < T; ++t)
        x[t] = soft_threshold(x[t] - step * g[t], a);
    }
    CHECK(eval_J_l1(m, d, fast.x, cfg.lambda1) ==
          Catch::Approx(eval_J_l1(m, d, x, cfg.lambda1)).margin(1e-8));
  }
}
