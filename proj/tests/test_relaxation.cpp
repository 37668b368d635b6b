#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "ratrec/relaxation.hpp"

using namespace ratrec;

namespace {

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

ModelSpec make_spec(Regime regime, std::vector<double> h, int T) {
  ModelSpec m;
  m.h = std::move(h);
  m.T = T;
  m.regime = regime;
  if (regime == Regime::real_valued) m.b_low = -1.0;
  return m;
}

std::vector<double> rand_data_vec(std::mt19937_64& rng, int T) {
  std::uniform_real_distribution<double> u(-0.6, 0.9);
  std::vector<double> d(T);
  for (double& v : d) v = u(rng);
  return d;
}

double eq_residual(const SdpProblem& prob, const std::vector<double>& y) {
  double worst = 0.0;
  for (const EqRow& r : prob.equalities) {
    double s = -r.rhs;
    for (const EqTerm& t : r.terms) s += t.coeff * y[t.pos];
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

}  // namespace

TEST_CASE("clique layout for a short nonnegative chain", "[relaxation]") {
  ModelSpec m = make_spec(Regime::nonnegative, {0.5, 0.25}, 3);
  CliqueStructure cs = build_cliques(m);
  REQUIRE(cs.cliques.size() == 6);
  CHECK(cs.cliques[0] == std::vector<int>{0});
  CHECK(cs.cliques[1] == std::vector<int>{0, 1});
  CHECK(cs.cliques[2] == std::vector<int>{1, 2});
  CHECK(cs.cliques[3] == std::vector<int>{0});
  CHECK(cs.cliques[4] == std::vector<int>{1});
  CHECK(cs.cliques[5] == std::vector<int>{2});
  // first window pads the missing left tap; pad ids start at T
  CHECK(cs.windows[0] == std::vector<int>{0, 3});
  CHECK(cs.windows[1] == std::vector<int>{0, 1});
  CHECK(cs.windows[2] == std::vector<int>{1, 2});
  REQUIRE(cs.overlaps.size() == 2);
  CHECK(cs.overlaps[0] == std::vector<int>{0});
  CHECK(cs.overlaps[1] == std::vector<int>{1});
  CHECK(cs.side_conditions.empty());
  REQUIRE(cs.variables.size() == 4);
  CHECK(cs.variables[3].pad);
  CHECK(cs.variables[3].lo == 0.0);
  CHECK(cs.variables[3].hi == 0.0);
}

TEST_CASE("lifted cliques in the real-valued regime", "[relaxation]") {
  ModelSpec m = make_spec(Regime::real_valued, {0.4, -0.3, 0.2}, 4);
  CliqueStructure cs = build_cliques(m);
  VariableRegistry reg = cs.registry();
  // fit clique t=4: {x2,x3,x4,w4}
  CHECK(cs.cliques[3] == std::vector<int>{reg.x(2), reg.x(3), reg.x(4), reg.w(4)});
  // penalty clique t=2: {x2,u2}
  CHECK(cs.cliques[4 + 1] == std::vector<int>{reg.x(2), reg.u(2)});
  // side conditions: w_t^2 = v_t^2 and u_t^2 = x_t^2 for each t
  REQUIRE(cs.side_conditions.size() == 8);
  std::map<int, double> pt;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(4);
  for (double& v : x) v = u(rng);
  std::vector<double> hv = convolve(m.h, x);
  for (int t = 1; t <= 4; ++t) {
    pt[reg.x(t)] = x[t - 1];
    pt[reg.w(t)] = std::abs(hv[t - 1]);
    pt[reg.u(t)] = std::abs(x[t - 1]);
  }
  for (int j = 1; j <= 2; ++j) pt[reg.pad(1 - j)] = 0.0;
  for (const auto& [mi, poly] : cs.side_conditions)
    CHECK(poly.eval(pt) == Catch::Approx(0.0).margin(1e-12));
  // lifted bounds: w in [0, |h|_1], u in [0, 1]
  CHECK(cs.variables[reg.w(1)].hi == Catch::Approx(0.9));
  CHECK(cs.variables[reg.u(1)].hi == 1.0);
}

TEST_CASE("running intersection holds across sizes and regimes", "[relaxation]") {
  for (Regime regime : {Regime::nonnegative, Regime::real_valued}) {
    for (int T = 1; T <= 12; ++T) {
      for (int L = 1; L <= 4; ++L) {
        std::vector<double> h(L, 0.3);
        if (regime == Regime::real_valued) h[0] = -0.3;
        CliqueStructure cs = build_cliques(make_spec(regime, h, T));
        CHECK(verify_rip(cs.cliques));
        CHECK(verify_rip(cs.windows));
        // independent check of the chain shape: a fit clique's overlap with
        // everything before it sits in the previous fit clique; a penalty
        // clique's only earlier contact is x_t inside fit clique t
        for (int t = 2; t <= T; ++t) {
          for (int v : cs.cliques[t - 1]) {
            bool seen_before = false;
            for (int s = 0; s < t - 1; ++s)
              for (int vv : cs.cliques[s])
                if (vv == v) seen_before = true;
            if (seen_before)
              CHECK(std::count(cs.cliques[t - 2].begin(), cs.cliques[t - 2].end(), v) == 1);
          }
        }
      }
    }
  }
  CHECK_FALSE(verify_rip({{0, 1}, {2, 3}, {0, 2}}));
}

TEST_CASE("scalar assembly freeze", "[relaxation]") {
  ModelSpec m = make_spec(Regime::nonnegative, {1.0}, 1);
  SdpProblem prob = assemble_sparse(m, {0.5}, 1);
  SizeReport sr = size_report(prob);
  CHECK(sr.n_moments == 6);
  CHECK(sr.n_equalities == 3);  // two normalizations + one coupling shift
  CHECK(sr.block_sizes == std::vector<int>{2, 1, 2, 1});
  CHECK(sr.measure_basis_sizes == std::vector<int>{3, 3});
  // objective reads the two numerators
  CHECK(prob.objective == std::vector<double>{0.0225, -0.15, 0.25, 0.0, 0.15, 0.0});
  // coupling row ties the weighted masses together
  const EqRow& cpl = prob.equalities[2];
  REQUIRE(cpl.terms.size() == 5);
  CHECK(cpl.terms[0].pos == 0);
  CHECK(cpl.terms[0].coeff == Catch::Approx(-0.09));
  CHECK(cpl.terms[4].pos == 4);
  CHECK(cpl.terms[4].coeff == 1.0);
  CHECK(cpl.rhs == 0.0);
}

TEST_CASE("moment counts match the closed forms", "[relaxation]") {
  std::mt19937_64 rng(11);
  for (int T : {1, 2, 3, 5, 8}) {
    for (int L : {1, 2, 3, 4}) {
      for (int k : {1, 2, 3}) {
        std::vector<double> h(L, 0.2);
        ModelSpec m = make_spec(Regime::nonnegative, h, T);
        SdpProblem prob = assemble_sparse(m, rand_data_vec(rng, T), k);
        SizeReport sr = size_report(prob);
        CHECK(sr.n_moments ==
              T * (binom(L + 2 * k, 2 * k) + 2 * k + 1));
        CHECK(sr.max_block == binom(L + k, k));
      }
    }
  }
  // real-valued: fit measures carry the lifted w, penalties carry u
  for (int k : {1, 2}) {
    int T = 4, L = 3;
    std::vector<double> h{0.3, -0.2, 0.5};
    SdpProblem prob = assemble_sparse(make_spec(Regime::real_valued, h, T),
                                      rand_data_vec(rng, T), k);
    CHECK(size_report(prob).n_moments ==
          T * (binom(L + 1 + 2 * k, 2 * k) + binom(2 + 2 * k, 2 * k)));
    CHECK(size_report(prob).max_block == binom(L + 1 + k, k));
  }
}

TEST_CASE("order validation", "[relaxation]") {
  ModelSpec m = make_spec(Regime::nonnegative, {0.5, 0.2}, 3);
  CHECK_THROWS_AS(assemble_sparse(m, {0.1, 0.1, 0.1}, 0), OrderTooSmall);
  CHECK_NOTHROW(assemble_sparse(m, {0.1, 0.1, 0.1}, 1));
}

TEST_CASE("dirac moments are feasible and carry the criterion value", "[relaxation]") {
  std::mt19937_64 rng(404);
  for (Regime regime : {Regime::nonnegative, Regime::real_valued}) {
    std::vector<double> h{0.35, regime == Regime::nonnegative ? 0.2 : -0.2, 0.15};
    ModelSpec m = make_spec(regime, h, 5);
    std::vector<double> d = rand_data_vec(rng, 5);
    for (int k : {1, 2}) {
      SdpProblem prob = assemble_sparse(m, d, k);
      std::uniform_real_distribution<double> u(m.b_low, m.b_high);
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> x(m.T);
        for (double& v : x) v = u(rng);
        std::vector<double> y = dirac_moments(prob, x);
        CHECK(eq_residual(prob, y) <= 1e-10);
        CHECK(objective_value(prob, y) == Catch::Approx(eval_J(m, d, x)).margin(1e-10));
        // extraction reads the point back
        std::vector<double> back = extract_estimate(prob, y);
        for (int t = 0; t < m.T; ++t)
          CHECK(back[t] == Catch::Approx(x[t]).margin(1e-10));
      }
    }
  }
}

TEST_CASE("extraction un-weights the penalty denominator", "[relaxation]") {
  // q-weighted dirac at 0.5 with delta = 0.01: first moments 0.5/0.51 and
  // 0.25/0.51 recombine to 0.5 exactly
  ModelSpec m = make_spec(Regime::nonnegative, {1.0}, 1);
  SdpProblem prob = assemble_sparse(m, {0.4}, 1);
  std::vector<double> y = dirac_moments(prob, {0.5});
  CHECK(y[3] == Catch::Approx(1.0 / 0.51).margin(1e-14));
  CHECK(y[4] == Catch::Approx(0.5 / 0.51).margin(1e-14));
  std::vector<double> x = extract_estimate(prob, y);
  CHECK(x[0] == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("dense assembly matches sparse for a single sample", "[relaxation]") {
  ModelSpec m = make_spec(Regime::nonnegative, {0.8}, 1);
  std::vector<double> d{0.3};
  for (int k : {1, 2}) {
    SdpProblem sp = assemble_sparse(m, d, k);
    SdpProblem dn = assemble_dense(m, d, k);
    CHECK(size_report(sp).n_moments == size_report(dn).n_moments);
    CHECK(size_report(sp).n_equalities == size_report(dn).n_equalities);
    CHECK(size_report(sp).block_sizes == size_report(dn).block_sizes);
    CHECK(sp.objective == dn.objective);
    std::ostringstream a, b;
    export_problem(sp, a);
    export_problem(dn, b);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("dense basis covers the full variable set", "[relaxation]") {
  std::mt19937_64 rng(21);
  for (int T : {2, 3, 4}) {
    for (int k : {1, 2}) {
      ModelSpec m = make_spec(Regime::nonnegative, {0.5, 0.3}, T);
      SdpProblem prob = assemble_dense(m, rand_data_vec(rng, T), k);
      SizeReport sr = size_report(prob);
      for (int s : sr.measure_basis_sizes) CHECK(s == binom(T + 2 * k, 2 * k));
      CHECK(sr.n_moments == 2 * T * binom(T + 2 * k, 2 * k));
    }
  }
  // cap guard
  ModelSpec big = make_spec(Regime::nonnegative, {0.5, 0.3}, 20);
  CHECK_THROWS_AS(assemble_dense(big, std::vector<double>(20, 0.1), 2, 1000),
                  SizeCapExceeded);
}

TEST_CASE("dense tightens the measure couplings", "[relaxation]") {
  // with two samples the dense overlap family spans both variables
  ModelSpec m = make_spec(Regime::nonnegative, {0.5, 0.3}, 2);
  std::vector<double> d{0.2, 0.4};
  SdpProblem sp = assemble_sparse(m, d, 2);
  SdpProblem dn = assemble_dense(m, d, 2);
  auto count_tag = [](const SdpProblem& p, const std::string& prefix) {
    int n = 0;
    for (const EqRow& r : p.equalities)
      if (r.tag.rfind(prefix, 0) == 0) ++n;
    return n;
  };
  CHECK(count_tag(sp, "ovl") == static_cast<int>(binom(1 + 2, 2)));   // univariate shifts
  CHECK(count_tag(dn, "ovl") == static_cast<int>(binom(2 + 2, 2)));   // bivariate shifts
  CHECK(count_tag(dn, "cpl") == 2 * static_cast<int>(binom(2 + 2, 2)));
}

TEST_CASE("problem export round-trips structure", "[relaxation]") {
  ModelSpec m = make_spec(Regime::nonnegative, {1.0}, 1);
  SdpProblem prob = assemble_sparse(m, {0.5}, 1);
  std::ostringstream out;
  export_problem(prob, out);
  std::istringstream in(out.str());
  std::string line;
  int obj_lines = 0, eq_lines = 0, rhs_lines = 0, blk_lines = 0, dim_lines = 0;
  std::getline(in, line);
  CHECK(line == "# sdp export v1");
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "obj") ++obj_lines;
    if (kind == "eq") ++eq_lines;
    if (kind == "rhs") ++rhs_lines;
    if (kind == "blk") ++blk_lines;
    if (kind == "dim") ++dim_lines;
  }
  CHECK(obj_lines == 4);   // 0.0225, -0.15x, 0.25x^2 and the penalty 0.15x
  CHECK(rhs_lines == 2);   // two normalizations
  CHECK(dim_lines == 4);
  // moment matrices contribute 3 upper entries each, localizers 2 terms each
  CHECK(blk_lines == 3 + 2 + 3 + 2);
  CHECK(eq_lines == 3 + 2 + 5);
}
