// Command-line front end: instance generation, single solves, baselines,
// and the Monte-Carlo experiment driver.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ratrec/harness.hpp"

namespace fs = std::filesystem;
using namespace ratrec;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string regime;
  std::string filter;
  std::int64_t seed = -1;
  int index = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config JSON");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "generator seed override");
  cmd->add_option("--index", o.index, "realization index");
  cmd->add_option("--regime", o.regime, "nonnegative | real_valued");
  cmd->add_option("--filter", o.filter, "a | b | c | random");
}

// Config errors exit with code 2; this exception carries them out of helpers.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExperimentConfig load_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  cfg.model.h = filter_a();
  cfg.model.chi = 0.3;
  cfg.model.delta = 0.01;
  cfg.model.lambda = 0.15;
  cfg.model.b_low = 0.0;
  cfg.model.b_high = 1.0;
  cfg.model.regime = Regime::nonnegative;
  if (!o.config_path.empty()) {
    try {
      load_json(o.config_path).get_to(cfg);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (o.seed >= 0) cfg.gen.rng_seed = static_cast<std::uint64_t>(o.seed);
  if (!o.regime.empty()) cfg.model.regime = regime_from_string(o.regime);
  if (!o.filter.empty()) {
    if (o.filter == "a")
      cfg.model.h = filter_a();
    else if (o.filter == "b")
      cfg.model.h = filter_b();
    else if (o.filter == "c")
      cfg.model.h = filter_c();
    else if (o.filter == "random")
      cfg.gen.random_filter = true;
    else
      throw ConfigError("unknown filter: " + o.filter);
  }
  if (cfg.model.regime == Regime::real_valued) cfg.model.b_low = -cfg.model.b_high;
  return cfg;
}

std::pair<ModelSpec, SignalInstance> make_instance(const ExperimentConfig& cfg, int index) {
  return generate_instance(cfg.gen, cfg.model, index);
}

void emit(const json& j, const std::string& out_dir, const std::string& name) {
  if (out_dir.empty()) {
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    fs::create_directories(out_dir);
    save_json((fs::path(out_dir) / name).string(), j);
  }
}

int cmd_generate(const CommonOpts& o) {
  ExperimentConfig cfg = load_config(o);
  auto [m, inst] = make_instance(cfg, o.index);
  emit(json{{"model", m}, {"instance", inst}}, o.out_dir, "instance.json");
  return 0;
}

int cmd_relax(const CommonOpts& o, int order) {
  ExperimentConfig cfg = load_config(o);
  auto [m, inst] = make_instance(cfg, o.index);
  SdpProblem prob = assemble_sparse(m, inst.d, order);
  L1Result l1 = l1_solve(m, inst.d, cfg.l1);
  std::vector<double> warm = dirac_moments(prob, l1.x);
  SdpSolution sol = solve(prob, cfg.solver, &warm);
  std::vector<double> xh = extract_estimate(prob, sol.y);
  double Jx = eval_J(m, inst.d, xh);
  json j{{"order", order},
         {"bound", sol.objective},
         {"status", to_string(sol.status)},
         {"iterations", sol.iterations},
         {"primal_residual", sol.primal_residual},
         {"dual_residual", sol.dual_residual},
         {"eq_residual", sol.eq_residual},
         {"seconds", sol.seconds},
         {"x_extract", xh},
         {"objective_at_extract", Jx},
         {"gap", (Jx - sol.objective) / (1.0 + std::abs(sol.objective))},
         {"moments", prob.n_moments}};
  emit(j, o.out_dir, "relax_k" + std::to_string(order) + ".json");
  if (!o.out_dir.empty() && !sol.trace.empty()) {
    fs::create_directories(fs::path(o.out_dir) / "trace");
    CsvWriter csv((fs::path(o.out_dir) / "trace" /
                   ("relax_k" + std::to_string(order) + ".csv"))
                      .string(),
                  {"iteration", "primal", "dual", "objective"});
    for (const TracePoint& tp : sol.trace)
      csv.row({std::to_string(tp.iter), format_double(tp.primal),
               format_double(tp.dual), format_double(tp.objective)});
  }
  return 0;
}

int cmd_iht(const CommonOpts& o, const std::string& init) {
  ExperimentConfig cfg = load_config(o);
  auto [m, inst] = make_instance(cfg, o.index);
  std::vector<double> x0(m.T, 0.0);
  if (init == "zero") {
  } else if (init == "data") {
    x0 = inst.d;
  } else if (init == "truth") {
    x0 = inst.x_true;
  } else if (init == "l1") {
    x0 = l1_solve(m, inst.d, cfg.l1).x;
  } else {
    throw ConfigError("unknown iht init: " + init);
  }
  IhtResult r = iht_solve(x0, m, inst.d, cfg.iht);
  json j{{"init", init},
         {"x", r.x},
         {"objective", eval_J(m, inst.d, r.x)},
         {"objective_l0", r.objective_trace.back()},
         {"iterations", r.iterations},
         {"mse", mse(r.x, inst.x_true)}};
  emit(j, o.out_dir, "iht.json");
  return 0;
}

int cmd_l1(const CommonOpts& o) {
  ExperimentConfig cfg = load_config(o);
  auto [m, inst] = make_instance(cfg, o.index);
  L1Result r = l1_solve(m, inst.d, cfg.l1);
  json j{{"x", r.x},
         {"objective", eval_J(m, inst.d, r.x)},
         {"converged", r.converged},
         {"iterations", r.iterations},
         {"mse", mse(r.x, inst.x_true)}};
  emit(j, o.out_dir, "l1.json");
  return 0;
}

int cmd_experiment(const CommonOpts& o) {
  ExperimentConfig cfg = load_config(o);
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  ExperimentReport report = run_experiment(cfg);
  if (!cfg.out_dir.empty()) write_outputs(report, cfg.out_dir);
  int failed = 0;
  for (const RealizationRecord& row : report.rows) failed += row.failed ? 1 : 0;
  std::printf("realizations %zu, failed %d%s\n", report.rows.size(), failed,
              cfg.out_dir.empty() ? "" : (", outputs in " + cfg.out_dir).c_str());
  return failed > 0 ? 3 : 0;
}

int cmd_report(const CommonOpts& o) {
  if (o.out_dir.empty()) throw ConfigError("report needs --out <dir>");
  fs::path dir(o.out_dir);
  if (!fs::exists(dir / "aggregate.json"))
    throw ConfigError("no aggregate.json under " + o.out_dir);
  json agg = load_json((dir / "aggregate.json").string());
  std::printf("realizations: %d (failed %d)\n", agg.value("n_realizations", 0),
              agg.value("n_failed", 0));
  std::printf("total seconds: %.1f\n", agg.value("total_seconds", 0.0));
  if (agg.contains("orders"))
    for (const json& oj : agg["orders"])
      std::printf("order %d: mean bound %.6f, mean objective %.6f, certified %.0f%%\n",
                  oj.value("order", 0), oj.value("mean_bound", 0.0),
                  oj.value("mean_objective", 0.0),
                  100.0 * oj.value("certified_fraction", 0.0));
  if (agg.contains("l1"))
    std::printf("l1: mean objective %.6f, mean mse %.3e\n",
                agg["l1"].value("mean_objective", 0.0), agg["l1"].value("mean_mse", 0.0));
  if (agg.contains("iht"))
    for (const auto& [init, ij] : agg["iht"].items())
      std::printf("iht %-6s: mean objective %.6f, mean mse %.3e, wins %d\n", init.c_str(),
                  ij.value("mean_objective", 0.0), ij.value("mean_mse", 0.0),
                  ij.value("wins", 0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rational sparse reconstruction toolkit"};
  app.require_subcommand(1);

  CommonOpts o;
  int order = 3;
  std::string init = "zero";

  CLI::App* generate = app.add_subcommand("generate", "draw a seeded instance");
  add_common(generate, o);
  CLI::App* relax = app.add_subcommand("relax", "solve the sparse relaxation");
  add_common(relax, o);
  relax->add_option("--order", order, "relaxation order");
  CLI::App* iht = app.add_subcommand("iht", "run iterative hard thresholding");
  add_common(iht, o);
  iht->add_option("--init", init, "zero | data | truth | l1");
  CLI::App* l1 = app.add_subcommand("l1", "run the linearized l1 baseline");
  add_common(l1, o);
  CLI::App* experiment = app.add_subcommand("experiment", "run a Monte-Carlo batch");
  add_common(experiment, o);
  CLI::App* report = app.add_subcommand("report", "summarize experiment outputs");
  add_common(report, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(o);
    if (relax->parsed()) return cmd_relax(o, order);
    if (iht->parsed()) return cmd_iht(o, init);
    if (l1->parsed()) return cmd_l1(o);
    if (experiment->parsed()) return cmd_experiment(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InvalidModel& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
