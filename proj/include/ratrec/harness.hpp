#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ratrec/baselines.hpp"
#include "ratrec/datagen.hpp"
#include "ratrec/errors.hpp"
#include "ratrec/io.hpp"
#include "ratrec/relaxation.hpp"
#include "ratrec/sdp_solver.hpp"

// Monte-Carlo harness: runs seeded batches of generate / relax / baseline
// pipelines and aggregates objectives, bounds, gaps, MSE, win counts and
// ROC curves into machine-readable reports.

namespace ratrec {

struct ExperimentConfig {
  ModelSpec model;  // template; T is taken from gen
  GenConfig gen;
  std::vector<int> orders{2, 3};
  IhtConfig iht;
  L1Config l1;
  SolverConfig solver;
  int n_realizations = 100;
  int workers = 0;  // worker threads; 0 means one per hardware thread
  std::string out_dir;
};

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"model", c.model},         {"gen", c.gen},
           {"orders", c.orders},       {"iht", c.iht},
           {"l1", c.l1},               {"solver", c.solver},
           {"n_realizations", c.n_realizations},
           {"workers", c.workers}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  detail::maybe(j, "model", c.model);
  detail::maybe(j, "gen", c.gen);
  detail::maybe(j, "orders", c.orders);
  detail::maybe(j, "iht", c.iht);
  detail::maybe(j, "l1", c.l1);
  detail::maybe(j, "solver", c.solver);
  detail::maybe(j, "n_realizations", c.n_realizations);
  detail::maybe(j, "workers", c.workers);
}

/// (1/T) ||x_hat - x_true||^2
inline double mse(const std::vector<double>& x_hat, const std::vector<double>& x_true) {
  if (x_hat.size() != x_true.size())
    throw std::invalid_argument("mse: length mismatch");
  double acc = 0.0;
  for (std::size_t t = 0; t < x_hat.size(); ++t) {
    double e = x_hat[t] - x_true[t];
    acc += e * e;
  }
  return acc / static_cast<double>(x_hat.size());
}

/// Detection at threshold tau: |x_hat_t| > tau, scored against the support
/// of x_true.  Rates are undefined when the truth has empty or full support.
inline std::vector<std::pair<double, double>> roc_points(
    const std::vector<double>& x_hat, const std::vector<double>& x_true,
    const std::vector<double>& thresholds) {
  int pos = 0;
  for (double v : x_true) pos += v != 0.0 ? 1 : 0;
  int neg = static_cast<int>(x_true.size()) - pos;
  if (pos == 0 || neg == 0)
    throw DegenerateTruth("roc_points: truth support is empty or full");
  std::vector<std::pair<double, double>> out;
  out.reserve(thresholds.size());
  for (double tau : thresholds) {
    int fa = 0, det = 0;
    for (std::size_t t = 0; t < x_hat.size(); ++t) {
      bool hit = std::abs(x_hat[t]) > tau;
      if (x_true[t] != 0.0)
        det += hit ? 1 : 0;
      else
        fa += hit ? 1 : 0;
    }
    out.emplace_back(static_cast<double>(fa) / neg, static_cast<double>(det) / pos);
  }
  return out;
}

/// Geometric threshold sweep used for the reported ROC curves.
inline std::vector<double> roc_threshold_grid(double top, int count = 200) {
  std::vector<double> taus(count);
  const double lo = 1e-4;
  double hi = std::max(top, lo);
  for (int i = 0; i < count; ++i)
    taus[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return taus;
}

struct OrderOutcome {
  int order = 0;
  double bound = 0.0;       // solver objective, a lower bound at convergence
  SolveStatus status = SolveStatus::max_iter;
  double objective = 0.0;   // J at the extracted point
  double gap = 0.0;         // (objective - bound) / (1 + |bound|)
  double mse_extract = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::vector<double> x_extract;
  std::vector<TracePoint> trace;
};

struct IhtOutcome {
  std::string init;
  double objective = 0.0;  // J at the final iterate
  double mse = 0.0;
  int iterations = 0;
  std::vector<double> x;
};

struct RealizationRecord {
  int index = 0;
  bool failed = false;
  std::string error;
  std::vector<double> x_true, d;
  std::vector<OrderOutcome> orders;
  double l1_objective = 0.0;
  double l1_mse = 0.0;
  bool l1_converged = false;
  int l1_iterations = 0;
  std::vector<double> x_l1;
  std::vector<IhtOutcome> iht;
  double seconds = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RealizationRecord> rows;
};

/// Count, per IHT initialization, how often it attains the row minimum of
/// the final objective.  Ties within 1e-9 are counted for every achiever,
/// so a column sum above the realization count is possible.
inline std::map<std::string, int> win_counts(const ExperimentReport& report) {
  std::map<std::string, int> wins;
  for (const RealizationRecord& row : report.rows) {
    if (row.failed || row.iht.empty()) continue;
    double best = row.iht[0].objective;
    for (const IhtOutcome& o : row.iht) best = std::min(best, o.objective);
    for (const IhtOutcome& o : row.iht) {
      wins.try_emplace(o.init, 0);
      if (o.objective <= best + 1e-9) ++wins[o.init];
    }
  }
  return wins;
}

inline RealizationRecord run_realization(const ExperimentConfig& cfg, int index) {
  auto t0 = std::chrono::steady_clock::now();
  RealizationRecord rec;
  rec.index = index;
  auto [m, inst] = generate_instance(cfg.gen, cfg.model, index);
  rec.x_true = inst.x_true;
  rec.d = inst.d;

  L1Result l1 = l1_solve(m, inst.d, cfg.l1);
  rec.x_l1 = l1.x;
  rec.l1_objective = eval_J(m, inst.d, l1.x);
  rec.l1_mse = mse(l1.x, inst.x_true);
  rec.l1_converged = l1.converged;
  rec.l1_iterations = l1.iterations;

  for (int k : cfg.orders) {
    OrderOutcome oc;
    oc.order = k;
    SdpProblem prob = assemble_sparse(m, inst.d, k);
    std::vector<double> warm = dirac_moments(prob, l1.x);
    SdpSolution sol = solve(prob, cfg.solver, &warm);
    oc.bound = sol.objective;
    oc.status = sol.status;
    oc.iterations = sol.iterations;
    oc.seconds = sol.seconds;
    oc.trace = std::move(sol.trace);
    oc.x_extract = extract_estimate(prob, sol.y);
    oc.objective = eval_J(m, inst.d, oc.x_extract);
    oc.gap = (oc.objective - oc.bound) / (1.0 + std::abs(oc.bound));
    oc.mse_extract = mse(oc.x_extract, inst.x_true);
    rec.orders.push_back(std::move(oc));
  }

  std::vector<std::pair<std::string, std::vector<double>>> inits;
  if (!rec.orders.empty()) inits.emplace_back("sdp", rec.orders.back().x_extract);
  inits.emplace_back("l1", l1.x);
  inits.emplace_back("data", inst.d);
  inits.emplace_back("zero", std::vector<double>(m.T, 0.0));
  inits.emplace_back("truth", inst.x_true);
  for (auto& [name, x0] : inits) {
    IhtResult r = iht_solve(x0, m, inst.d, cfg.iht);
    IhtOutcome oc;
    oc.init = name;
    oc.objective = eval_J(m, inst.d, r.x);
    oc.mse = mse(r.x, inst.x_true);
    oc.iterations = r.iterations;
    oc.x = std::move(r.x);
    rec.iht.push_back(std::move(oc));
  }

  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Runs all realizations on a worker pool.  Each worker owns a realization
/// end-to-end; rows are merged by index, so the report does not depend on
/// scheduling.  Failures are recorded on their row and never abort the batch.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.config = cfg;
  report.rows.resize(std::max(0, cfg.n_realizations));
  int workers = cfg.workers > 0
                    ? cfg.workers
                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<int>(workers, std::max(1, cfg.n_realizations));
  std::atomic<int> next{0};
  auto drain = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= cfg.n_realizations) return;
      try {
        report.rows[i] = run_realization(cfg, i);
      } catch (const std::exception& e) {
        report.rows[i] = RealizationRecord{};
        report.rows[i].index = i;
        report.rows[i].failed = true;
        report.rows[i].error = e.what();
      }
    }
  };
  if (workers == 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (std::thread& t : pool) t.join();
  }
  return report;
}

namespace detail {

inline std::string csv_int(int v) { return std::to_string(v); }

}  // namespace detail

/// One row per realization and method.  Timings are deliberately excluded
/// so identical config and seed reproduce the file byte for byte.
inline void write_report_csv(const ExperimentReport& report, const std::string& path) {
  CsvWriter csv(path, {"realization", "method", "objective", "bound", "gap", "status",
                       "iterations", "mse"});
  for (const RealizationRecord& row : report.rows) {
    std::string idx = detail::csv_int(row.index);
    if (row.failed) {
      csv.row({idx, "failed", "", "", "", row.error, "", ""});
      continue;
    }
    for (const OrderOutcome& oc : row.orders)
      csv.row({idx, "sdp_k" + detail::csv_int(oc.order), format_double(oc.objective),
               format_double(oc.bound), format_double(oc.gap), to_string(oc.status),
               detail::csv_int(oc.iterations), format_double(oc.mse_extract)});
    csv.row({idx, "l1", format_double(row.l1_objective), "", "",
             row.l1_converged ? "converged" : "max_iter",
             detail::csv_int(row.l1_iterations), format_double(row.l1_mse)});
    for (const IhtOutcome& oc : row.iht)
      csv.row({idx, "iht_" + oc.init, format_double(oc.objective), "", "", "",
               detail::csv_int(oc.iterations), format_double(oc.mse)});
  }
}

/// Pooled ROC over all successful realizations for the estimators the study
/// compares: IHT started from the relaxation point, and the l1 estimate.
/// Methods whose pooled truth has degenerate support are omitted.
inline void write_roc_csv(const ExperimentReport& report, const std::string& path) {
  CsvWriter csv(path, {"method", "threshold", "far", "dr"});
  struct Series {
    std::string method;
    std::vector<double> x_hat, x_true;
  };
  std::vector<Series> series = {{"iht_sdp", {}, {}}, {"l1", {}, {}}};
  for (const RealizationRecord& row : report.rows) {
    if (row.failed) continue;
    for (const IhtOutcome& oc : row.iht)
      if (oc.init == "sdp") {
        series[0].x_hat.insert(series[0].x_hat.end(), oc.x.begin(), oc.x.end());
        series[0].x_true.insert(series[0].x_true.end(), row.x_true.begin(), row.x_true.end());
      }
    series[1].x_hat.insert(series[1].x_hat.end(), row.x_l1.begin(), row.x_l1.end());
    series[1].x_true.insert(series[1].x_true.end(), row.x_true.begin(), row.x_true.end());
  }
  for (const Series& s : series) {
    if (s.x_hat.empty()) continue;
    double top = 0.0;
    for (double v : s.x_hat) top = std::max(top, std::abs(v));
    std::vector<double> taus = roc_threshold_grid(top);
    std::sort(taus.rbegin(), taus.rend());
    std::vector<std::pair<double, double>> pts;
    try {
      pts = roc_points(s.x_hat, s.x_true, taus);
    } catch (const DegenerateTruth&) {
      continue;
    }
    for (std::size_t i = 0; i < taus.size(); ++i)
      csv.row({s.method, format_double(taus[i]), format_double(pts[i].first),
               format_double(pts[i].second)});
  }
}

inline void write_traces(const ExperimentReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const RealizationRecord& row : report.rows) {
    for (const OrderOutcome& oc : row.orders) {
      if (oc.trace.empty()) continue;
      char name[64];
      std::snprintf(name, sizeof(name), "r%03d_k%d.csv", row.index, oc.order);
      CsvWriter csv((fs::path(dir) / name).string(),
                    {"iteration", "primal", "dual", "objective"});
      for (const TracePoint& tp : oc.trace)
        csv.row({detail::csv_int(tp.iter), format_double(tp.primal),
                 format_double(tp.dual), format_double(tp.objective)});
    }
  }
}

/// Aggregate block: means over successful realizations, win counts,
/// certification fractions, failures, and all wall-clock timings.
inline json aggregate_json(const ExperimentReport& report) {
  json agg;
  int ok = 0;
  double total_seconds = 0.0;
  json failures = json::array();
  for (const RealizationRecord& row : report.rows) {
    if (row.failed) {
      failures.push_back({{"realization", row.index}, {"error", row.error}});
      continue;
    }
    ++ok;
    total_seconds += row.seconds;
  }
  agg["n_realizations"] = static_cast<int>(report.rows.size());
  agg["n_failed"] = static_cast<int>(report.rows.size()) - ok;
  agg["failures"] = failures;
  agg["total_seconds"] = total_seconds;
  if (ok == 0) return agg;

  json orders = json::array();
  for (std::size_t oi = 0; oi < report.config.orders.size(); ++oi) {
    double mb = 0, mo = 0, ms = 0, certified = 0, trusted = 0;
    int n = 0;
    for (const RealizationRecord& row : report.rows) {
      if (row.failed || oi >= row.orders.size()) continue;
      const OrderOutcome& oc = row.orders[oi];
      ++n;
      mb += oc.bound;
      mo += oc.objective;
      ms += oc.seconds;
      certified += oc.gap <= 1e-3 ? 1 : 0;
      trusted += oc.status == SolveStatus::optimal ? 1 : 0;
    }
    if (n == 0) continue;
    orders.push_back({{"order", report.config.orders[oi]},
                      {"mean_bound", mb / n},
                      {"mean_objective", mo / n},
                      {"mean_seconds", ms / n},
                      {"certified_fraction", certified / n},
                      {"optimal_fraction", trusted / n}});
  }
  agg["orders"] = orders;

  double l1o = 0, l1m = 0;
  for (const RealizationRecord& row : report.rows)
    if (!row.failed) {
      l1o += row.l1_objective;
      l1m += row.l1_mse;
    }
  agg["l1"] = {{"mean_objective", l1o / ok}, {"mean_mse", l1m / ok}};

  std::map<std::string, int> wins = win_counts(report);
  json iht;
  for (const auto& [init, count] : wins) {
    double mo = 0, mm = 0;
    int n = 0;
    for (const RealizationRecord& row : report.rows) {
      if (row.failed) continue;
      for (const IhtOutcome& oc : row.iht)
        if (oc.init == init) {
          mo += oc.objective;
          mm += oc.mse;
          ++n;
        }
    }
    iht[init] = {{"mean_objective", mo / n}, {"mean_mse", mm / n}, {"wins", count}};
  }
  agg["iht"] = iht;
  return agg;
}

/// Writes report.csv, aggregate.json, roc.csv, and trace/ under out_dir.
inline void write_outputs(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_report_csv(report, (fs::path(out_dir) / "report.csv").string());
  write_roc_csv(report, (fs::path(out_dir) / "roc.csv").string());
  json agg = aggregate_json(report);
  agg["config"] = report.config;
  save_json((fs::path(out_dir) / "aggregate.json").string(), agg);
  write_traces(report, (fs::path(out_dir) / "trace").string());
}

}  // namespace ratrec
