#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cfmimo/dualopt.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/netmodel.hpp"
#include "cfmimo/topology.hpp"

namespace cfmimo {

struct ResultRow {
  int trial = 0;
  std::string scheme;
  int m_size = 0;
  int c_size = 0;
  int iter = 0;  // traced dual round; 0 for schemes without iterations
  double sum_se = 0.0;
  double max_power_violation = 0.0;
  double msg_bytes = 0.0;
};

inline const char* kCsvHeader = "trial,scheme,m_size,c_size,iter,sum_se,max_power_violation,msg_bytes";

inline std::string format_row(const ResultRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%s,%d,%d,%d,%.17g,%.17g,%.17g", r.trial, r.scheme.c_str(),
                r.m_size, r.c_size, r.iter, r.sum_se, r.max_power_violation, r.msg_bytes);
  return buf;
}

inline std::vector<ResultRow> parse_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != kCsvHeader) throw std::runtime_error("unexpected CSV header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    ResultRow r;
    std::getline(ss, field, ','); r.trial = std::stoi(field);
    std::getline(ss, r.scheme, ',');
    std::getline(ss, field, ','); r.m_size = std::stoi(field);
    std::getline(ss, field, ','); r.c_size = std::stoi(field);
    std::getline(ss, field, ','); r.iter = std::stoi(field);
    std::getline(ss, field, ','); r.sum_se = std::stod(field);
    std::getline(ss, field, ','); r.max_power_violation = std::stod(field);
    std::getline(ss, field, ','); r.msg_bytes = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<ResultRow> load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open CSV: " + path);
  return parse_csv(f);
}

/// Rows produced by one trial of one scheme. For pzf-dual every round is
/// traced; pzf-centralized reports its converged round only; pinv-epa emits a
/// single row with iter = 0.
inline std::vector<ResultRow> run_trial(const ExperimentConfig& cfg, int trial) {
  const TrialRealization real = generate_trial(cfg.net, cfg.seed, trial);
  const ClusterPlan plan = build_cluster_plan(real.fading.beta, cfg.cluster_size, cfg.csi_size,
                                              cfg.net.antennas_per_ap);
  const double rho_max = cfg.net.rho_max_linear();

  std::vector<ResultRow> rows;
  auto base_row = [&]() {
    ResultRow r;
    r.trial = trial;
    r.scheme = cfg.scheme;
    r.m_size = cfg.cluster_size;
    r.c_size = cfg.csi_size;
    return r;
  };

  if (cfg.scheme == "pinv-epa") {
    const PrecodingSolution sol = build_pinv_epa_solution(real.channels, plan, rho_max);
    const SeReport rep = evaluate(real.channels, plan, sol, rho_max, cfg.scheme);
    ResultRow r = base_row();
    r.sum_se = rep.sum_se;
    r.max_power_violation = rep.max_violation;
    r.msg_bytes = 0.0;  // no optimizer exchange
    rows.push_back(std::move(r));
    return rows;
  }

  DualRunResult res;
  if (cfg.scheme == "pzf-dual") {
    res = run_dual_decomposition(real.channels, plan, rho_max, cfg.iterations, cfg.step_size,
                                 cfg.scalar_bytes);
  } else {  // pzf-centralized
    res = run_centralized_reference(real.channels, plan, rho_max, cfg.step_size);
    res.trace.records.back().sum_se =
        sum_se(all_sinrs(real.channels, plan, res.solution));
  }
  long bytes = 0;
  for (const auto& rec : res.trace.records) {
    bytes += static_cast<long>(rec.scalars_down + rec.scalars_up) * cfg.scalar_bytes;
    ResultRow r = base_row();
    r.iter = rec.iteration;
    r.sum_se = rec.sum_se;
    r.max_power_violation =
        std::max(0.0, (rec.ap_power.maxCoeff() - rho_max) / rho_max);
    r.msg_bytes = static_cast<double>(bytes);
    rows.push_back(std::move(r));
  }
  return rows;
}

struct SchemeSummary {
  std::string scheme;
  int samples = 0;
  int excluded = 0;
  double mean_sum_se = 0.0;
  double stderr_sum_se = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<SchemeSummary> summaries;
  int excluded_trials = 0;
};

namespace detail {

/// Mean and standard error of the per-trial final rows.
inline SchemeSummary summarize(const std::string& scheme, const std::vector<double>& values,
                               int excluded) {
  SchemeSummary s;
  s.scheme = scheme;
  s.samples = static_cast<int>(values.size());
  s.excluded = excluded;
  if (values.empty()) return s;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = values.size() > 1 ? var / (values.size() - 1) : 0.0;
  s.mean_sum_se = mean;
  s.stderr_sum_se = std::sqrt(var / values.size());
  return s;
}

}  // namespace detail

/// Monte Carlo driver. Trials run in parallel on independent substreams; rows
/// are assembled in trial order so output is deterministic. Trials that abort
/// numerically are logged and excluded.
inline ExperimentResult run_experiment_rows(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::optional<std::vector<ResultRow>>> per_trial(cfg.trials);
  std::atomic<int> next{0};
  std::atomic<int> excluded{0};

  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), cfg.trials);
  auto work = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= cfg.trials) return;
      try {
        per_trial[t] = run_trial(cfg, t);
      } catch (const std::exception& e) {
        std::cerr << "trial " << t << " aborted: " << e.what() << "\n";
        excluded.fetch_add(1);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  ExperimentResult result;
  result.excluded_trials = excluded.load();
  std::vector<double> finals;
  for (int t = 0; t < cfg.trials; ++t) {
    if (!per_trial[t]) continue;
    const auto& rows = *per_trial[t];
    if (!rows.empty()) finals.push_back(rows.back().sum_se);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  result.summaries.push_back(detail::summarize(cfg.scheme, finals, result.excluded_trials));
  return result;
}

inline void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << kCsvHeader << "\n";
  for (const auto& r : rows) f << format_row(r) << "\n";
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result = run_experiment_rows(cfg);
  write_csv(cfg.out, result.rows);
  return result;
}

enum class SweepAxis { ClusterSize, CsiSize, Iterations };

inline SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "cluster_size") return SweepAxis::ClusterSize;
  if (name == "csi_size") return SweepAxis::CsiSize;
  if (name == "iterations") return SweepAxis::Iterations;
  throw ConfigError("unknown sweep axis '" + name + "' (cluster_size | csi_size | iterations)");
}

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<std::pair<int, SchemeSummary>> points;  // (axis value, summary)
  std::vector<int> skipped_values;
};

/// One run_experiment per value, sharing the master seed so every point sees
/// the same channel realizations (common random numbers). Infeasible points
/// are reported and skipped.
inline SweepResult sweep(const ExperimentConfig& base, SweepAxis axis,
                         const std::vector<int>& values) {
  SweepResult out;
  for (int v : values) {
    ExperimentConfig cfg = base;
    switch (axis) {
      case SweepAxis::ClusterSize: cfg.cluster_size = v; break;
      case SweepAxis::CsiSize: cfg.csi_size = v; break;
      case SweepAxis::Iterations: cfg.iterations = v; break;
    }
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      std::cerr << "sweep: skipping value " << v << ": " << e.what() << "\n";
      out.skipped_values.push_back(v);
      continue;
    }
    ExperimentResult res = run_experiment_rows(cfg);
    out.rows.insert(out.rows.end(), res.rows.begin(), res.rows.end());
    out.points.emplace_back(v, res.summaries.at(0));
  }
  return out;
}

}  // namespace cfmimo
