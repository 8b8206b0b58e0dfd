// Command-line front end: Monte Carlo runs, parameter sweeps and SVG plots
// for the cell-free downlink simulator.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "cfmimo/experiment.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/plot.hpp"

namespace {

void print_summary(const cfmimo::ExperimentConfig& cfg,
                   const std::vector<cfmimo::SchemeSummary>& summaries, int excluded) {
  for (const auto& s : summaries)
    std::printf("%-16s  mean sum-SE %.4f +- %.4f bits/s/Hz  (%d trials", s.scheme.c_str(),
                s.mean_sum_se, s.stderr_sum_se, s.samples);
  if (excluded > 0) std::printf(", %d excluded", excluded);
  std::printf(")\n");
  std::printf("output written to %s\n", cfg.out.c_str());
}

std::vector<int> parse_values(const std::string& csv) {
  std::vector<int> values;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    values.push_back(std::stoi(tok));
  }
  if (values.empty()) throw cfmimo::ConfigError("--values: no values given");
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"user-centric cell-free massive MIMO downlink simulator"};
  app.require_subcommand(1);

  std::string config_path, out_override, scheme_override, axis_name, values_csv;
  std::string plot_in, plot_out, plot_axis;
  long seed_override = -1;
  int trials_override = -1;

  auto* run = app.add_subcommand("run", "run one Monte Carlo experiment");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--seed", seed_override, "override master seed");
  run->add_option("--trials", trials_override, "override trial count");
  run->add_option("--scheme", scheme_override, "override scheme");
  run->add_option("--out", out_override, "override output CSV path");

  auto* sw = app.add_subcommand("sweep", "sweep one parameter axis");
  sw->add_option("--config", config_path, "experiment config file")->required();
  sw->add_option("--axis", axis_name, "cluster_size | csi_size | iterations")->required();
  sw->add_option("--values", values_csv, "comma-separated axis values")->required();
  sw->add_option("--seed", seed_override, "override master seed");
  sw->add_option("--trials", trials_override, "override trial count");
  sw->add_option("--out", out_override, "override output CSV path");

  auto* pl = app.add_subcommand("plot", "render a sweep CSV as an SVG line chart");
  pl->add_option("--in", plot_in, "input CSV")->required();
  pl->add_option("--out", plot_out, "output SVG")->required();
  pl->add_option("--x", plot_axis, "x column: m_size | c_size | iter (default: auto)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *sw) {
      cfmimo::ExperimentConfig cfg = cfmimo::load_experiment_config(config_path);
      if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
      if (trials_override >= 0) cfg.trials = trials_override;
      if (!scheme_override.empty()) cfg.scheme = scheme_override;
      if (!out_override.empty()) cfg.out = out_override;
      cfg.validate();

      if (*run) {
        const cfmimo::ExperimentResult res = cfmimo::run_experiment(cfg);
        print_summary(cfg, res.summaries, res.excluded_trials);
        const auto real = cfmimo::generate_trial(cfg.net, cfg.seed, 0);
        const auto plan = cfmimo::build_cluster_plan(real.fading.beta, cfg.cluster_size,
                                                     cfg.csi_size, cfg.net.antennas_per_ap);
        const auto oh = cfmimo::overhead(cfg, plan);
        std::printf("fronthaul per AP: distributed %.0f bits, centralized %.0f bits "
                    "(%.1f%% reduction, K_bar=%.2f)\n",
                    oh.distributed_bits, oh.centralized_bits, 100.0 * oh.reduction,
                    oh.avg_served_per_ap);
      } else {
        const auto axis = cfmimo::parse_sweep_axis(axis_name);
        const cfmimo::SweepResult res = cfmimo::sweep(cfg, axis, parse_values(values_csv));
        cfmimo::write_csv(cfg.out, res.rows);
        for (const auto& [value, s] : res.points)
          std::printf("%s=%-4d  %-16s  mean sum-SE %.4f +- %.4f bits/s/Hz (%d trials)\n",
                      axis_name.c_str(), value, s.scheme.c_str(), s.mean_sum_se, s.stderr_sum_se,
                      s.samples);
        std::printf("output written to %s\n", cfg.out.c_str());
      }
    } else if (*pl) {
      cfmimo::plot_sweep_svg(cfmimo::load_csv(plot_in), plot_out, plot_axis);
      std::printf("wrote %s\n", plot_out.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
