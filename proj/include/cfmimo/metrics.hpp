#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "cfmimo/precoding.hpp"

namespace cfmimo {

/// True downlink SINR of user k: coherent sum over the serving APs in the
/// numerator, all other users' clusters plus unit noise in the denominator.
/// Residual interference that PZF did not null is included.
inline double sinr(const ChannelRealization& ch, const ClusterPlan& plan,
                   const PrecodingSolution& sol, int k) {
  auto coherent_gain = [&](int tx_user) {
    std::complex<double> acc = 0.0;
    const auto& cluster = plan.serving[tx_user];
    const auto& u = sol.users[tx_user];
    for (int m = 0; m < static_cast<int>(cluster.size()); ++m)
      acc += std::sqrt(u.powers[m]) * ch.of(k, cluster[m]).dot(u.directions[m]);
    return acc;
  };

  const double signal = std::norm(coherent_gain(k));
  double interference = 0.0;
  for (int kp = 0; kp < plan.num_users(); ++kp)
    if (kp != k) interference += std::norm(coherent_gain(kp));
  return signal / (interference + 1.0);
}

inline std::vector<double> all_sinrs(const ChannelRealization& ch, const ClusterPlan& plan,
                                     const PrecodingSolution& sol) {
  std::vector<double> out(plan.num_users());
  for (int k = 0; k < plan.num_users(); ++k) out[k] = sinr(ch, plan, sol, k);
  return out;
}

inline double sum_se(const std::vector<double>& sinrs) {
  double acc = 0.0;
  for (double s : sinrs) acc += std::log2(1.0 + s);
  return acc;
}

/// Power actually radiated per AP, summed over its served users.
inline VectorXd ap_used_power(const ClusterPlan& plan, const PrecodingSolution& sol) {
  VectorXd used = VectorXd::Zero(plan.num_aps());
  for (int k = 0; k < plan.num_users(); ++k) {
    const auto& cluster = plan.serving[k];
    for (int m = 0; m < static_cast<int>(cluster.size()); ++m)
      used(cluster[m]) += sol.users[k].powers[m];
  }
  return used;
}

/// Largest relative budget overshoot across APs; 0 when all constraints hold.
inline double max_power_violation(const ClusterPlan& plan, const PrecodingSolution& sol,
                                  double rho_max) {
  const VectorXd used = ap_used_power(plan, sol);
  double worst = 0.0;
  for (int l = 0; l < plan.num_aps(); ++l)
    worst = std::max(worst, (used(l) - rho_max) / rho_max);
  return std::max(worst, 0.0);
}

struct SeReport {
  std::vector<double> sinr;      // linear, per user
  std::vector<double> se;        // bits/s/Hz, per user
  double sum_se = 0.0;
  VectorXd ap_power;             // per AP
  double max_violation = 0.0;    // relative to rho_max
  std::string scheme;
  std::uint64_t trial = 0;
};

inline SeReport evaluate(const ChannelRealization& ch, const ClusterPlan& plan,
                         const PrecodingSolution& sol, double rho_max,
                         const std::string& scheme = "") {
  SeReport rep;
  rep.sinr = all_sinrs(ch, plan, sol);
  rep.se.resize(rep.sinr.size());
  for (std::size_t i = 0; i < rep.sinr.size(); ++i) rep.se[i] = std::log2(1.0 + rep.sinr[i]);
  rep.sum_se = sum_se(rep.sinr);
  rep.ap_power = ap_used_power(plan, sol);
  rep.max_violation = max_power_violation(plan, sol, rho_max);
  rep.scheme = scheme;
  rep.trial = ch.trial;
  return rep;
}

/// Fronthaul payload-signaling comparison between the distributed scheme
/// (quantized symbols per served user) and the centralized one (quantized
/// per-antenna I/Q samples).
struct OverheadReport {
  int tau_d = 0;
  double avg_served_per_ap = 0.0;  // K_bar
  int symbol_bits = 0;             // B
  int quant_bits = 0;              // A
  int antennas = 0;                // N
  double distributed_bits = 0.0;   // tau_d * K_bar * B
  double centralized_bits = 0.0;   // 2 * tau_d * N * A
  double reduction = 0.0;          // 1 - distributed / centralized
};

inline OverheadReport overhead(const ExperimentConfig& cfg, const ClusterPlan& plan) {
  OverheadReport rep;
  rep.tau_d = cfg.tau_d;
  rep.symbol_bits = cfg.symbol_bits;
  rep.quant_bits = cfg.quant_bits;
  rep.antennas = cfg.net.antennas_per_ap;
  // K_bar averages over all L APs (idle ones included), so it equals
  // K * |M| / L regardless of how clusters overlap.
  int total_served = 0;
  for (int l = 0; l < plan.num_aps(); ++l) total_served += static_cast<int>(plan.served[l].size());
  rep.avg_served_per_ap = static_cast<double>(total_served) / plan.num_aps();
  rep.distributed_bits = cfg.tau_d * rep.avg_served_per_ap * cfg.symbol_bits;
  rep.centralized_bits = 2.0 * cfg.tau_d * cfg.net.antennas_per_ap * cfg.quant_bits;
  rep.reduction = 1.0 - rep.distributed_bits / rep.centralized_bits;
  return rep;
}

}  // namespace cfmimo
