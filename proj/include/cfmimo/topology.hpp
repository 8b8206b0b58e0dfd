#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "cfmimo/config.hpp"

namespace cfmimo {

/// User-centric structure: serving clusters M_k, CSI sharing sets C_k, served
/// sets D_l and a master AP per cluster. All index lists are stored ascending;
/// ties everywhere break toward the lower index.
struct ClusterPlan {
  std::vector<std::vector<int>> serving;  // M_k per user, ascending AP indices
  std::vector<std::vector<int>> csi;      // C_k per user, ascending, contains k
  std::vector<std::vector<int>> served;   // D_l per AP, ascending user indices
  std::vector<int> master_ap;             // one AP in M_k per user

  int num_users() const { return static_cast<int>(serving.size()); }
  int num_aps() const { return static_cast<int>(served.size()); }
  int cluster_size() const { return serving.empty() ? 0 : static_cast<int>(serving[0].size()); }
  int csi_size() const { return csi.empty() ? 0 : static_cast<int>(csi[0].size()); }
  bool active(int l) const { return !served[l].empty(); }
  int active_ap_count() const {
    int n = 0;
    for (const auto& d : served) n += d.empty() ? 0 : 1;
    return n;
  }
};

namespace detail {

/// Indices of the `count` largest values; ties broken by lower index.
inline std::vector<int> top_indices(const Eigen::VectorXd& values, int count) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return values(a) > values(b); });
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// M_k = indices of the cluster_size largest beta_{k,l}.
inline std::vector<std::vector<int>> select_serving_clusters(const Eigen::MatrixXd& beta,
                                                             int cluster_size) {
  if (cluster_size < 1 || cluster_size > beta.cols())
    throw ConfigError("cluster_size must be in [1, num_aps]");
  std::vector<std::vector<int>> serving(beta.rows());
  for (int k = 0; k < beta.rows(); ++k)
    serving[k] = detail::top_indices(beta.row(k), cluster_size);
  return serving;
}

/// C_k = {k} plus the csi_size-1 other users with the largest average pathloss
/// to the APs in M_k.
inline std::vector<std::vector<int>> build_csi_sets(const Eigen::MatrixXd& beta,
                                                    const std::vector<std::vector<int>>& serving,
                                                    int csi_size, int antennas_per_ap) {
  const int K = static_cast<int>(beta.rows());
  if (csi_size < 1 || csi_size > K) throw ConfigError("csi_size must be in [1, num_users]");
  const int cluster_size = static_cast<int>(serving.at(0).size());
  if (antennas_per_ap * cluster_size <= csi_size - 1)
    throw ConfigError("infeasible: need antennas_per_ap * |M| > |C| - 1");

  std::vector<std::vector<int>> csi(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd mean_beta(K);
    for (int i = 0; i < K; ++i) {
      double acc = 0.0;
      for (int l : serving[k]) acc += beta(i, l);
      mean_beta(i) = acc / serving[k].size();
    }
    mean_beta(k) = std::numeric_limits<double>::infinity();  // own user always in
    csi[k] = detail::top_indices(mean_beta, csi_size);
  }
  return csi;
}

inline std::vector<std::vector<int>> invert_to_served_sets(
    const std::vector<std::vector<int>>& serving, int num_aps) {
  std::vector<std::vector<int>> served(num_aps);
  for (int k = 0; k < static_cast<int>(serving.size()); ++k)
    for (int l : serving[k]) served.at(l).push_back(k);
  return served;
}

/// The AP in M_k with the largest beta_{k,l}.
inline int pick_master_ap(const Eigen::VectorXd& beta_row, const std::vector<int>& cluster) {
  int best = cluster.at(0);
  for (int l : cluster)
    if (beta_row(l) > beta_row(best)) best = l;
  return best;
}

inline ClusterPlan build_cluster_plan(const Eigen::MatrixXd& beta, int cluster_size, int csi_size,
                                      int antennas_per_ap) {
  ClusterPlan plan;
  plan.serving = select_serving_clusters(beta, cluster_size);
  plan.csi = build_csi_sets(beta, plan.serving, csi_size, antennas_per_ap);
  plan.served = invert_to_served_sets(plan.serving, static_cast<int>(beta.cols()));
  plan.master_ap.resize(beta.rows());
  for (int k = 0; k < beta.rows(); ++k)
    plan.master_ap[k] = pick_master_ap(beta.row(k), plan.serving[k]);
  return plan;
}

}  // namespace cfmimo
