#pragma once

#include <Eigen/Dense>
#include <iostream>
#include <vector>

#include "cfmimo/netmodel.hpp"
#include "cfmimo/topology.hpp"

namespace cfmimo {

/// Shared-CSI channels of one cluster, stacked. Row blocks run over the APs of
/// M_k in ascending order; columns over the users of C_k \ {k} in ascending
/// order. `own` is h_k stacked in the same AP order.
struct AggregatedChannel {
  MatrixXcd interferers;  // (N*|M_k|) x (|C_k|-1)
  VectorXcd own;          // N*|M_k|
};

inline AggregatedChannel aggregate_channel(const ChannelRealization& ch, const ClusterPlan& plan,
                                           int k) {
  const int N = ch.antennas;
  const auto& cluster = plan.serving.at(k);
  const int rows = N * static_cast<int>(cluster.size());

  std::vector<int> others;
  for (int i : plan.csi.at(k))
    if (i != k) others.push_back(i);

  AggregatedChannel agg;
  agg.interferers.resize(rows, static_cast<int>(others.size()));
  agg.own.resize(rows);
  for (int m = 0; m < static_cast<int>(cluster.size()); ++m) {
    const int l = cluster[m];
    agg.own.segment(m * N, N) = ch.of(k, l);
    for (int n = 0; n < static_cast<int>(others.size()); ++n)
      agg.interferers.block(m * N, n, N, 1) = ch.of(others[n], l);
  }
  return agg;
}

/// Orthonormal basis N_k of the null space of Htilde_k^H, with per-AP row
/// blocks of `block_rows` rows each.
struct NullSpaceBasis {
  MatrixXcd basis;     // (N*|M_k|) x dim
  int block_rows = 0;  // N

  int dim() const { return static_cast<int>(basis.cols()); }
  int num_blocks() const { return static_cast<int>(basis.rows()) / block_rows; }
  Eigen::Block<const MatrixXcd> block(int m) const {
    return basis.middleRows(m * block_rows, block_rows);
  }
};

/// SVD of Htilde^H; right singular vectors below the rank tolerance
/// 1e-10 * sigma_max span the null space. Rank deficiency widens the basis.
inline NullSpaceBasis null_space(const MatrixXcd& interferers, int block_rows) {
  NullSpaceBasis ns;
  ns.block_rows = block_rows;
  const int rows = static_cast<int>(interferers.rows());
  if (interferers.cols() == 0) {
    ns.basis = MatrixXcd::Identity(rows, rows);
    return ns;
  }
  Eigen::JacobiSVD<MatrixXcd> svd(interferers.adjoint(), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  ns.basis = svd.matrixV().rightCols(rows - rank);
  return ns;
}

/// One user's precoder: stacked vector plus its per-AP split.
struct UserPrecoder {
  VectorXcd stacked;                    // N*|M_k|
  std::vector<VectorXcd> directions;    // unit vectors, one per AP in M_k order
  std::vector<double> powers;           // rho_{k,l}, same order
};

struct PrecodingSolution {
  std::vector<UserPrecoder> users;

  double power_at(int k, int ap_pos) const { return users.at(k).powers.at(ap_pos); }
};

/// w_k = N_k c_k split into N-length segments; rho = segment squared norm,
/// direction = normalized segment. A zero segment gets rho = 0 and the first
/// unit basis vector as placeholder direction.
inline UserPrecoder assemble_precoder(const NullSpaceBasis& ns, const VectorXcd& coeff) {
  UserPrecoder p;
  p.stacked = ns.basis * coeff;
  const int N = ns.block_rows;
  const int blocks = ns.num_blocks();
  p.directions.resize(blocks);
  p.powers.resize(blocks);
  for (int m = 0; m < blocks; ++m) {
    const VectorXcd seg = p.stacked.segment(m * N, N);
    const double pw = seg.squaredNorm();
    p.powers[m] = pw;
    if (pw > 0.0) {
      p.directions[m] = seg / std::sqrt(pw);
    } else {
      p.directions[m] = VectorXcd::Zero(N);
      p.directions[m](0) = 1.0;
    }
  }
  return p;
}

/// Decoupled baseline: stack the channels of all users in C_k (own included),
/// take the k-column of the pseudo-inverse adjoint, split per AP and normalize
/// each segment. Power is assigned separately.
struct PinvPrecoder {
  VectorXcd stacked;                  // pre-normalization ZF direction
  std::vector<VectorXcd> directions;  // unit per-AP segments
};

inline PinvPrecoder pinv_precoder(const ChannelRealization& ch, const ClusterPlan& plan, int k) {
  const int N = ch.antennas;
  const auto& cluster = plan.serving.at(k);
  const auto& share = plan.csi.at(k);
  const int rows = N * static_cast<int>(cluster.size());

  MatrixXcd stack(rows, static_cast<int>(share.size()));
  int own_col = 0;
  for (int n = 0; n < static_cast<int>(share.size()); ++n) {
    if (share[n] == k) own_col = n;
    for (int m = 0; m < static_cast<int>(cluster.size()); ++m)
      stack.block(m * N, n, N, 1) = ch.of(share[n], cluster[m]);
  }

  PinvPrecoder p;
  const MatrixXcd gram = stack.adjoint() * stack;
  Eigen::LDLT<MatrixXcd> ldlt(gram);
  VectorXcd rhs = VectorXcd::Zero(share.size());
  rhs(own_col) = 1.0;
  const VectorXcd x = ldlt.solve(rhs);
  const double residual = (gram * x - rhs).norm();
  if (ldlt.info() != Eigen::Success || !x.allFinite() || residual > 1e-6) {
    std::cerr << "pinv_precoder: singular channel stack for user " << k
              << ", falling back to matched filter\n";
    p.stacked = stack.col(own_col);
  } else {
    p.stacked = stack * x;  // satisfies h_i^H w = delta_{ik} over C_k
  }

  p.directions.resize(cluster.size());
  for (int m = 0; m < static_cast<int>(cluster.size()); ++m) {
    VectorXcd seg = p.stacked.segment(m * N, N);
    const double nrm = seg.norm();
    if (nrm > 0.0) {
      p.directions[m] = seg / nrm;
    } else {
      p.directions[m] = VectorXcd::Zero(N);
      p.directions[m](0) = 1.0;
    }
  }
  return p;
}

/// EPA: every user served by AP l gets rho_max / |D_l|.
inline double equal_power_allocation(int served_count, double rho_max) {
  return rho_max / served_count;
}

/// Full PINV + EPA solution over all users.
inline PrecodingSolution build_pinv_epa_solution(const ChannelRealization& ch,
                                                 const ClusterPlan& plan, double rho_max) {
  PrecodingSolution sol;
  sol.users.resize(plan.num_users());
  for (int k = 0; k < plan.num_users(); ++k) {
    PinvPrecoder p = pinv_precoder(ch, plan, k);
    UserPrecoder& u = sol.users[k];
    const auto& cluster = plan.serving[k];
    const int N = ch.antennas;
    u.directions = std::move(p.directions);
    u.powers.resize(cluster.size());
    u.stacked.resize(N * static_cast<int>(cluster.size()));
    for (int m = 0; m < static_cast<int>(cluster.size()); ++m) {
      const int l = cluster[m];
      u.powers[m] = equal_power_allocation(static_cast<int>(plan.served[l].size()), rho_max);
      u.stacked.segment(m * N, N) = std::sqrt(u.powers[m]) * u.directions[m];
    }
  }
  return sol;
}

}  // namespace cfmimo
