#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cfmimo/metrics.hpp"
#include "cfmimo/precoding.hpp"

namespace cfmimo {

// The optimizer works on the budget-normalized problem: per-AP constraint 1
// instead of rho_max. The closed-form coefficient direction is invariant to
// channel scaling, so raw channels can be used directly; rho_max re-enters
// only when the final precoder is assembled (w = sqrt(rho_max) * N_k * c_k).
// This keeps the dual variables and gradients O(1), where the paper's step
// size alpha = 0.05 is meaningful.

struct ClusterProblem {
  NullSpaceBasis basis;      // N_k
  VectorXcd own;             // stacked h_k, AP-ascending order
  VectorXcd own_projected;   // N_k^H h_k
  std::vector<int> cluster;  // M_k
};

inline std::vector<ClusterProblem> prepare_cluster_problems(const ChannelRealization& ch,
                                                            const ClusterPlan& plan) {
  std::vector<ClusterProblem> problems(plan.num_users());
  for (int k = 0; k < plan.num_users(); ++k) {
    AggregatedChannel agg = aggregate_channel(ch, plan, k);
    ClusterProblem& p = problems[k];
    p.basis = null_space(agg.interferers, ch.antennas);
    p.own = std::move(agg.own);
    p.own_projected = p.basis.basis.adjoint() * p.own;
    p.cluster = plan.serving[k];
  }
  return problems;
}

/// Maps AP indices to positions in the dual vector (active APs only).
struct ActiveApIndex {
  std::vector<int> active;       // ascending AP indices with |D_l| > 0
  std::vector<int> position;     // L -> index into `active`, or -1

  explicit ActiveApIndex(const ClusterPlan& plan) {
    position.assign(plan.num_aps(), -1);
    for (int l = 0; l < plan.num_aps(); ++l)
      if (plan.active(l)) {
        position[l] = static_cast<int>(active.size());
        active.push_back(l);
      }
  }
  int count() const { return static_cast<int>(active.size()); }
};

struct DualState {
  VectorXd lambda;       // one per active AP, always >= 0
  int iteration = 0;
  double step_size = 0.05;
  VectorXd gradient;     // last computed, per active AP
  long scalars_exchanged = 0;
  long bytes_exchanged = 0;
};

struct SubproblemSolution {
  VectorXcd coeff;          // c_k*
  double value_term = 0.0;  // min of the per-cluster Lagrangian piece
  bool degenerate = false;  // h_k orthogonal to span(N_k); power forced to 0
};

constexpr double kDefaultLambdaFloor = 1e-8;

/// Closed-form minimizer of  sum_l lambda_l ||N_{k,l} c||^2 - ln(h^H N_k c):
/// c* = A u / sqrt(u^H A u) with A = (sum_l 2 lambda_l N_{k,l}^H N_{k,l})^{-1}
/// and u = N_k^H h_k. Lambdas are floored at lambda_min so A stays invertible.
inline SubproblemSolution solve_subproblem(const ClusterProblem& prob,
                                           const VectorXd& lambda_cluster,
                                           double lambda_min = kDefaultLambdaFloor) {
  const int dim = prob.basis.dim();
  SubproblemSolution sol;
  // h_k (numerically) orthogonal to span(N_k): no useful beamforming direction.
  if (prob.own_projected.norm() <= 1e-12 * prob.own.norm()) {
    sol.coeff = VectorXcd::Zero(dim);
    sol.degenerate = true;
    return sol;
  }

  MatrixXcd scale = MatrixXcd::Zero(dim, dim);
  for (int m = 0; m < prob.basis.num_blocks(); ++m) {
    const double lam = std::max(lambda_cluster(m), lambda_min);
    const auto blk = prob.basis.block(m);
    scale.noalias() += (2.0 * lam) * (blk.adjoint() * blk);
  }
  Eigen::LLT<MatrixXcd> llt(scale);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("solve_subproblem: weighted Gram matrix not positive definite");
  const VectorXcd y = llt.solve(prob.own_projected);
  const double denom = prob.own_projected.dot(y).real();  // u^H A u, real > 0
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    sol.coeff = VectorXcd::Zero(dim);
    sol.degenerate = true;
    return sol;
  }
  sol.coeff = y / std::sqrt(denom);
  sol.value_term = 0.5 - 0.5 * std::log(denom);
  return sol;
}

/// d g / d lambda_l = sum_{k in D_l} ||N_{k,l} c_k*||^2 - budget.
inline VectorXd dual_gradient(const std::vector<SubproblemSolution>& subs,
                              const std::vector<ClusterProblem>& problems,
                              const ClusterPlan& plan, const ActiveApIndex& index,
                              double budget) {
  VectorXd grad = VectorXd::Constant(index.count(), -budget);
  for (int k = 0; k < plan.num_users(); ++k) {
    const auto& prob = problems[k];
    for (int m = 0; m < static_cast<int>(prob.cluster.size()); ++m) {
      const int pos = index.position[prob.cluster[m]];
      grad(pos) += (prob.basis.block(m) * subs[k].coeff).squaredNorm();
    }
  }
  return grad;
}

inline VectorXd project_update(const VectorXd& lambda, double alpha, const VectorXd& gradient) {
  return (lambda + alpha * gradient).cwiseMax(0.0);
}

/// Dual objective g(lambda), evaluated through the per-cluster minima.
inline double dual_value(const std::vector<ClusterProblem>& problems, const ClusterPlan& plan,
                         const ActiveApIndex& index, const VectorXd& lambda, double budget,
                         double lambda_min = kDefaultLambdaFloor) {
  double value = -budget * lambda.sum();
  for (int k = 0; k < plan.num_users(); ++k) {
    const auto& prob = problems[k];
    VectorXd lam(prob.cluster.size());
    for (int m = 0; m < static_cast<int>(prob.cluster.size()); ++m)
      lam(m) = lambda(index.position[prob.cluster[m]]);
    value += solve_subproblem(prob, lam, lambda_min).value_term;
  }
  return value;
}

struct IterationRecord {
  int iteration = 0;
  VectorXd lambda;            // value used during the round (per active AP)
  VectorXd ap_power;          // raw units, per AP
  double approx_objective = 0.0;  // sum_k ln(h_k^H w_k) on the assembled solution
  double sum_se = 0.0;
  int scalars_down = 0;
  int scalars_up = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
};

struct MessageTally {
  long scalars = 0;
  long bytes = 0;
};

/// One scalar down (lambda_l) and one up (gradient) per active AP and round.
inline MessageTally account_messages(const IterationTrace& trace, int scalar_bytes) {
  MessageTally tally;
  for (const auto& rec : trace.records) tally.scalars += rec.scalars_down + rec.scalars_up;
  tally.bytes = tally.scalars * scalar_bytes;
  return tally;
}

struct DualRunResult {
  PrecodingSolution solution;
  IterationTrace trace;
  DualState state;
  int iterations_run = 0;
};

struct DualRunOptions {
  double alpha = 0.05;
  // Floor for lambda inside A_k. Defaults to alpha: a floor of at least the
  // step size keeps the per-user power (~ 1/(2*floor)) small enough that a
  // zero-crossing lambda cannot be catapulted by the fixed-step update, and
  // any AP whose optimal multiplier sits below the floor stays within budget.
  double lambda_min = -1.0;  // < 0: use alpha
  bool simulate_messages = true;  // tally fronthaul scalars
  bool trace_every_round = true;  // false: record the final round only
  bool evaluate_se = true;        // per-round SE via metrics (costs K^2)
  // > 0: stop when the projected-gradient residual
  // ||lambda - [lambda + alpha*grad]_+||_inf / alpha drops below this.
  double gradient_tolerance = 0.0;
  int scalar_bytes = 4;

  double lambda_floor() const { return lambda_min >= 0.0 ? lambda_min : alpha; }
};

namespace detail {

inline PrecodingSolution assemble_solution(const std::vector<ClusterProblem>& problems,
                                           const std::vector<SubproblemSolution>& subs,
                                           double rho_max) {
  PrecodingSolution sol;
  sol.users.resize(problems.size());
  const double scale = std::sqrt(rho_max);
  for (std::size_t k = 0; k < problems.size(); ++k)
    sol.users[k] = assemble_precoder(problems[k].basis, scale * subs[k].coeff);
  return sol;
}

}  // namespace detail

/// The round protocol: CPU sends lambda to the active APs, each cluster master
/// solves the closed-form subproblem, APs report their gradient entries, the
/// CPU takes a projected ascent step. The returned precoders are the ones
/// computed in the final round.
///
/// lambda_l starts at |D_l| / (2 * |M| * budget): if AP l splits its budget
/// across the |D_l| users it serves and each user spreads its power roughly
/// evenly over its |M| serving APs, ||c_k||^2 = 1/(2*lambda) pins lambda at
/// that value. Empirically this lands within a few fixed-step updates of the
/// converged multipliers, which the single-user scale 1/(2*budget) does not
/// once |M| > 1.
inline DualRunResult run_dual_rounds(const ChannelRealization& ch, const ClusterPlan& plan,
                                     double rho_max, int max_iters, const DualRunOptions& opt) {
  const std::vector<ClusterProblem> problems = prepare_cluster_problems(ch, plan);
  const ActiveApIndex index(plan);
  const double budget = 1.0;

  DualRunResult out;
  out.state.step_size = opt.alpha;
  out.state.lambda.resize(index.count());
  for (int i = 0; i < index.count(); ++i)
    out.state.lambda(i) = static_cast<double>(plan.served[index.active[i]].size()) /
                          (2.0 * plan.cluster_size() * budget);

  std::vector<SubproblemSolution> subs(problems.size());
  auto solve_all = [&](const VectorXd& lambda) {
    for (std::size_t k = 0; k < problems.size(); ++k) {
      const auto& prob = problems[k];
      VectorXd lam(prob.cluster.size());
      for (int m = 0; m < static_cast<int>(prob.cluster.size()); ++m)
        lam(m) = lambda(index.position[prob.cluster[m]]);
      subs[k] = solve_subproblem(prob, lam, opt.lambda_floor());
    }
  };

  for (int n = 0; n < max_iters; ++n) {
    solve_all(out.state.lambda);
    const VectorXd grad = dual_gradient(subs, problems, plan, index, budget);
    if (!grad.allFinite())
      throw std::runtime_error("run_dual_rounds: non-finite dual gradient at iteration " +
                               std::to_string(n));

    if (opt.simulate_messages) {
      out.state.scalars_exchanged += 2L * index.count();
      out.state.bytes_exchanged += 2L * index.count() * opt.scalar_bytes;
    }

    // Projected residual: how far the ascent step actually moves lambda, per
    // unit step. Zero at lambda_l = 0 with a negative gradient (inactive
    // constraint), so it measures KKT violation rather than raw gradient size.
    const double resid =
        ((out.state.lambda - project_update(out.state.lambda, opt.alpha, grad)) / opt.alpha)
            .lpNorm<Eigen::Infinity>();
    const bool last = (n == max_iters - 1) ||
                      (opt.gradient_tolerance > 0.0 && resid < opt.gradient_tolerance);
    if (opt.trace_every_round || last) {
      IterationRecord rec;
      rec.iteration = n + 1;
      rec.lambda = out.state.lambda;
      rec.scalars_down = opt.simulate_messages ? index.count() : 0;
      rec.scalars_up = opt.simulate_messages ? index.count() : 0;
      const PrecodingSolution snapshot = detail::assemble_solution(problems, subs, rho_max);
      rec.ap_power = ap_used_power(plan, snapshot);
      rec.approx_objective = 0.0;
      for (std::size_t k = 0; k < problems.size(); ++k)
        rec.approx_objective +=
            std::log(std::max(std::real(problems[k].own.dot(snapshot.users[k].stacked)), 1e-300));
      if (opt.evaluate_se) rec.sum_se = sum_se(all_sinrs(ch, plan, snapshot));
      out.trace.records.push_back(std::move(rec));
    }

    out.state.gradient = grad;
    out.state.iteration = n + 1;
    out.iterations_run = n + 1;
    if (last) break;
    out.state.lambda = project_update(out.state.lambda, opt.alpha, grad);
  }

  if (out.iterations_run == 0) solve_all(out.state.lambda);  // max_iters == 0
  out.solution = detail::assemble_solution(problems, subs, rho_max);
  return out;
}

/// Distributed scheme: fixed iteration budget, message tally on.
inline DualRunResult run_dual_decomposition(const ChannelRealization& ch, const ClusterPlan& plan,
                                            double rho_max, int iterations, double alpha = 0.05,
                                            int scalar_bytes = 4, bool evaluate_se = true) {
  DualRunOptions opt;
  opt.alpha = alpha;
  opt.scalar_bytes = scalar_bytes;
  opt.evaluate_se = evaluate_se;
  return run_dual_rounds(ch, plan, rho_max, iterations, opt);
}

/// Centralized benchmark: same arithmetic, no message simulation, run until
/// the projected-gradient residual drops below 1e-6 * budget or 2000 rounds.
inline DualRunResult run_centralized_reference(const ChannelRealization& ch,
                                               const ClusterPlan& plan, double rho_max,
                                               double alpha = 0.05, int max_iters = 2000) {
  DualRunOptions opt;
  opt.alpha = alpha;
  opt.simulate_messages = false;
  opt.trace_every_round = false;
  opt.evaluate_se = false;
  opt.gradient_tolerance = 1e-7;  // budget-normalized, margin under 1e-6 KKT checks
  return run_dual_rounds(ch, plan, rho_max, max_iters, opt);
}

}  // namespace cfmimo
