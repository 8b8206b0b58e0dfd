#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "cfmimo/dualopt.hpp"
#include "cfmimo/metrics.hpp"
#include "test_util.hpp"

using namespace cfmimo;

namespace {

testutil::Instance single_link(double power, VectorXcd h) {
  testutil::Instance inst;
  inst.beta = Eigen::MatrixXd::Constant(1, 1, 1.0);
  inst.channels.num_users = 1;
  inst.channels.num_aps = 1;
  inst.channels.antennas = static_cast<int>(h.size());
  inst.channels.h = {h};
  inst.plan = build_cluster_plan(inst.beta, 1, 1, static_cast<int>(h.size()));
  return inst;
}

}  // namespace

TEST_CASE("sinr of a single interference-free link") {
  VectorXcd h(3);
  h << 1.0, std::complex<double>(0, 2.0), -1.0;
  auto inst = single_link(4.0, h);
  PrecodingSolution sol;
  sol.users.resize(1);
  sol.users[0].directions = {h / h.norm()};
  sol.users[0].powers = {4.0};
  sol.users[0].stacked = 2.0 * h / h.norm();
  CHECK(sinr(inst.channels, inst.plan, sol, 0) ==
        Catch::Approx(4.0 * h.squaredNorm()).epsilon(1e-12));

  SECTION("zero power means zero SINR") {
    sol.users[0].powers = {0.0};
    CHECK(sinr(inst.channels, inst.plan, sol, 0) == 0.0);
  }
  SECTION("SINR is invariant to a global phase rotation of the direction") {
    const double before = sinr(inst.channels, inst.plan, sol, 0);
    sol.users[0].directions[0] *= std::exp(std::complex<double>(0.0, 1.234));
    CHECK(sinr(inst.channels, inst.plan, sol, 0) == Catch::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("full CSI sharing nulls all interference") {
  auto inst = testutil::make_instance(2, 3, 4, 3, 2, 501);  // |C| = K = 2
  const auto res = run_dual_decomposition(inst.channels, inst.plan, 5.0, 10);
  for (int k = 0; k < 2; ++k) {
    const int other = 1 - k;
    // interference term from the other user's cluster, evaluated directly
    std::complex<double> acc = 0.0;
    const auto& u = res.solution.users[other];
    for (int m = 0; m < static_cast<int>(inst.plan.serving[other].size()); ++m)
      acc += std::sqrt(u.powers[m]) *
             inst.channels.of(k, inst.plan.serving[other][m]).dot(u.directions[m]);
    std::complex<double> sig = 0.0;
    const auto& v = res.solution.users[k];
    for (int m = 0; m < static_cast<int>(inst.plan.serving[k].size()); ++m)
      sig += std::sqrt(v.powers[m]) *
             inst.channels.of(k, inst.plan.serving[k][m]).dot(v.directions[m]);
    CHECK(std::norm(acc) < 1e-12 * std::norm(sig));
  }
}

TEST_CASE("sum spectral efficiency") {
  CHECK(sum_se({1.0}) == Catch::Approx(1.0));
  CHECK(sum_se({0.0}) == 0.0);
  CHECK(sum_se({3.0}) == Catch::Approx(2.0));
  CHECK(sum_se({1.0, 3.0}) == Catch::Approx(3.0));
  // report consistency: SE = log2(1 + SINR) element-wise
  auto inst = testutil::make_instance(3, 4, 2, 2, 2, 502);
  const auto res = run_dual_decomposition(inst.channels, inst.plan, 5.0, 3);
  const SeReport rep = evaluate(inst.channels, inst.plan, res.solution, 5.0, "pzf-dual");
  for (std::size_t i = 0; i < rep.sinr.size(); ++i) {
    CHECK(rep.sinr[i] >= 0.0);
    CHECK(rep.se[i] == Catch::Approx(std::log2(1.0 + rep.sinr[i])).margin(1e-15));
  }
  CHECK(rep.sum_se == Catch::Approx(sum_se(rep.sinr)).margin(1e-12));
}

TEST_CASE("fronthaul overhead accounting") {
  SECTION("paper parameters give an 87.5% reduction") {
    ExperimentConfig cfg;  // K=20, |M|=10, L=100, N=4, A=8, B=4
    const auto inst = testutil::make_instance(20, 100, 4, 10, 5, 503);
    const OverheadReport rep = overhead(cfg, inst.plan);
    CHECK(rep.avg_served_per_ap == Catch::Approx(2.0));  // K*|M|/L with all APs active
    CHECK(rep.reduction == Catch::Approx(0.875).margin(1e-12));
  }
  SECTION("distributed bit count is a plain product") {
    ExperimentConfig cfg;
    cfg.tau_d = 100;
    const auto inst = testutil::make_instance(20, 100, 4, 10, 5, 504);
    const OverheadReport rep = overhead(cfg, inst.plan);
    CHECK(rep.distributed_bits == Catch::Approx(100 * 2.0 * 4));  // tau_d * K_bar * B = 800
    CHECK(rep.centralized_bits == Catch::Approx(2.0 * 100 * 4 * 8));
    CHECK(rep.reduction == Catch::Approx(1.0 - rep.distributed_bits / rep.centralized_bits));
  }
}

TEST_CASE("per-AP power bookkeeping") {
  auto inst = testutil::make_instance(4, 5, 2, 2, 2, 505);
  const double rho_max = 8.0;
  const PrecodingSolution sol = build_pinv_epa_solution(inst.channels, inst.plan, rho_max);
  const VectorXd used = ap_used_power(inst.plan, sol);
  for (int l = 0; l < 5; ++l) {
    if (inst.plan.active(l))
      CHECK(used(l) == Catch::Approx(rho_max).epsilon(1e-12));
    else
      CHECK(used(l) == 0.0);
  }
  CHECK(max_power_violation(inst.plan, sol, rho_max) <= 1e-12);
  CHECK(max_power_violation(inst.plan, sol, rho_max / 2) == Catch::Approx(1.0).epsilon(1e-9));
}
