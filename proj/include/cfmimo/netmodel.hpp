#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cfmimo/config.hpp"
#include "cfmimo/rng.hpp"

namespace cfmimo {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct Geometry {
  MatrixXd ap_positions;    // L x 2, meters
  MatrixXd user_positions;  // K x 2, meters
};

struct LargeScaleFading {
  MatrixXd beta;            // K x L, linear
  MatrixXd beta_db;         // K x L
  MatrixXd shadow_db;       // K x L
  MatrixXd distances;       // K x L, 3-D (includes AP height delta)
  MatrixXd user_distances;  // K x K, horizontal user-user distance
};

struct SpatialCorrelation {
  std::vector<MatrixXcd> R;  // K*L entries, N x N Hermitian PSD
  MatrixXd nominal_angle;    // K x L, radians

  const MatrixXcd& of(int k, int l, int L) const { return R[static_cast<std::size_t>(k) * L + l]; }
};

struct ChannelRealization {
  int num_users = 0;
  int num_aps = 0;
  int antennas = 0;
  std::uint64_t trial = 0;
  std::vector<VectorXcd> h;  // K*L entries, each N-dim

  const VectorXcd& of(int k, int l) const {
    return h[static_cast<std::size_t>(k) * num_aps + l];
  }
  VectorXcd& of(int k, int l) { return h[static_cast<std::size_t>(k) * num_aps + l]; }
};

namespace detail {

/// Most-square rows x cols factorization of L (rows <= cols).
inline std::pair<int, int> grid_shape(int num_aps) {
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(num_aps))));
  while (rows > 1 && num_aps % rows != 0) --rows;
  return {rows, num_aps / rows};
}

}  // namespace detail

/// APs on a centered uniform grid, users uniform over the square area.
inline Geometry generate_geometry(const NetworkConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate();
  const auto [rows, cols] = detail::grid_shape(cfg.num_aps);
  const double span_x = (cols - 1) * cfg.ap_grid_spacing;
  const double span_y = (rows - 1) * cfg.ap_grid_spacing;
  if (span_x > cfg.area_side || span_y > cfg.area_side)
    throw ConfigError("AP grid (" + std::to_string(rows) + "x" + std::to_string(cols) +
                      " at " + std::to_string(cfg.ap_grid_spacing) + " m) does not fit the area");
  const double off_x = (cfg.area_side - span_x) / 2.0;
  const double off_y = (cfg.area_side - span_y) / 2.0;

  Geometry geo;
  geo.ap_positions.resize(cfg.num_aps, 2);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int l = r * cols + c;
      geo.ap_positions(l, 0) = off_x + c * cfg.ap_grid_spacing;
      geo.ap_positions(l, 1) = off_y + r * cfg.ap_grid_spacing;
    }

  auto rng = make_substream(rng_seed, 0x6765);  // "ge"
  std::uniform_real_distribution<double> u(0.0, cfg.area_side);
  geo.user_positions.resize(cfg.num_users, 2);
  for (int k = 0; k < cfg.num_users; ++k) {
    geo.user_positions(k, 0) = u(rng);
    geo.user_positions(k, 1) = u(rng);
  }
  return geo;
}

/// Distance-dependent pathloss in dB, shadowing excluded.
inline double pathloss_db(double d_meters, const NetworkConfig& cfg = NetworkConfig{}) {
  if (d_meters <= 0.0) throw std::domain_error("pathloss_db: distance must be positive");
  return cfg.pathloss_intercept_db - cfg.pathloss_exponent_coeff * std::log10(d_meters);
}

/// Per-AP column of shadow values is jointly Gaussian with covariance
/// sigma^2 * 2^(-delta_ki / d_corr); columns for different APs are independent.
inline MatrixXd sample_shadowing(const Geometry& geo, const NetworkConfig& cfg,
                                 std::mt19937_64& rng) {
  const int K = static_cast<int>(geo.user_positions.rows());
  const int L = static_cast<int>(geo.ap_positions.rows());
  const double var = cfg.shadow_std_db * cfg.shadow_std_db;

  MatrixXd cov(K, K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) {
      const double delta = (geo.user_positions.row(k) - geo.user_positions.row(i)).norm();
      cov(k, i) = var * std::pow(2.0, -delta / cfg.shadow_decorr_m);
    }
  cov.diagonal().array() += 1e-10;  // jitter, negligible vs sigma^2

  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("shadow covariance factorization failed");
  const MatrixXd chol = llt.matrixL();

  MatrixXd shadow(K, L);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int l = 0; l < L; ++l) {
    VectorXd z(K);
    for (int k = 0; k < K; ++k) z(k) = n(rng);
    shadow.col(l) = chol * z;
  }
  return shadow;
}

/// Distances, shadowing and the resulting linear-scale pathloss matrix.
inline LargeScaleFading compute_large_scale(const Geometry& geo, const NetworkConfig& cfg,
                                            std::mt19937_64& rng) {
  const int K = static_cast<int>(geo.user_positions.rows());
  const int L = static_cast<int>(geo.ap_positions.rows());
  LargeScaleFading lsf;
  lsf.distances.resize(K, L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) {
      const double horiz = (geo.user_positions.row(k) - geo.ap_positions.row(l)).norm();
      lsf.distances(k, l) = std::sqrt(horiz * horiz + cfg.ap_height_delta * cfg.ap_height_delta);
    }
  lsf.user_distances.resize(K, K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i)
      lsf.user_distances(k, i) = (geo.user_positions.row(k) - geo.user_positions.row(i)).norm();

  lsf.shadow_db = sample_shadowing(geo, cfg, rng);
  lsf.beta_db.resize(K, L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      lsf.beta_db(k, l) = pathloss_db(lsf.distances(k, l), cfg) + lsf.shadow_db(k, l);
  lsf.beta = Eigen::pow(10.0, (lsf.beta_db / 10.0).array());
  return lsf;
}

/// Closed-form Gaussian local-scattering correlation for a half-wavelength ULA.
inline MatrixXcd spatial_correlation(double beta, double theta, double asd_rad, int antennas) {
  if (antennas < 1 || asd_rad <= 0.0 || beta <= 0.0)
    throw std::invalid_argument("spatial_correlation: need N >= 1, asd > 0, beta > 0");
  MatrixXcd R(antennas, antennas);
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  for (int m = 0; m < antennas; ++m)
    for (int n = 0; n < antennas; ++n) {
      const double gap = M_PI * (m - n);
      const double phase = gap * s;
      const double spread = gap * c * asd_rad;
      R(m, n) = beta * std::exp(-0.5 * spread * spread) *
                std::complex<double>(std::cos(phase), std::sin(phase));
    }
  // Diagonal is beta by construction; rescale guards against rounding only.
  const double tr = R.trace().real() / antennas;
  if (tr > 0.0 && tr != beta) R *= beta / tr;
  return R;
}

inline SpatialCorrelation build_correlations(const Geometry& geo, const LargeScaleFading& lsf,
                                             const NetworkConfig& cfg) {
  const int K = cfg.num_users;
  const int L = cfg.num_aps;
  SpatialCorrelation corr;
  corr.R.resize(static_cast<std::size_t>(K) * L);
  corr.nominal_angle.resize(K, L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) {
      const double dx = geo.user_positions(k, 0) - geo.ap_positions(l, 0);
      const double dy = geo.user_positions(k, 1) - geo.ap_positions(l, 1);
      const double theta = std::atan2(dy, dx);
      corr.nominal_angle(k, l) = theta;
      corr.R[static_cast<std::size_t>(k) * L + l] =
          spatial_correlation(lsf.beta(k, l), theta, cfg.asd_rad(), cfg.antennas_per_ap);
    }
  return corr;
}

/// h = R^{1/2} z with z ~ CN(0, I), via eigendecomposition so rank-deficient
/// correlation matrices are handled.
inline VectorXcd sample_channel(const MatrixXcd& R, std::mt19937_64& rng) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(R);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("sample_channel: eigendecomposition failed");
  const int N = static_cast<int>(R.rows());
  VectorXcd z(N);
  for (int i = 0; i < N; ++i) z(i) = sample_cn(rng);
  VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * z;
}

inline ChannelRealization sample_channels(const SpatialCorrelation& corr, const NetworkConfig& cfg,
                                          std::mt19937_64& rng, std::uint64_t trial = 0) {
  ChannelRealization ch;
  ch.num_users = cfg.num_users;
  ch.num_aps = cfg.num_aps;
  ch.antennas = cfg.antennas_per_ap;
  ch.trial = trial;
  ch.h.resize(static_cast<std::size_t>(cfg.num_users) * cfg.num_aps);
  for (int k = 0; k < cfg.num_users; ++k)
    for (int l = 0; l < cfg.num_aps; ++l)
      ch.of(k, l) = sample_channel(corr.of(k, l, cfg.num_aps), rng);
  return ch;
}

struct TrialRealization {
  Geometry geometry;
  LargeScaleFading fading;
  ChannelRealization channels;
};

/// Full per-trial pipeline on the trial's own substream; users are re-dropped
/// every trial.
inline TrialRealization generate_trial(const NetworkConfig& cfg, std::uint64_t master_seed,
                                       std::uint64_t trial) {
  TrialRealization t;
  const std::uint64_t trial_seed = splitmix64(master_seed) ^ splitmix64(trial * 2 + 1);
  t.geometry = generate_geometry(cfg, trial_seed);
  auto rng = make_substream(trial_seed, 0x6c73);  // "ls"
  t.fading = compute_large_scale(t.geometry, cfg, rng);
  const SpatialCorrelation corr = build_correlations(t.geometry, t.fading, cfg);
  auto ch_rng = make_substream(trial_seed, 0x6368);  // "ch"
  t.channels = sample_channels(corr, cfg, ch_rng, trial);
  return t;
}

}  // namespace cfmimo
