#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "isacbeam/errors.hpp"

namespace isacbeam {

/// dBm -> linear milliwatt.
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

/// All scalar parameters of one problem instance. Powers and noise
/// variances are linear milliwatts; dB values are converted at the
/// configuration boundary, never inside the math.
struct SystemConfig {
  int n_tx = 16;     ///< transmit antennas
  int n_rx = 20;     ///< radar receive antennas
  int n_users = 4;   ///< single-antenna downlink users
  int n_slots = 30;  ///< sensing time slots

  double p_tx = 10.0;                       ///< transmit power budget, mW
  std::vector<double> sigma_c_sq{1.0, 1.0, 1.0, 1.0};  ///< per-user noise, mW
  double sigma_s_sq = 1.0;                  ///< radar receiver noise, mW

  double delta = 0.01;  ///< sum-rate weight in the joint objective
  std::complex<double> alpha{0.1 * std::sqrt(2.0 / 3.0),
                             0.1 * std::sqrt(1.0 / 3.0)};  ///< reflection coeff
  double theta = 0.0;  ///< target azimuth, radians

  double outer_tol = 1e-4;  ///< absolute objective-change stop for the outer loop
  int inner_iters = 20;     ///< fixed-point updates per outer iteration
  int max_outer = 500;      ///< outer iteration cap

  std::uint64_t seed = 1;  ///< channel realization seed

  double kappa() const { return 2.0 * n_slots / sigma_s_sq; }

  /// Throws InvalidInputError on the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidInputError(m); };
    if (n_tx < 1) fail("n_tx must be >= 1");
    if (n_rx < 1) fail("n_rx must be >= 1");
    if (n_users < 1) fail("n_users must be >= 1");
    if (n_slots < 1) fail("n_slots must be >= 1");
    if (!(p_tx > 0.0) || !std::isfinite(p_tx)) fail("p_tx must be positive");
    if (static_cast<int>(sigma_c_sq.size()) != n_users)
      fail("sigma_c_sq must have one entry per user");
    for (double s : sigma_c_sq)
      if (!(s > 0.0) || !std::isfinite(s)) fail("sigma_c_sq entries must be positive");
    if (!(sigma_s_sq > 0.0) || !std::isfinite(sigma_s_sq))
      fail("sigma_s_sq must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta)) fail("delta must be >= 0");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
      fail("alpha must be finite");
    if (!std::isfinite(theta) || std::abs(theta) > std::numbers::pi / 2)
      fail("theta must lie in [-pi/2, pi/2]");
    if (!(outer_tol > 0.0)) fail("outer_tol must be positive");
    if (inner_iters < 1) fail("inner_iters must be >= 1");
    if (max_outer < 1) fail("max_outer must be >= 1");
  }
};

/// Resizes the per-user noise vector for a different user count, keeping
/// the first entry as the common value. Used by the K sweep.
inline SystemConfig with_users(SystemConfig cfg, int k) {
  cfg.n_users = k;
  const double s0 = cfg.sigma_c_sq.empty() ? 1.0 : cfg.sigma_c_sq.front();
  cfg.sigma_c_sq.assign(static_cast<std::size_t>(k), s0);
  return cfg;
}

}  // namespace isacbeam
