#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include "isacbeam/config.hpp"
#include "isacbeam/errors.hpp"
#include "isacbeam/rng.hpp"

namespace isacbeam {

/// Half-wavelength ULA steering vector with symmetric element indexing:
/// entry m (m = 0..n-1) is exp(1j * pi * (2m-n+1)/2 * sin(theta)), so the
/// broadside (theta = 0) vector is all ones.
inline Eigen::VectorXcd steering_vector(double theta, int n) {
  if (!std::isfinite(theta)) throw InvalidInputError("steering_vector: theta must be finite");
  if (n < 1) throw InvalidInputError("steering_vector: n must be >= 1");
  const double s = std::sin(theta);
  Eigen::VectorXcd a(n);
  for (int m = 0; m < n; ++m) {
    const double idx = (2.0 * m - n + 1.0) / 2.0;
    a(m) = std::polar(1.0, std::numbers::pi * idx * s);
  }
  return a;
}

/// Entrywise d/dtheta of steering_vector: entry m picks up the factor
/// 1j * pi * (2m-n+1)/2 * cos(theta).
inline Eigen::VectorXcd steering_derivative(double theta, int n) {
  if (!std::isfinite(theta)) throw InvalidInputError("steering_derivative: theta must be finite");
  if (n < 1) throw InvalidInputError("steering_derivative: n must be >= 1");
  const double c = std::cos(theta);
  Eigen::VectorXcd a = steering_vector(theta, n);
  for (int m = 0; m < n; ++m) {
    const double idx = (2.0 * m - n + 1.0) / 2.0;
    a(m) *= std::complex<double>(0.0, std::numbers::pi * idx * c);
  }
  return a;
}

/// Target geometry cached for one azimuth: steering vectors, their angle
/// derivatives, the rank-1 two-way channel G = a_rx a_tx^H and its
/// derivative g_dot = a_rx_dot a_tx^H + a_rx a_tx_dot^H.
struct SensingScene {
  Eigen::VectorXcd a_tx, a_rx;          // steering vectors
  Eigen::VectorXcd a_tx_dot, a_rx_dot;  // their theta derivatives
  Eigen::MatrixXcd g;                   // n_rx x n_tx two-way channel
  Eigen::MatrixXcd g_dot;               // its theta derivative
  std::complex<double> alpha;
  double kappa = 0.0;  // 2 * n_slots / sigma_s_sq
};

inline SensingScene build_scene(const SystemConfig& cfg) {
  cfg.validate();
  SensingScene s;
  s.a_tx = steering_vector(cfg.theta, cfg.n_tx);
  s.a_rx = steering_vector(cfg.theta, cfg.n_rx);
  s.a_tx_dot = steering_derivative(cfg.theta, cfg.n_tx);
  s.a_rx_dot = steering_derivative(cfg.theta, cfg.n_rx);
  s.g = s.a_rx * s.a_tx.adjoint();
  s.g_dot = s.a_rx_dot * s.a_tx.adjoint() + s.a_rx * s.a_tx_dot.adjoint();
  s.alpha = cfg.alpha;
  s.kappa = cfg.kappa();
  return s;
}

/// Downlink channel matrix, one column per user.
struct ChannelSet {
  Eigen::MatrixXcd h;       // n_tx x n_users
  std::uint64_t seed_used = 0;
};

/// i.i.d. CN(0,1) Rayleigh channels from cfg.seed. Same seed and
/// dimensions reproduce the matrix bit for bit.
inline ChannelSet generate_channels(const SystemConfig& cfg) {
  cfg.validate();
  NormalSampler rng(cfg.seed);
  return ChannelSet{complex_gaussian_matrix(rng, cfg.n_tx, cfg.n_users), cfg.seed};
}

}  // namespace isacbeam
