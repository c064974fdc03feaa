#pragma once

// Brute-force and finite-difference reference routes used by the test
// and acceptance suites. Nothing here is called by the solver.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>

#include "isacbeam/comms.hpp"
#include "isacbeam/config.hpp"
#include "isacbeam/errors.hpp"
#include "isacbeam/model.hpp"
#include "isacbeam/rng.hpp"
#include "isacbeam/solver.hpp"

namespace isacbeam::oracle {

/// A probe of the objective hit a point where it is undefined (singular
/// FIM inside a finite-difference stencil).
class OracleProbeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double relative_error(double primary, double oracle_value) {
  return std::abs(primary - oracle_value) / std::max(std::abs(oracle_value), 1e-30);
}

template <typename DerivedA, typename DerivedB>
double relative_error(const Eigen::MatrixBase<DerivedA>& primary,
                      const Eigen::MatrixBase<DerivedB>& oracle_value) {
  return (primary - oracle_value).norm() / std::max(oracle_value.norm(), 1e-30);
}

struct OracleReport {
  std::string quantity;
  double primary = 0.0;  // scalar value, or Frobenius norm for matrices
  double oracle = 0.0;
  double relative_error = 0.0;
};

inline OracleReport make_report(std::string quantity, double primary, double oracle_value) {
  return {std::move(quantity), primary, oracle_value, relative_error(primary, oracle_value)};
}

/// Fisher information evaluated from first principles: build the
/// noiseless echo x = vec(alpha G W S) with an explicit orthogonal
/// surrogate signal S (K x L, S S^H = L I, here sqrt(L) [I 0]),
/// differentiate x by central differences in theta (step 1e-6) and
/// analytically in Re/Im alpha, and form (2/sigma_s^2) Re{J^H J}.
inline Eigen::Matrix3d numeric_fim(const BeamformingMatrix& w, double theta,
                                   std::complex<double> alpha, int n_rx, int n_slots,
                                   double sigma_s_sq, double step = 1e-6) {
  const int n_tx = static_cast<int>(w.w.rows());
  const int k_users = static_cast<int>(w.w.cols());
  if (n_slots < k_users)
    throw InvalidInputError("numeric_fim: need n_slots >= n_users for an orthogonal signal");

  Eigen::MatrixXcd s_bar = Eigen::MatrixXcd::Zero(k_users, n_slots);
  for (int k = 0; k < k_users; ++k) s_bar(k, k) = std::sqrt(static_cast<double>(n_slots));
  const Eigen::MatrixXcd x_bar = w.w * s_bar;  // n_tx x n_slots

  auto g_at = [&](double th) -> Eigen::MatrixXcd {
    return steering_vector(th, n_rx) * steering_vector(th, n_tx).adjoint();
  };
  const Eigen::MatrixXcd g = g_at(theta);
  const Eigen::MatrixXcd g_fd = (g_at(theta + step) - g_at(theta - step)) / (2.0 * step);

  const Eigen::MatrixXcd d_theta = alpha * (g_fd * x_bar);
  const Eigen::MatrixXcd d_re = g * x_bar;
  const Eigen::MatrixXcd d_im = std::complex<double>(0.0, 1.0) * d_re;

  Eigen::MatrixXcd jac(static_cast<Eigen::Index>(n_rx) * n_slots, 3);
  jac.col(0) = d_theta.reshaped();
  jac.col(1) = d_re.reshaped();
  jac.col(2) = d_im.reshaped();

  const Eigen::MatrixXcd gram = jac.adjoint() * jac;
  return (2.0 / sigma_s_sq) * gram.real();
}

template <typename Objective>
struct SearchResult {
  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd best_w;
  using objective_type = Objective;
};

/// Best of `samples` uniform-in-direction points on the power sphere
/// (seeded complex Gaussian, then scaling projection). Ties resolve to
/// the earliest sample, so the result is schedule-independent.
template <typename Objective>
auto random_search_sphere(Objective&& objective, int n_tx, int k, double p_tx,
                          long samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidInputError("random_search_sphere: samples must be >= 1");
  NormalSampler rng(seed);
  SearchResult<Objective> res;
  for (long i = 0; i < samples; ++i) {
    const BeamformingMatrix cand = project_power(complex_gaussian_matrix(rng, n_tx, k), p_tx);
    const double v = objective(cand);
    if (v > res.best_value) {
      res.best_value = v;
      res.best_w = cand.w;
    }
  }
  return res;
}

/// Central-difference gradient of a real functional of W over the real
/// and imaginary part of every entry, packed as G_mk = df/dRe + 1j df/dIm.
template <typename Functional>
Eigen::MatrixXcd fd_gradient(Functional&& f, const Eigen::MatrixXcd& w, double step = 1e-6) {
  Eigen::MatrixXcd grad(w.rows(), w.cols());
  Eigen::MatrixXcd probe = w;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const std::complex<double> orig = w(r, c);
      probe(r, c) = orig + step;
      const double fp_re = f(probe);
      probe(r, c) = orig - step;
      const double fm_re = f(probe);
      probe(r, c) = orig + std::complex<double>(0.0, step);
      const double fp_im = f(probe);
      probe(r, c) = orig - std::complex<double>(0.0, step);
      const double fm_im = f(probe);
      probe(r, c) = orig;
      grad(r, c) = std::complex<double>((fp_re - fm_re) / (2.0 * step),
                                        (fp_im - fm_im) / (2.0 * step));
    }
  }
  return grad;
}

/// fd_gradient applied to the joint objective delta * sum rate - tr(F^-1).
inline Eigen::MatrixXcd fd_objective_gradient(const BeamformingMatrix& w,
                                              const SystemConfig& cfg, const ChannelSet& h,
                                              const SensingScene& scene, double step = 1e-6) {
  try {
    return fd_gradient(
        [&](const Eigen::MatrixXcd& probe) {
          return eval_objective(BeamformingMatrix{probe, cfg.p_tx}, h, scene, cfg).objective;
        },
        w.w, step);
  } catch (const SingularFimError& e) {
    throw OracleProbeError(std::string("fd_objective_gradient: ") + e.what());
  }
}

/// Norm of the gradient component tangent to the power sphere, relative
/// to the full gradient norm. Small at (approximately) stationary points.
inline double sphere_tangent_ratio(const Eigen::MatrixXcd& grad, const Eigen::MatrixXcd& w) {
  const double radial = (w.conjugate().cwiseProduct(grad)).sum().real() / w.squaredNorm();
  const Eigen::MatrixXcd tangent = grad - radial * w;
  return tangent.norm() / (grad.norm() + 1e-12);
}

}  // namespace isacbeam::oracle
