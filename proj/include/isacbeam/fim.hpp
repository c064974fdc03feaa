#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>

#include "isacbeam/comms.hpp"
#include "isacbeam/errors.hpp"
#include "isacbeam/model.hpp"

namespace isacbeam {

/// 3x3 Fisher information for the parameter vector (theta, Re alpha,
/// Im alpha), kept together with its blocks.
struct FisherInfo {
  Eigen::Matrix3d f = Eigen::Matrix3d::Zero();
  double f_theta_theta = 0.0;
  Eigen::RowVector2d f_theta_alpha = Eigen::RowVector2d::Zero();
  Eigen::Matrix2d f_alpha_alpha = Eigen::Matrix2d::Zero();
};

namespace detail {

/// Traces entering the FIM are real up to rounding; check, then drop the
/// imaginary residue.
inline double real_trace(std::complex<double> z, const char* who) {
  if (std::abs(z.imag()) > 1e-9 * std::max(1.0, std::abs(z.real())))
    throw InvalidInputError(std::string(who) + ": trace has a non-negligible imaginary part");
  return z.real();
}

}  // namespace detail

/// FIM blocks from the beamformer covariance R_x = W W^H:
///   F_tt = kappa |alpha|^2 tr(g_dot R_x g_dot^H)
///   F_ta = kappa Re{ conj(alpha) tr(g R_x g_dot^H) * [1, 1j] }
///   F_aa = kappa tr(g R_x g^H) I_2.
inline FisherInfo assemble_fim(const BeamformingMatrix& w, const SensingScene& scene) {
  if (w.w.rows() != scene.g.cols())
    throw InvalidInputError("assemble_fim: beamformer rows must match scene antennas");
  const Eigen::MatrixXcd rx = w.w * w.w.adjoint();
  // tr(g_dot R_x g_dot^H) = tr(R_x * (g_dot^H g_dot)), etc.
  const std::complex<double> t_dd = (rx * (scene.g_dot.adjoint() * scene.g_dot)).trace();
  const std::complex<double> t_gg = (rx * (scene.g.adjoint() * scene.g)).trace();
  const std::complex<double> t_gd = (rx * (scene.g_dot.adjoint() * scene.g)).trace();

  const double a2 = std::norm(scene.alpha);
  const std::complex<double> cross = std::conj(scene.alpha) * t_gd;

  FisherInfo fim;
  fim.f_theta_theta = scene.kappa * a2 * detail::real_trace(t_dd, "assemble_fim");
  fim.f_theta_alpha << scene.kappa * cross.real(),
      scene.kappa * (std::complex<double>(0.0, 1.0) * cross).real();
  fim.f_alpha_alpha =
      scene.kappa * detail::real_trace(t_gg, "assemble_fim") * Eigen::Matrix2d::Identity();

  fim.f(0, 0) = fim.f_theta_theta;
  fim.f.block<1, 2>(0, 1) = fim.f_theta_alpha;
  fim.f.block<2, 1>(1, 0) = fim.f_theta_alpha.transpose();
  fim.f.block<2, 2>(1, 1) = fim.f_alpha_alpha;
  return fim;
}

/// Inverse-FIM quantities: the Trace-Opt value tr(F^-1), the angle CRLB
/// (first diagonal of F^-1) and the surrogate weight matrix Phi = F^-2.
struct SensingDerived {
  Eigen::Matrix3d f_inv = Eigen::Matrix3d::Zero();
  double trace_f_inv = 0.0;
  double crlb_theta = 0.0;
  Eigen::Matrix3d phi = Eigen::Matrix3d::Zero();
};

/// Closed-form symmetric 3x3 inversion (adjugate over determinant).
/// Throws SingularFimError when det(F) <= 1e-12 * (tr F / 3)^3, a
/// unit-free threshold that flags beamformers orthogonal to the target.
inline SensingDerived derive_sensing(const FisherInfo& fim) {
  const Eigen::Matrix3d& m = fim.f;
  const double a = m(0, 0), b = m(0, 1), c = m(0, 2);
  const double d = m(1, 1), e = m(1, 2), f = m(2, 2);
  const double det = a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d);
  const double tr = a + d + f;
  const double mean = tr / 3.0;
  if (!(tr > 0.0) || !(det > 1e-12 * mean * mean * mean))
    throw SingularFimError("derive_sensing: FIM is numerically singular (det " +
                           std::to_string(det) + ")");

  SensingDerived out;
  Eigen::Matrix3d& inv = out.f_inv;
  inv(0, 0) = (d * f - e * e) / det;
  inv(0, 1) = (c * e - b * f) / det;
  inv(0, 2) = (b * e - c * d) / det;
  inv(1, 1) = (a * f - c * c) / det;
  inv(1, 2) = (b * c - a * e) / det;
  inv(2, 2) = (a * d - b * b) / det;
  inv(1, 0) = inv(0, 1);
  inv(2, 0) = inv(0, 2);
  inv(2, 1) = inv(1, 2);

  out.trace_f_inv = inv.trace();
  out.crlb_theta = inv(0, 0);
  out.phi = inv * inv;
  return out;
}

/// Quadratic-form matrix pulling the sensing surrogate tr(F(W) Phi) into
/// beamformer space:
///   Q = kappa (phi11 |alpha|^2 g_dot^H g_dot
///              + 2 (phi12 + 1j phi13) conj(alpha) g_dot^H g
///              + (phi22 + phi33) g^H g).
/// Q is generally non-Hermitian; only (Q + Q^H)/2 enters the quadratic
/// subproblem, yet Re{tr(W W^H Q)} = tr(F(W) Phi) holds as written.
inline Eigen::MatrixXcd assemble_q(const Eigen::Matrix3d& phi, const SensingScene& scene) {
  const double a2 = std::norm(scene.alpha);
  const std::complex<double> c12(phi(0, 1), phi(0, 2));
  return scene.kappa *
         (phi(0, 0) * a2 * (scene.g_dot.adjoint() * scene.g_dot) +
          2.0 * c12 * std::conj(scene.alpha) * (scene.g_dot.adjoint() * scene.g) +
          (phi(1, 1) + phi(2, 2)) * (scene.g.adjoint() * scene.g));
}

}  // namespace isacbeam
