#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "isacbeam/errors.hpp"
#include "isacbeam/model.hpp"

namespace isacbeam {

/// The n_tx x n_users decision variable. Feasible means full transmit
/// power: tr(W W^H) == p_tx (checked to 1e-9 relative).
struct BeamformingMatrix {
  Eigen::MatrixXcd w;
  double p_tx = 0.0;

  double power() const { return w.squaredNorm(); }
  bool feasible(double rel_tol = 1e-9) const {
    return std::abs(power() - p_tx) <= rel_tol * p_tx;
  }
};

struct RateResult {
  std::vector<double> per_user;  // nats/s/Hz
  double sum = 0.0;
};

namespace detail {

inline void check_dims(const BeamformingMatrix& w, const ChannelSet& h,
                       const std::vector<double>& sigma_c_sq, const char* who) {
  if (w.w.rows() != h.h.rows() || w.w.cols() != h.h.cols() ||
      static_cast<Eigen::Index>(sigma_c_sq.size()) != h.h.cols())
    throw InvalidInputError(std::string(who) + ": dimension mismatch");
}

/// Received powers |h_k^H w_j|^2 for all (k, j).
inline Eigen::MatrixXd received_powers(const Eigen::MatrixXcd& w,
                                       const Eigen::MatrixXcd& h) {
  return (h.adjoint() * w).cwiseAbs2();
}

}  // namespace detail

/// Per-user achievable rates ln(1 + SINR_k) and their sum, in nats.
inline RateResult compute_rates(const BeamformingMatrix& w, const ChannelSet& h,
                                const std::vector<double>& sigma_c_sq) {
  detail::check_dims(w, h, sigma_c_sq, "compute_rates");
  const Eigen::MatrixXd p = detail::received_powers(w.w, h.h);
  const int k_users = static_cast<int>(h.h.cols());
  RateResult out;
  out.per_user.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const double signal = p(k, k);
    const double interference = p.row(k).sum() - signal;
    const double r = std::log1p(signal / (interference + sigma_c_sq[k]));
    out.per_user[k] = r;
    out.sum += r;
  }
  return out;
}

/// Expansion-point auxiliaries for the concave rate surrogate.
/// xi_k is the SINR, eta_k = xi_k / (h_k^H w_k), and beta_k = xi_k over
/// the total received power plus noise. By construction
/// beta_k * (sum_j |h_k^H w_j|^2 + sigma_ck^2) == xi_k.
struct CommAuxiliaries {
  std::vector<double> xi;
  std::vector<std::complex<double>> eta;
  std::vector<double> beta;
};

inline CommAuxiliaries update_comm_auxiliaries(const BeamformingMatrix& w,
                                               const ChannelSet& h,
                                               const std::vector<double>& sigma_c_sq) {
  detail::check_dims(w, h, sigma_c_sq, "update_comm_auxiliaries");
  const Eigen::MatrixXcd hw = h.h.adjoint() * w.w;  // (k, j) = h_k^H w_j
  const int k_users = static_cast<int>(h.h.cols());
  CommAuxiliaries aux;
  aux.xi.resize(k_users);
  aux.eta.resize(k_users);
  aux.beta.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const std::complex<double> z = hw(k, k);
    if (std::abs(z) < 1e-30)
      throw DegenerateBeamError(k, "update_comm_auxiliaries: |h_k^H w_k| ~ 0 for user " +
                                       std::to_string(k));
    const double signal = std::norm(z);
    const double total = hw.row(k).cwiseAbs2().sum();
    const double denom = total - signal + sigma_c_sq[k];
    aux.xi[k] = signal / denom;
    aux.eta[k] = aux.xi[k] / z;
    aux.beta[k] = aux.xi[k] / (total + sigma_c_sq[k]);
  }
  return aux;
}

struct SurrogateValues {
  std::vector<double> per_user;
  double sum = 0.0;
};

/// Concave minorant of the per-user rates built at the expansion point
/// behind `aux`:
///   f_k = log(1+xi_k) + 2 Re{h_k^H w_k eta_k}
///         - beta_k (sum_j |h_k^H w_j|^2 + sigma_ck^2) - xi_k.
/// Equals R_k at the expansion point and never exceeds R_k elsewhere.
inline SurrogateValues eval_comm_surrogate(const BeamformingMatrix& w,
                                           const CommAuxiliaries& aux,
                                           const ChannelSet& h,
                                           const std::vector<double>& sigma_c_sq) {
  detail::check_dims(w, h, sigma_c_sq, "eval_comm_surrogate");
  if (aux.xi.size() != sigma_c_sq.size())
    throw InvalidInputError("eval_comm_surrogate: auxiliary size mismatch");
  const Eigen::MatrixXcd hw = h.h.adjoint() * w.w;
  const int k_users = static_cast<int>(h.h.cols());
  SurrogateValues out;
  out.per_user.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const double total = hw.row(k).cwiseAbs2().sum();
    const double f = std::log1p(aux.xi[k]) + 2.0 * (hw(k, k) * aux.eta[k]).real() -
                     aux.beta[k] * (total + sigma_c_sq[k]) - aux.xi[k];
    out.per_user[k] = f;
    out.sum += f;
  }
  return out;
}

}  // namespace isacbeam
