#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "isacbeam/comms.hpp"
#include "isacbeam/config.hpp"
#include "isacbeam/errors.hpp"
#include "isacbeam/fim.hpp"
#include "isacbeam/model.hpp"

namespace isacbeam {

namespace detail {

inline constexpr std::uint64_t kPowerIterSeed = 0x5ca1ab1e5eed0001ULL;

struct PowerPass {
  double rayleigh = 0.0;
  bool converged = false;
};

/// Plain power iteration on a Hermitian matrix, tracking the Rayleigh
/// quotient of the current vector. Stops when successive quotients agree
/// to `tol` or after `cap` products.
inline PowerPass power_pass(const Eigen::MatrixXcd& m, Eigen::VectorXcd v, int cap,
                            double tol) {
  v.normalize();
  double rho_prev = 0.0;
  bool have_prev = false;
  for (int it = 0; it < cap; ++it) {
    const Eigen::VectorXcd u = m * v;
    const double rho = v.dot(u).real();
    if (have_prev && std::abs(rho - rho_prev) <= tol * std::max(1.0, std::abs(rho)))
      return {rho, true};
    rho_prev = rho;
    have_prev = true;
    const double un = u.norm();
    if (un < 1e-300) return {rho, false};  // v fell into the kernel
    v = u / un;
  }
  return {rho_prev, false};
}

}  // namespace detail

/// Upper estimate of the largest (algebraic) eigenvalue of a Hermitian
/// matrix by power iteration: tolerance 1e-9, at most 200 products per
/// pass, deterministic seeded start vector. The matrix is normalized by
/// its Frobenius norm first; if the dominant-magnitude eigenvalue is
/// negative a second pass runs on the shifted matrix. Unconverged passes
/// fall back to the Frobenius-norm bound, which always dominates the
/// spectrum. Guarantee: result >= lambda_max(m) - 1e-6 * ||m||_F.
inline double dominant_eigenvalue(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) throw InvalidInputError("dominant_eigenvalue: matrix not square");
  const double fro = m.norm();
  if ((m - m.adjoint()).norm() > 1e-10 * (1.0 + fro))
    throw InvalidInputError("dominant_eigenvalue: matrix not Hermitian");
  if (fro < 1e-300) return 0.0;

  const Eigen::MatrixXcd mn = m / fro;  // spectrum inside [-1, 1]
  NormalSampler rng(detail::kPowerIterSeed);
  Eigen::VectorXcd v0(m.rows());
  for (Eigen::Index i = 0; i < v0.size(); ++i) v0(i) = rng.complex_normal();

  constexpr int kCap = 200;
  constexpr double kTol = 1e-9;
  const detail::PowerPass first = detail::power_pass(mn, v0, kCap, kTol);
  if (first.converged && first.rayleigh > 0.0) return fro * first.rayleigh;

  // Dominant magnitude sits on the negative side (or is undecided):
  // shift into the PSD range and take the top of the shifted spectrum.
  const double shift =
      first.converged ? std::abs(first.rayleigh) * (1.0 + 1e-3) + 1e-3 : 1.0;
  Eigen::MatrixXcd shifted = mn;
  shifted.diagonal().array() += shift;
  const detail::PowerPass second = detail::power_pass(shifted, v0, kCap, kTol);
  if (second.converged) return fro * (second.rayleigh - shift);
  return fro;  // Frobenius fallback
}

/// Scaling projection onto the transmit-power sphere tr(W W^H) = p_tx.
inline BeamformingMatrix project_power(const Eigen::MatrixXcd& p, double p_tx) {
  const double norm2 = p.squaredNorm();
  if (norm2 < 1e-60) throw ZeroProjectionError("project_power: zero matrix");
  if (!(p_tx > 0.0)) throw InvalidInputError("project_power: p_tx must be positive");
  return BeamformingMatrix{std::sqrt(p_tx / norm2) * p, p_tx};
}

/// Everything frozen at one outer expansion point: rate auxiliaries, the
/// sensing weight Phi = F^-2, the quadratic-form matrices and the shift.
///
/// sigma1 holds the diagonal of the linear-term matrix (the conjugated
/// rate auxiliaries, so that 2 delta Re{tr(W Sigma1^H H^H)} reproduces
/// the linear part of the rate surrogate); sigma2 holds the beta weights.
/// Both are zero when delta == 0 and the subproblem is pure sensing.
struct SurrogateState {
  CommAuxiliaries comm_aux;
  Eigen::Matrix3d phi = Eigen::Matrix3d::Zero();
  Eigen::VectorXcd sigma1;
  Eigen::VectorXd sigma2;
  Eigen::MatrixXcd q;
  Eigen::MatrixXcd a;
  double lambda_shift = 0.0;
  double const_offset = 0.0;
};

/// Value of the quadratic subproblem objective
///   tr(W W^H A) + 2 delta Re{tr(W Sigma1^H H^H)}
/// at an arbitrary W. Adding state.const_offset reconstructs the full
/// surrogate of the outer objective (exact at the expansion point).
inline double subproblem_objective(const SurrogateState& state, const ChannelSet& h,
                                   double delta, const Eigen::MatrixXcd& w) {
  const double quad = (w.conjugate().cwiseProduct(state.a * w)).sum().real();
  double lin = 0.0;
  if (delta > 0.0) {
    const Eigen::VectorXcd z = (h.h.adjoint() * w).diagonal();
    for (Eigen::Index k = 0; k < z.size(); ++k)
      lin += (std::conj(state.sigma1(k)) * z(k)).real();
  }
  return quad + 2.0 * delta * lin;
}

/// Builds the surrogate state at the expansion point w_t. The shift is
/// lambda = max(0, dominant_eigenvalue(M)) * (1 + 1e-3) + 1e-9 with
/// M = delta H Sigma2 H^H - (Q + Q^H)/2, making A = lambda I - M PSD.
inline SurrogateState build_surrogate(const BeamformingMatrix& w_t, const ChannelSet& h,
                                      const SensingScene& scene, const SystemConfig& cfg) {
  const int k_users = static_cast<int>(h.h.cols());
  SurrogateState state;

  const FisherInfo fim = assemble_fim(w_t, scene);
  const SensingDerived der = derive_sensing(fim);
  state.phi = der.phi;
  state.q = assemble_q(state.phi, scene);

  state.sigma1 = Eigen::VectorXcd::Zero(k_users);
  state.sigma2 = Eigen::VectorXd::Zero(k_users);
  double comm_const = 0.0;
  if (cfg.delta > 0.0) {
    state.comm_aux = update_comm_auxiliaries(w_t, h, cfg.sigma_c_sq);
    for (int k = 0; k < k_users; ++k) {
      state.sigma1(k) = std::conj(state.comm_aux.eta[k]);
      state.sigma2(k) = state.comm_aux.beta[k];
      comm_const += std::log1p(state.comm_aux.xi[k]) - state.comm_aux.xi[k] -
                    state.comm_aux.beta[k] * cfg.sigma_c_sq[k];
    }
  } else {
    state.comm_aux.xi.assign(k_users, 0.0);
    state.comm_aux.eta.assign(k_users, std::complex<double>(0.0, 0.0));
    state.comm_aux.beta.assign(k_users, 0.0);
  }

  const Eigen::MatrixXcd half_q = 0.5 * (state.q + state.q.adjoint());
  Eigen::MatrixXcd m = -half_q;
  if (cfg.delta > 0.0)
    m += cfg.delta * (h.h * state.sigma2.asDiagonal() * h.h.adjoint());

  state.lambda_shift = std::max(0.0, dominant_eigenvalue(m)) * (1.0 + 1e-3) + 1e-9;
  state.a = -m;
  state.a.diagonal().array() += state.lambda_shift;

  state.const_offset =
      cfg.delta * comm_const - 2.0 * der.trace_f_inv - state.lambda_shift * cfg.p_tx;
  return state;
}

struct InnerResult {
  BeamformingMatrix w;
  std::vector<double> objectives;  // subproblem value at start + after each update
  double max_power_violation = 0.0;
};

/// Inner fixed-point loop: W <- proj(delta H Sigma1 + A W), at most
/// cfg.inner_iters updates, early exit once the subproblem objective
/// changes by less than 1e-8 relative. A PSD makes the recorded
/// objective sequence non-decreasing.
inline InnerResult sgpi_inner(const BeamformingMatrix& w0, const SurrogateState& state,
                              const ChannelSet& h, const SystemConfig& cfg) {
  constexpr double kExitTol = 1e-8;
  InnerResult res;
  Eigen::MatrixXcd w = w0.w;
  Eigen::MatrixXcd lin;
  if (cfg.delta > 0.0)
    lin = cfg.delta * (h.h * state.sigma1.asDiagonal());
  else
    lin = Eigen::MatrixXcd::Zero(w.rows(), w.cols());

  Eigen::MatrixXcd aw = state.a * w;
  auto objective = [&](const Eigen::MatrixXcd& cur, const Eigen::MatrixXcd& acur) {
    double val = (cur.conjugate().cwiseProduct(acur)).sum().real();
    if (cfg.delta > 0.0) {
      const Eigen::VectorXcd z = (h.h.adjoint() * cur).diagonal();
      for (Eigen::Index k = 0; k < z.size(); ++k)
        val += 2.0 * cfg.delta * (std::conj(state.sigma1(k)) * z(k)).real();
    }
    return val;
  };

  double obj = objective(w, aw);
  res.objectives.push_back(obj);
  for (int n = 0; n < cfg.inner_iters; ++n) {
    const Eigen::MatrixXcd arg = lin + aw;
    if (arg.squaredNorm() < 1e-60)
      throw ZeroProjectionError("sgpi_inner: update argument vanished");
    w = std::sqrt(cfg.p_tx / arg.squaredNorm()) * arg;
    res.max_power_violation = std::max(
        res.max_power_violation, std::abs(w.squaredNorm() - cfg.p_tx) / cfg.p_tx);
    aw = state.a * w;
    const double obj_new = objective(w, aw);
    res.objectives.push_back(obj_new);
    const bool settled = std::abs(obj_new - obj) <= kExitTol * std::max(std::abs(obj), 1e-300);
    obj = obj_new;
    if (settled) break;
  }
  res.w = BeamformingMatrix{std::move(w), cfg.p_tx};
  return res;
}

struct ObjectiveBreakdown {
  double objective = 0.0;    // delta * sum rate - tr(F^-1)
  double sum_rate = 0.0;     // nats/s/Hz
  double trace_f_inv = 0.0;  // Trace-Opt sensing value
  double crlb_theta = 0.0;   // angle CRLB
};

inline ObjectiveBreakdown eval_objective(const BeamformingMatrix& w, const ChannelSet& h,
                                         const SensingScene& scene, const SystemConfig& cfg) {
  const RateResult rates = compute_rates(w, h, cfg.sigma_c_sq);
  const SensingDerived der = derive_sensing(assemble_fim(w, scene));
  return ObjectiveBreakdown{cfg.delta * rates.sum - der.trace_f_inv, rates.sum,
                            der.trace_f_inv, der.crlb_theta};
}

/// Per-solve convergence record, one entry of the outer lists per
/// evaluation of the true objective (initial point included).
struct IterationTrace {
  std::vector<double> outer_objectives;
  std::vector<std::vector<double>> inner_objectives;
  std::vector<double> sum_rates;
  std::vector<double> trace_crlbs;  // tr(F^-1) alongside outer_objectives
  bool converged = false;
  int outer_count = 0;
  std::vector<int> inner_counts;
  double wall_time_ms = 0.0;
  double max_power_violation = 0.0;
};

struct SolveResult {
  BeamformingMatrix w;
  IterationTrace trace;
};

enum class InitKind { kMrt, kRandom };

inline constexpr std::uint64_t kRandomInitSalt = 0x9e3779b97f4a7c15ULL;

/// Default start: matched-filter columns (W proportional to H) scaled to
/// the power sphere. Never produces h_k^H w_k = 0.
inline BeamformingMatrix mrt_init(const SystemConfig& cfg, const ChannelSet& h) {
  return project_power(h.h, cfg.p_tx);
}

inline BeamformingMatrix random_init(const SystemConfig& cfg) {
  NormalSampler rng(cfg.seed ^ kRandomInitSalt);
  return project_power(complex_gaussian_matrix(rng, cfg.n_tx, cfg.n_users), cfg.p_tx);
}

/// Outer SCA loop: rebuild the surrogate at the current iterate, run the
/// inner fixed-point loop, stop once the true objective moves by less
/// than cfg.outer_tol (or max_outer is hit, returned with
/// converged=false). Fully deterministic for a fixed config and channel.
inline SolveResult solve(const SystemConfig& cfg, const ChannelSet& h,
                         const SensingScene& scene,
                         const std::optional<BeamformingMatrix>& w_init = std::nullopt,
                         InitKind init = InitKind::kMrt) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  SolveResult res;
  res.w = w_init ? *w_init
                 : (init == InitKind::kMrt ? mrt_init(cfg, h) : random_init(cfg));

  ObjectiveBreakdown cur = eval_objective(res.w, h, scene, cfg);
  IterationTrace& tr = res.trace;
  tr.outer_objectives.push_back(cur.objective);
  tr.sum_rates.push_back(cur.sum_rate);
  tr.trace_crlbs.push_back(cur.trace_f_inv);

  for (int t = 0; t < cfg.max_outer; ++t) {
    const SurrogateState state = build_surrogate(res.w, h, scene, cfg);
    InnerResult inner = sgpi_inner(res.w, state, h, cfg);
    res.w = std::move(inner.w);
    tr.max_power_violation = std::max(tr.max_power_violation, inner.max_power_violation);
    tr.inner_counts.push_back(static_cast<int>(inner.objectives.size()) - 1);
    tr.inner_objectives.push_back(std::move(inner.objectives));
    ++tr.outer_count;

    const ObjectiveBreakdown next = eval_objective(res.w, h, scene, cfg);
    tr.outer_objectives.push_back(next.objective);
    tr.sum_rates.push_back(next.sum_rate);
    tr.trace_crlbs.push_back(next.trace_f_inv);
    const double change = std::abs(next.objective - cur.objective);
    cur = next;
    if (change < cfg.outer_tol) {
      tr.converged = true;
      break;
    }
  }

  tr.wall_time_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  return res;
}

}  // namespace isacbeam
