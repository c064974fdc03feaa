#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

#include "isacbeam/oracle.hpp"
#include "isacbeam/solver.hpp"

using namespace isacbeam;
using Catch::Approx;

namespace {

Eigen::MatrixXcd random_hermitian(std::uint64_t seed, int n) {
  NormalSampler rng(seed);
  const Eigen::MatrixXcd x = complex_gaussian_matrix(rng, n, n);
  return 0.5 * (x + x.adjoint());
}

struct Setup {
  SystemConfig cfg;
  ChannelSet h;
  SensingScene scene;
};

Setup make_setup(std::uint64_t seed, double delta = 0.01) {
  Setup s;
  s.cfg.delta = delta;
  s.cfg.seed = seed;
  s.h = generate_channels(s.cfg);
  s.scene = build_scene(s.cfg);
  return s;
}

}  // namespace

TEST_CASE("dominant eigenvalue of a diagonal matrix", "[solver]") {
  Eigen::MatrixXcd m = Eigen::Vector3cd(1.0, 5.0, 2.0).asDiagonal();
  CHECK(dominant_eigenvalue(m) == Approx(5.0).epsilon(1e-9));
  CHECK(dominant_eigenvalue(Eigen::MatrixXcd::Identity(16, 16)) == Approx(1.0));
  CHECK(dominant_eigenvalue(Eigen::MatrixXcd::Zero(4, 4)) == 0.0);
}

TEST_CASE("dominant eigenvalue when the negative side has larger magnitude", "[solver]") {
  Eigen::MatrixXcd m = Eigen::Vector2cd(-10.0, 3.0).asDiagonal();
  const double est = dominant_eigenvalue(m);
  CHECK(est >= 3.0 - 1e-6 * m.norm());
  CHECK(est == Approx(3.0).margin(1e-5));
}

TEST_CASE("dominant eigenvalue matches a dense eigensolver", "[solver]") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Eigen::MatrixXcd m = random_hermitian(seed, 16);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    const double truth = es.eigenvalues().maxCoeff();
    CHECK(dominant_eigenvalue(m) == Approx(truth).epsilon(1e-6));
  }
}

TEST_CASE("dominant eigenvalue rejects non-Hermitian input", "[solver]") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(dominant_eigenvalue(m), InvalidInputError);
}

TEST_CASE("power projection scales onto the sphere", "[solver]") {
  NormalSampler rng(5);
  const Eigen::MatrixXcd p = complex_gaussian_matrix(rng, 16, 4);
  const double p_tx = 10.0;

  const BeamformingMatrix w = project_power(p, p_tx);
  CHECK(std::abs(w.power() - p_tx) <= 1e-12 * p_tx);
  CHECK(w.feasible());

  // already on the sphere: unchanged
  const BeamformingMatrix w2 = project_power(w.w, p_tx);
  CHECK((w2.w - w.w).norm() < 1e-12 * w.w.norm());

  // four times the power: halved
  const BeamformingMatrix w3 = project_power(2.0 * w.w, p_tx);
  CHECK((w3.w - w.w).norm() < 1e-12 * w.w.norm());

  CHECK_THROWS_AS(project_power(Eigen::MatrixXcd::Zero(4, 2), p_tx), ZeroProjectionError);
}

TEST_CASE("pure sensing surrogate drops the rate terms", "[solver]") {
  Setup s = make_setup(2, 0.0);
  const BeamformingMatrix w = mrt_init(s.cfg, s.h);
  const SurrogateState st = build_surrogate(w, s.h, s.scene, s.cfg);
  CHECK(st.sigma1.norm() == 0.0);
  CHECK(st.sigma2.norm() == 0.0);
  const Eigen::MatrixXcd want =
      st.lambda_shift * Eigen::MatrixXcd::Identity(16, 16) + 0.5 * (st.q + st.q.adjoint());
  CHECK((st.a - want).norm() < 1e-10 * want.norm());
}

TEST_CASE("surrogate state satisfies its assembly identity", "[solver]") {
  Setup s = make_setup(3);
  const BeamformingMatrix w = mrt_init(s.cfg, s.h);
  const SurrogateState st = build_surrogate(w, s.h, s.scene, s.cfg);

  const Eigen::MatrixXcd want =
      st.lambda_shift * Eigen::MatrixXcd::Identity(16, 16) + 0.5 * (st.q + st.q.adjoint()) -
      s.cfg.delta * (s.h.h * st.sigma2.asDiagonal() * s.h.h.adjoint());
  CHECK((st.a - want).norm() <= 1e-10 * want.norm());

  // shift makes A positive semidefinite
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(st.a);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8 * st.lambda_shift);
  CHECK(st.lambda_shift >= 0.0);
}

TEST_CASE("subproblem and surrogate differ by the stored constant", "[solver]") {
  Setup s = make_setup(7);
  const BeamformingMatrix w_t = mrt_init(s.cfg, s.h);
  const SurrogateState st = build_surrogate(w_t, s.h, s.scene, s.cfg);

  NormalSampler rng(8);
  auto surrogate_direct = [&](const BeamformingMatrix& w) {
    const SurrogateValues f = eval_comm_surrogate(w, st.comm_aux, s.h, s.cfg.sigma_c_sq);
    const double sensing = (assemble_fim(w, s.scene).f * st.phi).trace();
    const double anchor = derive_sensing(assemble_fim(w_t, s.scene)).trace_f_inv;
    return s.cfg.delta * f.sum + sensing - 2.0 * anchor;
  };

  double first_offset = 0.0;
  for (int trial = 0; trial < 2; ++trial) {
    const BeamformingMatrix probe =
        project_power(complex_gaussian_matrix(rng, 16, 4), s.cfg.p_tx);
    const double sub = subproblem_objective(st, s.h, s.cfg.delta, probe.w);
    const double sur = surrogate_direct(probe);
    const double offset = sur - sub;
    if (trial == 0)
      first_offset = offset;
    else
      CHECK(offset == Approx(first_offset).epsilon(1e-8));
    CHECK(sub + st.const_offset == Approx(sur).epsilon(1e-8));
  }

  // tight at the expansion point
  const ObjectiveBreakdown at = eval_objective(w_t, s.h, s.scene, s.cfg);
  const double reconstructed =
      subproblem_objective(st, s.h, s.cfg.delta, w_t.w) + st.const_offset;
  CHECK(reconstructed == Approx(at.objective).epsilon(1e-8));
}

TEST_CASE("inner loop fixes points of the identity map", "[solver]") {
  Setup s = make_setup(9);
  const BeamformingMatrix w = mrt_init(s.cfg, s.h);

  SurrogateState st;
  st.sigma1 = Eigen::VectorXcd::Zero(4);
  st.sigma2 = Eigen::VectorXd::Zero(4);
  st.a = Eigen::MatrixXcd::Identity(16, 16);
  st.q = Eigen::MatrixXcd::Zero(16, 16);
  st.lambda_shift = 1.0;

  const InnerResult res = sgpi_inner(w, st, s.h, s.cfg);
  CHECK((res.w.w - w.w).norm() < 1e-12 * w.w.norm());
  CHECK(res.objectives.size() >= 2);
  CHECK(res.objectives.front() == Approx(res.objectives.back()));
}

TEST_CASE("inner loop keeps an exact fixed point", "[solver]") {
  // With A = c I the map W -> proj(delta H Sigma1 + A W) fixes
  // W* = proj(delta H Sigma1): the update argument is a positive multiple
  // of W*, and the scaling projection is invariant to positive scales.
  Setup s = make_setup(10);
  SurrogateState st;
  NormalSampler rng(11);
  st.sigma1 = Eigen::VectorXcd(4);
  for (int k = 0; k < 4; ++k) st.sigma1(k) = rng.complex_normal();
  st.sigma2 = Eigen::VectorXd::Zero(4);
  st.q = Eigen::MatrixXcd::Zero(16, 16);
  st.lambda_shift = 0.7;
  st.a = 0.7 * Eigen::MatrixXcd::Identity(16, 16);

  const BeamformingMatrix w_star =
      project_power(s.cfg.delta * (s.h.h * st.sigma1.asDiagonal()), s.cfg.p_tx);
  const InnerResult res = sgpi_inner(w_star, st, s.h, s.cfg);
  CHECK((res.w.w - w_star.w).norm() < 1e-12 * w_star.w.norm());
  const double spread = std::abs(res.objectives.back() - res.objectives.front());
  CHECK(spread <= 1e-10 * std::abs(res.objectives.front()));
}

TEST_CASE("inner objective never decreases", "[solver]") {
  for (std::uint64_t seed = 20; seed <= 23; ++seed) {
    Setup s = make_setup(seed, seed % 2 ? 0.01 : 1.0);
    const BeamformingMatrix w = mrt_init(s.cfg, s.h);
    const SurrogateState st = build_surrogate(w, s.h, s.scene, s.cfg);
    const InnerResult res = sgpi_inner(w, st, s.h, s.cfg);
    for (std::size_t i = 1; i < res.objectives.size(); ++i)
      CHECK(res.objectives[i] >= res.objectives[i - 1] - 1e-9);
    CHECK(res.max_power_violation <= 1e-9);
  }
}

TEST_CASE("objective breakdown composes the module values", "[solver]") {
  Setup s = make_setup(30, 0.37);
  const BeamformingMatrix w = mrt_init(s.cfg, s.h);
  const ObjectiveBreakdown b = eval_objective(w, s.h, s.scene, s.cfg);
  const RateResult r = compute_rates(w, s.h, s.cfg.sigma_c_sq);
  const SensingDerived der = derive_sensing(assemble_fim(w, s.scene));
  CHECK(b.sum_rate == Approx(r.sum).epsilon(1e-12));
  CHECK(b.trace_f_inv == Approx(der.trace_f_inv).epsilon(1e-12));
  CHECK(b.crlb_theta == Approx(der.crlb_theta).epsilon(1e-12));
  CHECK(b.objective == Approx(s.cfg.delta * r.sum - der.trace_f_inv).epsilon(1e-12));

  // identity FIM corner: objective = delta * sum rate - 3
  FisherInfo eye;
  eye.f = Eigen::Matrix3d::Identity();
  CHECK(s.cfg.delta * b.sum_rate - derive_sensing(eye).trace_f_inv ==
        Approx(s.cfg.delta * b.sum_rate - 3.0));

  Setup s0 = make_setup(30, 0.0);
  const ObjectiveBreakdown b0 = eval_objective(w, s0.h, s0.scene, s0.cfg);
  CHECK(b0.objective == Approx(-b0.trace_f_inv).epsilon(1e-12));
}

TEST_CASE("solve converges on the reference setup", "[solver]") {
  Setup s = make_setup(1);
  const SolveResult res = solve(s.cfg, s.h, s.scene);
  CHECK(res.trace.converged);
  CHECK(res.trace.outer_count <= 30);
  CHECK(res.w.feasible());
  CHECK(res.trace.max_power_violation <= 1e-9);

  // outer objective is non-decreasing within slack and settles under the tolerance
  const auto& obj = res.trace.outer_objectives;
  REQUIRE(obj.size() >= 2);
  for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] >= obj[i - 1] - 1e-6);
  CHECK(std::abs(obj.back() - obj[obj.size() - 2]) < s.cfg.outer_tol);

  // trace bookkeeping
  CHECK(obj.size() == static_cast<std::size_t>(res.trace.outer_count) + 1);
  CHECK(res.trace.sum_rates.size() == obj.size());
  CHECK(res.trace.trace_crlbs.size() == obj.size());
  CHECK(res.trace.inner_objectives.size() == static_cast<std::size_t>(res.trace.outer_count));
}

TEST_CASE("heavier rate weighting buys sum rate", "[solver]") {
  Setup lo = make_setup(4, 0.0);
  Setup hi = make_setup(4, 10.0);
  const SolveResult a = solve(lo.cfg, lo.h, lo.scene);
  const SolveResult b = solve(hi.cfg, hi.h, hi.scene);
  const double sr_lo = compute_rates(a.w, lo.h, lo.cfg.sigma_c_sq).sum;
  const double sr_hi = compute_rates(b.w, hi.h, hi.cfg.sigma_c_sq).sum;
  CHECK(sr_lo <= sr_hi + 1e-9);
}

TEST_CASE("solve is bit-deterministic", "[solver]") {
  Setup s = make_setup(6);
  const SolveResult a = solve(s.cfg, s.h, s.scene);
  const SolveResult b = solve(s.cfg, s.h, s.scene);
  CHECK(a.w.w == b.w.w);
  CHECK(a.trace.outer_objectives == b.trace.outer_objectives);
  CHECK(a.trace.inner_objectives == b.trace.inner_objectives);

  // seeded random initialization is reproducible too
  const SolveResult c = solve(s.cfg, s.h, s.scene, std::nullopt, InitKind::kRandom);
  const SolveResult d = solve(s.cfg, s.h, s.scene, std::nullopt, InitKind::kRandom);
  CHECK(c.w.w == d.w.w);
  CHECK(c.trace.converged);
}
