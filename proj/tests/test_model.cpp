#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "isacbeam/model.hpp"

using namespace isacbeam;
using Catch::Approx;

namespace {

// Independent finite-difference route for d/dtheta of the steering vector.
Eigen::VectorXcd steering_fd(double theta, int n, double step = 1e-6) {
  return (steering_vector(theta + step, n) - steering_vector(theta - step, n)) /
         (2.0 * step);
}

}  // namespace

TEST_CASE("steering vector at broadside is all ones", "[model]") {
  const Eigen::VectorXcd a = steering_vector(0.0, 16);
  REQUIRE(a.size() == 16);
  for (int m = 0; m < 16; ++m) {
    CHECK(a(m).real() == Approx(1.0));
    CHECK(a(m).imag() == Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("steering vector endfire two-element case", "[model]") {
  const Eigen::VectorXcd a = steering_vector(std::numbers::pi / 2, 2);
  // element indices -1/2 and +1/2, sin(pi/2) = 1
  CHECK(std::abs(a(0) - std::complex<double>(0.0, -1.0)) < 1e-12);
  CHECK(std::abs(a(1) - std::complex<double>(0.0, 1.0)) < 1e-12);
}

TEST_CASE("steering vector matches per-entry phase formula", "[model]") {
  const double theta = 0.3;
  const int n = 8;
  const Eigen::VectorXcd a = steering_vector(theta, n);
  for (int m = 0; m < n; ++m) {
    const double phase = std::numbers::pi * ((2.0 * m - n + 1.0) / 2.0) * std::sin(theta);
    CHECK(std::abs(a(m) - std::polar(1.0, phase)) < 1e-14);
  }
}

TEST_CASE("steering vector rejects non-finite angles", "[model]") {
  CHECK_THROWS_AS(steering_vector(std::nan(""), 4), InvalidInputError);
  CHECK_THROWS_AS(steering_vector(INFINITY, 4), InvalidInputError);
  CHECK_THROWS_AS(steering_derivative(std::nan(""), 4), InvalidInputError);
}

TEST_CASE("steering derivative vanishes at endfire", "[model]") {
  const Eigen::VectorXcd d = steering_derivative(std::numbers::pi / 2, 8);
  CHECK(d.norm() < 1e-12);
}

TEST_CASE("steering derivative at broadside, four elements", "[model]") {
  const Eigen::VectorXcd d = steering_derivative(0.0, 4);
  const double pi = std::numbers::pi;
  const double expected[] = {-1.5, -0.5, 0.5, 1.5};
  for (int m = 0; m < 4; ++m) {
    CHECK(d(m).real() == Approx(0.0).margin(1e-15));
    CHECK(d(m).imag() == Approx(pi * expected[m]));
  }
  CHECK((d - steering_fd(0.0, 4)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("steering derivative agrees with finite differences", "[model]") {
  CHECK((steering_derivative(0.2, 16) - steering_fd(0.2, 16)).cwiseAbs().maxCoeff() < 1e-6);

  std::mt19937_64 eng(42);
  std::uniform_real_distribution<double> angle(-std::numbers::pi / 2, std::numbers::pi / 2);
  for (int trial = 0; trial < 100; ++trial) {
    const double theta = angle(eng);
    const int n = 1 + static_cast<int>(eng() % 24);
    const Eigen::VectorXcd a = steering_vector(theta, n);
    for (int m = 0; m < n; ++m) CHECK(std::abs(a(m)) == Approx(1.0));
    CHECK(a.squaredNorm() == Approx(static_cast<double>(n)));
    CHECK((steering_derivative(theta, n) - steering_fd(theta, n)).cwiseAbs().maxCoeff() <
          1e-6);
  }
}

TEST_CASE("scene at broadside has an all-ones channel", "[model]") {
  SystemConfig cfg;
  const SensingScene s = build_scene(cfg);
  REQUIRE(s.g.rows() == 20);
  REQUIRE(s.g.cols() == 16);
  CHECK((s.g - Eigen::MatrixXcd::Ones(20, 16)).norm() < 1e-12);
  CHECK(s.kappa == Approx(60.0));
}

TEST_CASE("scene invariants for random angles", "[model]") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> angle(-std::numbers::pi / 2, std::numbers::pi / 2);
  for (int trial = 0; trial < 20; ++trial) {
    SystemConfig cfg;
    cfg.theta = angle(eng);
    const SensingScene s = build_scene(cfg);
    CHECK(s.g.squaredNorm() == Approx(static_cast<double>(cfg.n_rx * cfg.n_tx)));
    CHECK((s.g - s.a_rx * s.a_tx.adjoint()).norm() < 1e-12);
    CHECK((s.g_dot - (s.a_rx_dot * s.a_tx.adjoint() + s.a_rx * s.a_tx_dot.adjoint())).norm() ==
          Approx(0.0).margin(1e-12));

    // finite-difference check of the channel derivative
    const double h = 1e-6;
    SystemConfig hi = cfg, lo = cfg;
    hi.theta = cfg.theta + h;
    lo.theta = cfg.theta - h;
    const Eigen::MatrixXcd g_fd = (build_scene(hi).g - build_scene(lo).g) / (2.0 * h);
    CHECK((s.g_dot - g_fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("channel generation is seed deterministic", "[model]") {
  SystemConfig cfg;
  cfg.seed = 1234;
  const ChannelSet a = generate_channels(cfg);
  const ChannelSet b = generate_channels(cfg);
  REQUIRE(a.h.rows() == cfg.n_tx);
  REQUIRE(a.h.cols() == cfg.n_users);
  CHECK(a.h == b.h);  // bit identical
  CHECK(a.seed_used == 1234);

  cfg.seed = 2;
  const ChannelSet c = generate_channels(cfg);
  CHECK((a.h - c.h).norm() > 1e-6);
}

TEST_CASE("channel entries look CN(0,1)", "[model]") {
  SystemConfig cfg;
  cfg.n_tx = 200;
  cfg.n_users = 500;
  cfg.sigma_c_sq.assign(cfg.n_users, 1.0);
  cfg.seed = 99;
  const ChannelSet ch = generate_channels(cfg);
  const auto n = static_cast<double>(ch.h.size());
  REQUIRE(n == 100000.0);
  const std::complex<double> mean = ch.h.sum() / n;
  const double var = ch.h.squaredNorm() / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}
