#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace isacbeam {

/// Identity string of the pseudo-random pipeline, recorded in CSV output
/// so results can be regenerated elsewhere.
inline constexpr const char* kGeneratorId =
    "mt19937_64;u=(x>>11+1)*2^-53;box-muller;cn01=(n0+i*n1)/sqrt2;col-major";

/// Standard-normal sampler on top of std::mt19937_64.
///
/// The uniform-to-normal transform is pinned explicitly (Box-Muller on
/// 53-bit uniforms) instead of std::normal_distribution, whose output is
/// implementation-defined. Same seed, same stream, on every platform.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in (0, 1].
  double uniform_pos() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  /// One N(0,1) variate (Box-Muller, cached spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform_pos();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Circularly-symmetric complex normal with unit variance:
  /// (n0 + i*n1)/sqrt(2).
  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// rows x cols matrix of i.i.d. CN(0,1) entries, filled column by column.
inline Eigen::MatrixXcd complex_gaussian_matrix(NormalSampler& rng,
                                                Eigen::Index rows,
                                                Eigen::Index cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.complex_normal();
  return m;
}

}  // namespace isacbeam
