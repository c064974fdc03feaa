#pragma once

#include <stdexcept>
#include <string>

namespace isacbeam {

/// Bad argument to a library function (non-finite angle, dimension
/// mismatch, out-of-range parameter).
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// h_k^H w_k vanished at an expansion point; the rate auxiliaries for
/// that user are undefined. `user()` is the zero-based offending index.
class DegenerateBeamError : public std::runtime_error {
 public:
  DegenerateBeamError(int user, const std::string& what)
      : std::runtime_error(what), user_(user) {}
  int user() const noexcept { return user_; }

 private:
  int user_;
};

/// Fisher information matrix is numerically singular (beamformer has no
/// energy in the target subspace).
class SingularFimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Projection onto the power sphere received a (numerically) zero matrix.
class ZeroProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad key, value or range in an experiment configuration. Maps to CLI
/// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be written or read. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isacbeam
