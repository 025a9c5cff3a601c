#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace drmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A transition matrix row has a negative entry or its sum deviates
/// from one by more than the admission tolerance.
class NonStochasticRowError : public Error {
 public:
  using Error::Error;
};

/// A configuration file is malformed or violates the documented schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The optimal control problem at the current state admits no feasible
/// policy; the closed loop cannot continue.
class InfeasibleOcpError : public Error {
 public:
  using Error::Error;
};

/// The embedded solver exhausted its iteration budget without meeting
/// the requested tolerances.
class SolverMaxIterError : public Error {
 public:
  using Error::Error;
};

}  // namespace drmpc
