#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rcotto {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex I{0.0, 1.0};

enum class Reservoir { hot, cold };

inline Reservoir other(Reservoir r) {
  return r == Reservoir::hot ? Reservoir::cold : Reservoir::hot;
}

inline const char* to_string(Reservoir r) {
  return r == Reservoir::hot ? "h" : "c";
}

/// Invalid or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during propagation or limit-cycle search (CLI exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rcotto
