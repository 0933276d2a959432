#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ekrom {

/// Invalid scenario or construction parameters (CLI exit code 2).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse: mismatched lengths, negative times, out-of-range receivers.
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for every numerical failure (CLI exit code 3).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serious breakdown of an unconjugated Lanczos-type recurrence: a new basis
/// vector is (numerically) isotropic in the bilinear form, or the Krylov
/// space became invariant before the requested dimension.
class breakdown_error : public numerical_error {
 public:
  breakdown_error(const std::string& what, std::size_t step, std::complex<double> delta,
                  Eigen::MatrixXcd prefix)
      : numerical_error(what), step_(step), delta_(delta), prefix_(std::move(prefix)) {}

  std::size_t step() const noexcept { return step_; }
  std::complex<double> delta() const noexcept { return delta_; }
  /// Basis columns that were valid when the recurrence stopped.
  const Eigen::MatrixXcd& prefix() const noexcept { return prefix_; }

 private:
  std::size_t step_;
  std::complex<double> delta_;
  Eigen::MatrixXcd prefix_;
};

class singular_operator_error : public numerical_error {
 public:
  singular_operator_error(const std::string& what, double pivot)
      : numerical_error(what), pivot_(pivot) {}
  double pivot_magnitude() const noexcept { return pivot_; }

 private:
  double pivot_;
};

/// Raised when a matrix function is requested of a matrix that is defective
/// to working precision, or whose spectrum touches the square-root branch cut
/// in a way that makes the principal branch ill defined.
class defective_matrix_error : public numerical_error {
 public:
  defective_matrix_error(const std::string& what, std::complex<double> eigenvalue,
                         double condition)
      : numerical_error(what), eigenvalue_(eigenvalue), condition_(condition) {}
  std::complex<double> eigenvalue() const noexcept { return eigenvalue_; }
  double condition() const noexcept { return condition_; }

 private:
  std::complex<double> eigenvalue_;
  double condition_;
};

class io_error : public std::runtime_error {
 public:
  io_error(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Non-fatal numerical warnings (near-pole shifts, branch-sensitive deltas,
// coarse quadrature). The default handler prints to stderr.
using warning_handler = std::function<void(std::string_view)>;
warning_handler set_warning_handler(warning_handler handler);
void warn(std::string_view message);

}  // namespace ekrom
