#pragma once

#include <complex>
#include <functional>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tspec {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

enum class ErrorKind {
  precondition,   // caller violated an operation's contract
  numeric,        // a solver failed (non-convergence, breakdown, pollution)
  config,         // bad input file or option
  inconclusive,   // the numerical gate could not decide
};

/// Exception carrying the failing module/operation, mapped to CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), kind_(kind), where_(std::move(where)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

/// Worker cap from TOEPLITZ_SPECTRA_THREADS (default: hardware concurrency).
unsigned worker_count();

/// Runs body(0..n-1) on up to worker_count() threads; the first exception is rethrown.
void parallel_for(int n, const std::function<void(int)>& body);

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Least-squares line y = slope*x + intercept; residual is the RMS misfit.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  double slope_stderr = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct TopSingular {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of X from gram = X^H X (Lanczos with full reorthogonalization).
/// Stops when the top Ritz value changes by at most `tolerance` relative, or the space is invariant.
TopSingular lanczos_top_singular(const std::function<CVector(const CVector&)>& gram, int dim, int max_steps,
                                 double tolerance, std::uint64_t seed);
/// Same for a real Gram operator.
TopSingular lanczos_top_singular_real(const std::function<RVector(const RVector&)>& gram, int dim, int max_steps,
                                      double tolerance, std::uint64_t seed);

}  // namespace tspec
