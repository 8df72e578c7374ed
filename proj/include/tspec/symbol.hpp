#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tspec/common.hpp"

namespace tspec {

/// Finitely supported Hermitian matrix symbol h(p) = sum_j A_j e^{ijp} with A_{-j} = A_j^*.
///
/// Only A_0..A_M are stored; negative coefficients are derived so the
/// Hermitian symmetry cannot be violated after construction.
class MatrixSymbol {
 public:
  /// `nonnegative[j]` is A_j for j = 0..M. A_0 must be Hermitian to 1e-12.
  explicit MatrixSymbol(std::vector<CMatrix> nonnegative);

  int block_size() const { return n_; }
  int cutoff() const { return static_cast<int>(coeffs_.size()) - 1; }

  /// A_j for any integer j (zero outside [-M, M]).
  CMatrix coeff(int j) const;

  /// Sum over j of the spectral norms of A_j, j in [-M, M].
  double coefficient_mass() const;

  CMatrix eval(double p) const;
  /// dh/dp at p.
  CMatrix eval_derivative(double p) const;

 private:
  int n_;
  std::vector<CMatrix> coeffs_;
};

CMatrix eval_symbol(const MatrixSymbol& sym, double p);

/// Cyclic Jacobi eigensolver for small Hermitian matrices.
struct SmallEigen {
  RVector values;   // ascending
  CMatrix vectors;  // columns orthonormal
  int sweeps = 0;
};

SmallEigen jacobi_eigen(const CMatrix& a, double off_tol = 1e-14, int max_sweeps = 60);

struct BandStructure {
  int block_size = 0;
  std::vector<double> grid;        // p_k = -pi + 2 pi k / K
  RMatrix values;                  // K x N, ascending per row
  RMatrix slopes;                  // K x N, d lambda_j / dp (Hellmann-Feynman)
  std::vector<CMatrix> vectors;    // per grid point, columns W_j(p_k)
  /// branch[k][a]: sorted column holding analytic branch a at p_k (eigenvector continuation).
  std::vector<std::vector<int>> branch;
  /// wrap[j]: sorted column at p_0 continuing column j at p_{K-1} across p = pi.
  std::vector<int> wrap;
  std::vector<Interval> band_intervals;  // ranges of the analytic branches
  std::vector<bool> flat;
  double max_residual = 0.0;

  int grid_size() const { return static_cast<int>(grid.size()); }
  double branch_value(int k, int a) const { return values(k, branch[k][a]); }
  double branch_slope(int k, int a) const { return slopes(k, branch[k][a]); }
  double spectral_diameter() const;
};

/// Samples the band structure on K points; K >= 4M + 4 and a power of two.
BandStructure compute_bands(const MatrixSymbol& sym, int grid_size = 2048);

std::vector<Interval> essential_spectrum(const BandStructure& bands);

enum class CriticalKind { stationary, nonsmooth_crossing, flat_band };

std::string to_string(CriticalKind kind);

struct CriticalPoint {
  double value = 0.0;
  CriticalKind kind = CriticalKind::stationary;
  double witness = 0.0;
  int band = 0;
};

struct CriticalSet {
  std::vector<CriticalPoint> entries;  // sorted by value, deduplicated

  std::vector<double> values() const;
  /// Distance from x to the nearest critical value (infinity when empty).
  double distance(double x) const;
};

CriticalSet compute_critical_set(const MatrixSymbol& sym, const BandStructure& bands);

struct DecayEstimate {
  std::optional<double> rate;
  bool polynomial = true;
};

DecayEstimate coefficient_decay(const MatrixSymbol& sym);

/// Periodic spectral derivative of uniformly sampled data on [-pi, pi).
RVector spectral_derivative(const RVector& samples);
CVector spectral_derivative(const CVector& samples);

/// Symbols used throughout the documentation and tests.
namespace models {

/// h(p) = cos p.
MatrixSymbol scalar_cos();
/// h(p) = [[0, a e^{-ip} + b], [a e^{ip} + b, 0]].
MatrixSymbol off_diagonal(double a, double b);
/// h(p) = [[0, e^{-ip}], [e^{ip}, 0]]: both bands flat.
MatrixSymbol shift_pair();
/// h(p) = diag(cos p, 0).
MatrixSymbol diag_cos_zero();
/// N-periodic Jacobi symbol with hoppings a_1..a_N and on-site b_1..b_N.
MatrixSymbol periodic_jacobi(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace models

}  // namespace tspec
