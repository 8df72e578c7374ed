#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "tspec/lattice.hpp"

namespace tspec {

struct DenseEigen {
  RVector values;   // ascending
  CMatrix vectors;  // orthonormal columns
};

/// Dense Hermitian eigensolve; dimension <= 4096.
DenseEigen hermitian_eig_dense(const CMatrix& m);

struct InertiaProbe {
  double shift = 0.0;
  int count_below = 0;
  bool factorization_ok = false;
};

/// Spectrum slicing: B is reduced once to a unitarily similar real tridiagonal matrix
/// (LAPACK zhbtrd); counts are Sturm sequences (LDL^T pivots) on that form.
class SpectrumSlicer {
 public:
  explicit SpectrumSlicer(const BandedBlockMatrix& b);

  /// Eigenvalue count strictly below x. A zero pivot shifts x by 1e-10 * scale and
  /// retries; the probe records the shift actually used.
  InertiaProbe count(double x) const;
  int dim() const { return static_cast<int>(diag_.size()); }
  double scale() const { return scale_; }

 private:
  InertiaProbe sturm(double x) const;

  RVector diag_;
  RVector off_sq_;  // squared off-diagonal
  double scale_ = 1.0;
};

InertiaProbe inertia_count(const BandedBlockMatrix& b, double x);

struct ValidatedEigenpair {
  double value = 0.0;
  CVector vector;
  LatticeWindow window;
  double residual = 0.0;
  double boundary_mass = 0.0;  // norm on the outer 10% next to an artificial edge
  double stability = std::numeric_limits<double>::infinity();  // |value(L) - value(2L)|
  int multiplicity = 1;
};

struct EigsOptions {
  int max_eigs = 512;
  double bisection_tol = 1e-10;  // relative to the matrix scale
  double cluster_tol = 1e-9;     // relative to the matrix scale
  double residual_tol = 1e-8;
  std::uint64_t seed = 0x5EED;
};

/// Norm of `v` on the outer 10% of the window next to its artificial edges.
double boundary_mass(const CVector& v, const LatticeWindow& window);

/// All eigenpairs of `b` in the open interval (range.lo, range.hi). Within a cluster the
/// basis is rotated so that the first vectors carry the least boundary mass.
std::vector<ValidatedEigenpair> eigs_in_interval(const BandedBlockMatrix& b, Interval range,
                                                 const EigsOptions& opts = {});

struct GapGates {
  double boundary_mass = 1e-6;
  double stability = 1e-8;
};

/// Discrete eigenvalues in `gap` certified by the L / 2L double gate.
/// `perturbation` may be null. `kind` selects the Toeplitz (one-sided) or Laurent operator.
std::vector<ValidatedEigenpair> gap_eigenvalues(const MatrixSymbol& sym, const PerturbationSpec* perturbation,
                                                Interval gap, int half_length,
                                                WindowKind kind = WindowKind::one_sided,
                                                const GapGates& gates = {}, const EigsOptions& opts = {});

/// Same gate on an already assembled pair of operators at windows L and 2L.
std::vector<ValidatedEigenpair> certify_gap_eigenvalues(const BandedBlockMatrix& at_l, const BandedBlockMatrix& at_2l,
                                                        Interval gap, const GapGates& gates = {},
                                                        const EigsOptions& opts = {});

/// Smooth window: 1/2 [erf((x - lo)/w) - erf((x - hi)/w)].
std::function<double(double)> erf_window(Interval plateau, double shoulder);

/// Gershgorin enclosure of B padded by 1e-3 of its width.
Interval filter_hull(const BandedBlockMatrix& b);

/// Chebyshev approximation of phi(B) on filter_hull(B).
class SpectralFilter {
 public:
  SpectralFilter(const BandedBlockMatrix& b, std::function<double(double)> phi, int degree,
                 double tolerance = 1e-6);

  CVector apply(const CVector& x) const;
  /// Exact trace of the polynomial filter (probing with period > polynomial bandwidth).
  double trace() const;

  Interval hull() const { return hull_; }
  int degree() const { return degree_; }
  /// Sum of |c_k| beyond the degree: a uniform error bound on the hull.
  double certified_error() const { return tail_; }
  const std::vector<double>& coefficients() const { return coeffs_; }

 private:
  BandedBlockMatrix b_;
  Interval hull_;
  int degree_;
  double tail_ = 0.0;
  std::vector<double> coeffs_;
};

/// Smallest degree whose coefficient tail is below `tolerance` (-1 if none up to `max_degree`).
int required_filter_degree(const std::function<double(double)>& phi, Interval hull, double tolerance,
                           int max_degree = 8192);

}  // namespace tspec
