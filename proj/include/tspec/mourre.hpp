#pragma once

#include <vector>

#include "tspec/eig.hpp"
#include "tspec/lattice.hpp"
#include "tspec/symbol.hpp"

namespace tspec {

/// Smooth cutoff equal to 1 on `plateau` and 0 outside `support` (smoothstep shoulders).
struct SmoothWindow {
  Interval plateau;
  Interval support;

  double operator()(double x) const;
};

/// zeta = 1 on delta, supported inside delta widened on each side by half the distance to
/// the nearest critical value.
SmoothWindow build_window(Interval delta, const CriticalSet& kappa);

/// F_j(p_k) = zeta(lambda_j) lambda_j' / |lambda_j'|^2 on sorted band j.
RVector build_F(const BandStructure& bands, int band, const SmoothWindow& zeta);

/// Conjugate operator on the Fourier grid: per band a_j = i F_j D + (i/2) F_j', applied in
/// the symmetric form (i/2)(F_j D chi_j + chi_j D F_j) with chi_j = 1 on supp F_j and
/// vanishing near band crossings. Frames are parallel-transported so U is smooth where
/// chi_j is nonzero.
class ConjugateOperatorGrid {
 public:
  ConjugateOperatorGrid(const MatrixSymbol& sym, Interval delta, int grid_size);

  int grid_size() const { return bands_.grid_size(); }
  int block_size() const { return bands_.block_size; }
  Interval delta() const { return zeta_.plateau; }
  const SmoothWindow& zeta() const { return zeta_; }
  const BandStructure& bands() const { return bands_; }
  const RMatrix& F() const { return f_; }  // K x N
  bool vanishes() const { return f_.cwiseAbs().maxCoeff() == 0.0; }

  /// a_j applied to grid samples g.
  CVector apply_band(int band, const CVector& g) const;
  /// Dense a_j, symmetrized as (a + a^H)/2.
  CMatrix dense_band(int band) const;
  /// ||a_j - a_j^H|| / ||a_j|| before symmetrization (Frobenius norms; 0 when a_j = 0).
  double hermiticity_defect(int band) const;
  /// max over unit Fourier modes |m| <= K/8 of ||(i[lambda_j, a_j] - zeta(lambda_j)) e_m||.
  double commutator_defect(int band) const;

  /// Eigenvector transform U: lattice vector on a two-sided window -> band samples (K x N).
  CMatrix to_bands(const CVector& psi, const LatticeWindow& window) const;
  /// U^{-1} followed by restriction to `window`.
  CVector from_bands(const CMatrix& f, const LatticeWindow& window) const;
  /// Pullback A = U^{-1} (sum a_j) U compressed to `window`; needs K >= 4 * sites.
  CVector apply_lattice(const CVector& psi, const LatticeWindow& window) const;

 private:
  BandStructure bands_;
  std::vector<CMatrix> frames_;  // gauge-fixed columns W_j(p_k)
  SmoothWindow zeta_;
  RMatrix f_;    // F_j
  RMatrix chi_;  // chi_j
};

ConjugateOperatorGrid build_conjugate(const MatrixSymbol& sym, Interval delta, int grid_size = 2048);

/// ||<N>^{-m} A^m|| on `window` by power iteration (m in 0..3).
double weight_regularity_check(const ConjugateOperatorGrid& conj, const LatticeWindow& window, int m,
                               int iterations = 60);

struct MourreOptions {
  double defect_threshold = 0.1;   // delta: eigenvalues below 1 - delta count as defect
  double shoulder_fraction = 0.1;  // filter shoulder width relative to |Delta|
  double gram_floor = 1e-2;        // filtered directions kept above this fraction of the top weight
  int probe_radius = 0;            // 0: a quarter of the half-length
};

struct MourreResult {
  double lower_bound = 0.0;          // smallest compressed-commutator eigenvalue
  double lower_bound_regular = 0.0;  // smallest eigenvalue once defect directions are removed
  int defect_rank = 0;
  int subspace_dim = 0;
  int filter_degree = 0;
  double filter_error = 0.0;
  std::vector<double> eigenvalues;  // ascending
};

/// Compressed commutator phi(H) [H, iA] phi(H) on localized filtered probes, reduced by
/// Rayleigh-Ritz on the orthonormalized filtered basis.
MourreResult mourre_estimate_check(const BandedBlockMatrix& h, const ConjugateOperatorGrid& conj, Interval delta,
                                   int degree, const MourreOptions& opts = {});

}  // namespace tspec
