#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "tspec/common.hpp"
#include "tspec/symbol.hpp"

namespace tspec {

enum class WindowKind { two_sided, one_sided };

/// Finite window of the lattice: sites -L..L-1 (two-sided) or 0..L-1 (one-sided).
struct LatticeWindow {
  WindowKind kind = WindowKind::two_sided;
  int half_length = 0;
  int block_size = 1;

  static LatticeWindow two_sided(int half_length, int block_size = 1) {
    return {WindowKind::two_sided, half_length, block_size};
  }
  static LatticeWindow one_sided(int length, int block_size = 1) {
    return {WindowKind::one_sided, length, block_size};
  }

  int first_site() const { return kind == WindowKind::two_sided ? -half_length : 0; }
  int last_site() const { return half_length - 1; }
  int sites() const { return kind == WindowKind::two_sided ? 2 * half_length : half_length; }
  int dim() const { return sites() * block_size; }
  bool contains(int site) const { return site >= first_site() && site <= last_site(); }
  /// Offset of the first component of `site` in a lattice vector.
  int offset(int site) const { return (site - first_site()) * block_size; }
  int site_of(int index) const { return first_site() + index / block_size; }
  /// Same window with the half-length scaled by `factor`.
  LatticeWindow scaled(int factor) const { return {kind, half_length * factor, block_size}; }
  /// True when `site` lies in the outer `fraction` of the window next to an artificial edge.
  bool near_edge(int site, double fraction) const;

  bool operator==(const LatticeWindow&) const = default;
};

/// Hermitian block-banded matrix on a window, plus the list of blocks that came from
/// corner or perturbation patches (kept for structural queries; they are also in the band).
class BandedBlockMatrix {
 public:
  struct PatchBlock {
    int row_site;
    int col_site;
    CMatrix block;
  };

  BandedBlockMatrix() = default;
  BandedBlockMatrix(LatticeWindow window, int block_bandwidth);

  const LatticeWindow& window() const { return window_; }
  int block_bandwidth() const { return block_bw_; }
  /// Scalar half-bandwidth kd: entries with |r - c| > kd are zero.
  int scalar_bandwidth() const { return kd_; }
  int dim() const { return window_.dim(); }

  cplx entry(int r, int c) const;
  CMatrix block(int row_site, int col_site) const;

  /// Adds `blk` at (row_site, col_site) and its adjoint at the mirrored position.
  void add_block(int row_site, int col_site, const CMatrix& blk, bool record_patch = false);
  /// Grows the band to at least `block_bandwidth` sites; never shrinks.
  void widen(int block_bandwidth);
  /// Adds `s` to every diagonal entry.
  void shift_diagonal(cplx s);

  const std::vector<PatchBlock>& patch() const { return patch_; }

  CVector apply(const CVector& x) const;
  CMatrix to_dense() const;

  /// max |B(r,c) - conj(B(c,r))| over stored entries.
  double hermiticity_defect() const;
  double max_abs_entry() const;
  /// Gershgorin enclosure of the (real) spectrum.
  Interval gershgorin() const;

  /// Raw band storage: band()(kd + r - c, c) = B(r, c).
  const CMatrix& band() const { return band_; }

  BandedBlockMatrix& operator+=(const BandedBlockMatrix& other);
  BandedBlockMatrix& operator-=(const BandedBlockMatrix& other);

 private:
  cplx& at(int r, int c) {
    touch(r, c);
    return band_(kd_ + r - c, c);
  }
  void touch(int r, int c) {
    row_lo_[c] = std::min(row_lo_[c], r);
    row_hi_[c] = std::max(row_hi_[c], r);
  }

  LatticeWindow window_{};
  int block_bw_ = 0;
  int kd_ = 0;
  CMatrix band_;
  // per column, the rows ever written (apply skips the rest of the band)
  std::vector<int> row_lo_, row_hi_;
  std::vector<PatchBlock> patch_;
};

/// Site interval [lo, hi] reached by vectors supported on sites [lo0, hi0] after `steps`
/// applications of `b`, following its nonzero blocks (clipped to the window).
Interval support_after(const BandedBlockMatrix& b, int lo0, int hi0, int steps);

BandedBlockMatrix operator+(BandedBlockMatrix a, const BandedBlockMatrix& b);
BandedBlockMatrix operator-(BandedBlockMatrix a, const BandedBlockMatrix& b);

/// Lattice vector supported on a window, with the site origin recorded.
struct LatticeVector {
  int first_site = 0;
  int block_size = 1;
  CVector values;

  int sites() const { return static_cast<int>(values.size()) / block_size; }
  /// Component block at `site` (zero outside the stored range).
  CVector at(int site) const;
  /// Re-indexes onto `window` (dropping entries outside it).
  CVector on(const LatticeWindow& window) const;
};

/// Perturbation generator families and explicit entry lists.
struct PerturbationSpec {
  enum class Kind {
    explicit_entries,  // (i, j, block) list
    exponential,       // |V_ij| = C e^{-rate (|i|+|j|)}
    power,             // |V_ij| = C (1+|i|+|j|)^{-1-rate}
    separable,         // |V_ij| = C (1+|i|)^{-rate} (1+|j|)^{-rate}
    convolution,       // |V_ij| = C (1+|i-j|)^{-rate}
    rank_one,          // strength * <., psi> psi
    box,               // explicit entries confined to |i|,|j| <= extent
  };
  struct Entry {
    int i;
    int j;
    CMatrix block;
  };

  Kind kind = Kind::explicit_entries;
  double scale = 1.0;  // C
  double rate = 1.0;   // kappa, s, sigma or q depending on kind
  bool one_sided = false;
  int extent = 0;
  std::vector<Entry> entries;
  LatticeVector psi;
  double strength = 1.0;
  CMatrix pattern;  // unit-norm Hermitian N x N pattern for generators; empty = identity

  static PerturbationSpec exponential(double c, double kappa, bool one_sided = false);
  static PerturbationSpec power(double c, double s, bool one_sided = false);
  static PerturbationSpec separable(double c, double sigma, bool one_sided = false);
  static PerturbationSpec convolution(double c, double q);
  static PerturbationSpec rank_one(LatticeVector psi, double strength = 1.0);
  static PerturbationSpec explicit_list(std::vector<Entry> entries, bool one_sided = false);
  static PerturbationSpec box(int extent, std::vector<Entry> entries, bool one_sided = false);

  /// Generator families with a closed-form entry magnitude.
  bool is_generator() const;
  /// Scalar profile g(i, j) of a generator (|V_ij| = g(i,j) * |pattern|).
  double profile(int i, int j) const;
  /// Block V_ij for block size n (after symmetrisation for explicit lists).
  CMatrix block(int i, int j, int n) const;
  /// Checks the v_ij = v_ji^* symmetry of explicit entries (1e-12).
  void validate(int block_size) const;
};

/// Smooth windows: theta > 0 exactly on (1, 2), theta_tilde > 0 exactly on (-2, 2).
namespace window_fn {
double theta(double x);
double theta_tilde(double x);
/// C-infinity transition: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);
/// Compactness cutoff: 0 on |x| <= 1/2, 1 on |x| >= 1.
double xi(double x);
}  // namespace window_fn

BandedBlockMatrix assemble_laurent(const MatrixSymbol& sym, const LatticeWindow& window);
BandedBlockMatrix assemble_toeplitz(const MatrixSymbol& sym, const LatticeWindow& window);
BandedBlockMatrix assemble_hankel_corner(const MatrixSymbol& sym, const LatticeWindow& window);
BandedBlockMatrix assemble_perturbation(const PerturbationSpec& spec, const LatticeWindow& window);

/// Symbol plus optional perturbation on one window family (Toeplitz or Laurent).
struct OperatorModel {
  MatrixSymbol symbol;
  std::optional<PerturbationSpec> perturbation;
  WindowKind kind = WindowKind::one_sided;

  LatticeWindow window(int half_length) const;
  BandedBlockMatrix assemble(int half_length) const;
};

CVector apply_operator(const BandedBlockMatrix& b, const CVector& x);

/// (1 + n^2)^{-s/2} x_n blockwise.
CVector weight_vector(const CVector& x, double s, const LatticeWindow& window);

/// ||theta_tilde(|N|/2) x|| + sum_j 2^{j/2} ||theta(2^{-j}|N|) x||.
double besov_norm(const CVector& x, const LatticeWindow& window);

/// Complex band LU with partial pivoting of B - z.
class BandLU {
 public:
  BandLU(const BandedBlockMatrix& b, cplx z);

  CVector solve(const CVector& rhs) const;
  /// Solves (B - z)^H x = rhs.
  CVector solve_adjoint(const CVector& rhs) const;
  /// Rough 2-norm condition estimate (inverse power steps).
  double condition_estimate() const { return cond_; }
  double min_pivot() const { return min_pivot_; }

 private:
  int n_ = 0;
  int kl_ = 0;
  int width_ = 0;               // kl + ku + kl columns per row after fill
  std::vector<cplx> u_;         // row-wise, absolute column window starting at row - kl
  std::vector<cplx> mult_;      // n x kl multipliers
  std::vector<int> piv_;
  double cond_ = 0.0;
  double min_pivot_ = 0.0;
  cplx& u(int r, int c) { return u_[static_cast<std::size_t>(r) * width_ + (c - r + kl_)]; }
  cplx u(int r, int c) const { return u_[static_cast<std::size_t>(r) * width_ + (c - r + kl_)]; }
};

}  // namespace tspec
