#pragma once

#include <string>
#include <vector>

#include "tspec/lattice.hpp"

namespace tspec {

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

/// sum_{b >= 0} (c + b)^{-p} for c >= 1 (Euler-Maclaurin tail); +inf when p <= 1.
double power_sum(double c, double p);

struct SchurBounds {
  double row = 0.0;  // sup_i sum_j ||V_ij||
  double col = 0.0;  // sup_j sum_i ||V_ij||
  double bound = 0.0;
};

SchurBounds schur_bounds(const PerturbationSpec& v, int block_size);

/// sqrt(sum ||V_ij||_F^2); +inf when divergent.
double hs_norm(const PerturbationSpec& v, int block_size);

struct AnnulusSums {
  double n_v = 0.0;
  double p_v = 0.0;
};

/// n_V(r) and p_V(r) over the annulus r <= |i| <= 2r (r <= i <= 2r for one-sided specs).
AnnulusSums nv_pv(const PerturbationSpec& v, int block_size, double r);

struct MaskedNorm {
  double value = 0.0;
  double tail_bound = 0.0;  // certified bound on the truncated remainder (0 when exact)
};

/// ||theta(<N>/r) V|| with the row mask.
MaskedNorm masked_norm(const PerturbationSpec& v, int block_size, double r);

/// Same quantity for a matrix assembled on a window (dense SVD); `mask` weighs rows by site.
double window_masked_norm(const BandedBlockMatrix& v, const std::function<double(int)>& mask);

struct DyadicProfile {
  std::vector<double> radii;
  std::vector<double> norms;
  std::vector<double> tail_bounds;
};

/// Masked norms at r = 2^k, k = 0..k_max.
DyadicProfile dyadic_profile(const PerturbationSpec& v, int block_size, int k_max = 14);

struct CompactnessResult {
  Verdict verdict = Verdict::inconclusive;
  std::vector<double> radii;
  std::vector<double> norms;  // Schur (or Hilbert-Schmidt, if smaller) bound of xi(N/r) V
  double reference = 0.0;     // bound on ||V||
  double slope = 0.0;         // log-log slope over the last radii
};

/// pass: finite Hilbert-Schmidt norm, or masked upper bounds that decay (slope <= -0.25, or below 1e-3 of
/// the norm bound with slope < -0.05). Bounds that stall are inconclusive, never fail.
CompactnessResult compactness_test(const PerturbationSpec& v, int block_size, double r_max = 16384);

struct TailFit {
  Verdict verdict = Verdict::inconclusive;
  double slope = 0.0;     // of log2(2^k norm_k) against k over the fit window
  double residual = 0.0;  // RMS misfit of that line
  double partial_integral = 0.0;  // sum_k 2^k norm_k
  int k_from = 0;
  int k_to = 0;
};

/// Dyadic (C1,1) check: pass when 2^k norm_k decays with slope <= -0.1; the verdict must agree
/// with the one at k_max + 1.
TailFit c11_test(const PerturbationSpec& v, int block_size, int k_max = 14);
/// Same check on a precomputed profile with radii 2^0 .. 2^{k_max + 1}.
TailFit c11_from_profile(const DyadicProfile& profile);

struct ExponentFit {
  Verdict verdict = Verdict::inconclusive;
  double s = 0.0;  // +inf when the masked norms vanish
  double stderr_s = 0.0;
  double residual = 0.0;
};

/// s = -slope of log norm_k against log r_k over the upper half of the profile.
ExponentFit cs_exponent(const DyadicProfile& profile);

struct Classification {
  SchurBounds schur;
  double hs = 0.0;
  DyadicProfile profile;
  CompactnessResult compactness;
  TailFit c11;
  ExponentFit cs;
  std::vector<std::string> classes;  // subset of {bounded, compact, C11, Cs(s)}
};

Classification classify(const PerturbationSpec& v, int block_size, int k_max = 14);

}  // namespace tspec
