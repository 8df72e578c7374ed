#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tspec/eig.hpp"
#include "tspec/lattice.hpp"

namespace tspec {

/// Factorized resolvent (H - z)^{-1} with one step of iterative refinement.
class Resolvent {
 public:
  /// Throws a numeric error naming a near eigenvalue when the condition estimate exceeds 1e14.
  Resolvent(const BandedBlockMatrix& h, cplx z);

  CVector solve(const CVector& b) const;
  /// (H - z)^{-H} b = (H - conj z)^{-1} b.
  CVector solve_adjoint(const CVector& b) const;
  double condition_estimate() const { return lu_.condition_estimate(); }
  cplx z() const { return z_; }

 private:
  const BandedBlockMatrix* h_;
  cplx z_;
  BandLU lu_;
};

/// x with ||(H - z) x - b|| <= 1e-10 ||b||.
CVector resolvent_solve(const BandedBlockMatrix& h, cplx z, const CVector& b);

struct NormOptions {
  int max_iterations = 30;
  double tolerance = 1e-4;
  std::uint64_t seed = 0x5EED;
};

struct WeightedNorm {
  double value = 0.0;
  double condition = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of <N>^{-s} (H - x - i mu)^{-1} <N>^{-s} (Lanczos on X^H X).
WeightedNorm weighted_resolvent_norm(const BandedBlockMatrix& h, double x, double mu, double s,
                                     const NormOptions& opts = {});

enum class LapVerdict { bounded, growing, near_eigenvalue };

std::string to_string(LapVerdict v);

/// Smallest admissible mu on a window with `sites` sites: max(1e-4, 20 / sites).
double mu_floor(int sites);

/// 10^{-1} .. 10^{-4}, four points per decade.
std::vector<double> default_mu_grid();

struct LapThresholds {
  double decade_ratio = 2.0;       // max/min over the last decade
  double window_agreement = 0.10;  // relative L vs 2L difference
};

struct ResolventProbe {
  double x = 0.0;
  double s = 1.0;
  int half_length = 0;
  double mu_min = 0.0;
  std::vector<double> mu_grid;  // after applying the floor
  std::vector<double> norms;    // window L
  std::vector<double> norms_2l;  // window 2L
  std::vector<double> conditions;
  double decade_ratio = 0.0;
  double window_agreement = 0.0;
  std::optional<double> eigenvalue;  // certified eigenvalue within 10 mu_min of x
  LapVerdict verdict = LapVerdict::growing;
};

ResolventProbe lap_sweep(const OperatorModel& model, double x, double s, int half_length,
                         std::vector<double> mu_grid = default_mu_grid(), const LapThresholds& thresholds = {});

struct HolderFit {
  double exponent = 0.0;
  double mu = 0.0;
  std::vector<double> deltas;
  std::vector<double> differences;
  bool inconclusive = false;
  std::string reason;
};

/// Slope of log |g(x + d) - g(x)| against log d, g = weighted norm at mu = max(mu_floor, floor(L)).
/// Default deltas: 2^{-k} times the spectral width, k = 3..8.
HolderFit holder_fit(const OperatorModel& model, double x, double s, int half_length,
                     std::vector<double> deltas = {}, double mu = 1e-3);

}  // namespace tspec
