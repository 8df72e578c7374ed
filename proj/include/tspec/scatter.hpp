#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tspec/eig.hpp"
#include "tspec/lattice.hpp"
#include "tspec/perturb.hpp"
#include "tspec/symbol.hpp"

namespace tspec {

/// J_0(x) .. J_n(x) by normalized backward recurrence.
std::vector<double> bessel_j_sequence(double x, int n);

/// Chebyshev-Bessel realization of e^{-iHt} on a spectral hull.
struct PropagatorPlan {
  Interval hull;            // encloses the spectrum with a 5% margin per side
  double epsilon = 1e-8;    // target accuracy relative to ||psi||
  double degree_per_time = 0.0;  // half-width of the hull: the degree grows like this times |t|

  /// Smallest degree whose Bessel tail 2 sum_{k > d} |J_k| is at most epsilon.
  int degree(double t) const;
};

PropagatorPlan make_plan(Interval spectrum_enclosure, double epsilon = 1e-8);
/// Plan for the Gershgorin enclosure of `h`.
PropagatorPlan make_plan(const BandedBlockMatrix& h, double epsilon = 1e-8);
/// Plan whose hull encloses both spectra.
PropagatorPlan make_plan(const BandedBlockMatrix& h, const BandedBlockMatrix& h0, double epsilon = 1e-8);

/// e^{-iHt} psi with error at most plan.epsilon ||psi||. Throws a numeric error when the recurrence
/// norms run away (spectrum outside the hull).
CVector chebyshev_propagate(const BandedBlockMatrix& h, const CVector& psi, double t, const PropagatorPlan& plan);

/// Projector onto the complement of the flat-band eigenspaces, realized on the periodic grid
/// with one point per window site (an exact orthogonal projector on the window).
class AcProjector {
 public:
  AcProjector(const MatrixSymbol& sym, const BandStructure& bands);

  CVector apply(const CVector& psi, const LatticeWindow& window) const;
  bool is_identity() const { return flat_values_.empty(); }
  const std::vector<double>& flat_values() const { return flat_values_; }

 private:
  MatrixSymbol sym_;
  std::vector<double> flat_values_;
  std::vector<int> flat_multiplicity_;
  double tolerance_ = 0.0;
};

AcProjector p_ac_projector(const MatrixSymbol& sym, const BandStructure& bands);

/// max_{j,p} |lambda_j'(p)|.
double max_group_velocity(const BandStructure& bands);

/// Throws a precondition error unless the window holds the ballistic front: L >= 1.2 v_max t_max.
void require_ballistic_window(double v_max, int half_length, double t_max, const std::string& where);

/// Norm of `v` on the outer `fraction` of the window next to its artificial edges.
double edge_mass(const CVector& v, const LatticeWindow& window, double fraction = 0.05);

struct DecayOptions {
  double shoulder_fraction = 0.1;  // erf shoulder as a fraction of |delta|; plateau shrunk by two shoulders
  double filter_tolerance = 1e-8;
  double front_tolerance = 1e-6;   // edge mass allowed at t_max
  int norm_iterations = 30;
  double norm_tolerance = 1e-4;
  double epsilon = 1e-8;
  std::uint64_t seed = 0x5EED;
};

struct DecayFit {
  std::vector<double> times;
  std::vector<double> norms;  // ||<N>^{-sigma} e^{-iHt} phi(H) <N>^{-sigma}||
  double slope = 0.0;         // of log norm against log t over [t_max / 10, t_max]
  double residual = 0.0;
  int filter_degree = 0;
  double front_mass = 0.0;
};

/// Default time grid: 8 log-spaced points on [t_max / 10, t_max].
std::vector<double> default_time_grid(double t_max);

/// Propagation estimate for the model at half-length L. delta must avoid the critical set.
DecayFit propagation_decay(const OperatorModel& model, Interval delta, double sigma, std::vector<double> t_grid,
                           int half_length, const DecayOptions& opts = {});

struct WaveOptions {
  Interval test_band;      // band whose middle third carries the intertwining window
  int filter_degree = 200;  // raised when the window needs more
  double front_tolerance = 1e-6;
};

struct WaveOperatorResult {
  int sign = 1;
  LatticeWindow window;
  CVector psi_in;     // normalized input
  CVector projected;  // P_ac psi
  CVector omega;      // Omega_{T_max} psi
  std::vector<double> times;
  std::vector<double> norms;           // ||Omega_T psi||
  std::vector<double> cauchy_defects;  // ||Omega_{T_{k+1}} psi - Omega_{T_k} psi||
  double cauchy_gate = 0.0;            // defect between T_max / 2 and T_max
  double isometry_defect = 0.0;
  double intertwining_residual = 0.0;
  double front_mass = 0.0;
  double epsilon = 0.0;
};

/// Default grid T_max {1/4, 1/2, 3/4, 1}.
std::vector<double> default_wave_grid(double t_max);

/// Omega_T psi = e^{iH sT} e^{-iH0 sT} P_ac psi for s = sign and T on the grid (T_max / 2 is added).
WaveOperatorResult wave_operator(const BandedBlockMatrix& h, const BandedBlockMatrix& h0, const AcProjector& pac,
                                 const CVector& psi, int sign, std::vector<double> t_grid, const PropagatorPlan& plan,
                                 const WaveOptions& opts);

/// Independent runs over several inputs, in parallel.
std::vector<WaveOperatorResult> wave_operators(const BandedBlockMatrix& h, const BandedBlockMatrix& h0,
                                               const AcProjector& pac, const std::vector<CVector>& inputs, int sign,
                                               const std::vector<double>& t_grid, const PropagatorPlan& plan,
                                               const WaveOptions& opts);

/// Gaussian packet exp(-(n - center)^2 / (2 width^2)) e^{-i p n} W_band(p), cut at 6 widths.
CVector wave_packet(const MatrixSymbol& sym, const LatticeWindow& window, double center, double width,
                    double momentum, int band);

/// `count` packets on the widest band: half at the fastest forward momentum, half backward,
/// centered at distances spread over [0, min(L / 2, v_max T_max / 8)] so that their passage
/// through the origin ends before the first default grid time.
std::vector<CVector> localized_basis(const MatrixSymbol& sym, const BandStructure& bands, const LatticeWindow& window,
                                     double t_max, int count = 8);

/// Widest non-flat band of the analytic branches.
Interval widest_band(const BandStructure& bands);

struct CompletenessThresholds {
  double cauchy_gate = 2e-2;
  double isometry = 2e-2;
  double orthogonality = 2e-2;
};

struct CompletenessResult {
  Verdict verdict = Verdict::inconclusive;
  double gram_defect = 0.0;         // max |<Omega psi_i, Omega psi_j> - <P psi_i, P psi_j>|
  double bound_state_overlap = 0.0;  // max |<b, Omega psi_k>|
  double cauchy_gate = 0.0;          // max over inputs
  bool cauchy_decreasing = true;
  std::string reason;
};

/// Isometry on the projected inputs and orthogonality of Omega_{T_max} psi_k to certified bound states.
/// Bound states may come from a smaller window of the same kind; they are embedded by site.
CompletenessResult completeness_check(const std::vector<WaveOperatorResult>& results,
                                      const std::vector<ValidatedEigenpair>& bound_states,
                                      const CompletenessThresholds& thresholds = {});

}  // namespace tspec
