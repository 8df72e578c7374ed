#include "tspec/lap.hpp"

#include <algorithm>
#include <cmath>

namespace tspec {

Resolvent::Resolvent(const BandedBlockMatrix& h, cplx z) : h_(&h), z_(z), lu_(h, z) {
  if (!(lu_.condition_estimate() <= 1e14))
    throw Error(ErrorKind::numeric, "resolvent_solve",
                "near eigenvalue: condition estimate " + std::to_string(lu_.condition_estimate()) + " at z = " +
                    std::to_string(z.real()) + (z.imag() < 0 ? " - " : " + ") + std::to_string(std::abs(z.imag())) +
                    "i");
}

namespace {

CVector refined(const BandedBlockMatrix& h, cplx z, const CVector& b, const std::function<CVector(const CVector&)>& lu) {
  CVector x = lu(b);
  const CVector r = b - (h.apply(x) - z * x);
  x += lu(r);
  const double bn = b.norm();
  const double res = (b - (h.apply(x) - z * x)).norm();
  if (res > 1e-10 * bn)
    throw Error(ErrorKind::numeric, "resolvent_solve", "residual " + std::to_string(res / bn) + " after refinement");
  return x;
}

}  // namespace

CVector Resolvent::solve(const CVector& b) const {
  return refined(*h_, z_, b, [this](const CVector& v) { return lu_.solve(v); });
}

CVector Resolvent::solve_adjoint(const CVector& b) const {
  return refined(*h_, std::conj(z_), b, [this](const CVector& v) { return lu_.solve_adjoint(v); });
}

CVector resolvent_solve(const BandedBlockMatrix& h, cplx z, const CVector& b) { return Resolvent(h, z).solve(b); }

WeightedNorm weighted_resolvent_norm(const BandedBlockMatrix& h, double x, double mu, double s,
                                     const NormOptions& opts) {
  if (mu == 0.0) throw Error(ErrorKind::precondition, "weighted_resolvent_norm", "mu must be nonzero");
  const Resolvent res(h, cplx(x, mu));
  const LatticeWindow& w = h.window();
  auto gram = [&](const CVector& v) {
    const CVector y = weight_vector(res.solve(weight_vector(v, s, w)), s, w);
    return weight_vector(res.solve_adjoint(weight_vector(y, s, w)), s, w);
  };

  const TopSingular top = lanczos_top_singular(gram, h.dim(), opts.max_iterations, opts.tolerance, opts.seed);
  WeightedNorm out;
  out.value = top.value;
  out.condition = res.condition_estimate();
  out.iterations = top.iterations;
  out.converged = top.converged;
  return out;
}

std::string to_string(LapVerdict v) {
  switch (v) {
    case LapVerdict::bounded: return "bounded";
    case LapVerdict::growing: return "growing";
    case LapVerdict::near_eigenvalue: return "near-eigenvalue";
  }
  return "?";
}

double mu_floor(int sites) { return std::max(1e-4, 20.0 / sites); }

std::vector<double> default_mu_grid() {
  std::vector<double> g;
  for (int k = 4; k <= 16; ++k) g.push_back(std::pow(10.0, -k / 4.0));
  return g;
}

namespace {

/// Certified discrete eigenvalue within `radius` of x when x lies in a gap of the essential spectrum.
std::optional<double> nearby_gap_eigenvalue(const OperatorModel& model, double x, double radius, int half_length) {
  const BandStructure bands = compute_bands(model.symbol, 1024);
  const double tol = 1e-9 * (bands.spectral_diameter() + 1.0);
  Interval probe{x - radius, x + radius};
  for (const auto& band : essential_spectrum(bands)) {
    if (band.lo - tol <= x && x <= band.hi + tol) return std::nullopt;
    if (band.hi < x) probe.lo = std::max(probe.lo, band.hi + 2 * tol);
    if (band.lo > x) probe.hi = std::min(probe.hi, band.lo - 2 * tol);
  }
  const PerturbationSpec* v = model.perturbation ? &*model.perturbation : nullptr;
  const auto pairs = gap_eigenvalues(model.symbol, v, probe, half_length, model.kind);
  std::optional<double> best;
  for (const auto& p : pairs)
    if (!best || std::abs(p.value - x) < std::abs(*best - x)) best = p.value;
  return best;
}

}  // namespace

ResolventProbe lap_sweep(const OperatorModel& model, double x, double s, int half_length, std::vector<double> mu_grid,
                         const LapThresholds& thresholds) {
  if (!(s > 0.5)) throw Error(ErrorKind::precondition, "lap_sweep", "weight exponent must exceed 1/2");
  ResolventProbe p;
  p.x = x;
  p.s = s;
  p.half_length = half_length;
  const BandedBlockMatrix h = model.assemble(half_length), h2 = model.assemble(2 * half_length);
  p.mu_min = mu_floor(h.window().sites());
  std::sort(mu_grid.begin(), mu_grid.end(), std::greater<>());
  for (double mu : mu_grid)
    if (mu >= p.mu_min * (1 - 1e-12)) p.mu_grid.push_back(mu);
  if (p.mu_grid.empty()) p.mu_grid.push_back(p.mu_min);
  const int m = static_cast<int>(p.mu_grid.size());
  p.norms.assign(m, 0.0);
  p.norms_2l.assign(m, 0.0);
  p.conditions.assign(m, 0.0);
  parallel_for(2 * m, [&](int task) {
    const int i = task / 2;
    if (task % 2 == 0) {
      const auto r = weighted_resolvent_norm(h, x, p.mu_grid[i], s);
      p.norms[i] = r.value;
      p.conditions[i] = r.condition;
    } else {
      p.norms_2l[i] = weighted_resolvent_norm(h2, x, p.mu_grid[i], s).value;
    }
  });
  const double last = p.mu_grid.back();
  double lo = INFINITY, hi = 0.0;
  for (int i = 0; i < m; ++i) {
    if (p.mu_grid[i] <= 10.0 * last * (1 + 1e-12)) {
      lo = std::min(lo, p.norms[i]);
      hi = std::max(hi, p.norms[i]);
    }
    p.window_agreement = std::max(p.window_agreement, std::abs(p.norms[i] - p.norms_2l[i]) / p.norms_2l[i]);
  }
  p.decade_ratio = hi / lo;
  p.eigenvalue = nearby_gap_eigenvalue(model, x, 10.0 * p.mu_min, half_length);
  if (p.eigenvalue)
    p.verdict = LapVerdict::near_eigenvalue;
  else if (p.decade_ratio <= thresholds.decade_ratio && p.window_agreement <= thresholds.window_agreement)
    p.verdict = LapVerdict::bounded;
  else
    p.verdict = LapVerdict::growing;
  return p;
}

HolderFit holder_fit(const OperatorModel& model, double x, double s, int half_length, std::vector<double> deltas,
                     double mu) {
  if (!(s > 0.5 && s <= 1.5)) throw Error(ErrorKind::precondition, "holder_fit", "weight exponent must lie in (1/2, 3/2]");
  const BandedBlockMatrix h = model.assemble(half_length);
  HolderFit fit;
  fit.mu = std::max(mu, mu_floor(h.window().sites()));
  if (deltas.empty()) {
    const auto ess = essential_spectrum(compute_bands(model.symbol, 1024));
    const double width = ess.back().hi - ess.front().lo;
    for (int k = 3; k <= 8; ++k) deltas.push_back(width * std::ldexp(1.0, -k));
  }
  std::sort(deltas.begin(), deltas.end());
  fit.deltas = deltas;
  const int m = static_cast<int>(deltas.size());
  std::vector<double> g(m + 1);
  parallel_for(m + 1, [&](int i) {
    const double at = i == m ? x : x + deltas[i];
    g[i] = weighted_resolvent_norm(h, at, fit.mu, s, {60, 1e-8, 0x5EED}).value;
  });
  const double g0 = g[m];
  const double noise = 1e-4 * g0;
  std::vector<double> lx, ly;
  for (int i = 0; i < m; ++i) {
    const double d = std::abs(g[i] - g0);
    fit.differences.push_back(d);
    if (d > noise) {
      lx.push_back(std::log(deltas[i]));
      ly.push_back(std::log(d));
    }
  }
  if (fit.mu > deltas.front()) {
    fit.inconclusive = true;
    fit.reason = "mu floor exceeds the smallest offset";
  }
  for (int i = 1; i < m; ++i) {
    if (fit.differences[i] < fit.differences[i - 1] && fit.differences[i - 1] > noise) {
      fit.inconclusive = true;
      fit.reason = "non-monotone differences";
    }
  }
  if (lx.size() < 3) {
    fit.inconclusive = true;
    fit.reason = "differences below the noise floor";
    return fit;
  }
  fit.exponent = fit_line(lx, ly).slope;
  return fit;
}

}  // namespace tspec
