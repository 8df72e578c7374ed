#include "tspec/mourre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <unsupported/Eigen/FFT>

namespace tspec {

double SmoothWindow::operator()(double x) const {
  if (x <= support.lo || x >= support.hi) return 0.0;
  double v = 1.0;
  if (x < plateau.lo) v *= window_fn::smooth_step((x - support.lo) / (plateau.lo - support.lo));
  if (x > plateau.hi) v *= window_fn::smooth_step((support.hi - x) / (support.hi - plateau.hi));
  return v;
}

SmoothWindow build_window(Interval delta, const CriticalSet& kappa) {
  if (!(delta.hi > delta.lo)) throw Error(ErrorKind::precondition, "build_window", "empty interval");
  const double inf = std::numeric_limits<double>::infinity();
  double left = inf, right = inf;
  for (double v : kappa.values()) {
    if (v >= delta.lo && v <= delta.hi)
      throw Error(ErrorKind::precondition, "build_window", "interval touches critical value " + std::to_string(v));
    if (v < delta.lo) left = std::min(left, delta.lo - v);
    if (v > delta.hi) right = std::min(right, v - delta.hi);
  }
  // one-sided clearance with no critical value: any finite margin works
  const double fallback = 2.0 * std::max(delta.width(), 1.0);
  if (!std::isfinite(left)) left = fallback;
  if (!std::isfinite(right)) right = fallback;
  return {delta, {delta.lo - 0.5 * left, delta.hi + 0.5 * right}};
}

RVector build_F(const BandStructure& bands, int band, const SmoothWindow& zeta) {
  if (band < 0 || band >= bands.block_size) throw Error(ErrorKind::precondition, "build_F", "band index out of range");
  const int kk = bands.grid_size();
  const double tol = 1e-6 * (bands.spectral_diameter() + 1.0);
  RVector f = RVector::Zero(kk);
  for (int k = 0; k < kk; ++k) {
    const double z = zeta(bands.values(k, band));
    if (z == 0.0) continue;
    const double slope = bands.slopes(k, band);
    if (std::abs(slope) < tol)
      throw Error(ErrorKind::precondition, "build_F",
                  "window leaked onto a critical point at p = " + std::to_string(bands.grid[k]));
    f(k) = z * slope / (slope * slope);
  }
  return f;
}

namespace {

/// Parallel transport of each sorted column along the grid, with the closing holonomy
/// spread linearly so the frame is smooth across p = pi.
std::vector<CMatrix> transported_frames(const BandStructure& bands) {
  const int kk = bands.grid_size(), n = bands.block_size;
  std::vector<CMatrix> w = bands.vectors;
  for (int j = 0; j < n; ++j) {
    for (int k = 1; k < kk; ++k) {
      const cplx o = w[k - 1].col(j).dot(w[k].col(j));
      if (std::abs(o) > 1e-12) w[k].col(j) *= std::conj(o) / std::abs(o);
    }
    const cplx close = w[kk - 1].col(j).dot(w[0].col(j));
    if (std::abs(close) <= 1e-12) continue;
    const double beta = std::arg(close) / kk;
    for (int k = 1; k < kk; ++k) w[k].col(j) *= std::polar(1.0, beta * k);
  }
  return w;
}

int wrap_index(int n, int kk) { return ((n % kk) + kk) % kk; }

void require_two_sided(const LatticeWindow& window, int block_size, const char* op) {
  if (window.kind != WindowKind::two_sided)
    throw Error(ErrorKind::precondition, op, "conjugate operator needs a two-sided window");
  if (window.block_size != block_size) throw Error(ErrorKind::precondition, op, "block size mismatch");
}

}  // namespace

ConjugateOperatorGrid::ConjugateOperatorGrid(const MatrixSymbol& sym, Interval delta, int grid_size)
    : bands_(compute_bands(sym, grid_size)) {
  const CriticalSet kappa = compute_critical_set(sym, bands_);
  zeta_ = build_window(delta, kappa);
  frames_ = transported_frames(bands_);
  // chi: 1 on supp zeta, vanishing before the critical values; wide shoulders keep its
  // Fourier tail below the commutator tolerance
  const double wl = 0.9 * (zeta_.plateau.lo - zeta_.support.lo), wr = 0.9 * (zeta_.support.hi - zeta_.plateau.hi);
  const SmoothWindow chi{zeta_.support, {zeta_.support.lo - wl, zeta_.support.hi + wr}};
  const int kk = bands_.grid_size(), n = bands_.block_size;
  f_.resize(kk, n);
  chi_.resize(kk, n);
  for (int j = 0; j < n; ++j) {
    f_.col(j) = build_F(bands_, j, zeta_);
    for (int k = 0; k < kk; ++k) chi_(k, j) = chi(bands_.values(k, j));
  }
}

ConjugateOperatorGrid build_conjugate(const MatrixSymbol& sym, Interval delta, int grid_size) {
  return ConjugateOperatorGrid(sym, delta, grid_size);
}

CVector ConjugateOperatorGrid::apply_band(int band, const CVector& g) const {
  const int kk = grid_size();
  if (g.size() != kk) throw Error(ErrorKind::precondition, "apply_band", "sample count differs from grid size");
  if (f_.col(band).cwiseAbs().maxCoeff() == 0.0) return CVector::Zero(kk);
  const CVector chi_g = chi_.col(band).cwiseProduct(g);
  const CVector f_g = f_.col(band).cwiseProduct(g);
  const CVector t1 = f_.col(band).cwiseProduct(spectral_derivative(chi_g));
  const CVector t2 = chi_.col(band).cwiseProduct(spectral_derivative(f_g));
  return 0.5 * kI * (t1 + t2);
}

CMatrix ConjugateOperatorGrid::dense_band(int band) const {
  const int kk = grid_size();
  CMatrix a(kk, kk);
  for (int k = 0; k < kk; ++k) a.col(k) = apply_band(band, CVector::Unit(kk, k));
  return 0.5 * (a + a.adjoint());
}

double ConjugateOperatorGrid::hermiticity_defect(int band) const {
  const int kk = grid_size();
  CMatrix a(kk, kk);
  for (int k = 0; k < kk; ++k) a.col(k) = apply_band(band, CVector::Unit(kk, k));
  const double nrm = a.norm();
  return nrm == 0.0 ? 0.0 : (a - a.adjoint()).norm() / nrm;
}

double ConjugateOperatorGrid::commutator_defect(int band) const {
  const int kk = grid_size();
  const RVector lambda = bands_.values.col(band);
  RVector z(kk);
  for (int k = 0; k < kk; ++k) z(k) = zeta_(lambda(k));
  double worst = 0.0;
  for (int m = -kk / 8; m <= kk / 8; ++m) {
    CVector v(kk);
    for (int k = 0; k < kk; ++k) v(k) = std::polar(1.0 / std::sqrt(double(kk)), m * bands_.grid[k]);
    const CVector lv = lambda.cwiseProduct(v);
    const CVector comm = kI * (lambda.cwiseProduct(apply_band(band, v)) - apply_band(band, lv));
    worst = std::max(worst, (comm - z.cwiseProduct(v)).norm());
  }
  return worst;
}

CMatrix ConjugateOperatorGrid::to_bands(const CVector& psi, const LatticeWindow& window) const {
  require_two_sided(window, block_size(), "to_bands");
  const int kk = grid_size(), n = block_size();
  if (window.sites() > kk) throw Error(ErrorKind::precondition, "to_bands", "window has more sites than grid points");
  Eigen::FFT<double> fft;
  CMatrix hat(kk, n);
  for (int c = 0; c < n; ++c) {
    std::vector<cplx> x(kk, 0.0), y;
    for (int s = window.first_site(); s <= window.last_site(); ++s)
      x[wrap_index(s, kk)] = (s % 2 == 0 ? 1.0 : -1.0) * psi(window.offset(s) + c);
    fft.inv(y, x);
    for (int k = 0; k < kk; ++k) hat(k, c) = double(kk) * y[k];
  }
  CMatrix f(kk, n);
  for (int k = 0; k < kk; ++k)
    for (int j = 0; j < n; ++j) f(k, j) = frames_[k].col(j).dot(hat.row(k).transpose());
  return f;
}

CVector ConjugateOperatorGrid::from_bands(const CMatrix& f, const LatticeWindow& window) const {
  require_two_sided(window, block_size(), "from_bands");
  const int kk = grid_size(), n = block_size();
  CMatrix hat(kk, n);
  for (int k = 0; k < kk; ++k) hat.row(k) = (frames_[k] * f.row(k).transpose()).transpose();
  Eigen::FFT<double> fft;
  CVector psi = CVector::Zero(window.dim());
  for (int c = 0; c < n; ++c) {
    std::vector<cplx> x(kk), y;
    for (int k = 0; k < kk; ++k) x[k] = hat(k, c);
    fft.fwd(y, x);
    for (int s = window.first_site(); s <= window.last_site(); ++s)
      psi(window.offset(s) + c) = (s % 2 == 0 ? 1.0 : -1.0) * y[wrap_index(s, kk)] / double(kk);
  }
  return psi;
}

CVector ConjugateOperatorGrid::apply_lattice(const CVector& psi, const LatticeWindow& window) const {
  if (grid_size() < 4 * window.sites())
    throw Error(ErrorKind::precondition, "apply_lattice", "grid must have at least 4x the window sites");
  CMatrix f = to_bands(psi, window);
  for (int j = 0; j < block_size(); ++j) f.col(j) = apply_band(j, f.col(j));
  return from_bands(f, window);
}

double weight_regularity_check(const ConjugateOperatorGrid& conj, const LatticeWindow& window, int m,
                               int iterations) {
  if (m < 0 || m > 3) throw Error(ErrorKind::precondition, "weight_regularity_check", "m must be in 0..3");
  if (m == 0) return 1.0;
  if (conj.vanishes()) return 0.0;
  const int dim = window.dim();
  RVector weight(dim);
  for (int i = 0; i < dim; ++i) weight(i) = std::pow(bracket(window.site_of(i)), -m);
  auto a_pow = [&](CVector v) {
    for (int r = 0; r < m; ++r) v = conj.apply_lattice(v, window);
    return v;
  };
  std::mt19937_64 rng(0x5EED);
  std::normal_distribution<double> normal;
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cplx(normal(rng), normal(rng));
  v.normalize();
  double sigma2 = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const CVector w = a_pow(weight.cwiseProduct(weight.cwiseProduct(a_pow(v))));
    sigma2 = w.norm();
    if (sigma2 == 0.0) return 0.0;
    v = w / sigma2;
  }
  return std::sqrt(sigma2);
}

MourreResult mourre_estimate_check(const BandedBlockMatrix& h, const ConjugateOperatorGrid& conj, Interval delta,
                                   int degree, const MourreOptions& opts) {
  const LatticeWindow& window = h.window();
  require_two_sided(window, conj.block_size(), "mourre_estimate_check");
  if (conj.grid_size() < 4 * window.sites())
    throw Error(ErrorKind::precondition, "mourre_estimate_check", "grid must have at least 4x the window sites");
  const double w = opts.shoulder_fraction * delta.width();
  const Interval plateau{delta.lo + 2.0 * w, delta.hi - 2.0 * w};
  if (!(plateau.hi > plateau.lo))
    throw Error(ErrorKind::precondition, "mourre_estimate_check", "shoulders leave no plateau");
  const SpectralFilter filter(h, erf_window(plateau, w), degree);

  // filtered probes must stay clear of the window edges
  int radius = opts.probe_radius > 0 ? opts.probe_radius : window.half_length / 4;
  for (;;) {
    if (radius < 0)
      throw Error(ErrorKind::precondition, "mourre_estimate_check", "window too small for the filter degree");
    const Interval s = support_after(h, -radius, radius, degree + 1);
    const int excess = std::max(window.first_site() + 1 - int(s.lo), int(s.hi) - window.last_site() + 1);
    if (excess <= 0) break;
    radius -= excess;
  }
  const int n = window.block_size, probes = (2 * radius + 1) * n, dim = window.dim();

  CMatrix u(dim, probes), hu(dim, probes), au(dim, probes);
  parallel_for(probes, [&](int i) {
    const int site = -radius + i / n;
    const CVector filtered = filter.apply(CVector::Unit(dim, window.offset(site) + i % n));
    u.col(i) = filtered;
    hu.col(i) = h.apply(filtered);
    au.col(i) = conj.apply_lattice(filtered, window);
  });
  const CMatrix gram = u.adjoint() * u;
  const CMatrix cross = hu.adjoint() * au;
  const CMatrix comm = kI * (cross - cross.adjoint());

  const DenseEigen g = hermitian_eig_dense(0.5 * (gram + gram.adjoint()));
  const double top = g.values(g.values.size() - 1);
  if (!(top > 1e-10))
    throw Error(ErrorKind::precondition, "mourre_estimate_check", "filtered subspace is empty: interval misses the spectrum");
  std::vector<int> keep;
  for (int i = 0; i < g.values.size(); ++i)
    if (g.values(i) > opts.gram_floor * top) keep.push_back(i);
  CMatrix q(probes, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) q.col(c) = g.vectors.col(keep[c]) / std::sqrt(g.values(keep[c]));
  const CMatrix reduced = q.adjoint() * comm * q;
  const DenseEigen mu = hermitian_eig_dense(0.5 * (reduced + reduced.adjoint()));

  MourreResult r;
  r.filter_degree = degree;
  r.filter_error = filter.certified_error();
  r.subspace_dim = static_cast<int>(keep.size());
  r.eigenvalues.assign(mu.values.data(), mu.values.data() + mu.values.size());
  r.lower_bound = r.eigenvalues.front();
  for (double v : r.eigenvalues)
    if (v < 1.0 - opts.defect_threshold) ++r.defect_rank;
  r.lower_bound_regular = r.defect_rank < r.subspace_dim ? r.eigenvalues[r.defect_rank] : r.lower_bound;
  return r;
}

}  // namespace tspec
